"""Server tests: tree reading, the request loop, and the process CLI."""

import io
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from monoshim import ShimError, load_module, load_tree_file, serve
import monoshim.server

LOAN_TREE = """\
treemodel 1
features 3
classes 3
nodes 7
0 split 2 10.0 1 4
1 split 0 30.0 2 3
2 leaf 0
3 leaf 2
4 split 0 50.0 5 6
5 leaf 1
6 leaf 2
"""


@pytest.fixture
def tree_path(tmp_path):
    p = tmp_path / "loan.tree"
    p.write_text(LOAN_TREE, encoding="utf-8")
    return p


def run_lines(model, *requests: str) -> list[dict]:
    out = io.StringIO()
    serve(model, stdin=io.StringIO("".join(r + "\n" for r in requests)),
          stdout=out)
    return [json.loads(line) for line in out.getvalue().splitlines()]


# -- tree files ---------------------------------------------------------------


def test_load_tree_file(tree_path):
    t = load_tree_file(str(tree_path))
    assert (t.features, t.classes) == (3, 3)
    assert t.predict([30.0, 0, 9]) == 2
    assert t.predict([30.0, 0, 10]) == 1
    assert t.predict([10.0, 0, 5]) == 0
    assert t.predict([60.0, 2, 20]) == 2


def test_load_tree_file_single_leaf(tmp_path):
    p = tmp_path / "t.tree"
    p.write_text("treemodel 1\nfeatures 2\nclasses 2\nnodes 1\n0 leaf 1\n")
    t = load_tree_file(str(p))
    assert t.predict([0, 0]) == 1


@pytest.mark.parametrize("text", [
    "",
    "treemodel 2\nfeatures 1\nclasses 2\nnodes 1\n0 leaf 0",
    "treemodel 1\nfeatures 0\nclasses 2\nnodes 1\n0 leaf 0",
    "treemodel 1\nfeatures 1\nclasses 2\nnodes 2\n0 leaf 0",
    "treemodel 1\nfeatures 1\nclasses 2\nnodes 1\n0 leaf 5",
    "treemodel 1\nfeatures 1\nclasses 2\nnodes 1\n0 split 0 1.0 0 0",
    "treemodel 1\nfeatures 1\nclasses 2\nnodes 3\n"
    "0 split 0 1.0 1 2\n1 leaf 0\n2 split 0 2.0 1 0",
    "treemodel 1\nfeatures 1\nclasses 2\nnodes 1\n0 frobnicate",
])
def test_load_tree_file_rejects_malformed(tmp_path, text):
    p = tmp_path / "bad.tree"
    p.write_text(text, encoding="utf-8")
    with pytest.raises(ShimError):
        load_tree_file(str(p))


def test_missing_tree_file():
    with pytest.raises(ShimError):
        load_tree_file("/no/such/file.tree")


# -- request loop -------------------------------------------------------------


def test_hello_and_predict(tree_path):
    model = load_tree_file(str(tree_path))
    replies = run_lines(
        model,
        '{"op": "hello"}',
        '{"op": "predict", "x": [30.0, 0, 9]}',
        '{"op": "predict", "x": [30.0, 0, 10]}',
    )
    assert replies == [{"features": 3, "classes": 3}, {"y": 2}, {"y": 1}]


def test_loop_survives_garbage(tree_path):
    model = load_tree_file(str(tree_path))
    replies = run_lines(
        model,
        "not json at all",
        '["an", "array"]',
        '{"op": "?"}',
        '{"op": "predict"}',
        '{"op": "predict", "x": [1, 2]}',
        '{"op": "predict", "x": [1, 2, "three"]}',
        '{"op": "predict", "x": [1, 2, NaN]}',
        '{"op": "predict", "x": [1, 2, true]}',
        '{"op": "hello"}',
    )
    assert all("error" in r for r in replies[:-1])
    assert replies[-1] == {"features": 3, "classes": 3}


def test_bye_stops_the_loop(tree_path):
    model = load_tree_file(str(tree_path))
    replies = run_lines(
        model,
        '{"op": "hello"}',
        '{"op": "bye"}',
        '{"op": "hello"}',  # after bye nothing is read
    )
    assert replies == [{"features": 3, "classes": 3}]


def test_eof_is_clean(tree_path):
    model = load_tree_file(str(tree_path))
    assert run_lines(model) == []


def test_server_does_not_touch_the_client_library():
    src = Path(monoshim.server.__file__).read_text(encoding="utf-8")
    assert "monocheck" not in src


# -- module source ------------------------------------------------------------


def test_load_module(tmp_path, monkeypatch):
    (tmp_path / "toy_model.py").write_text(
        "FEATURES = 2\nCLASSES = 3\n"
        "def predict(x):\n    return 1 if x[0] > x[1] else 0\n"
    )
    monkeypatch.syspath_prepend(str(tmp_path))
    mod = load_module("toy_model")
    replies = run_lines(
        monoshim.server._ModuleModel(mod),
        '{"op": "hello"}',
        '{"op": "predict", "x": [5, 1]}',
        '{"op": "predict", "x": [1, 5]}',
    )
    assert replies == [{"features": 2, "classes": 3}, {"y": 1}, {"y": 0}]


def test_load_module_validates_surface(tmp_path, monkeypatch):
    (tmp_path / "no_predict.py").write_text("FEATURES = 2\nCLASSES = 2\n")
    (tmp_path / "bad_counts.py").write_text(
        "FEATURES = True\nCLASSES = 2\ndef predict(x):\n    return 0\n"
    )
    monkeypatch.syspath_prepend(str(tmp_path))
    with pytest.raises(ShimError):
        load_module("no_predict")
    with pytest.raises(ShimError):
        load_module("bad_counts")
    with pytest.raises(ShimError):
        load_module("definitely_not_importable")


def test_predict_that_raises_becomes_error_line(tmp_path, monkeypatch):
    (tmp_path / "angry_model.py").write_text(
        "FEATURES = 1\nCLASSES = 2\n"
        "def predict(x):\n    raise RuntimeError('nope')\n"
    )
    monkeypatch.syspath_prepend(str(tmp_path))
    mod = load_module("angry_model")
    replies = run_lines(
        monoshim.server._ModuleModel(mod),
        '{"op": "predict", "x": [1]}',
        '{"op": "hello"}',
    )
    assert "nope" in replies[0]["error"]
    assert replies[1] == {"features": 1, "classes": 2}


def test_non_integer_prediction_becomes_error_line(tmp_path, monkeypatch):
    (tmp_path / "floaty_model.py").write_text(
        "FEATURES = 1\nCLASSES = 2\n"
        "def predict(x):\n    return 0.5\n"
    )
    monkeypatch.syspath_prepend(str(tmp_path))
    mod = load_module("floaty_model")
    replies = run_lines(
        monoshim.server._ModuleModel(mod), '{"op": "predict", "x": [1]}'
    )
    assert "error" in replies[0]


# -- the process --------------------------------------------------------------


def run_process(args, payload: bytes, tmp=None) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "monoshim", *args],
        input=payload, capture_output=True, timeout=30,
    )


def test_process_conversation(tree_path):
    script = (
        b'{"op": "hello"}\n'
        b'{"op": "predict", "x": [30.0, 0, 9]}\n'
        b'{"op": "?"}\n'
        b'{"op": "predict", "x": [30.0, 0, 10]}\n'
        b'{"op": "bye"}\n'
    )
    res = run_process(["--tree", str(tree_path)], script)
    assert res.returncode == 0
    lines = res.stdout.decode().splitlines()
    assert json.loads(lines[0]) == {"features": 3, "classes": 3}
    assert json.loads(lines[1]) == {"y": 2}
    assert "error" in json.loads(lines[2])
    assert json.loads(lines[3]) == {"y": 1}
    assert len(lines) == 4  # bye is not answered


def test_process_transcripts_are_byte_identical(tree_path):
    script = (
        b'{"op": "hello"}\n'
        + b"".join(
            b'{"op": "predict", "x": [%d, %d, %d]}\n' % (a, b, c)
            for a in (0, 30, 60) for b in (0, 3) for c in (5, 15)
        )
        + b'garbage\n{"op": "bye"}\n'
    )
    first = run_process(["--tree", str(tree_path)], script)
    second = run_process(["--tree", str(tree_path)], script)
    assert first.returncode == second.returncode == 0
    assert first.stdout and first.stdout == second.stdout


def test_process_eof_without_bye(tree_path):
    res = run_process(["--tree", str(tree_path)], b'{"op": "hello"}\n')
    assert res.returncode == 0
    assert json.loads(res.stdout.decode()) == {"features": 3, "classes": 3}


def test_process_startup_errors():
    res = run_process(["--tree", "/no/such.tree"], b"")
    assert res.returncode == 1
    assert b"cannot read" in res.stderr
    res = run_process([], b"")
    assert res.returncode == 2  # argparse usage error


def test_process_module_mode(tmp_path):
    (tmp_path / "toy_model.py").write_text(
        "FEATURES = 2\nCLASSES = 2\n"
        "def predict(x):\n    return int(x[0] >= x[1])\n"
    )
    env = dict(os.environ)
    env["PYTHONPATH"] = str(tmp_path) + os.pathsep + env.get("PYTHONPATH", "")
    res = subprocess.run(
        [sys.executable, "-m", "monoshim", "--module", "toy_model"],
        input=b'{"op": "hello"}\n{"op": "predict", "x": [2, 1]}\n{"op": "bye"}\n',
        capture_output=True, timeout=30, env=env,
    )
    assert res.returncode == 0
    lines = res.stdout.decode().splitlines()
    assert json.loads(lines[0]) == {"features": 2, "classes": 2}
    assert json.loads(lines[1]) == {"y": 1}
