"""Models under test: trainable built-ins and an external-process adapter.

Built-ins cover four shapes of decision behavior: a single decision
tree, a bootstrap forest of subsampled trees, k-nearest-neighbor lookup,
and one-vs-rest logistic regression. All predict deterministically;
every vote or score tie resolves toward the lowest class rank.

External models run as a child process speaking newline-delimited JSON
over stdin/stdout, one object per line, UTF-8:

    -> {"op": "hello"}                 <- {"features": N, "classes": C}
    -> {"op": "predict", "x": [...]}   <- {"y": RANK}
    -> {"op": "bye"}                   then stdin closes

Anything else coming back is a protocol error, reported through an
exception type naming what went wrong: unparseable line, rank outside
the declared range, no reply within the timeout, or a dead process.
"""

from __future__ import annotations

import json
import math
import queue
import subprocess
import threading
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import ConfigError, InputError, Instance, ModelError, Rng
from .datasets import Dataset
from .tree import TreeModel, TreeParams, train

BUILTIN_KINDS = ("tree", "forest", "knn", "logreg")


class ProtocolError(ModelError):
    """Base for everything an external model can do wrong on the wire."""


class MalformedResponseError(ProtocolError):
    """Response line was not the expected JSON object."""


class RankOutOfRangeError(ProtocolError):
    """Predicted rank falls outside the declared class range."""


class ResponseTimeoutError(ProtocolError):
    """No response line arrived within the timeout."""


class ProcessExitError(ProtocolError):
    """The model process died or closed its output stream."""


# -- built-ins ---------------------------------------------------------------


@dataclass(frozen=True)
class RandomForest:
    """Majority vote over trees; ties go to the lowest rank."""

    trees: tuple[TreeModel, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "trees", tuple(self.trees))
        if not self.trees:
            raise InputError("forest needs at least one tree")
        first = self.trees[0]
        for t in self.trees:
            if (t.n_features, t.n_classes) != (first.n_features, first.n_classes):
                raise InputError("forest trees disagree on dimensions")

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    @property
    def n_classes(self) -> int:
        return self.trees[0].n_classes

    def predict(self, x: Instance) -> int:
        votes = np.bincount(
            [t.predict(x) for t in self.trees], minlength=self.n_classes
        )
        return int(np.argmax(votes))


class Knn:
    """k-nearest-neighbor over the training rows, Euclidean distance.

    Distance ties are broken by lowest row index, class-vote ties by
    lowest rank, so predictions are deterministic.
    """

    def __init__(self, k: int, data: Dataset):
        if len(data) == 0:
            raise InputError("cannot fit knn on an empty dataset")
        if k < 1:
            raise ConfigError("k must be >= 1")
        if k > len(data):
            raise InputError(f"k={k} exceeds the {len(data)} training rows")
        self.k = k
        self.rows = data.rows
        self.n_classes = data.space.n_classes
        self._X = np.array([list(x) for x, _ in data.rows], dtype=np.float64)
        self._y = np.array([label for _, label in data.rows], dtype=np.intp)

    def predict(self, x: Instance) -> int:
        d = self._X - np.asarray(x, dtype=np.float64)
        dist = np.einsum("ij,ij->i", d, d)
        nearest = np.argsort(dist, kind="stable")[: self.k]
        votes = np.bincount(self._y[nearest], minlength=self.n_classes)
        return int(np.argmax(votes))


class LogisticRegression:
    """One-vs-rest logistic regression, full-batch gradient descent.

    Inputs are standardized internally (training mean and scale are kept
    and applied at prediction time); weights start at zero and take a
    fixed number of fixed-size steps, so the fit is deterministic.
    Prediction is the argmax class score, lowest rank on ties.
    """

    def __init__(self, data: Dataset, iterations: int = 500, step: float = 0.1):
        if len(data) == 0:
            raise InputError("cannot fit logistic regression on an empty dataset")
        if iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not step > 0:
            raise ConfigError("step must be positive")
        X = np.array([list(x) for x, _ in data.rows], dtype=np.float64)
        y = np.array([label for _, label in data.rows], dtype=np.intp)
        self.n_classes = data.space.n_classes
        self._mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0
        self._scale = scale
        Xs = (X - self._mean) / self._scale
        n = len(Xs)
        self._W = np.zeros((self.n_classes, X.shape[1]))
        self._b = np.zeros(self.n_classes)
        for c in range(self.n_classes):
            t = (y == c).astype(np.float64)
            w = self._W[c]
            b = 0.0
            for _ in range(iterations):
                p = 1.0 / (1.0 + np.exp(-(Xs @ w + b)))
                err = p - t
                w -= step * (Xs.T @ err) / n
                b -= step * float(err.mean())
            self._b[c] = b

    def predict(self, x: Instance) -> int:
        xs = (np.asarray(x, dtype=np.float64) - self._mean) / self._scale
        return int(np.argmax(self._W @ xs + self._b))


def train_builtin(
    kind: str,
    data: Dataset,
    hyperparams: Mapping[str, object] | None = None,
    rng: Rng | None = None,
):
    """Train one of the built-in kinds with its documented defaults.

    kind: "tree" (max_depth=20, min_samples_leaf=1, max_features=None),
    "forest" (n_trees=25, bootstrap=True, same tree knobs,
    max_features=isqrt(features)), "knn" (k=3), "logreg"
    (iterations=500, step=0.1). The forest is the only kind that
    consumes rng (bootstrap rows, per-node features); with
    bootstrap=False every tree sees the full dataset and only feature
    subsampling varies.
    """
    hp = dict(hyperparams or {})
    if len(data) == 0:
        raise InputError("cannot train on an empty dataset")

    def take(name: str, default):
        return hp.pop(name, default)

    if kind == "tree":
        params = TreeParams(
            max_depth=take("max_depth", 20),
            min_samples_leaf=take("min_samples_leaf", 1),
            max_features=take("max_features", None),
        )
        _reject_extras(kind, hp)
        return train(data, params, rng)
    if kind == "forest":
        n_trees = take("n_trees", 25)
        if not isinstance(n_trees, int) or n_trees < 1:
            raise ConfigError("n_trees must be a positive int")
        if rng is None:
            raise ConfigError("forest training needs an rng")
        bootstrap = take("bootstrap", True)
        params = TreeParams(
            max_depth=take("max_depth", 20),
            min_samples_leaf=take("min_samples_leaf", 1),
            max_features=take(
                "max_features", max(1, math.isqrt(data.space.n_features))
            ),
        )
        _reject_extras(kind, hp)
        rows = data.rows
        n = len(rows)
        trees = []
        for _ in range(n_trees):
            boot = data
            if bootstrap:
                picks = rng.integers(0, n, size=n)
                boot = Dataset(data.space, tuple(rows[int(i)] for i in picks))
            trees.append(train(boot, params, rng))
        return RandomForest(tuple(trees))
    if kind == "knn":
        k = take("k", 3)
        _reject_extras(kind, hp)
        return Knn(k, data)
    if kind == "logreg":
        iterations = take("iterations", 500)
        step = take("step", 0.1)
        _reject_extras(kind, hp)
        return LogisticRegression(data, iterations=iterations, step=step)
    raise ConfigError(f"unknown model kind {kind!r}; expected one of {BUILTIN_KINDS}")


def _reject_extras(kind: str, leftover: dict) -> None:
    if leftover:
        raise ConfigError(
            f"unknown hyperparameters for {kind}: {sorted(leftover)}"
        )


# -- external models ---------------------------------------------------------


class ExternalModel:
    """Adapter running a model as a child process; see module docstring.

    The handshake happens in the constructor, so a constructed adapter
    is ready to predict. One request is in flight at a time; concurrent
    callers serialize on an internal lock. Use close() (or a with
    block) to shut the child down.
    """

    def __init__(self, cmd: Sequence[str], timeout: float = 10.0):
        if not cmd:
            raise ConfigError("external model command is empty")
        if not timeout > 0:
            raise ConfigError("timeout must be positive")
        self._cmd = tuple(str(a) for a in cmd)
        self._timeout = timeout
        self._lock = threading.Lock()
        self._lines: queue.Queue[str | None] = queue.Queue()
        # once the stream is gone or desynchronized (EOF, closed pipe,
        # timeout) every later call must fail the same way, not wait on
        # a queue that can never fill again
        self._broken: ProtocolError | None = None
        try:
            self._proc = subprocess.Popen(
                self._cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ProcessExitError(f"could not start {self._cmd[0]}: {exc}") from exc
        threading.Thread(target=self._pump, daemon=True).start()
        try:
            hello = self._roundtrip({"op": "hello"})
        except ProtocolError:
            self._shutdown()  # no orphans when the handshake dies
            raise
        features = hello.get("features")
        classes = hello.get("classes")
        if not _is_int(features) or features < 1:
            self._shutdown()
            raise MalformedResponseError(f"bad feature count in {hello!r}")
        if not _is_int(classes) or classes < 2:
            self._shutdown()
            raise MalformedResponseError(f"bad class count in {hello!r}")
        self.features = features
        self.classes = classes

    def _pump(self) -> None:
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _roundtrip(self, request: dict) -> dict:
        with self._lock:
            if self._broken is not None:
                raise self._broken
            if self._proc.poll() is not None:
                raise ProcessExitError(
                    f"model process exited with code {self._proc.returncode}"
                )
            try:
                self._proc.stdin.write(json.dumps(request) + "\n")
                self._proc.stdin.flush()
            except (OSError, ValueError) as exc:
                self._broken = ProcessExitError(
                    f"model process pipe closed: {exc}"
                )
                raise self._broken from exc
            try:
                line = self._lines.get(timeout=self._timeout)
            except queue.Empty:
                self._broken = ResponseTimeoutError(
                    f"no response within {self._timeout}s to {request!r}"
                )
                raise self._broken from None
            if line is None:
                self._broken = ProcessExitError("model process closed its output")
                raise self._broken
            # a malformed line is a per-call failure: the stream is
            # still in sync, so later requests may keep going
            try:
                msg = json.loads(line)
            except ValueError as exc:
                raise MalformedResponseError(
                    f"unparseable response line {line!r}"
                ) from exc
            if not isinstance(msg, dict):
                raise MalformedResponseError(f"response is not an object: {msg!r}")
            return msg

    def predict(self, x: Instance) -> int:
        if len(x) != self.features:
            raise InputError(
                f"instance has {len(x)} features, model declared {self.features}"
            )
        payload = [v if isinstance(v, int) else float(v) for v in x]
        msg = self._roundtrip({"op": "predict", "x": payload})
        y = msg.get("y")
        if not _is_int(y):
            raise MalformedResponseError(f"prediction response {msg!r} has no rank")
        if not 0 <= y < self.classes:
            raise RankOutOfRangeError(
                f"rank {y} outside the declared {self.classes} classes"
            )
        return y

    def close(self) -> None:
        """Polite shutdown: bye, close stdin, then escalate if ignored."""
        if self._proc.poll() is None:
            try:
                self._proc.stdin.write(json.dumps({"op": "bye"}) + "\n")
                self._proc.stdin.flush()
            except (OSError, ValueError):
                pass
        self._shutdown()

    def _shutdown(self) -> None:
        try:
            self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self) -> "ExternalModel":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def external_predict(m: ExternalModel, x: Instance) -> int:
    """One request line, one response line, rank returned verbatim."""
    return m.predict(x)


def _is_int(v: object) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)
