"""Line-protocol model server used by the adapter tests.

Run as: python external_server.py MODE

Modes: "tree" serves a hand-coded loan tree (3 features, 3 classes,
written here independently of the library); "const" always answers 1;
the rest misbehave in one specific way each so the adapter's error
paths can be exercised: "malformed" (garbage line), "outofrange"
(y=7), "hang" (never answers a predict), "exit" (dies on predict),
"badhello" (non-numeric handshake).
"""

import json
import sys
import time


def tree_predict(x):
    income, children, contract = x
    if contract < 10:
        return 0 if income < 30 else 2
    return 1 if income < 50 else 2


def main() -> None:
    mode = sys.argv[1]
    for raw in sys.stdin:
        msg = json.loads(raw)
        op = msg["op"]
        if op == "hello":
            if mode == "badhello":
                reply = {"features": "three", "classes": 3}
            else:
                reply = {"features": 3, "classes": 3}
            print(json.dumps(reply), flush=True)
        elif op == "predict":
            if mode == "tree":
                print(json.dumps({"y": tree_predict(msg["x"])}), flush=True)
            elif mode == "const":
                print(json.dumps({"y": 1}), flush=True)
            elif mode == "malformed":
                print("this is not json", flush=True)
            elif mode == "outofrange":
                print(json.dumps({"y": 7}), flush=True)
            elif mode == "hang":
                time.sleep(60)
            elif mode == "exit":
                sys.exit(3)
        elif op == "bye":
            return


if __name__ == "__main__":
    main()
