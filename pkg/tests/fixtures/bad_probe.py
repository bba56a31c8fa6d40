"""Misbehaving probe processes for protocol-violation tests.

Usage: python bad_probe.py <mode>, where mode is one of:
  no-ready      answers the handshake with a wrong message type
  wrong-id      answers predicts with a non-echoing id
  short-scores  returns one score fewer than requested
  not-json      answers predicts with a non-JSON line
  silent        never answers anything (forces a timeout)
  dies          exits cleanly right after the handshake
"""

import json
import sys


def reply(obj):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def main():
    mode = sys.argv[1]
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        msg = json.loads(line)
        if msg.get("type") == "hello":
            if mode == "silent":
                continue
            if mode == "no-ready":
                reply({"type": "howdy"})
            else:
                reply({"type": "ready"})
            if mode == "dies":
                return
        elif msg.get("type") == "predict":
            rows = msg.get("rows", [])
            if mode == "silent":
                continue
            if mode == "wrong-id":
                reply({"type": "scores", "id": msg.get("id", 0) + 999, "scores": [0.0] * len(rows)})
            elif mode == "short-scores":
                reply({"type": "scores", "id": msg.get("id"), "scores": [0.0] * max(0, len(rows) - 1)})
            elif mode == "not-json":
                sys.stdout.write("scores: all fine\n")
                sys.stdout.flush()
            else:
                reply({"type": "scores", "id": msg.get("id"), "scores": [0.0] * len(rows)})


if __name__ == "__main__":
    main()
