"""Uniform prediction interface: builtin model formats, external probes, and
the decision rule mapping scores to favourable/unfavourable outcomes.

Builtin kinds: ``linear``, ``logistic`` (one-of-K coefficients named
``column=category`` for categorical features), and ``decision_tree`` (a node
table). External kinds speak newline-delimited JSON over a subprocess's
stdin/stdout or HTTP POST /predict; see the protocol constants below.

External transport failures are retried at most twice (counted, never
silent); protocol violations are never retried, because retrying can mask a
nondeterministic model.
"""

import json
import os
import queue
import subprocess
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass
from numbers import Real

import numpy as np
from scipy.special import expit

from .errors import ConnectivityError, ProtocolError, SpecError, ValidationError

FAVOURABLE = "favourable"
UNFAVOURABLE = "unfavourable"

BUILTIN_KINDS = ("linear", "logistic", "decision_tree")
EXTERNAL_KINDS = ("external_subprocess", "external_http")

DEFAULT_PROBE_TIMEOUT_SECS = 10.0
MAX_TRANSPORT_RETRIES = 2


def probe_timeout():
    raw = os.environ.get("PROXYAUDIT_PROBE_TIMEOUT_SECS")
    if raw is None:
        return DEFAULT_PROBE_TIMEOUT_SECS
    try:
        value = float(raw)
    except ValueError:
        raise ValidationError(f"PROXYAUDIT_PROBE_TIMEOUT_SECS must be numeric, got {raw!r}")
    if value <= 0:
        raise ValidationError("PROXYAUDIT_PROBE_TIMEOUT_SECS must be positive")
    return value


@dataclass(frozen=True)
class DecisionRule:
    """Threshold plus direction turning a score into an outcome."""

    threshold: float
    favourable_direction: str = "score_above"

    def __post_init__(self):
        if self.favourable_direction not in ("score_above", "score_below"):
            raise ValidationError(
                f"favourable_direction must be score_above or score_below, "
                f"got {self.favourable_direction!r}"
            )

    def to_json(self):
        return {"threshold": self.threshold, "favourable_direction": self.favourable_direction}

    @staticmethod
    def from_json(obj):
        return DecisionRule(
            threshold=float(obj["threshold"]),
            favourable_direction=obj.get("favourable_direction", "score_above"),
        )


def decide(rule, score):
    """Outcome of one score; a score exactly on the threshold is unfavourable."""
    if rule.favourable_direction == "score_above":
        return FAVOURABLE if score > rule.threshold else UNFAVOURABLE
    return FAVOURABLE if score < rule.threshold else UNFAVOURABLE


@dataclass(frozen=True)
class ModelSpec:
    """Declarative model description; see module docstring for formats."""

    kind: str
    parameters: dict
    feature_order: tuple

    def __post_init__(self):
        object.__setattr__(self, "feature_order", tuple(self.feature_order))
        self.validate()

    def validate(self):
        if self.kind not in BUILTIN_KINDS + EXTERNAL_KINDS:
            raise SpecError(f"unknown model kind {self.kind!r}")
        if len(set(self.feature_order)) != len(self.feature_order):
            raise SpecError("duplicate names in feature_order")
        p = self.parameters
        if self.kind in ("linear", "logistic"):
            if "coefficients" not in p or "intercept" not in p:
                raise SpecError(f"{self.kind} spec needs coefficients and intercept")
            covered = set()
            for name in p["coefficients"]:
                col = name.partition("=")[0] if "=" in name else name
                if col not in self.feature_order:
                    raise SpecError(f"coefficient {name!r} names no declared feature")
                covered.add(col)
            missing = set(self.feature_order) - covered
            if missing:
                raise SpecError(f"features without coefficients: {sorted(missing)}")
        elif self.kind == "decision_tree":
            self._validate_tree()
        elif self.kind == "external_subprocess":
            cmd = p.get("command")
            if not isinstance(cmd, (list, tuple)) or not cmd:
                raise SpecError("external_subprocess spec needs a non-empty command list")
        else:  # external_http
            if not isinstance(p.get("endpoint"), str) or not p["endpoint"]:
                raise SpecError("external_http spec needs an endpoint URL")

    def _validate_tree(self):
        p = self.parameters
        nodes = p.get("nodes")
        if not isinstance(nodes, list) or not nodes or "root" not in p:
            raise SpecError("decision_tree spec needs a node list and a root id")
        by_id = {}
        for node in nodes:
            nid = node.get("id")
            if nid in by_id:
                raise SpecError(f"duplicate node id {nid}")
            by_id[nid] = node
        if p["root"] not in by_id:
            raise SpecError("root id not in node table")
        seen = set()
        stack = [(p["root"], frozenset())]
        while stack:
            nid, path = stack.pop()
            if nid in path:
                raise SpecError(f"cycle through node {nid}")
            if nid not in by_id:
                raise SpecError(f"child id {nid} not in node table")
            node = by_id[nid]
            seen.add(nid)
            kind = node.get("kind")
            if kind == "leaf":
                if not isinstance(node.get("value"), Real):
                    raise SpecError(f"leaf {nid} needs a numeric value")
            elif kind == "split":
                if node.get("column") not in self.feature_order:
                    raise SpecError(f"split {nid} names no declared feature")
                if ("threshold" in node) == ("category" in node):
                    raise SpecError(f"split {nid} needs exactly one of threshold/category")
                child_path = path | {nid}
                stack.append((node.get("left"), child_path))
                stack.append((node.get("right"), child_path))
            else:
                raise SpecError(f"node {nid} has unknown kind {kind!r}")
        unreachable = set(by_id) - seen
        if unreachable:
            raise SpecError(f"unreachable nodes: {sorted(unreachable, key=repr)}")

    def to_json(self):
        return {
            "kind": self.kind,
            "parameters": self.parameters,
            "feature_order": list(self.feature_order),
        }

    @staticmethod
    def from_json(obj):
        try:
            return ModelSpec(
                kind=obj["kind"],
                parameters=obj["parameters"],
                feature_order=tuple(obj["feature_order"]),
            )
        except KeyError as exc:
            raise SpecError(f"model spec missing field {exc}") from None

    @staticmethod
    def load(path):
        with open(path, "r", encoding="utf-8") as fh:
            return ModelSpec.from_json(json.load(fh))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _row_values(row, feature_order, index):
    """Feature values of one row, in declared order."""
    if isinstance(row, dict):
        try:
            return [row[f] for f in feature_order]
        except KeyError as exc:
            raise ValidationError(f"row {index}: missing feature {exc}") from None
    values = list(row)
    if len(values) != len(feature_order):
        raise ValidationError(
            f"row {index}: got {len(values)} values for {len(feature_order)} features"
        )
    return values


class ModelHandle:
    """Opaque batch scorer; stateless with respect to calls."""

    def __init__(self, spec):
        self.spec = spec

    @property
    def feature_order(self):
        return self.spec.feature_order

    def predict_batch(self, rows):
        raise NotImplementedError

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class BuiltinModelHandle(ModelHandle):
    def predict_batch(self, rows):
        spec = self.spec
        out = []
        for i, row in enumerate(rows):
            values = _row_values(row, spec.feature_order, i)
            for f, v in zip(spec.feature_order, values):
                if v is None:
                    raise ValidationError(f"row {i}: missing value for feature {f!r}")
            if spec.kind in ("linear", "logistic"):
                out.append(self._affine(values, i))
            else:
                out.append(self._trace_tree(values, i))
        if spec.kind == "logistic":
            return [float(expit(z)) for z in out]
        return [float(s) for s in out]

    def _affine(self, values, index):
        by_name = dict(zip(self.spec.feature_order, values))
        total = float(self.spec.parameters["intercept"])
        for name, w in self.spec.parameters["coefficients"].items():
            if "=" in name:
                col, _, cat = name.partition("=")
                total += w * (1.0 if by_name[col] == cat else 0.0)
            else:
                v = by_name[name]
                if not isinstance(v, Real):
                    raise ValidationError(
                        f"row {index}: feature {name!r} needs a numeric value, got {v!r}"
                    )
                total += w * float(v)
        return total

    def _trace_tree(self, values, index):
        by_name = dict(zip(self.spec.feature_order, values))
        nodes = {n["id"]: n for n in self.spec.parameters["nodes"]}
        node = nodes[self.spec.parameters["root"]]
        while node["kind"] == "split":
            v = by_name[node["column"]]
            if "threshold" in node:
                if not isinstance(v, Real):
                    raise ValidationError(
                        f"row {index}: split on {node['column']!r} needs a number, got {v!r}"
                    )
                branch = node["left"] if float(v) < node["threshold"] else node["right"]
            else:
                branch = node["left"] if v == node["category"] else node["right"]
            node = nodes[branch]
        return float(node["value"])


# --- external probes --------------------------------------------------------


def _validate_scores_message(msg, expected_id, n_rows, raw):
    if not isinstance(msg, dict) or msg.get("type") != "scores":
        raise ProtocolError(f"expected a scores message, got {msg!r}", payload=raw)
    if msg.get("id") != expected_id:
        raise ProtocolError(
            f"scores id {msg.get('id')!r} does not echo request id {expected_id}", payload=raw
        )
    scores = msg.get("scores")
    if not isinstance(scores, list) or len(scores) != n_rows:
        raise ProtocolError(
            f"expected {n_rows} scores, got {scores!r}", payload=raw
        )
    if not all(isinstance(s, Real) and not isinstance(s, bool) for s in scores):
        raise ProtocolError("scores must all be numbers", payload=raw)
    return [float(s) for s in scores]


class _TransportFailure(Exception):
    """Internal marker: the transport (not the protocol) broke."""


class SubprocessModelHandle(ModelHandle):
    """Newline-delimited JSON over a child process's stdin/stdout."""

    def __init__(self, spec, timeout=None):
        super().__init__(spec)
        self.timeout = probe_timeout() if timeout is None else timeout
        self.transport_retries = 0
        self._next_id = 0
        self._proc = None
        self._lines = None
        self._spawn()

    def _spawn(self):
        self._proc = subprocess.Popen(
            list(self.spec.parameters["command"]),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            encoding="utf-8",
        )
        self._lines = queue.Queue()

        def pump(proc, q):
            for line in proc.stdout:
                q.put(line)
            q.put(None)

        threading.Thread(target=pump, args=(self._proc, self._lines), daemon=True).start()
        self._handshake()

    def _handshake(self):
        self._send({"type": "hello", "features": list(self.spec.feature_order)})
        raw = self._recv_line()
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError:
            raise ProtocolError("handshake reply is not valid JSON", payload=raw) from None
        if not isinstance(msg, dict) or msg.get("type") != "ready":
            raise ProtocolError(f"expected a ready message, got {msg!r}", payload=raw)

    def _send(self, obj):
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            raise _TransportFailure(f"probe stdin write failed: {exc}") from None

    def _recv_line(self):
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise _TransportFailure(
                f"probe gave no reply within {self.timeout} s"
            ) from None
        if line is None:
            raise _TransportFailure("probe process closed its output")
        return line.rstrip("\n")

    def _restart(self):
        self.close()
        self._spawn()

    def predict_batch(self, rows):
        payload_rows = [
            _row_values(row, self.spec.feature_order, i) for i, row in enumerate(rows)
        ]
        attempts = 0
        while True:
            request_id = self._next_id
            self._next_id += 1
            message = {"type": "predict", "id": request_id, "rows": payload_rows}
            try:
                self._send(message)
                raw = self._recv_line()
            except _TransportFailure as exc:
                attempts += 1
                if attempts > MAX_TRANSPORT_RETRIES:
                    raise ConnectivityError(str(exc)) from None
                self.transport_retries += 1
                try:
                    self._restart()
                except _TransportFailure as exc2:
                    raise ConnectivityError(str(exc2)) from None
                continue
            try:
                msg = json.loads(raw)
            except json.JSONDecodeError:
                raise ProtocolError("scores reply is not valid JSON", payload=raw) from None
            return _validate_scores_message(msg, request_id, len(rows), raw)

    def close(self):
        proc = self._proc
        if proc is None:
            return
        try:
            if proc.stdin:
                proc.stdin.close()
        except OSError:
            pass
        try:
            proc.terminate()
            proc.wait(timeout=2)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
        self._proc = None


class HttpModelHandle(ModelHandle):
    """HTTP probe: POST /predict with the subprocess predict payload."""

    def __init__(self, spec, timeout=None):
        super().__init__(spec)
        self.timeout = probe_timeout() if timeout is None else timeout
        self.transport_retries = 0
        self._next_id = 0
        endpoint = spec.parameters["endpoint"].rstrip("/")
        self._url = endpoint if endpoint.endswith("/predict") else endpoint + "/predict"
        # health check: an empty predict must round-trip
        self.predict_batch([])

    def predict_batch(self, rows):
        payload_rows = [
            _row_values(row, self.spec.feature_order, i) for i, row in enumerate(rows)
        ]
        attempts = 0
        while True:
            request_id = self._next_id
            self._next_id += 1
            body = json.dumps(
                {"type": "predict", "id": request_id, "rows": payload_rows}
            ).encode("utf-8")
            request = urllib.request.Request(
                self._url, data=body, headers={"Content-Type": "application/json"}, method="POST"
            )
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as response:
                    status = response.status
                    raw = response.read().decode("utf-8")
            except urllib.error.HTTPError as exc:
                raise ProtocolError(
                    f"probe answered HTTP {exc.code}", payload=exc.read().decode("utf-8", "replace")
                ) from None
            except (urllib.error.URLError, TimeoutError, OSError) as exc:
                attempts += 1
                if attempts > MAX_TRANSPORT_RETRIES:
                    raise ConnectivityError(f"probe endpoint unreachable: {exc}") from None
                self.transport_retries += 1
                continue
            if status != 200:
                raise ProtocolError(f"probe answered HTTP {status}", payload=raw)
            try:
                msg = json.loads(raw)
            except json.JSONDecodeError:
                raise ProtocolError("scores reply is not valid JSON", payload=raw) from None
            return _validate_scores_message(msg, request_id, len(rows), raw)


def load_model(spec, *, timeout=None):
    """Instantiate a ModelHandle for a validated spec."""
    if spec.kind in BUILTIN_KINDS:
        return BuiltinModelHandle(spec)
    try:
        if spec.kind == "external_subprocess":
            return SubprocessModelHandle(spec, timeout=timeout)
        return HttpModelHandle(spec, timeout=timeout)
    except _TransportFailure as exc:
        raise ConnectivityError(str(exc)) from None
    except OSError as exc:
        raise ConnectivityError(f"could not start probe: {exc}") from None


def predict_batch(handle, rows):
    """One score per row, order-preserving."""
    return handle.predict_batch(rows)


def check_determinism(handle, rows):
    """Probe the same batch twice; (deterministic, max_abs_difference)."""
    if not rows:
        return True, 0.0
    first = np.asarray(handle.predict_batch(rows))
    second = np.asarray(handle.predict_batch(rows))
    diff = float(np.max(np.abs(first - second)))
    return diff == 0.0, diff
