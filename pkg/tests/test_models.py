import http.server
import json
import sys
import threading
from pathlib import Path

import numpy as np
import pytest

from proxyaudit.errors import (
    ConnectivityError,
    ProtocolError,
    SpecError,
    ValidationError,
)
from proxyaudit.models import (
    DecisionRule,
    ModelSpec,
    check_determinism,
    decide,
    load_model,
    predict_batch,
)

import goldens
import oracles

FIXTURES = Path(__file__).parent / "fixtures"


def linear_spec(coefficients, intercept, features):
    return ModelSpec("linear", {"coefficients": coefficients, "intercept": intercept}, features)


def logistic_spec(coefficients, intercept, features):
    return ModelSpec("logistic", {"coefficients": coefficients, "intercept": intercept}, features)


class TestSpecValidation:
    def test_unknown_kind(self):
        with pytest.raises(SpecError):
            ModelSpec("mystery", {}, ("x",))

    def test_coefficient_for_unknown_feature(self):
        with pytest.raises(SpecError):
            linear_spec({"y": 1.0}, 0.0, ("x",))

    def test_uncovered_feature(self):
        with pytest.raises(SpecError):
            linear_spec({"x": 1.0}, 0.0, ("x", "z"))

    def test_one_of_k_coefficient_covers_feature(self):
        spec = linear_spec({"sex=male": -1.0}, 0.0, ("sex",))
        assert spec.kind == "linear"

    def test_tree_cycle_rejected(self):
        nodes = [
            {"id": 0, "kind": "split", "column": "x", "threshold": 1.0, "left": 1, "right": 0},
            {"id": 1, "kind": "leaf", "value": 0.0},
        ]
        with pytest.raises(SpecError):
            ModelSpec("decision_tree", {"root": 0, "nodes": nodes}, ("x",))

    def test_tree_unreachable_node_rejected(self):
        nodes = [
            {"id": 0, "kind": "leaf", "value": 0.0},
            {"id": 1, "kind": "leaf", "value": 1.0},
        ]
        with pytest.raises(SpecError):
            ModelSpec("decision_tree", {"root": 0, "nodes": nodes}, ("x",))

    def test_tree_missing_child_rejected(self):
        nodes = [
            {"id": 0, "kind": "split", "column": "x", "threshold": 1.0, "left": 1, "right": 2},
            {"id": 1, "kind": "leaf", "value": 0.0},
        ]
        with pytest.raises(SpecError):
            ModelSpec("decision_tree", {"root": 0, "nodes": nodes}, ("x",))

    def test_tree_split_needs_one_test(self):
        nodes = [
            {"id": 0, "kind": "split", "column": "x", "threshold": 1.0, "category": "a",
             "left": 1, "right": 1},
            {"id": 1, "kind": "leaf", "value": 0.0},
        ]
        with pytest.raises(SpecError):
            ModelSpec("decision_tree", {"root": 0, "nodes": nodes}, ("x",))

    def test_json_round_trip(self, tmp_path):
        spec = logistic_spec({"x1": 2.0, "x2": -1.0}, 0.5, ("x1", "x2"))
        path = tmp_path / "model.json"
        spec.save(path)
        assert ModelSpec.load(path) == spec


class TestBuiltinPrediction:
    def test_logistic_closed_form(self):
        m = load_model(logistic_spec({"x1": 2.0, "x2": -1.0}, 0.5, ("x1", "x2")))
        assert m.predict_batch([[1.0, 1.0]])[0] == pytest.approx(goldens.SIGMOID_1_5, abs=1e-12)

    def test_single_leaf_tree(self):
        spec = ModelSpec(
            "decision_tree",
            {"root": 0, "nodes": [{"id": 0, "kind": "leaf", "value": 0.3}]},
            ("x",),
        )
        m = load_model(spec)
        assert m.predict_batch([[1.0], [99.0], [-5.0]]) == [0.3, 0.3, 0.3]

    def test_linear_affine(self):
        m = load_model(linear_spec({"x": 3.0}, 1.0, ("x",)))
        assert m.predict_batch([[0.0], [1.0], [2.0]]) == [1.0, 4.0, 7.0]

    def test_empty_rows(self):
        m = load_model(linear_spec({"x": 3.0}, 1.0, ("x",)))
        assert m.predict_batch([]) == []

    def test_depth_two_tree_hand_traced(self):
        nodes = [
            {"id": 0, "kind": "split", "column": "x", "threshold": 5.0, "left": 1, "right": 2},
            {"id": 1, "kind": "split", "column": "c", "category": "red", "left": 3, "right": 4},
            {"id": 2, "kind": "leaf", "value": 0.9},
            {"id": 3, "kind": "leaf", "value": 0.1},
            {"id": 4, "kind": "leaf", "value": 0.5},
        ]
        m = load_model(ModelSpec("decision_tree", {"root": 0, "nodes": nodes}, ("x", "c")))
        rows = [
            {"x": 3.0, "c": "red"},     # left, then category match -> 0.1
            {"x": 3.0, "c": "blue"},    # left, then no match -> 0.5
            {"x": 5.0, "c": "red"},     # threshold tie goes right -> 0.9
            {"x": 7.0, "c": "blue"},    # right -> 0.9
        ]
        assert m.predict_batch(rows) == [0.1, 0.5, 0.9, 0.9]

    def test_one_of_k_indicator(self):
        m = load_model(linear_spec({"sex=male": -1.2, "x": 1.0}, 0.0, ("sex", "x")))
        assert m.predict_batch([{"sex": "male", "x": 2.0}, {"sex": "female", "x": 2.0}]) == [
            0.8,
            2.0,
        ]

    def test_missing_feature_reports_row(self):
        m = load_model(linear_spec({"x": 3.0}, 1.0, ("x",)))
        with pytest.raises(ValidationError, match="row 1"):
            m.predict_batch([{"x": 1.0}, {"y": 2.0}])

    def test_row_length_mismatch(self):
        m = load_model(linear_spec({"x": 3.0}, 1.0, ("x",)))
        with pytest.raises(ValidationError, match="row 0"):
            m.predict_batch([[1.0, 2.0]])

    def test_batch_invariance(self):
        m = load_model(linear_spec({"x": 3.0, "y": -2.0}, 1.0, ("x", "y")))
        rng = np.random.default_rng(3)
        rows = [[float(a), float(b)] for a, b in rng.normal(size=(40, 2))]
        joint = m.predict_batch(rows)
        assert joint == m.predict_batch(rows[:17]) + m.predict_batch(rows[17:])

    def test_matches_spreadsheet_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            w = {
                "x": float(rng.normal()),
                "y": float(rng.normal()),
                "c=red": float(rng.normal()),
            }
            b = float(rng.normal())
            m = load_model(linear_spec(w, b, ("x", "y", "c")))
            row = {
                "x": float(rng.normal()),
                "y": float(rng.normal()),
                "c": rng.choice(["red", "blue"]),
            }
            want = oracles.linear_score(w, b, ("x", "y", "c"), row)
            assert m.predict_batch([row])[0] == pytest.approx(want, rel=1e-12)

    def test_determinism_check(self):
        m = load_model(linear_spec({"x": 3.0}, 1.0, ("x",)))
        ok, diff = check_determinism(m, [[1.0], [2.0]])
        assert ok and diff == 0.0


class TestDecide:
    def test_above_favourable(self):
        assert decide(DecisionRule(0.5, "score_above"), 0.6) == "favourable"

    def test_tie_is_unfavourable(self):
        assert decide(DecisionRule(0.5, "score_above"), 0.5) == "unfavourable"
        assert decide(DecisionRule(0.5, "score_below"), 0.5) == "unfavourable"

    def test_below_direction(self):
        assert decide(DecisionRule(700.0, "score_below"), 650.0) == "favourable"
        assert decide(DecisionRule(700.0, "score_below"), 720.0) == "unfavourable"

    def test_bad_direction_rejected(self):
        with pytest.raises(ValidationError):
            DecisionRule(0.5, "sideways")


def subprocess_spec(*args, features=("x",)):
    return ModelSpec(
        "external_subprocess",
        {"command": [sys.executable, *args]},
        features,
    )


class TestSubprocessProbe:
    def test_reference_affine_round_trip(self):
        spec = subprocess_spec("-m", "proxyaudit.probe_reference")
        with load_model(spec, timeout=15) as m:
            assert m.predict_batch([[0.0], [1.5], [-2.0]]) == [1.0, 4.0, -3.0]

    def test_spec_wrapped_probe_matches_builtin(self, tmp_path):
        inner = logistic_spec({"x1": 2.0, "x2": -1.0}, 0.5, ("x1", "x2"))
        spec_path = tmp_path / "inner.json"
        inner.save(spec_path)
        outer = subprocess_spec(
            "-m", "proxyaudit.probe_reference", "--spec", str(spec_path),
            features=("x1", "x2"),
        )
        rng = np.random.default_rng(0)
        rows = [[float(a), float(b)] for a, b in rng.normal(size=(100, 2))]
        direct = load_model(inner).predict_batch(rows)
        with load_model(outer, timeout=15) as m:
            probed = m.predict_batch(rows)
        np.testing.assert_allclose(probed, direct, rtol=0, atol=1e-9)

    @pytest.mark.parametrize("mode", ["wrong-id", "short-scores", "not-json"])
    def test_protocol_violations_never_retried(self, mode):
        spec = subprocess_spec(str(FIXTURES / "bad_probe.py"), mode)
        with load_model(spec, timeout=15) as m:
            with pytest.raises(ProtocolError) as exc:
                m.predict_batch([[1.0]])
            assert exc.value.payload is not None
            assert m.transport_retries == 0

    def test_handshake_violation(self):
        spec = subprocess_spec(str(FIXTURES / "bad_probe.py"), "no-ready")
        with pytest.raises(ProtocolError):
            load_model(spec, timeout=15)

    def test_silent_probe_times_out(self):
        spec = subprocess_spec(str(FIXTURES / "bad_probe.py"), "silent")
        with pytest.raises(ConnectivityError):
            load_model(spec, timeout=0.5)

    def test_dying_probe_retried_at_most_twice(self):
        spec = subprocess_spec(str(FIXTURES / "bad_probe.py"), "dies")
        with load_model(spec, timeout=5) as m:
            with pytest.raises(ConnectivityError):
                m.predict_batch([[1.0]])
            assert m.transport_retries == 2

    def test_timeout_env_override(self, monkeypatch):
        monkeypatch.setenv("PROXYAUDIT_PROBE_TIMEOUT_SECS", "0.4")
        spec = subprocess_spec(str(FIXTURES / "bad_probe.py"), "silent")
        with pytest.raises(ConnectivityError):
            load_model(spec)

    def test_unspawnable_command(self):
        spec = ModelSpec(
            "external_subprocess", {"command": ["/nonexistent-probe-binary"]}, ("x",)
        )
        with pytest.raises(ConnectivityError):
            load_model(spec)


class _ProbeHTTPHandler(http.server.BaseHTTPRequestHandler):
    fail_with = None  # set on the class by the fixture

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length))
        if self.fail_with == "http-500":
            self.send_response(500)
            self.end_headers()
            self.wfile.write(b"boom")
            return
        scores = [2.0 * float(r[0]) + 1.0 for r in payload["rows"]]
        if self.fail_with == "bad-body":
            body = b"not json"
        else:
            body = json.dumps(
                {"type": "scores", "id": payload["id"], "scores": scores}
            ).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture()
def http_probe():
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), _ProbeHTTPHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        _ProbeHTTPHandler.fail_with = None


class TestHttpProbe:
    def test_round_trip(self, http_probe):
        spec = ModelSpec("external_http", {"endpoint": http_probe}, ("x",))
        m = load_model(spec, timeout=5)
        assert m.predict_batch([[0.0], [2.0]]) == [1.0, 5.0]

    def test_non_200_is_protocol_error(self, http_probe):
        spec = ModelSpec("external_http", {"endpoint": http_probe}, ("x",))
        m = load_model(spec, timeout=5)
        _ProbeHTTPHandler.fail_with = "http-500"
        with pytest.raises(ProtocolError):
            m.predict_batch([[1.0]])

    def test_bad_body_is_protocol_error(self, http_probe):
        spec = ModelSpec("external_http", {"endpoint": http_probe}, ("x",))
        m = load_model(spec, timeout=5)
        _ProbeHTTPHandler.fail_with = "bad-body"
        with pytest.raises(ProtocolError):
            m.predict_batch([[1.0]])

    def test_unreachable_endpoint(self):
        spec = ModelSpec("external_http", {"endpoint": "http://127.0.0.1:1"}, ("x",))
        with pytest.raises(ConnectivityError):
            load_model(spec, timeout=0.5)
