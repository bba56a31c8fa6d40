"""Report assembly tests: fragments, red-flag conjunction, schema, rendering.

The red-flag invariant tested at the bottom is the load-bearing one: every
label in the JSON must be re-derivable from the reported numbers and the
echoed thresholds alone.
"""

import json

import pytest

from proxyaudit import report
from proxyaudit.capacity import INEXTRICABLE_LINK, RED_FLAG_CI_FLOOR, RED_FLAG_PURITY
from proxyaudit.data import AuditConfig
from proxyaudit.descriptors import Condition, SubgroupDescriptor
from proxyaudit.errors import ValidationError
from proxyaudit.intervention import TOWARD_UNFAVOURABLE
from proxyaudit.models import BuiltinModelHandle
from proxyaudit.synth import preset


@pytest.fixture(scope="module")
def james():
    return preset("james")


@pytest.fixture(scope="module")
def james_data(james):
    return james.sample(4000, seed=0)


@pytest.fixture(scope="module")
def james_discovery(james_data):
    config = AuditConfig(
        protected=("sex",),
        candidates=("age", "reached_statutory_retirement"),
        seed=20,
    )
    return report.run_discovery(james_data, config, seed=20)


def test_timestamp_honours_source_date_epoch(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    assert report.utc_timestamp() == "2023-11-14T22:13:20+00:00"
    monkeypatch.delenv("SOURCE_DATE_EPOCH")
    assert report.utc_timestamp().endswith("+00:00")


def test_dataset_fingerprint_tracks_content(james_data, james):
    fp1 = report.dataset_fingerprint(james_data)
    fp2 = report.dataset_fingerprint(james_data)
    assert fp1 == fp2
    assert fp1["n_rows"] == 4000
    assert set(fp1["columns"]) == set(james_data.column_names)
    other = report.dataset_fingerprint(james.sample(4000, seed=1))
    assert other["digest"] != fp1["digest"]


def test_run_capacity_fragment_shape(james_data):
    frag = report.run_capacity(
        james_data, ("sex",), ("age", "reached_statutory_retirement"),
        proxy_sets=(("age", "reached_statutory_retirement"),), seed=0,
    )
    assert len(frag["scan"]) == 2
    values = [s["value"] for s in frag["scan"]]
    assert values == sorted(values, reverse=True)
    # drill-down targets the top *categorical* candidate
    assert len(frag["contingency"]) == 1
    assert frag["contingency"][0]["col_var"] == "reached_statutory_retirement"
    assert len(frag["predictive"]) == 1
    assert "link_class" in frag["predictive"][0]


def test_run_capacity_empty_candidates(james_data):
    frag = report.run_capacity(james_data, ("sex",), ())
    assert frag == {"scan": [], "contingency": [], "predictive": []}


def test_run_discovery_returns_validated_planted(james_discovery, james_data):
    fragment, kept = james_discovery
    assert fragment["train_rows"] + fragment["holdout_rows"] == 4000
    assert fragment["m_tests"] >= len(fragment["validated"])
    assert len(kept) == len(fragment["validated"]) >= 1
    # the planted male subgroup is among the validated findings
    planted = SubgroupDescriptor(
        (
            Condition.interval("age", lo=61.0, hi=66.0),
            Condition.equals("reached_statutory_retirement", "false"),
        )
    )
    planted_mask = planted.mask(james_data)
    hits = [
        r for r in kept
        if tuple(r.protected_target) == ("sex", "male")
        and (r.proxy.mask(james_data) == planted_mask).all()
    ]
    assert len(hits) == 1
    assert hits[0].holdout_capacity.value == 1.0


def test_representative_assignments(james_data):
    proxy = SubgroupDescriptor(
        (
            Condition.interval("age", lo=61.0, hi=66.0),
            Condition.equals("reached_statutory_retirement", "false"),
        )
    )
    full = report.representative_assignments(
        proxy, ("age", "reached_statutory_retirement"), james_data
    )
    assert {a.column: a.value for a in full} == {
        "age": 63.5,
        "reached_statutory_retirement": "false",
    }
    only_ret = report.representative_assignments(
        proxy, ("reached_statutory_retirement",), james_data
    )
    assert [a.column for a in only_ret] == ["reached_statutory_retirement"]
    # a half-line clamps its open side to the observed range
    half = SubgroupDescriptor((Condition.interval("age", lo=61.0),))
    (a,) = report.representative_assignments(half, ("age",), james_data)
    assert a.value == pytest.approx((61.0 + 72.0) / 2)


def test_derive_red_flags_conjunction(james, james_data, james_discovery):
    _fragment, kept = james_discovery
    rule = james.decision_rule
    with BuiltinModelHandle(james.models["use"]) as m:
        findings = report.derive_red_flags(kept, m, rule, james_data)
    assert report.red_flag_count(findings) == 1
    (flag,) = [f for f in findings if f["label"] == report.RED_FLAG_LABEL]
    assert flag["protected_target"] == ["sex", "male"]
    assert flag["use"]["direction_of_harm"] == TOWARD_UNFAVOURABLE
    assert flag["use"]["significant_influence_flag"]
    # the model that ignores the proxy demotes everything to capacity-only
    with BuiltinModelHandle(james.models["ignore"]) as m_ignore:
        findings_ignore = report.derive_red_flags(kept, m_ignore, rule, james_data)
    assert report.red_flag_count(findings_ignore) == 0
    assert all(
        f["label"] == report.CAPACITY_ONLY_LABEL for f in findings_ignore
    )


def test_derive_red_flags_without_model_skips_use(james_data, james_discovery):
    _fragment, kept = james_discovery
    findings = report.derive_red_flags(kept, None, None, james_data)
    assert findings
    assert all(f["use"] == report.USE_SKIPPED for f in findings)
    assert report.red_flag_count(findings) == 0


def full_james_report(james, james_data, james_discovery, model_key):
    fragment, kept = james_discovery
    sections = {
        "capacity": report.run_capacity(
            james_data, ("sex",), ("age", "reached_statutory_retirement"),
            proxy_sets=(("age", "reached_statutory_retirement"),), seed=20,
        ),
        "discovery": fragment,
        "use": {"summaries": [], "ice": []},
    }
    with BuiltinModelHandle(james.models[model_key]) as m:
        findings = report.derive_red_flags(
            kept, m, james.decision_rule, james_data
        )
    echo = {
        "protected": ["sex"],
        "thresholds": {
            "red_flag_purity": RED_FLAG_PURITY,
            "red_flag_ci_floor": RED_FLAG_CI_FLOOR,
            "flip_rate_floor": 0.01,
            "score_floor_fraction": 0.05,
        },
    }
    return report.assemble(echo, james_data, sections, findings, seed=20)


def test_assembled_report_validates_and_is_byte_stable(
    monkeypatch, james, james_data, james_discovery
):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    rpt1 = full_james_report(james, james_data, james_discovery, "use")
    rpt2 = full_james_report(james, james_data, james_discovery, "use")
    report.validate_report(rpt1)
    assert report.report_json_bytes(rpt1) == report.report_json_bytes(rpt2)
    assert rpt1["red_flag_count"] == 1


def test_schema_rejects_malformed_reports(monkeypatch, james, james_data, james_discovery):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    rpt = full_james_report(james, james_data, james_discovery, "use")
    broken = json.loads(report.report_json_bytes(rpt))
    del broken["red_flags"]
    with pytest.raises(ValidationError, match="schema"):
        report.validate_report(broken)
    wrong_type = json.loads(report.report_json_bytes(rpt))
    wrong_type["red_flag_count"] = "one"
    with pytest.raises(ValidationError, match="schema"):
        report.validate_report(wrong_type)
    bad_label = json.loads(report.report_json_bytes(rpt))
    bad_label["red_flags"][0]["label"] = "definitely illegal"
    with pytest.raises(ValidationError, match="schema"):
        report.validate_report(bad_label)


def test_red_flag_labels_rederivable_from_json_alone(
    monkeypatch, james, james_data, james_discovery
):
    """Recompute every label from reported numbers + echoed thresholds."""
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    rpt = json.loads(report.report_json_bytes(
        full_james_report(james, james_data, james_discovery, "use")
    ))
    thresholds = rpt["config"]["thresholds"]
    for finding in rpt["red_flags"]:
        cap = finding["holdout_capacity"]
        is_link = (
            cap["value"] >= thresholds["red_flag_purity"]
            and cap["ci_low"] >= thresholds["red_flag_ci_floor"]
        )
        assert is_link == (finding["link_class"] == INEXTRICABLE_LINK)
        expected_red = (
            is_link
            and finding["use"] != report.USE_SKIPPED
            and finding["use"]["significant_influence_flag"]
            and finding["use"]["direction_of_harm"] == "toward_unfavourable"
        )
        assert expected_red == (finding["label"] == report.RED_FLAG_LABEL)


def test_markdown_rendering(monkeypatch, james, james_data, james_discovery):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    rpt = full_james_report(james, james_data, james_discovery, "use")
    md = report.render_markdown(rpt)
    assert "# Proxy audit report" in md
    assert "## Association scan" in md
    assert "## Contingency" in md
    assert "## Subgroup discovery" in md
    assert report.RED_FLAG_LABEL in md
    assert "not a certification of nondiscrimination" in md
    # presentation order: scan before contingency before discovery before use
    order = [
        md.index("## Association scan"),
        md.index("## Contingency"),
        md.index("## Subgroup discovery"),
        md.index("## Findings"),
    ]
    assert order == sorted(order)


def test_markdown_marks_skipped_use(monkeypatch, james_data):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    rpt = report.assemble(
        {"thresholds": {}}, james_data,
        {"use": report.USE_SKIPPED}, [], seed=0,
    )
    md = report.render_markdown(rpt)
    assert "_skipped: no model supplied_" in md
