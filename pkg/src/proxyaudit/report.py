"""Audit report assembly: pipeline fragments, red-flag logic, and rendering.

A report is a plain JSON-serializable dict; every number in it comes from one
of the measurement modules, and the red-flag logic is a pure function of
those reported numbers plus the echoed thresholds, so a reader can re-derive
each label from the JSON alone. Serialization sorts keys and pins float
formatting through ``json.dumps``, making reports byte-stable for identical
inputs, seed, and tool version; ``generated_at`` honours the
``SOURCE_DATE_EPOCH`` convention so pipelines can pin the timestamp too.

A finding is flagged only on the conjunction the framework requires:
a *validated, near-deterministic* proxy (capacity) whose assignment *also*
moves decisions toward the unfavourable outcome (use). Capacity alone is
reported, but labeled capacity-only.
"""

import datetime as _dt
import hashlib
import importlib.resources
import json
import math
import os

import jsonschema
import numpy as np

from . import __version__
from .association import association_scan, contingency, scan_to_json
from .capacity import INEXTRICABLE_LINK, classify_link, predictive_capacity
from .data import CATEGORICAL, split_holdout
from .discovery import VALIDATED, beam_search, validate
from .errors import ValidationError
from .intervention import (
    TOWARD_UNFAVOURABLE,
    Assignment,
    flip_analysis,
    ice_curve,
)

RED_FLAG_LABEL = "potential inherent-discrimination red flag"
CAPACITY_ONLY_LABEL = "capacity-only finding"
USE_SKIPPED = "skipped"

_SCHEMA_RESOURCE = "audit_report.schema.json"


def utc_timestamp():
    """ISO-8601 UTC second timestamp; SOURCE_DATE_EPOCH pins it when set."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (
        _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc)
        if epoch
        else _dt.datetime.now(_dt.timezone.utc)
    )
    return when.replace(microsecond=0).isoformat()


def dataset_fingerprint(d):
    """Row count plus per-column and combined content hashes."""
    columns = {}
    combined = hashlib.sha256()
    for name in d.column_names:
        digest = hashlib.sha256(d.column_array(name).tobytes()).hexdigest()[:16]
        columns[name] = digest
        combined.update(name.encode("utf-8"))
        combined.update(digest.encode("ascii"))
    return {
        "n_rows": d.n_rows,
        "columns": columns,
        "digest": combined.hexdigest()[:16],
    }


# --- pipeline fragments ---------------------------------------------------------


def run_capacity(
    d, protected, candidates, proxy_sets=(),
    *, normalization="arithmetic", bins=10, folds=5, seed=0,
):
    """Association scan, contingency drill-down of each top pair, and
    predictive capacity of each configured proxy set against each protected
    column."""
    fragment = {"scan": [], "contingency": [], "predictive": []}
    if candidates:
        scores = association_scan(
            d, protected, candidates, normalization=normalization, bins=bins
        )
        fragment["scan"] = scan_to_json(scores)
        for p in protected:
            top = next(
                (
                    s for s in scores
                    if s.var_a == p and d.schema_of(s.var_b).kind == CATEGORICAL
                ),
                None,
            )
            if top is not None:
                table = contingency(d, top.var_a, top.var_b)
                fragment["contingency"].append(table.to_json())
    for proxy_set in proxy_sets:
        for p in protected:
            score = predictive_capacity(
                d, tuple(proxy_set), p, folds=folds, seed=seed
            )
            entry = score.to_json()
            entry["link_class"] = classify_link(score)
            fragment["predictive"].append(entry)
    return fragment


def run_discovery(
    d, config,
    *, beam_width=10, max_depth=2, min_support=30, gamma=0.25,
    top_k=20, bins=4, holdout_fraction=0.4, seed=0,
):
    """Holdout split, beam search on the training part, validation on the
    held-out part. Returns every validated finding plus search accounting."""
    holdout, train = split_holdout(d, holdout_fraction, seed)
    stats = {}
    results = beam_search(
        train, config,
        beam_width=beam_width, max_depth=max_depth, min_support=min_support,
        gamma=gamma, top_k=top_k, bins=bins, stats_out=stats,
    )
    m_tests = max(1, stats.get("descriptors_evaluated", len(results)))
    validated = validate(results, holdout, m_tests) if results else []
    kept = [r for r in validated if r.status == VALIDATED]
    return {
        "train_rows": train.n_rows,
        "holdout_rows": holdout.n_rows,
        "m_tests": m_tests,
        "search": stats,
        "candidates_returned": len(results),
        "validated": [r.to_json() for r in kept],
        "unvalidated": [r.to_json() for r in validated if r.status != VALIDATED],
    }, kept


def run_use(
    m, rule, d, assignments, selector=None,
    *, flip_rate_floor=0.01, score_floor_fraction=0.05,
    ice_columns=(), ice_row=None, ice_grid_size=20,
):
    """Flip analysis for the assignment list plus ICE sweeps."""
    summary, _records = flip_analysis(
        m, rule, d, assignments, selector,
        flip_rate_floor=flip_rate_floor,
        score_floor_fraction=score_floor_fraction,
    )
    curves = []
    if ice_columns:
        row_index = 0 if ice_row is None else int(ice_row)
        row = d.record(row_index)
        for column in ice_columns:
            curves.append(
                ice_curve(
                    m, row, column, ice_grid_size,
                    dataset=d, row_index=row_index,
                ).to_json()
            )
    return {"summaries": [summary.to_json()], "ice": curves}


# --- red-flag conjunction -------------------------------------------------------


def representative_assignments(proxy, feature_order, d):
    """Assignments that move a row *into* the proxy region, restricted to
    columns the model reads: equality conditions pin the category; interval
    conditions take the midpoint of the bounds (clamped to the observed
    column range when a side is open)."""
    features = set(feature_order)
    out = []
    for cond in proxy.conditions:
        if cond.column not in features:
            continue
        if cond.kind == "equals":
            out.append(Assignment(cond.column, cond.category))
            continue
        values = d.column_array(cond.column)
        observed = values[~np.isnan(values)]
        lo = float(observed.min()) if math.isinf(cond.lo) else cond.lo
        hi = float(observed.max()) if math.isinf(cond.hi) else cond.hi
        out.append(Assignment(cond.column, (lo + hi) / 2.0))
    return out


def derive_red_flags(
    kept_results, m, rule, d,
    *, flip_rate_floor=0.01, score_floor_fraction=0.05,
):
    """Label each validated finding by the two-part standard.

    A finding earns the red-flag label only when its holdout capacity
    classifies as an inextricable-link candidate AND assigning rows into the
    proxy region significantly moves decisions toward the unfavourable
    outcome. Everything else stays capacity-only; findings whose descriptor
    touches no model feature record a skipped use check.
    """
    findings = []
    for result in kept_results:
        capacity = result.holdout_capacity or result.capacity
        link = classify_link(capacity)
        entry = {
            "proxy": result.proxy.to_json(),
            "proxy_text": result.proxy.as_text(),
            "protected_target": list(result.protected_target),
            "link_class": link,
            "holdout_capacity": capacity.to_json(),
            "adjusted_p": result.adjusted_p,
            "use": USE_SKIPPED,
            "label": CAPACITY_ONLY_LABEL,
        }
        if link == INEXTRICABLE_LINK and m is not None and rule is not None:
            assignments = representative_assignments(
                result.proxy, m.feature_order, d
            )
            if assignments:
                summary, _ = flip_analysis(
                    m, rule, d, assignments,
                    flip_rate_floor=flip_rate_floor,
                    score_floor_fraction=score_floor_fraction,
                )
                entry["use"] = summary.to_json()
                if (
                    summary.significant_influence_flag
                    and summary.direction_of_harm == TOWARD_UNFAVOURABLE
                ):
                    entry["label"] = RED_FLAG_LABEL
        findings.append(entry)
    return findings


def red_flag_count(findings):
    return sum(1 for f in findings if f["label"] == RED_FLAG_LABEL)


# --- assembly and rendering -----------------------------------------------------


def assemble(config_echo, d, sections, findings, seed):
    return {
        "tool_version": __version__,
        "generated_at": utc_timestamp(),
        "seed": seed,
        "config": config_echo,
        "dataset": dataset_fingerprint(d),
        "sections": sections,
        "red_flags": findings,
        "red_flag_count": red_flag_count(findings),
    }


def report_json_bytes(report):
    """Byte-stable serialization: sorted keys, two-space indent, one final
    newline."""
    return (json.dumps(report, indent=2, sort_keys=True) + "\n").encode("utf-8")


def report_schema():
    path = importlib.resources.files("proxyaudit.schemas") / _SCHEMA_RESOURCE
    return json.loads(path.read_text(encoding="utf-8"))


def validate_report(report):
    """Check the report against the published schema; raises on mismatch."""
    try:
        jsonschema.validate(instance=report, schema=report_schema())
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"report fails its schema: {exc.message}") from None


def _md_table(headers, rows):
    out = ["| " + " | ".join(headers) + " |"]
    out.append("|" + "|".join(" --- " for _ in headers) + "|")
    for row in rows:
        out.append("| " + " | ".join(str(c) for c in row) + " |")
    return out


def render_markdown(report):
    """Human-readable mirror of the JSON, in presentation order: scan table,
    contingency drill-downs, discovery, use, then flags."""
    lines = [
        "# Proxy audit report",
        "",
        f"- tool version: {report['tool_version']}",
        f"- generated at: {report['generated_at']}",
        f"- seed: {report['seed']}",
        f"- dataset: {report['dataset']['n_rows']} rows, "
        f"digest `{report['dataset']['digest']}`",
        "",
    ]
    sections = report["sections"]
    capacity = sections.get("capacity")
    if capacity:
        if capacity["scan"]:
            lines += ["## Association scan", ""]
            lines += _md_table(
                ["protected", "candidate", "measure", "value", "p-value", "n"],
                [
                    (
                        s["var_a"], s["var_b"], s["measure"],
                        f"{s['value']:.3f}", f"{s['p_value']:.3g}",
                        s["n_effective"],
                    )
                    for s in capacity["scan"]
                ],
            )
            lines.append("")
        for table in capacity["contingency"]:
            lines += [
                f"## Contingency: {table['row_var']} x {table['col_var']}",
                "",
            ]
            lines += _md_table(
                [table["row_var"] + " \\ " + table["col_var"]]
                + list(table["col_cats"]),
                [
                    [row_name] + list(counts)
                    for row_name, counts in zip(table["row_cats"], table["counts"])
                ],
            )
            lines.append("")
        if capacity["predictive"]:
            lines += ["## Predictive capacity", ""]
            lines += _md_table(
                ["proxy set", "protected", "value", "CI", "class"],
                [
                    (
                        " + ".join(p["proxy"]), str(p["protected_value"]),
                        f"{p['value']:.3f}",
                        f"[{p['ci_low']:.3f}, {p['ci_high']:.3f}]",
                        p["link_class"],
                    )
                    for p in capacity["predictive"]
                ],
            )
            lines.append("")
    discovery = sections.get("discovery")
    if discovery:
        lines += [
            "## Subgroup discovery",
            "",
            f"- training rows: {discovery['train_rows']}, "
            f"holdout rows: {discovery['holdout_rows']}",
            f"- descriptors tested: {discovery['m_tests']} "
            f"(Bonferroni correction factor)",
            f"- validated findings: {len(discovery['validated'])}",
            "",
        ]
        if discovery["validated"]:
            lines += _md_table(
                ["subgroup", "protected value", "holdout purity", "adjusted p"],
                [
                    (
                        r["proxy_text"],
                        ":".join(r["protected_target"]),
                        f"{r['holdout_capacity']['value']:.4f}",
                        f"{r['adjusted_p']:.3g}",
                    )
                    for r in discovery["validated"]
                ],
            )
            lines.append("")
    use = sections.get("use")
    if use == USE_SKIPPED:
        lines += ["## Proxy use", "", "_skipped: no model supplied_", ""]
    elif use:
        lines += ["## Proxy use", ""]
        for s in use["summaries"]:
            assigns = ", ".join(
                f"{a['column']}:={a['value']!r}" for a in s["assignments"]
            )
            lines += [
                f"- intervention [{assigns}] over {s['n']} rows: "
                f"flip rate {s['flip_rate']:.4f}, "
                f"mean |delta| {s['mean_abs_delta']:.4f}, "
                f"direction {s['direction_of_harm']}, "
                f"significant: {s['significant_influence_flag']}",
            ]
        lines.append("")
    flags = report["red_flags"]
    lines += ["## Findings", ""]
    if not flags:
        lines.append("_no validated findings_")
    for f in flags:
        lines += [
            f"### {f['proxy_text']} -> "
            f"{':'.join(f['protected_target'])}",
            "",
            f"- label: **{f['label']}**",
            f"- link class: {f['link_class']}",
            f"- holdout purity: {f['holdout_capacity']['value']:.4f} "
            f"(CI low {f['holdout_capacity']['ci_low']:.4f})",
            f"- adjusted p: {f['adjusted_p']:.3g}",
        ]
        if f["use"] != USE_SKIPPED:
            lines += [
                f"- use: flip rate {f['use']['flip_rate']:.4f} toward "
                f"{f['use']['direction_of_harm']}, significant: "
                f"{f['use']['significant_influence_flag']}",
            ]
        lines.append("")
    lines += [
        "---",
        "",
        "_Findings are potential red flags for further review, not legal "
        "conclusions and not a certification of nondiscrimination._",
        "",
    ]
    return "\n".join(lines)
