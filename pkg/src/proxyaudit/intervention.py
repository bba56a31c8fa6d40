"""Proxy-use measurement: counterfactual score deltas, decision flips, ICE
curves, do-style causal interventions, and group-level use summaries.

Capacity (a column *could* reconstruct the protected attribute) and use (the
model's output *actually moves* when that column moves) are measured
separately; this module covers use. Every operation scores baseline and
counterfactual rows through the same :class:`~proxyaudit.models.ModelHandle`
batch call, so deltas for deterministic models are exact, and a model that
ignores its proxy column yields deltas of 0.0 exactly — the
capacity-without-use case.

Causal mode propagates an assignment through a
:class:`~proxyaudit.synth.CausalGraphSpec` before scoring: descendants of the
assigned nodes are recomputed in topological order (do-intervention
semantics). Noise is held fixed where the mechanism is invertible
(linear-Gaussian residuals) and re-drawn from a fixed-seed generator where it
is not; full abduction is deliberately out of scope.
"""

from dataclasses import dataclass

import numpy as np

from .data import CATEGORICAL
from .errors import (
    GraphError,
    InsufficientDataError,
    ParameterError,
    ValidationError,
)
from .models import FAVOURABLE, UNFAVOURABLE, decide
from .synth import apply_mechanism

TOWARD_UNFAVOURABLE = "toward_unfavourable"
TOWARD_FAVOURABLE = "toward_favourable"
MIXED = "mixed"

# baseline/counterfactual rows are interleaved: 1,000 rows = 500 pairs per call
_BATCH_ROWS = 1_000


@dataclass(frozen=True)
class Assignment:
    """Set one column to a fixed value (a category string or a real)."""

    column: str
    value: object

    def to_json(self):
        return {"column": self.column, "value": self.value}

    @staticmethod
    def from_json(obj):
        return Assignment(obj["column"], obj["value"])


@dataclass(frozen=True)
class InterventionRecord:
    """One row's baseline-vs-counterfactual comparison."""

    row_index: int
    baseline_score: float
    counterfactual_score: float
    delta: float
    baseline_outcome: str = None
    counterfactual_outcome: str = None
    flipped: bool = False

    def __post_init__(self):
        if self.delta != self.counterfactual_score - self.baseline_score:
            raise ValidationError("delta must equal counterfactual - baseline")
        if self.flipped != (
            self.baseline_outcome is not None
            and self.baseline_outcome != self.counterfactual_outcome
        ):
            raise ValidationError("flipped must mirror an outcome change")

    def to_json(self):
        return {
            "row_index": self.row_index,
            "baseline_score": self.baseline_score,
            "counterfactual_score": self.counterfactual_score,
            "delta": self.delta,
            "baseline_outcome": self.baseline_outcome,
            "counterfactual_outcome": self.counterfactual_outcome,
            "flipped": self.flipped,
        }


@dataclass(frozen=True)
class ICECurve:
    """Model score swept over one column's value range, all else held fixed."""

    row_index: int
    column: str
    grid: tuple
    scores: tuple

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(self.grid))
        object.__setattr__(self, "scores", tuple(self.scores))
        if len(self.grid) != len(self.scores):
            raise ValidationError("grid and scores must have equal length")
        numeric = all(isinstance(v, (int, float)) for v in self.grid)
        if numeric and any(
            b <= a for a, b in zip(self.grid, self.grid[1:])
        ):
            raise ValidationError("numeric grid must be strictly increasing")

    def to_json(self):
        return {
            "row_index": self.row_index,
            "column": self.column,
            "grid": list(self.grid),
            "scores": list(self.scores),
        }


@dataclass(frozen=True)
class UseSummary:
    """Group-level aggregate of one intervention applied to many rows."""

    assignments: tuple
    n: int
    mean_delta: float
    mean_abs_delta: float
    flip_count: int
    flip_rate: float
    direction_of_harm: str
    significant_influence_flag: bool

    def __post_init__(self):
        object.__setattr__(self, "assignments", tuple(self.assignments))
        if self.n < 1:
            raise ValidationError("summary needs at least one row")
        if self.flip_rate != self.flip_count / self.n:
            raise ValidationError("flip_rate must equal flip_count / n")
        if self.direction_of_harm not in (
            TOWARD_UNFAVOURABLE, TOWARD_FAVOURABLE, MIXED,
        ):
            raise ValidationError(
                f"unknown direction_of_harm {self.direction_of_harm!r}"
            )

    def to_json(self):
        return {
            "assignments": [a.to_json() for a in self.assignments],
            "n": self.n,
            "mean_delta": self.mean_delta,
            "mean_abs_delta": self.mean_abs_delta,
            "flip_count": self.flip_count,
            "flip_rate": self.flip_rate,
            "direction_of_harm": self.direction_of_harm,
            "significant_influence_flag": self.significant_influence_flag,
        }


# --- single-row interventions --------------------------------------------------


def _check_feature_assignments(m, assignments):
    features = set(m.feature_order)
    for a in assignments:
        if a.column not in features:
            raise ValidationError(
                f"assignment targets {a.column!r}, which the model does not read"
            )


def _with_assignments(row, assignments):
    out = dict(row)
    for a in assignments:
        out[a.column] = a.value
    return out


def _record_from_scores(base, cf, rule, row_index):
    base_out = cf_out = None
    if rule is not None:
        base_out, cf_out = decide(rule, base), decide(rule, cf)
    return InterventionRecord(
        row_index=row_index,
        baseline_score=base,
        counterfactual_score=cf,
        delta=cf - base,
        baseline_outcome=base_out,
        counterfactual_outcome=cf_out,
        flipped=base_out is not None and base_out != cf_out,
    )


def counterfactual_delta(m, row, assignments, *, rule=None, row_index=-1):
    """Score one row as observed and with the assignments applied.

    Both rows go through one ``predict_batch`` call, so for deterministic
    models an empty assignment list yields a delta of exactly 0.0. Without a
    decision rule the outcome fields are None and ``flipped`` is False.
    """
    _check_feature_assignments(m, assignments)
    cf_row = _with_assignments(row, assignments)
    try:
        base, cf = m.predict_batch([row, cf_row])
    except ValidationError as exc:
        raise ValidationError(f"row {row_index}: {exc}") from None
    return _record_from_scores(base, cf, rule, row_index)


def ice_curve(
    m, row, column, grid_size=20,
    *, dataset=None, value_range=None, categories=None, row_index=-1,
):
    """Model score swept over one column, everything else held at the row.

    Numeric columns need a range: either ``value_range=(lo, hi)`` or a
    ``dataset`` whose observed min..max supplies it; the grid is
    ``grid_size`` equally spaced points. Categorical columns sweep the full
    category list in schema order (``categories`` or the dataset schema), so
    the row's own value appears on the grid and reproduces the baseline
    score exactly.
    """
    _check_feature_assignments(m, (Assignment(column, None),))
    grid = None
    if categories is not None:
        grid = tuple(categories)
    elif dataset is not None and dataset.schema_of(column).kind == CATEGORICAL:
        grid = dataset.schema_of(column).categories
    if grid is None:
        if value_range is not None:
            lo, hi = float(value_range[0]), float(value_range[1])
        elif dataset is not None:
            values = dataset.column_array(column)
            values = values[~np.isnan(values)]
            if values.size == 0:
                raise InsufficientDataError(
                    f"column {column!r} has no observed values to span"
                )
            lo, hi = float(values.min()), float(values.max())
        else:
            raise ParameterError(
                "numeric sweep needs value_range or a dataset to take the "
                "observed range from"
            )
        if grid_size < 2:
            raise ParameterError("numeric grid needs at least 2 points")
        if not lo < hi:
            raise ParameterError(f"degenerate sweep range [{lo}, {hi}]")
        grid = tuple(float(v) for v in np.linspace(lo, hi, grid_size))
    rows = [_with_assignments(row, (Assignment(column, v),)) for v in grid]
    scores = m.predict_batch(rows)
    return ICECurve(
        row_index=row_index, column=column, grid=grid,
        scores=tuple(float(s) for s in scores),
    )


# --- group-level flips ----------------------------------------------------------


def _harm_direction(records):
    to_unfav = sum(
        1 for r in records
        if r.flipped and r.counterfactual_outcome == UNFAVOURABLE
    )
    to_fav = sum(
        1 for r in records
        if r.flipped and r.counterfactual_outcome == FAVOURABLE
    )
    if to_unfav and not to_fav:
        return TOWARD_UNFAVOURABLE
    if to_fav and not to_unfav:
        return TOWARD_FAVOURABLE
    return MIXED


def _check_assignments_against(d, assignments):
    for a in assignments:
        col = d.schema_of(a.column)
        if col.kind == CATEGORICAL:
            if a.value not in col.categories:
                raise ValidationError(
                    f"assignment {a.column!r}={a.value!r}: unknown category"
                )
        elif not isinstance(a.value, (int, float)) or isinstance(a.value, bool):
            raise ValidationError(
                f"assignment {a.column!r}={a.value!r}: numeric column needs a real"
            )


def flip_analysis(
    m, rule, d, assignments, selector=None,
    *, flip_rate_floor=0.01, score_floor_fraction=0.05,
):
    """Apply one intervention to every selected row and aggregate.

    Selection is the selector's match set (everything when absent)
    intersected with rows complete in the model's feature columns. Baseline
    and counterfactual rows are interleaved and scored 500 pairs per batch.
    ``significant_influence_flag`` is set when the flip rate reaches
    ``flip_rate_floor`` or the mean absolute delta is nonzero and reaches
    ``score_floor_fraction`` of the baseline-score interquartile range.
    """
    if not assignments:
        raise ParameterError("flip_analysis needs at least one assignment")
    _check_feature_assignments(m, assignments)
    _check_assignments_against(d, assignments)
    mask = np.ones(d.n_rows, dtype=bool)
    if selector is not None:
        mask &= selector.mask(d)
    mask &= d.complete_mask(m.feature_order)
    indices = np.nonzero(mask)[0]
    if indices.size == 0:
        raise InsufficientDataError("no rows selected for flip analysis")

    records = []
    feature_cols = list(m.feature_order)
    for start in range(0, indices.size, _BATCH_ROWS // 2):
        chunk = indices[start : start + _BATCH_ROWS // 2]
        batch = []
        for i in chunk:
            row = d.record(int(i), feature_cols)
            batch.append(row)
            batch.append(_with_assignments(row, assignments))
        scores = m.predict_batch(batch)
        for j, i in enumerate(chunk):
            records.append(
                _record_from_scores(
                    scores[2 * j], scores[2 * j + 1], rule, int(i)
                )
            )

    deltas = np.array([r.delta for r in records])
    baselines = np.array([r.baseline_score for r in records])
    flip_count = sum(1 for r in records if r.flipped)
    n = len(records)
    flip_rate = flip_count / n
    mean_abs_delta = float(np.abs(deltas).mean())
    iqr = float(np.percentile(baselines, 75) - np.percentile(baselines, 25))
    significant = flip_rate >= flip_rate_floor or (
        mean_abs_delta > 0 and mean_abs_delta >= score_floor_fraction * iqr
    )
    summary = UseSummary(
        assignments=tuple(assignments),
        n=n,
        mean_delta=float(deltas.mean()),
        mean_abs_delta=mean_abs_delta,
        flip_count=flip_count,
        flip_rate=flip_rate,
        direction_of_harm=_harm_direction(records),
        significant_influence_flag=significant,
    )
    return summary, records


# --- causal mode ----------------------------------------------------------------


def _require_node_values(g, row):
    missing = [n for n in g.node_names if n not in row or row[n] is None]
    if missing:
        raise ValidationError(
            f"row lacks values for graph nodes {sorted(missing)}"
        )


def causal_intervention(scm, m, row, assignments, *, seed=0, rule=None, row_index=-1):
    """Do-intervention: assign, recompute descendants, then score.

    Assignments may target any graph node, including ones the model never
    reads — the effect then flows through recomputed descendants (a node
    whose parents end up unchanged keeps its observed value). Linear-Gaussian
    mechanisms preserve the noise implied by the observed row; probability
    tables are re-drawn from a generator seeded with ``seed``. An
    intervention on a sink node reduces to :func:`counterfactual_delta`.
    """
    node_names = set(scm.node_names)
    missing_features = [f for f in m.feature_order if f not in node_names]
    if missing_features:
        raise GraphError(
            f"graph does not cover model features {sorted(missing_features)}"
        )
    for a in assignments:
        if a.column not in node_names:
            raise GraphError(f"assignment targets non-node column {a.column!r}")
        if scm.kind_of(a.column) == CATEGORICAL:
            if a.value not in scm.categories_of(a.column):
                raise ValidationError(
                    f"assignment {a.column!r}={a.value!r}: unknown category"
                )
    _require_node_values(scm, row)

    cf_row = _with_assignments(row, assignments)
    assigned = {a.column for a in assignments}
    to_recompute = scm.descendants_of(assigned)
    rng = np.random.default_rng(seed)
    for name in scm.topological_order():
        if name not in to_recompute:
            continue
        parents = scm.parents_of(name)
        new_parents = {p: cf_row[p] for p in parents}
        old_parents = {p: row[p] for p in parents}
        if new_parents == old_parents:
            continue  # undisturbed: keep the observed value
        cf_row[name] = apply_mechanism(
            scm, name, new_parents,
            {"value": row[name], "parents": old_parents},
            rng,
        )

    base, cf = m.predict_batch([row, cf_row])
    record = _record_from_scores(base, cf, rule, row_index)
    return record
