"""Beam search for complex proxies: conjunctions of candidate-column
conditions scoring high on coverage-weighted purity for a protected value.

The search is levelwise and fully deterministic: candidate conditions come
from a fixed enumeration, beams break ties by depth and then by descriptor
text, and every evaluated descriptor is counted toward the Bonferroni budget
used by holdout validation.
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .association import equal_frequency_bins
from .capacity import RED_FLAG_CI_FLOOR, CapacityScore, exact_correspondence
from .data import CATEGORICAL
from .descriptors import Condition, SubgroupDescriptor
from .errors import InsufficientDataError, ParameterError, ValidationError

CANDIDATE = "candidate"
VALIDATED = "validated"
UNVALIDATED = "unvalidated"


@dataclass(frozen=True)
class DiscoveryResult:
    """One discovered proxy descriptor with its capacity evidence."""

    proxy: SubgroupDescriptor
    protected_target: tuple  # (column, category)
    quality: float
    capacity: CapacityScore
    adjusted_p: float
    holdout_capacity: CapacityScore = None
    protected_subgroup: SubgroupDescriptor = None
    status: str = CANDIDATE

    def __post_init__(self):
        if self.adjusted_p < self.capacity.p_value:
            raise ValidationError("adjusted p-value below the raw p-value")
        if self.status not in (CANDIDATE, VALIDATED, UNVALIDATED):
            raise ValidationError(f"unknown result status {self.status!r}")
        if self.status == VALIDATED and self.holdout_capacity is None:
            raise ValidationError("validated results need a holdout capacity score")

    def to_json(self):
        out = {
            "proxy": self.proxy.to_json(),
            "proxy_text": self.proxy.as_text(),
            "protected_target": list(self.protected_target),
            "quality": self.quality,
            "capacity": self.capacity.to_json(),
            "adjusted_p": self.adjusted_p,
            "status": self.status,
        }
        if self.holdout_capacity is not None:
            out["holdout_capacity"] = self.holdout_capacity.to_json()
        if self.protected_subgroup is not None:
            out["protected_subgroup"] = self.protected_subgroup.to_json()
        return out


def enumerate_conditions(d, columns, bins=4):
    """Atomic conditions for the search space, in deterministic order.

    Categorical columns contribute one equality condition per declared
    category. Numeric columns contribute ``bins`` equal-frequency intervals
    over the observed range plus a below/at-or-above half-line pair per
    interior cut point (constant or all-missing columns contribute nothing).
    """
    if bins < 2:
        raise ParameterError("bins must be at least 2")
    out = []
    for name in columns:
        schema = d.schema_of(name)
        if schema.kind == CATEGORICAL:
            out.extend(Condition.equals(name, cat) for cat in schema.categories)
            continue
        values = d.values(name)
        valid = values[~np.isnan(values)]
        if valid.size == 0:
            continue
        lo, hi = float(valid.min()), float(valid.max())
        if lo == hi:
            continue
        cuts = [float(c) for c in equal_frequency_bins(values, bins) if lo < c < hi]
        edges = [lo] + cuts + [hi]
        for i in range(len(edges) - 1):
            last = i == len(edges) - 2
            out.append(
                Condition.interval(name, lo=edges[i], hi=edges[i + 1], hi_closed=last)
            )
        for c in cuts:
            out.append(Condition.interval(name, hi=c))
            out.append(Condition.interval(name, lo=c))
    return out


def _evaluate(d, proxy, protected_target, gamma, min_support):
    """(quality, capacity, support) for one pair; (None, None, support) when
    the descriptor matches fewer than min_support complete rows (no
    statistical test is run below the floor)."""
    column = protected_target[0]
    complete = d.complete_mask(list(proxy.columns) + [column])
    support = int(np.count_nonzero(proxy.mask(d) & complete))
    if support < min_support:
        return None, None, support
    score = exact_correspondence(d, proxy, protected_target)
    coverage = support / int(np.count_nonzero(complete))
    return coverage**gamma * score.value, score, support


def quality(d, proxy, protected_target, gamma):
    """Coverage-weighted purity: (support / N_effective)^gamma x purity.

    A descriptor matching no complete rows scores -inf so that beams and
    result pools can discard it uniformly.
    """
    if gamma < 0:
        raise ParameterError("gamma must be non-negative")
    q, _score, _support = _evaluate(d, proxy, protected_target, gamma, min_support=1)
    return -math.inf if q is None else q


def _descriptor_order(entry):
    """Quality-descending, then shallower, then lexicographic descriptor."""
    q, result = entry
    return (
        -q,
        result.proxy.depth,
        tuple(c.sort_key() for c in result.proxy.conditions),
        result.protected_target,
    )


def _targets_of(d, protected_columns):
    targets = []
    for column in protected_columns:
        schema = d.schema_of(column)
        if schema.kind != CATEGORICAL:
            raise ValidationError(f"protected column {column!r} must be categorical")
        counts = d.value_counts(column)
        targets.extend(
            (column, cat) for cat in schema.categories if counts.get(cat, 0) > 0
        )
    return targets


def beam_search(
    d_train,
    config,
    beam_width=10,
    max_depth=3,
    min_support=30,
    gamma=0.25,
    top_k=20,
    *,
    bins=4,
    stats_out=None,
):
    """Levelwise beam search over candidate-column conjunctions, one beam per
    protected (column, category) target, pooled into a global top_k.

    Every scored (descriptor, target) pair counts toward the Bonferroni
    budget reported in ``stats_out['descriptors_evaluated']``, which
    :func:`validate` uses as its default m_tests.
    """
    if beam_width < 1:
        raise ParameterError("beam_width must be at least 1")
    if max_depth < 1:
        raise ParameterError("max_depth must be at least 1")
    if top_k < 1:
        raise ParameterError("top_k must be at least 1")
    if min_support < 1:
        raise ParameterError("min_support must be at least 1")
    if gamma < 0:
        raise ParameterError("gamma must be non-negative")
    config.check_against(d_train)

    conditions = enumerate_conditions(d_train, config.candidates, bins)
    targets = _targets_of(d_train, config.protected)
    pool = []
    evaluated = 0
    below_support = 0

    for target in targets:
        seen = set()
        # beam entries: (descriptor, its support); the neutral root is never
        # itself reported, only refined
        beam = [(SubgroupDescriptor(()), None)]
        for _depth in range(1, max_depth + 1):
            scored = []
            for parent, parent_support in beam:
                for cond in conditions:
                    if cond.column in parent.columns:
                        continue
                    child = parent.extended(cond)
                    if child in seen:
                        continue
                    seen.add(child)
                    q, score, support = _evaluate(
                        d_train, child, target, gamma, min_support
                    )
                    if parent_support is not None and support > parent_support:
                        raise ValidationError(
                            "refinement support exceeded its parent's support"
                        )
                    if score is None:
                        below_support += 1
                        continue
                    evaluated += 1
                    result = DiscoveryResult(
                        proxy=child,
                        protected_target=target,
                        quality=q,
                        capacity=score,
                        adjusted_p=score.p_value,
                    )
                    scored.append((q, result))
            scored.sort(key=_descriptor_order)
            beam = [
                (r.proxy, r.capacity.support) for _q, r in scored[:beam_width]
            ]
            pool.extend(scored)
            if not beam:
                break

    pool.sort(key=_descriptor_order)
    deduped = []
    seen_masks = set()
    for q, result in pool:
        key = (
            result.protected_target,
            result.proxy.mask(d_train).tobytes(),
        )
        if key in seen_masks:
            continue
        seen_masks.add(key)
        deduped.append(result)
        if len(deduped) == top_k:
            break

    if stats_out is not None:
        stats_out["descriptors_evaluated"] = evaluated
        stats_out["below_support"] = below_support
        stats_out["targets"] = targets
        stats_out["conditions"] = len(conditions)
    if not deduped:
        warnings.warn(
            f"no descriptor reached min_support={min_support}; nothing to report"
        )
    return deduped


def validate(results, d_holdout, m_tests):
    """Re-score results on held-out rows and Bonferroni-adjust p-values.

    Survivors keep a holdout capacity score and status ``validated``; results
    whose holdout purity CI lower bound falls below the red-flag floor are
    dropped; descriptors matching no holdout row are kept but marked
    ``unvalidated`` rather than silently removed.
    """
    if m_tests < 1:
        raise ParameterError("m_tests must be at least 1")
    out = []
    for result in results:
        adjusted = min(1.0, result.capacity.p_value * m_tests)
        try:
            holdout = exact_correspondence(
                d_holdout, result.proxy, result.protected_target
            )
        except InsufficientDataError:
            out.append(
                replace(result, adjusted_p=adjusted, status=UNVALIDATED)
            )
            continue
        if holdout.ci_low < RED_FLAG_CI_FLOOR:
            continue
        out.append(
            replace(
                result,
                adjusted_p=adjusted,
                holdout_capacity=holdout,
                status=VALIDATED,
            )
        )
    return out
