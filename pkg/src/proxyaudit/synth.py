"""Structural-causal-model data generator with frozen scenario presets.

A :class:`CausalGraphSpec` is a DAG of categorical/numeric nodes, each with a
mechanism: a conditional probability table (``cpt``), a linear-Gaussian
equation (``linear_gaussian``), a deterministic parent-dependent threshold
(``threshold``), or a discrete distribution over numeric values
(``discrete_numeric``). Sampling is ancestral in topological order from one
NumPy PCG64 stream (``numpy.random.default_rng``), so identical
(graph, n, seed) inputs reproduce bit-for-bit anywhere NumPy runs.

Each preset freezes the quantitative choices its scenario needs (CPT
strengths, value grids, attached model weights) together with the analytic
ground truth those numbers imply.
"""

import itertools
import json
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter

import numpy as np

from .data import CATEGORICAL, NUMERIC, ColumnSchema, Dataset
from .descriptors import Condition, SubgroupDescriptor
from .errors import GraphError, ParameterError, ValidationError
from .models import DecisionRule, ModelSpec

MECHANISM_KINDS = ("cpt", "linear_gaussian", "threshold", "discrete_numeric")
CONFIG_SEP = "|"


def _config_key(values):
    return CONFIG_SEP.join(values)


@dataclass(frozen=True)
class CausalGraphSpec:
    """DAG + per-node mechanisms; validates eagerly, before any sampling."""

    nodes: tuple  # ((name, kind), ...) in declaration order
    edges: tuple  # ((parent, child), ...)
    mechanisms: dict  # name -> mechanism dict (see module docstring)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple((n, k) for n, k in self.nodes))
        object.__setattr__(self, "edges", tuple((p, c) for p, c in self.edges))
        self._validate()

    # --- structure ---------------------------------------------------------

    @property
    def node_names(self):
        return tuple(n for n, _k in self.nodes)

    def kind_of(self, name):
        for n, k in self.nodes:
            if n == name:
                return k
        raise GraphError(f"no node named {name!r}")

    def parents_of(self, name):
        return tuple(p for p, c in self.edges if c == name)

    def children_of(self, name):
        return tuple(c for p, c in self.edges if p == name)

    def descendants_of(self, names):
        """All nodes reachable from the given set, excluding the set itself."""
        out, frontier = set(), list(names)
        while frontier:
            for child in self.children_of(frontier.pop()):
                if child not in out:
                    out.add(child)
                    frontier.append(child)
        return out - set(names)

    def topological_order(self):
        ts = TopologicalSorter()
        for name in self.node_names:
            ts.add(name, *self.parents_of(name))
        try:
            return tuple(ts.static_order())
        except CycleError as exc:
            raise ValidationError(f"graph has a cycle: {exc.args[1]}") from None

    def categories_of(self, name):
        mech = self.mechanisms[name]
        if mech["kind"] == "threshold":
            return ("false", "true")
        if mech["kind"] == "cpt":
            return tuple(mech["categories"])
        raise GraphError(f"node {name!r} is not categorical")

    # --- validation --------------------------------------------------------

    def _validate(self):
        names = self.node_names
        if len(set(names)) != len(names):
            raise ValidationError("duplicate node names")
        for n, k in self.nodes:
            if k not in (CATEGORICAL, NUMERIC):
                raise ValidationError(f"node {n!r} has unknown kind {k!r}")
        for p, c in self.edges:
            if p not in names or c not in names:
                raise ValidationError(f"edge ({p!r}, {c!r}) references unknown nodes")
        self.topological_order()  # raises on cycles
        missing = set(names) - set(self.mechanisms)
        if missing:
            raise ValidationError(f"nodes without mechanisms: {sorted(missing)}")
        extra = set(self.mechanisms) - set(names)
        if extra:
            raise ValidationError(f"mechanisms for unknown nodes: {sorted(extra)}")
        for name in names:
            self._validate_mechanism(name)

    def _parent_configs(self, parents):
        """All parent category combinations, in declaration-order product."""
        pools = [self.categories_of(p) for p in parents]
        return [_config_key(combo) for combo in itertools.product(*pools)]

    def _validate_mechanism(self, name):
        mech = self.mechanisms[name]
        kind = mech.get("kind")
        if kind not in MECHANISM_KINDS:
            raise ValidationError(f"node {name!r}: unknown mechanism kind {kind!r}")
        declared_parents = tuple(mech.get("parents", ()))
        if declared_parents != self.parents_of(name):
            raise ValidationError(
                f"node {name!r}: mechanism parents {declared_parents} do not match "
                f"graph parents {self.parents_of(name)}"
            )
        node_kind = self.kind_of(name)
        if kind in ("cpt", "threshold") and node_kind != CATEGORICAL:
            raise ValidationError(f"node {name!r}: {kind} mechanisms are categorical")
        if kind in ("linear_gaussian", "discrete_numeric") and node_kind != NUMERIC:
            raise ValidationError(f"node {name!r}: {kind} mechanisms are numeric")

        if kind in ("cpt", "discrete_numeric"):
            non_cat = [p for p in declared_parents if self.kind_of(p) != CATEGORICAL]
            if non_cat:
                raise ValidationError(
                    f"node {name!r}: probability-table parents must be "
                    f"categorical, got numeric {non_cat}"
                )
        if kind == "cpt":
            categories = mech.get("categories")
            if not categories or len(set(categories)) != len(categories):
                raise ValidationError(f"node {name!r}: cpt needs distinct categories")
            self._validate_prob_table(name, mech["table"], declared_parents, len(categories))
        elif kind == "discrete_numeric":
            values = mech.get("values")
            if not values or sorted(set(values)) != list(values):
                raise ValidationError(
                    f"node {name!r}: discrete_numeric needs strictly increasing values"
                )
            self._validate_prob_table(name, mech["table"], declared_parents, len(values))
        elif kind == "linear_gaussian":
            weights = mech.get("weights", {})
            numeric_parents = tuple(
                p for p in declared_parents if self.kind_of(p) == NUMERIC
            )
            if numeric_parents != declared_parents:
                raise ValidationError(
                    f"node {name!r}: linear_gaussian parents must be numeric"
                )
            if set(weights) != set(declared_parents):
                raise ValidationError(
                    f"node {name!r}: weights must cover exactly the parents"
                )
            if mech.get("noise_sd", 0.0) < 0:
                raise ValidationError(f"node {name!r}: noise_sd must be non-negative")
        else:  # threshold
            source = mech.get("source")
            by = mech.get("by")
            if set(declared_parents) != {source, by} or len(declared_parents) != 2:
                raise ValidationError(
                    f"node {name!r}: threshold needs parents (source, by)"
                )
            if self.kind_of(source) != NUMERIC or self.kind_of(by) != CATEGORICAL:
                raise ValidationError(
                    f"node {name!r}: threshold source must be numeric, by categorical"
                )
            cutoffs = mech.get("cutoffs", {})
            if set(cutoffs) != set(self.categories_of(by)):
                raise ValidationError(
                    f"node {name!r}: cutoffs must cover every category of {by!r}"
                )

    def _validate_prob_table(self, name, table, parents, width):
        expected = set(self._parent_configs(parents))
        if set(table) != expected:
            raise ValidationError(
                f"node {name!r}: table rows must cover exactly the parent "
                f"configurations ({sorted(expected)})"
            )
        for key, probs in table.items():
            if len(probs) != width:
                raise ValidationError(f"node {name!r}: row {key!r} has wrong width")
            if any(p < 0 for p in probs):
                raise ValidationError(f"node {name!r}: row {key!r} has negative mass")
            if abs(sum(probs) - 1.0) > 1e-9:
                raise ValidationError(f"node {name!r}: row {key!r} does not sum to 1")

    # --- serialization -----------------------------------------------------

    def to_json(self):
        return {
            "nodes": [[n, k] for n, k in self.nodes],
            "edges": [[p, c] for p, c in self.edges],
            "mechanisms": self.mechanisms,
            "seed": self.seed,
        }

    @staticmethod
    def from_json(obj):
        return CausalGraphSpec(
            nodes=tuple((n, k) for n, k in obj["nodes"]),
            edges=tuple((p, c) for p, c in obj["edges"]),
            mechanisms=obj["mechanisms"],
            seed=obj.get("seed", 0),
        )

    @staticmethod
    def load(path):
        with open(path, "r", encoding="utf-8") as fh:
            return CausalGraphSpec.from_json(json.load(fh))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# --- sampling ----------------------------------------------------------------


def _config_index(g, parents, sampled):
    """Per-row index into a node's parent-configuration list."""
    configs = g._parent_configs(parents)
    lookup = {key: i for i, key in enumerate(configs)}
    n = len(next(iter(sampled.values()))) if sampled else 0
    if not parents:
        return np.zeros(n, dtype=np.int64), configs
    pools = [g.categories_of(p) for p in parents]
    idx = np.zeros(n, dtype=np.int64)
    for p, pool in zip(parents, pools):
        idx = idx * len(pool) + sampled[p]
    del lookup  # configs are already in product order; the index is direct
    return idx, configs


def _draw_from_table(rng, table, configs, config_idx):
    """Vectorized inverse-CDF draw: one uniform per row, row-order stable."""
    prob_rows = np.array([table[key] for key in configs], dtype=np.float64)
    cum = np.cumsum(prob_rows, axis=1)
    cum[:, -1] = 1.0  # guard the last edge against float undersum
    u = rng.random(config_idx.shape[0])
    return (u[:, None] > cum[config_idx]).sum(axis=1)


def sample(g, n, seed):
    """Ancestral sampling: one PCG64 stream, topological node order, columns
    emitted in declaration order. Bit-for-bit reproducible per (g, n, seed)."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    rng = np.random.default_rng(seed)
    sampled = {}
    for name in g.topological_order():
        mech = g.mechanisms[name]
        kind = mech["kind"]
        parents = g.parents_of(name)
        if kind == "cpt":
            idx, configs = _config_index(g, parents, sampled) if parents else (
                np.zeros(n, dtype=np.int64), g._parent_configs(()),
            )
            sampled[name] = _draw_from_table(rng, mech["table"], configs, idx)
        elif kind == "discrete_numeric":
            idx, configs = _config_index(g, parents, sampled) if parents else (
                np.zeros(n, dtype=np.int64), g._parent_configs(()),
            )
            draws = _draw_from_table(rng, mech["table"], configs, idx)
            sampled[name] = np.asarray(mech["values"], dtype=np.float64)[draws]
        elif kind == "linear_gaussian":
            value = np.full(n, float(mech.get("intercept", 0.0)))
            for p in parents:
                value += mech["weights"][p] * sampled[p]
            value += rng.normal(0.0, mech.get("noise_sd", 0.0), n)
            sampled[name] = value
        else:  # threshold
            source = sampled[mech["source"]]
            by = sampled[mech["by"]]
            cutoffs = np.array(
                [mech["cutoffs"][c] for c in g.categories_of(mech["by"])]
            )
            sampled[name] = (source >= cutoffs[by]).astype(np.int64)

    schema, columns = [], {}
    for name, kind in g.nodes:
        if kind == CATEGORICAL:
            schema.append(ColumnSchema(name, CATEGORICAL, g.categories_of(name)))
            columns[name] = sampled[name].astype(np.int64)
        else:
            schema.append(ColumnSchema(name, NUMERIC))
            columns[name] = sampled[name].astype(np.float64)
    return Dataset(schema, columns)


def apply_mechanism(g, name, parent_values, observed, rng):
    """One node's counterfactual value given new parent values.

    Deterministic mechanisms recompute exactly; linear-Gaussian preserves the
    noise term implied by the observed row; probability tables are re-sampled
    from ``rng`` (they are not invertible).
    """
    mech = g.mechanisms[name]
    kind = mech["kind"]
    if kind == "linear_gaussian":
        base = float(mech.get("intercept", 0.0))
        observed_base = base
        for p in g.parents_of(name):
            base += mech["weights"][p] * parent_values[p]
            observed_base += mech["weights"][p] * observed["parents"][p]
        residual = observed["value"] - observed_base
        return base + residual
    if kind == "threshold":
        cutoff = mech["cutoffs"][parent_values[mech["by"]]]
        return "true" if parent_values[mech["source"]] >= cutoff else "false"
    parents = g.parents_of(name)
    key = _config_key(tuple(str(parent_values[p]) for p in parents))
    probs = mech["table"][key]
    draw = int((rng.random() > np.cumsum(probs)).sum())
    if kind == "cpt":
        return mech["categories"][draw]
    return float(mech["values"][draw])


# --- presets -----------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioPreset:
    """A frozen scenario: graph, audit roles, optional models, ground truth."""

    name: str
    graph: CausalGraphSpec
    ground_truth: dict
    roles: dict = field(default_factory=dict)
    models: dict = field(default_factory=dict)
    decision_rule: DecisionRule = None

    def sample(self, n, seed=None):
        return sample(self.graph, n, self.graph.seed if seed is None else seed)


def _binary_cpt(name_probs):
    """CPT table {config: [P(cat0), P(cat1)]} from {config: P(cat1)}."""
    return {key: [1.0 - p, p] for key, p in name_probs.items()}


def _james():
    ages = list(range(52, 59)) + [61, 62, 63] + list(range(66, 73))
    probs = [0.03] * 7 + [0.08] * 3 + [0.55 / 7] * 7
    graph = CausalGraphSpec(
        nodes=(
            ("sex", CATEGORICAL),
            ("age", NUMERIC),
            ("reached_statutory_retirement", CATEGORICAL),
        ),
        edges=(
            ("age", "reached_statutory_retirement"),
            ("sex", "reached_statutory_retirement"),
        ),
        mechanisms={
            "sex": {
                "kind": "cpt",
                "parents": [],
                "categories": ["female", "male"],
                "table": {"": [0.45, 0.55]},
            },
            "age": {
                "kind": "discrete_numeric",
                "parents": [],
                "values": [float(a) for a in ages],
                "table": {"": probs},
            },
            "reached_statutory_retirement": {
                "kind": "threshold",
                "parents": ["age", "sex"],
                "source": "age",
                "by": "sex",
                "cutoffs": {"female": 60.0, "male": 65.0},
            },
        },
        seed=20,
    )
    planted = SubgroupDescriptor(
        (
            Condition.equals("reached_statutory_retirement", "false"),
            Condition.interval("age", lo=61.0, hi=66.0),
        )
    )
    # free entry goes to people past their statutory retirement age; the
    # planted criterion therefore disadvantages exactly the 61-65 men
    model_use = ModelSpec(
        "linear",
        {"coefficients": {"reached_statutory_retirement=true": 1.0}, "intercept": 0.0},
        ("reached_statutory_retirement",),
    )
    model_ignore = ModelSpec(
        "linear",
        {"coefficients": {"reached_statutory_retirement=true": 0.0}, "intercept": 0.0},
        ("reached_statutory_retirement",),
    )
    return ScenarioPreset(
        name="james",
        graph=graph,
        roles={
            "protected": ("sex",),
            "candidates": ("age", "reached_statutory_retirement"),
        },
        models={"use": model_use, "ignore": model_ignore},
        decision_rule=DecisionRule(threshold=0.5, favourable_direction="score_above"),
        ground_truth={
            "planted_proxy": planted.to_json(),
            "planted_proxy_text": planted.as_text(),
            "protected_target": ["sex", "male"],
            "purity": 1.0,
            "population_coverage": 0.55 * 0.24,
            "use_flag_with_model": {"use": True, "ignore": False},
        },
    )


def _school():
    years = [float(y) for y in range(5, 45)]
    old = [0.0] * 25 + [1.0 / 15] * 15
    recent = [1.0 / 25] * 25 + [0.0] * 15
    graph = CausalGraphSpec(
        nodes=(
            ("sex", CATEGORICAL),
            ("cohort", CATEGORICAL),
            ("school_attended", CATEGORICAL),
            ("years_since_graduation", NUMERIC),
        ),
        edges=(
            ("sex", "cohort"),
            ("cohort", "school_attended"),
            ("cohort", "years_since_graduation"),
        ),
        mechanisms={
            "sex": {
                "kind": "cpt",
                "parents": [],
                "categories": ["female", "male"],
                "table": {"": [0.5, 0.5]},
            },
            "cohort": {
                "kind": "cpt",
                "parents": ["sex"],
                "categories": ["old_x", "recent"],
                # school X ran boys-only until the switch: almost every
                # old-cohort graduate is male
                "table": {"female": [0.025, 0.975], "male": [0.975, 0.025]},
            },
            "school_attended": {
                "kind": "cpt",
                "parents": ["cohort"],
                "categories": ["X", "Y"],
                "table": {"old_x": [1.0, 0.0], "recent": [0.3, 0.7]},
            },
            "years_since_graduation": {
                "kind": "discrete_numeric",
                "parents": ["cohort"],
                "values": years,
                "table": {"old_x": old, "recent": recent},
            },
        },
        seed=21,
    )
    return ScenarioPreset(
        name="school",
        graph=graph,
        roles={
            "protected": ("sex",),
            "candidates": ("school_attended", "years_since_graduation"),
        },
        ground_truth={
            # years >= 30 identifies the old cohort exactly, which carries
            # sex at strength 0.975 in both directions
            "bayes_balanced_accuracy": 0.975,
            "predictive_capacity_value": 0.95,
            "proxy_set": ["school_attended", "years_since_graduation"],
        },
    )


def _u_fork(name, a_strength, p_strength, extra_nodes=(), extra_edges=(), extra_mechs=None, seed=22):
    nodes = (("U", CATEGORICAL), ("A", CATEGORICAL), ("P", CATEGORICAL)) + tuple(extra_nodes)
    edges = (("U", "A"), ("U", "P")) + tuple(extra_edges)
    mechanisms = {
        "U": {
            "kind": "cpt", "parents": [], "categories": ["u0", "u1"],
            "table": {"": [0.5, 0.5]},
        },
        "A": {
            "kind": "cpt", "parents": ["U"], "categories": ["a0", "a1"],
            "table": _binary_cpt({"u0": 1 - a_strength, "u1": a_strength}),
        },
        "P": {
            "kind": "cpt", "parents": ["U"], "categories": ["p0", "p1"],
            "table": _binary_cpt({"u0": 1 - p_strength, "u1": p_strength}),
        },
    }
    mechanisms.update(extra_mechs or {})
    return CausalGraphSpec(nodes=nodes, edges=edges, mechanisms=mechanisms, seed=seed)


def _confounder():
    return ScenarioPreset(
        name="confounder",
        graph=_u_fork("confounder", 0.9, 0.9, seed=22),
        roles={"protected": ("A",), "candidates": ("P",), "stratify": "U"},
        ground_truth={
            "population_nmi": 0.31992295427172024,
            "edge_a_to_p": False,
            "conditionally_independent_given_u": True,
        },
    )


def _descendant():
    graph = CausalGraphSpec(
        nodes=(("U", CATEGORICAL), ("A", CATEGORICAL), ("P", CATEGORICAL)),
        edges=(("U", "A"), ("A", "P")),
        mechanisms={
            "U": {
                "kind": "cpt", "parents": [], "categories": ["u0", "u1"],
                "table": {"": [0.5, 0.5]},
            },
            "A": {
                "kind": "cpt", "parents": ["U"], "categories": ["a0", "a1"],
                "table": _binary_cpt({"u0": 0.1, "u1": 0.9}),
            },
            "P": {
                "kind": "cpt", "parents": ["A"], "categories": ["p0", "p1"],
                "table": _binary_cpt({"a0": 0.1, "a1": 0.9}),
            },
        },
        seed=23,
    )
    return ScenarioPreset(
        name="descendant",
        graph=graph,
        roles={"protected": ("A",), "candidates": ("P",), "stratify": "U"},
        ground_truth={
            "edge_a_to_p": True,
            "conditionally_independent_given_u": False,
        },
    )


def _vocabulary():
    graph = _u_fork(
        "vocabulary", 0.7, 0.7,
        extra_nodes=(("Y", CATEGORICAL),),
        extra_edges=(("P", "Y"),),
        extra_mechs={
            "Y": {
                "kind": "cpt", "parents": ["P"], "categories": ["y0", "y1"],
                "table": _binary_cpt({"p0": 0.3, "p1": 0.8}),
            },
        },
        seed=24,
    )
    return ScenarioPreset(
        name="vocabulary",
        graph=graph,
        roles={"protected": ("A",), "candidates": ("P",), "outcome": "Y"},
        ground_truth={
            # association exists but is far too weak to act as a proxy
            "population_nmi": 0.018546104966346438,
            "proxy_capacity": False,
        },
    )


def _huntington():
    graph = CausalGraphSpec(
        nodes=(
            ("condition", CATEGORICAL),
            ("support_group", CATEGORICAL),
            ("outcome", CATEGORICAL),
        ),
        edges=(("condition", "support_group"), ("condition", "outcome")),
        mechanisms={
            "condition": {
                "kind": "cpt", "parents": [], "categories": ["absent", "present"],
                "table": {"": [0.7, 0.3]},
            },
            "support_group": {
                "kind": "cpt", "parents": ["condition"],
                "categories": ["non_member", "member"],
                "table": _binary_cpt({"absent": 0.02, "present": 0.85}),
            },
            "outcome": {
                "kind": "cpt", "parents": ["condition"],
                "categories": ["deny", "grant"],
                "table": _binary_cpt({"absent": 0.7, "present": 0.2}),
            },
        },
        seed=25,
    )
    return ScenarioPreset(
        name="huntington",
        graph=graph,
        roles={
            "protected": ("condition",),
            "candidates": ("support_group",),
            "outcome": "outcome",
        },
        ground_truth={
            # P(condition present | member) from the table above
            "member_purity": 0.9479553903345724,
            "proxy_capacity": True,
            "deterministic_link": False,
        },
    )


def _parttime():
    graph = CausalGraphSpec(
        nodes=(
            ("sex", CATEGORICAL),
            ("part_time", CATEGORICAL),
            ("outcome", CATEGORICAL),
        ),
        edges=(("sex", "part_time"), ("part_time", "outcome")),
        mechanisms={
            "sex": {
                "kind": "cpt", "parents": [], "categories": ["female", "male"],
                "table": {"": [0.5, 0.5]},
            },
            "part_time": {
                "kind": "cpt", "parents": ["sex"], "categories": ["no", "yes"],
                "table": _binary_cpt({"female": 0.4, "male": 0.1}),
            },
            "outcome": {
                "kind": "cpt", "parents": ["part_time"], "categories": ["deny", "grant"],
                "table": _binary_cpt({"no": 0.8, "yes": 0.3}),
            },
        },
        seed=26,
    )
    return ScenarioPreset(
        name="parttime",
        graph=graph,
        roles={
            "protected": ("sex",),
            "candidates": ("part_time",),
            "outcome": "outcome",
        },
        ground_truth={"mediated_effect": True, "deterministic_link": False},
    )


def _capacity_no_use():
    graph = CausalGraphSpec(
        nodes=(("A", CATEGORICAL), ("P", CATEGORICAL), ("X", NUMERIC)),
        edges=(("A", "P"),),
        mechanisms={
            "A": {
                "kind": "cpt", "parents": [], "categories": ["a0", "a1"],
                "table": {"": [0.5, 0.5]},
            },
            "P": {
                "kind": "cpt", "parents": ["A"], "categories": ["a0", "a1"],
                "table": {"a0": [1.0, 0.0], "a1": [0.0, 1.0]},  # exact copy
            },
            "X": {
                "kind": "linear_gaussian", "parents": [],
                "weights": {}, "intercept": 0.0, "noise_sd": 1.0,
            },
        },
        seed=27,
    )
    model_no_use = ModelSpec(
        "linear",
        {"coefficients": {"P=a1": 0.0, "X": 1.0}, "intercept": 0.0},
        ("P", "X"),
    )
    model_use = ModelSpec(
        "linear",
        {"coefficients": {"P=a1": -2.0, "X": 1.0}, "intercept": 0.0},
        ("P", "X"),
    )
    return ScenarioPreset(
        name="capacity_no_use",
        graph=graph,
        roles={"protected": ("A",), "candidates": ("P", "X")},
        models={"no_use": model_no_use, "use": model_use},
        decision_rule=DecisionRule(threshold=0.0, favourable_direction="score_above"),
        ground_truth={
            "nmi": 1.0,
            "no_use": {"flip_rate": 0.0, "mean_abs_delta": 0.0},
            "use_weight": -2.0,
        },
    )


def _independence():
    graph = CausalGraphSpec(
        nodes=(("A", CATEGORICAL), ("c1", CATEGORICAL), ("c2", NUMERIC)),
        edges=(),
        mechanisms={
            "A": {
                "kind": "cpt", "parents": [], "categories": ["a0", "a1"],
                "table": {"": [0.5, 0.5]},
            },
            "c1": {
                "kind": "cpt", "parents": [], "categories": ["k0", "k1", "k2"],
                "table": {"": [1 / 3, 1 / 3, 1 / 3]},
            },
            "c2": {
                "kind": "linear_gaussian", "parents": [],
                "weights": {}, "intercept": 0.0, "noise_sd": 1.0,
            },
        },
        seed=28,
    )
    return ScenarioPreset(
        name="independence",
        graph=graph,
        roles={"protected": ("A",), "candidates": ("c1", "c2")},
        ground_truth={
            "max_predictive_capacity": 0.0,
            "expected_validated_findings": 0,
        },
    )


_PRESETS = {
    "james": _james,
    "school": _school,
    "confounder": _confounder,
    "descendant": _descendant,
    "vocabulary": _vocabulary,
    "huntington": _huntington,
    "parttime": _parttime,
    "capacity_no_use": _capacity_no_use,
    "independence": _independence,
}

PRESET_NAMES = tuple(_PRESETS)


def preset(name):
    """A frozen scenario by name; unknown names raise a lookup error."""
    try:
        builder = _PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; known presets: {', '.join(PRESET_NAMES)}"
        ) from None
    return builder()
