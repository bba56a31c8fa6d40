"""Proxy-capacity scoring beyond pairwise association.

Two measures: exact-correspondence *purity* of a conjunctive criterion for a
protected value (with an exact binomial confidence interval), and *predictive
capacity* — chance-normalized cross-validated balanced accuracy of predicting
the protected column from a feature set, using the engine's own learners.

The internal learners (CART-style decision tree with Gini impurity; L2
multinomial logistic regression via full-batch gradient descent) are written
from scratch so audits do not depend on an external ML stack and every detail
is pinned down by hyperparameters.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import beta

from . import kernels
from .association import counts_significance
from .data import CATEGORICAL
from .descriptors import SubgroupDescriptor
from .errors import InsufficientDataError, ParameterError, ValidationError
from .models import ModelSpec

Criterion = SubgroupDescriptor

# Default report-level thresholds (configurable at the call sites): a purity
# finding at or above both marks is treated as a deterministic-link candidate;
# anything below stays in statistical-association territory.
RED_FLAG_PURITY = 0.99
RED_FLAG_CI_FLOOR = 0.95
INEXTRICABLE_LINK = "inextricable-link candidate"
STATISTICAL_ASSOCIATION = "statistical association (indirect-discrimination territory)"


def classify_link(score, purity_threshold=RED_FLAG_PURITY, ci_floor=RED_FLAG_CI_FLOOR):
    """Label a purity score as a deterministic-link candidate or not."""
    if score.value >= purity_threshold and score.ci_low >= ci_floor:
        return INEXTRICABLE_LINK
    return STATISTICAL_ASSOCIATION


@dataclass(frozen=True)
class CapacityScore:
    """A (proxy, protected value) capacity measurement in [0, 1]."""

    proxy: object  # Criterion or tuple of column names
    protected_value: object  # (column, category) or column name
    measure: str  # purity | predictive | nmi
    value: float
    support: int
    p_value: float
    ci_low: float
    ci_high: float
    subgroup: SubgroupDescriptor = None
    warning: str = None

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValidationError(f"capacity value {self.value} outside [0, 1]")
        if self.support <= 0:
            raise ValidationError("capacity support must be positive")
        if not self.ci_low <= self.value <= self.ci_high:
            raise ValidationError("confidence interval must bracket the value")

    def to_json(self):
        proxy = (
            self.proxy.to_json()
            if isinstance(self.proxy, SubgroupDescriptor)
            else list(self.proxy)
        )
        out = {
            "proxy": proxy,
            "protected_value": list(self.protected_value)
            if isinstance(self.protected_value, tuple)
            else self.protected_value,
            "measure": self.measure,
            "value": self.value,
            "support": self.support,
            "p_value": self.p_value,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }
        if self.warning:
            out["warning"] = self.warning
        return out


def clopper_pearson(k, n, alpha=0.05):
    """Exact binomial (Clopper-Pearson) two-sided confidence interval."""
    if n <= 0:
        raise InsufficientDataError("empty sample")
    lo = 0.0 if k == 0 else float(beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


def exact_correspondence(d, q, protected_value, *, alpha=0.05):
    """Purity of criterion q for a (column, category) protected value.

    value = fraction of q-matching rows carrying the protected value, over
    rows complete in every referenced column; support = number of matching
    rows; significance = chi-squared/Fisher on the q-vs-protected 2x2 table.
    """
    column, category = protected_value
    schema = d.schema_of(column)
    if schema.kind != CATEGORICAL:
        raise ValidationError(f"protected column {column!r} must be categorical")
    if category not in schema.categories:
        raise ValidationError(f"category {category!r} not in column {column!r}")
    if column in q.columns:
        raise ValidationError(f"criterion references the protected column {column!r}")

    complete = d.complete_mask(list(q.columns) + [column])
    match = q.mask(d) & complete
    support = int(np.count_nonzero(match))
    if support == 0:
        raise InsufficientDataError("criterion matches no complete rows")

    is_cat = d.codes(column) == schema.categories.index(category)
    hits = int(np.count_nonzero(match & is_cat))
    value = hits / support

    outside = complete & ~match
    n_out = int(np.count_nonzero(outside))
    hits_out = int(np.count_nonzero(outside & is_cat))
    table = np.array([[hits, support - hits], [hits_out, n_out - hits_out]])
    p_value = counts_significance(table) if table.sum() else 1.0

    lo, hi = clopper_pearson(hits, support, alpha)
    return CapacityScore(
        proxy=q,
        protected_value=(column, category),
        measure="purity",
        value=value,
        support=support,
        p_value=float(p_value),
        ci_low=lo,
        ci_high=hi,
    )


# --- internal learners -------------------------------------------------------


@dataclass(frozen=True)
class LearnerSpec:
    """Hyperparameters of an internal audit learner."""

    kind: str  # "decision_tree" | "logistic"
    max_depth: int = 3
    min_leaf: int = 5
    l2_penalty: float = 1e-3
    max_iter: int = 500

    def __post_init__(self):
        if self.kind not in ("decision_tree", "logistic"):
            raise ValidationError(f"unknown learner kind {self.kind!r}")

    @staticmethod
    def decision_tree(max_depth=3, min_leaf=5):
        return LearnerSpec(kind="decision_tree", max_depth=max_depth, min_leaf=min_leaf)

    @staticmethod
    def logistic(l2_penalty=1e-3, max_iter=500):
        return LearnerSpec(kind="logistic", l2_penalty=l2_penalty, max_iter=max_iter)

    def to_json(self):
        if self.kind == "decision_tree":
            return {"kind": self.kind, "max_depth": self.max_depth, "min_leaf": self.min_leaf}
        return {"kind": self.kind, "l2_penalty": self.l2_penalty, "max_iter": self.max_iter}

    @staticmethod
    def from_json(obj):
        kind = obj.get("kind")
        if kind == "decision_tree":
            return LearnerSpec.decision_tree(
                max_depth=obj.get("max_depth", 3), min_leaf=obj.get("min_leaf", 5)
            )
        if kind == "logistic":
            return LearnerSpec.logistic(
                l2_penalty=obj.get("l2_penalty", 1e-3), max_iter=obj.get("max_iter", 500)
            )
        raise ValidationError(f"unknown learner kind {kind!r}")


class FeatureEncoder:
    """Numeric matrix encoding: numerics pass through, categoricals expand to
    one-of-K indicator columns named ``column=category``."""

    def __init__(self, d, features):
        self.features = tuple(features)
        self.columns = []  # (encoded name, source column, category-or-None)
        for name in self.features:
            schema = d.schema_of(name)
            if schema.kind == CATEGORICAL:
                for cat in schema.categories:
                    self.columns.append((f"{name}={cat}", name, cat))
            else:
                self.columns.append((name, name, None))

    @property
    def encoded_names(self):
        return [c[0] for c in self.columns]

    def matrix(self, d, rows=None):
        idx = np.arange(d.n_rows) if rows is None else np.asarray(rows)
        X = np.empty((idx.shape[0], len(self.columns)), dtype=np.float64)
        for j, (_, source, cat) in enumerate(self.columns):
            schema = d.schema_of(source)
            if cat is None:
                X[:, j] = d.values(source)[idx]
            else:
                code = schema.categories.index(cat)
                X[:, j] = (d.codes(source)[idx] == code).astype(np.float64)
        return X


class _CartTree:
    """CART-style classifier: Gini impurity, deterministic tie-breaks,
    zero-gain splits allowed while a node is impure."""

    def __init__(self, max_depth, min_leaf):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.nodes = []  # dicts: split {feat, thr, left, right} | leaf {counts}

    def fit(self, X, y, n_classes):
        self.n_classes = n_classes
        self._build(X, y, depth=0)
        return self

    def _build(self, X, y, depth):
        index = len(self.nodes)
        counts = np.bincount(y, minlength=self.n_classes)
        node = {"counts": counts}
        self.nodes.append(node)
        pure = np.count_nonzero(counts) <= 1
        if depth >= self.max_depth or pure or y.shape[0] < 2 * self.min_leaf:
            return index
        feat, thr, _score = kernels.best_split(X, y, self.n_classes, self.min_leaf)
        if feat < 0:
            return index
        left_mask = X[:, feat] < thr
        node["feat"] = int(feat)
        node["thr"] = float(thr)
        node["left"] = self._build(X[left_mask], y[left_mask], depth + 1)
        node["right"] = self._build(X[~left_mask], y[~left_mask], depth + 1)
        return index

    def predict_proba(self, X):
        out = np.empty((X.shape[0], self.n_classes), dtype=np.float64)
        for i in range(X.shape[0]):
            node = self.nodes[0]
            while "feat" in node:
                node = self.nodes[node["left"] if X[i, node["feat"]] < node["thr"] else node["right"]]
            out[i] = node["counts"] / node["counts"].sum()
        return out

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)


class _Logistic:
    """Multinomial logistic regression: L2 penalty (intercept excluded),
    zero initialization, full-batch gradient descent with a Lipschitz step."""

    def __init__(self, l2_penalty, max_iter):
        self.l2_penalty = l2_penalty
        self.max_iter = max_iter
        self.converged = False

    def fit(self, X, y, n_classes):
        self.n_classes = n_classes
        n, d = X.shape
        Xb = np.hstack([X, np.ones((n, 1))])
        Y = np.zeros((n, n_classes))
        Y[np.arange(n), y] = 1.0
        W = np.zeros((d + 1, n_classes))
        sigma = np.linalg.norm(Xb, 2)
        step = 1.0 / (sigma * sigma / (4.0 * n) + self.l2_penalty + 1e-12)
        penalty_mask = np.ones((d + 1, 1))
        penalty_mask[-1] = 0.0  # no penalty on the intercept
        for _ in range(self.max_iter):
            z = Xb @ W
            z -= z.max(axis=1, keepdims=True)
            p = np.exp(z)
            p /= p.sum(axis=1, keepdims=True)
            grad = Xb.T @ (p - Y) / n + self.l2_penalty * W * penalty_mask
            if np.abs(grad).max() < 1e-7:
                self.converged = True
                break
            W -= step * grad
        self.W = W
        return self

    def decision_function(self, X):
        return np.hstack([X, np.ones((X.shape[0], 1))]) @ self.W

    def predict_proba(self, X):
        z = self.decision_function(X)
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X):
        return np.argmax(self.decision_function(X), axis=1)


class InternalModelHandle:
    """Fitted internal learner exposing batch scoring over records.

    For a binary label the score is the probability of the second category
    (schema order); for k > 2 the score is the predicted class code.
    """

    def __init__(self, model, encoder, label_schema, learner_spec):
        self.model = model
        self.encoder = encoder
        self.label_schema = label_schema
        self.learner_spec = learner_spec

    @property
    def feature_order(self):
        return self.encoder.features

    @property
    def converged(self):
        return getattr(self.model, "converged", True)

    def _matrix_from_records(self, rows):
        X = np.empty((len(rows), len(self.encoder.columns)), dtype=np.float64)
        for i, row in enumerate(rows):
            for j, (_, source, cat) in enumerate(self.encoder.columns):
                v = row[source]
                X[i, j] = (1.0 if v == cat else 0.0) if cat is not None else float(v)
        return X

    def predict_batch(self, rows):
        if not rows:
            return []
        X = self._matrix_from_records(rows)
        if len(self.label_schema.categories) == 2:
            return self.model.predict_proba(X)[:, 1].tolist()
        return self.model.predict(X).astype(np.float64).tolist()

    def predict_codes(self, X):
        return self.model.predict(X)

    def to_model_spec(self):
        """Export the fitted learner in the builtin model-spec format
        (binary labels only; the score is the second category's probability)."""
        if len(self.label_schema.categories) != 2:
            raise ValidationError("model-spec export requires a binary label")
        if isinstance(self.model, _Logistic):
            w = self.model.W[:, 1] - self.model.W[:, 0]
            coefficients = {
                name: float(w[j]) for j, name in enumerate(self.encoder.encoded_names)
            }
            return ModelSpec(
                "logistic",
                {"coefficients": coefficients, "intercept": float(w[-1])},
                self.encoder.features,
            )
        nodes = []
        for i, node in enumerate(self.model.nodes):
            if "feat" in node:
                name, _source, cat = self.encoder.columns[node["feat"]]
                if cat is None:
                    nodes.append(
                        {"id": i, "kind": "split", "column": name,
                         "threshold": node["thr"], "left": node["left"], "right": node["right"]}
                    )
                else:
                    source = self.encoder.columns[node["feat"]][1]
                    # indicator < thr means "not this category": swap branches
                    nodes.append(
                        {"id": i, "kind": "split", "column": source, "category": cat,
                         "left": node["right"], "right": node["left"]}
                    )
            else:
                counts = node["counts"]
                nodes.append(
                    {"id": i, "kind": "leaf", "value": float(counts[1] / counts.sum())}
                )
        return ModelSpec("decision_tree", {"root": 0, "nodes": nodes}, self.encoder.features)


def train_learner(d, features, label, learner, *, seed=0):
    """Fit an internal learner predicting ``label`` from ``features``.

    Rows missing any involved column are dropped. Fitting is deterministic
    for fixed inputs; logistic non-convergence sets ``converged=False`` on the
    handle instead of raising.
    """
    label_schema = d.schema_of(label)
    if label_schema.kind != CATEGORICAL:
        raise ValidationError(f"label column {label!r} must be categorical")
    if not features:
        raise ValidationError("feature set must be non-empty")
    complete = d.complete_mask(list(features) + [label])
    rows = np.nonzero(complete)[0]
    if rows.size == 0:
        raise InsufficientDataError("no complete rows to train on")
    encoder = FeatureEncoder(d, features)
    X = encoder.matrix(d, rows)
    y = d.codes(label)[rows]
    n_classes = len(label_schema.categories)
    if learner.kind == "decision_tree":
        model = _CartTree(learner.max_depth, learner.min_leaf).fit(X, y, n_classes)
    else:
        model = _Logistic(learner.l2_penalty, learner.max_iter).fit(X, y, n_classes)
    return InternalModelHandle(model, encoder, label_schema, learner)


def balanced_accuracy(y_true, y_pred, n_classes):
    """Mean per-class recall over classes present in y_true."""
    recalls = []
    for c in range(n_classes):
        mask = y_true == c
        if mask.any():
            recalls.append(np.count_nonzero(y_pred[mask] == c) / np.count_nonzero(mask))
    return float(np.mean(recalls))


def _stratified_folds(X, y, observed_classes, folds, rng):
    """Round-robin per-class fold assignment; returns a fold-id array.

    Rows are first put in a canonical feature-value order so the deal depends
    only on the data's content, never on its storage order.
    """
    assignment = np.empty(y.shape[0], dtype=np.int64)
    for c in observed_classes:
        idx = np.nonzero(y == c)[0]
        canonical = np.lexsort(tuple(X[idx, j] for j in reversed(range(X.shape[1]))))
        idx = idx[canonical]
        idx = idx[rng.permutation(idx.shape[0])]
        assignment[idx] = np.arange(idx.shape[0]) % folds
    return assignment


def predictive_capacity(d, proxy_set, protected, learner=None, folds=5, seed=0):
    """Chance-normalized CV balanced accuracy of predicting the protected
    column from a feature set: value = max(0, (b - 1/k) / (1 - 1/k))."""
    if not proxy_set:
        raise ValidationError("proxy_set must be non-empty")
    if folds < 2:
        raise ParameterError("folds must be at least 2")
    learner = LearnerSpec.decision_tree() if learner is None else learner
    schema = d.schema_of(protected)
    if schema.kind != CATEGORICAL:
        raise ValidationError(f"protected column {protected!r} must be categorical")

    complete = d.complete_mask(list(proxy_set) + [protected])
    rows = np.nonzero(complete)[0]
    if rows.size < 2:
        raise InsufficientDataError("fewer than 2 complete rows")
    y = d.codes(protected)[rows]
    class_counts = np.bincount(y, minlength=len(schema.categories))
    observed = np.nonzero(class_counts)[0]
    k = observed.size
    if k < 2:
        raise ParameterError(
            f"protected column {protected!r} has a single category on complete rows"
        )
    min_count = int(class_counts[observed].min())
    if min_count < 2:
        raise InsufficientDataError(
            "the rarest protected category has fewer than 2 rows; cannot cross-validate"
        )
    effective_folds = min(folds, min_count)
    warning = None
    if effective_folds < folds:
        warning = (
            f"class counts below {folds} folds; refit with {effective_folds} merged folds"
        )
        warnings.warn(warning)

    encoder = FeatureEncoder(d, proxy_set)
    X = encoder.matrix(d, rows)
    rng = np.random.default_rng(seed)
    fold_of = _stratified_folds(X, y, observed, effective_folds, rng)

    n_classes = len(schema.categories)
    predictions = np.empty(y.shape[0], dtype=np.int64)
    for f in range(effective_folds):
        test = fold_of == f
        train = ~test
        if learner.kind == "decision_tree":
            model = _CartTree(learner.max_depth, learner.min_leaf).fit(X[train], y[train], n_classes)
        else:
            model = _Logistic(learner.l2_penalty, learner.max_iter).fit(X[train], y[train], n_classes)
        predictions[test] = model.predict(X[test])

    b = balanced_accuracy(y, predictions, n_classes)
    chance = 1.0 / k
    value = max(0.0, (b - chance) / (1.0 - chance))

    # conservative interval: exact binomial bounds per class recall, averaged,
    # then chance-normalized
    los, his = [], []
    for c in observed:
        mask = y == c
        n_c = int(np.count_nonzero(mask))
        k_c = int(np.count_nonzero(predictions[mask] == c))
        lo, hi = clopper_pearson(k_c, n_c)
        los.append(lo)
        his.append(hi)
    value_lo = max(0.0, (float(np.mean(los)) - chance) / (1.0 - chance))
    value_hi = max(0.0, (float(np.mean(his)) - chance) / (1.0 - chance))
    value_lo, value_hi = min(value_lo, value), max(value_hi, value)

    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (y, predictions), 1)
    p_value = counts_significance(confusion)

    return CapacityScore(
        proxy=tuple(proxy_set),
        protected_value=protected,
        measure="predictive",
        value=value,
        support=int(rows.size),
        p_value=float(p_value),
        ci_low=value_lo,
        ci_high=value_hi,
        warning=warning,
    )
