"""In-house classifier suite, validation protocol and evaluation metrics.

Five classifier kinds share one interface: least-squares regression on 0/1
targets with a validated decision threshold, a linear SVM trained by
projected subgradient descent, k-nearest neighbors, a random forest with
Gini splits, and Gaussian naive Bayes. Hyperparameters are swept on a
stratified validation split and selected by the recall-weighted score
``5 * recall + accuracy``; the same score drives model selection across
kinds. All randomness is seeded and independent of thread scheduling, so
training kinds concurrently reproduces single-threaded results exactly.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .features import COMMON_NEIGHBORS_FEATURE, LabeledDataset

log = logging.getLogger(__name__)

LINEAR_REGRESSION = "linear_regression"
LINEAR_SVM = "linear_svm"
KNN = "knn"
RANDOM_FOREST = "random_forest"
NAIVE_BAYES = "naive_bayes"
KINDS = (LINEAR_REGRESSION, LINEAR_SVM, KNN, RANDOM_FOREST, NAIVE_BAYES)

_KNN_CHUNK_ROWS = 2048
_CONDITION_LIMIT = 1e12


def selection_score(recall: float, accuracy: float) -> float:
    """Model-selection objective weighting recall five times more than accuracy."""
    return 5.0 * recall + accuracy


@dataclass(frozen=True)
class SplitSpec:
    """Validation split parameters."""

    validation_fraction: float = 0.20
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be strictly between 0 and 1")


@dataclass(frozen=True)
class TrainOptions:
    """Tunables for the training sweeps; defaults match the reported setup."""

    downsample_ratio: float | None = 10.0  # max negatives per positive in the fit split
    ridge: float = 1e-8
    svm_lambda_grid: tuple[float, ...] = (1e-3, 1e-2, 1e-1, 1.0)
    svm_epochs: int = 250
    knn_k_grid: tuple[int, ...] = tuple(range(1, 26, 2))
    forest_tree_grid: tuple[int, ...] = (10, 50, 100)
    forest_min_leaf: int = 2
    forest_bins: int = 64
    expansion_sweep: bool = True  # try degree-2 features for regression/SVM


def split(dataset: LabeledDataset, spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Stratified train/validation split, reproducible for a fixed seed."""
    if dataset.n_rows < 10:
        raise ValueError(f"dataset has {dataset.n_rows} rows; need at least 10")
    classes = np.unique(dataset.y)
    if len(classes) < 2:
        raise ValueError("cannot split a single-class dataset")
    rng = np.random.default_rng(spec.rng_seed)
    val_idx: list[int] = []
    for cls in classes:
        members = np.flatnonzero(dataset.y == cls)
        rng.shuffle(members)
        take = int(round(len(members) * spec.validation_fraction))
        take = min(max(take, 1), len(members) - 1)
        val_idx.extend(members[:take])
    val_mask = np.zeros(dataset.n_rows, dtype=bool)
    val_mask[val_idx] = True
    return dataset.subset(np.flatnonzero(~val_mask)), dataset.subset(np.flatnonzero(val_mask))


def downsample_negatives(dataset: LabeledDataset, ratio: float | None,
                         rng_seed: int) -> LabeledDataset:
    """Cap negatives at ``ratio`` per positive; row order is preserved."""
    if ratio is None:
        return dataset
    positives = np.flatnonzero(dataset.y == 1)
    negatives = np.flatnonzero(dataset.y == 0)
    cap = int(math.floor(ratio * len(positives)))
    if len(positives) == 0 or len(negatives) <= cap:
        return dataset
    rng = np.random.default_rng(rng_seed)
    kept = rng.choice(negatives, size=cap, replace=False)
    return dataset.subset(np.sort(np.concatenate([positives, kept])))


# -- feature preparation -----------------------------------------------------

@dataclass(frozen=True)
class FeatureTransform:
    """Scaling and optional degree-2 expansion applied before every kind.

    Only the raw common-neighbor column is min-max scaled, with bounds
    taken from the training split; agreement features are already in [0, 1].
    """

    cn_index: int | None
    cn_min: float
    cn_max: float
    expanded: bool

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.array(X, dtype=float, copy=True)
        if self.cn_index is not None:
            span = self.cn_max - self.cn_min
            col = X[:, self.cn_index]
            X[:, self.cn_index] = np.clip((col - self.cn_min) / span, 0.0, 1.0) if span > 0 else 0.0
        if self.expanded:
            i_idx, j_idx = np.triu_indices(X.shape[1])
            X = np.hstack([X, X[:, i_idx] * X[:, j_idx]])
        return X


def _fit_transform(train: LabeledDataset, expanded: bool) -> FeatureTransform:
    if COMMON_NEIGHBORS_FEATURE in train.feature_names:
        idx = train.feature_names.index(COMMON_NEIGHBORS_FEATURE)
        col = train.X[:, idx]
        return FeatureTransform(cn_index=idx, cn_min=float(col.min()),
                                cn_max=float(col.max()), expanded=expanded)
    return FeatureTransform(cn_index=None, cn_min=0.0, cn_max=0.0, expanded=expanded)


@dataclass
class Model:
    """A trained classifier with everything needed to score new dyads."""

    kind: str
    feature_names: tuple[str, ...]
    task: str
    network: str
    transform: FeatureTransform
    params: dict[str, Any]
    threshold: float | None  # decision threshold on the score, where swept
    hyperparams: dict[str, Any] = field(default_factory=dict)
    validation_score: float | None = None


def predict(model: Model, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Labels and real-valued decision scores for a feature matrix."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != len(model.feature_names):
        raise ValueError(f"expected {len(model.feature_names)} features, got {X.shape[1]}")
    Xt = model.transform.apply(X)
    if model.kind == LINEAR_REGRESSION:
        scores = Xt @ model.params["coef"] + model.params["intercept"]
        labels = np.clip(scores, 0.0, 1.0) >= model.threshold
    elif model.kind == LINEAR_SVM:
        scores = Xt @ model.params["weights"] + model.params["bias"]
        labels = scores >= 0.0
    elif model.kind == KNN:
        scores = _knn_scores(model.params["train_X"], model.params["train_y"],
                             Xt, model.params["k"])
        labels = scores >= 0.5
    elif model.kind == RANDOM_FOREST:
        votes = _forest_votes(model.params["trees"], Xt)
        scores = votes[:, :model.params["n_trees"]].mean(axis=1)
        labels = scores >= 0.5
    elif model.kind == NAIVE_BAYES:
        scores = _gaussian_log_odds(model.params, Xt)
        labels = scores >= 0.0
    else:
        raise ValueError(f"unknown model kind {model.kind!r}")
    return labels.astype(bool), scores.astype(float)


def train(kind: str, train_split: LabeledDataset, validation: LabeledDataset,
          spec: SplitSpec, options: TrainOptions = TrainOptions()) -> Model:
    """Train one classifier kind, sweeping its hyperparameters on the validation split."""
    if kind not in KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}; expected one of {KINDS}")
    if train_split.feature_names != validation.feature_names:
        raise ValueError("train and validation splits disagree on feature names")
    fit = downsample_negatives(train_split, options.downsample_ratio, spec.rng_seed)
    trainer = {
        LINEAR_REGRESSION: _train_regression,
        LINEAR_SVM: _train_svm,
        KNN: _train_knn,
        RANDOM_FOREST: _train_forest,
        NAIVE_BAYES: _train_bayes,
    }[kind]
    return trainer(fit, validation, spec, options)


def train_all(train_split: LabeledDataset, validation: LabeledDataset, spec: SplitSpec,
              options: TrainOptions = TrainOptions(), kinds: Sequence[str] = KINDS,
              jobs: int = 1) -> dict[str, Model]:
    """Train several kinds; with jobs > 1 the kinds train concurrently.

    Results are identical either way: each kind's randomness is derived
    from the split seed and the kind alone.
    """
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {kind: pool.submit(train, kind, train_split, validation, spec, options)
                       for kind in kinds}
            return {kind: fut.result() for kind, fut in futures.items()}
    return {kind: train(kind, train_split, validation, spec, options) for kind in kinds}


def _validation_selection(model: Model, validation: LabeledDataset) -> float:
    labels, _ = predict(model, validation.X)
    accuracy, recall, _ = _metric_triple(validation.y, labels)
    if recall is None:
        return float("-inf")
    return selection_score(recall, accuracy)


def _metric_triple(y_true: np.ndarray, y_pred: np.ndarray):
    """(accuracy, recall, precision); recall/precision are None when undefined."""
    y_true = np.asarray(y_true).astype(bool)
    y_pred = np.asarray(y_pred).astype(bool)
    tp = int(np.sum(y_pred & y_true))
    fp = int(np.sum(y_pred & ~y_true))
    fn = int(np.sum(~y_pred & y_true))
    tn = int(np.sum(~y_pred & ~y_true))
    total = tp + fp + fn + tn
    accuracy = (tp + tn) / total if total else 0.0
    recall = tp / (tp + fn) if (tp + fn) else None
    precision = tp / (tp + fp) if (tp + fp) else None
    return accuracy, recall, precision


# -- linear regression --------------------------------------------------------

def _solve_least_squares(X: np.ndarray, y: np.ndarray, ridge: float) -> np.ndarray:
    design = np.hstack([np.ones((X.shape[0], 1)), X])
    penalty = ridge * np.eye(design.shape[1])
    penalty[0, 0] = 0.0  # the intercept is not shrunk
    gram = design.T @ design + penalty
    cond = np.linalg.cond(gram)
    if cond > _CONDITION_LIMIT:
        log.warning("regression normal equations remain ill-conditioned (cond=%.3g)", cond)
    return np.linalg.solve(gram, design.T @ y)


def _best_threshold(y_true: np.ndarray, scores: np.ndarray) -> tuple[float, float]:
    """Threshold (an observed score) maximizing the selection score.

    Ties prefer higher recall, then the lower threshold.
    """
    y_true = np.asarray(y_true).astype(bool)
    n_pos = int(y_true.sum())
    n_total = len(y_true)
    if n_pos == 0:
        return 0.5, float("-inf")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_y = y_true[order]
    last = np.flatnonzero(np.diff(sorted_scores)) if n_total > 1 else np.array([], dtype=int)
    boundaries = np.concatenate([last, [n_total - 1]])
    tp = np.cumsum(sorted_y)[boundaries]
    fp = np.cumsum(~sorted_y)[boundaries]
    recall = tp / n_pos
    accuracy = (tp + (n_total - n_pos - fp)) / n_total
    sel = 5.0 * recall + accuracy
    # lexsort: primary sel, then recall, then position (later = lower threshold)
    best = np.lexsort((np.arange(len(sel)), recall, sel))[-1]
    return float(sorted_scores[boundaries[best]]), float(sel[best])


def _train_regression(fit: LabeledDataset, validation: LabeledDataset,
                      spec: SplitSpec, options: TrainOptions) -> Model:
    variants = (False, True) if options.expansion_sweep else (False,)
    best = None
    for expanded in variants:
        transform = _fit_transform(fit, expanded)
        beta = _solve_least_squares(transform.apply(fit.X), fit.y.astype(float), options.ridge)
        val_scores = np.clip(transform.apply(validation.X) @ beta[1:] + beta[0], 0.0, 1.0)
        threshold, score = _best_threshold(validation.y, val_scores)
        if best is None or score > best[0]:
            best = (score, expanded, transform, beta, threshold)
    score, expanded, transform, beta, threshold = best
    return Model(kind=LINEAR_REGRESSION, feature_names=fit.feature_names, task=fit.task,
                 network=fit.network, transform=transform,
                 params={"coef": beta[1:], "intercept": float(beta[0])},
                 threshold=float(np.clip(threshold, 0.0, 1.0)),
                 hyperparams={"ridge": options.ridge, "expanded": expanded},
                 validation_score=score)


# -- linear SVM ---------------------------------------------------------------

def _pegasos(X: np.ndarray, y01: np.ndarray, lam: float, epochs: int) -> tuple[np.ndarray, float]:
    """Full-batch projected subgradient descent on the hinge objective."""
    targets = 2.0 * y01.astype(float) - 1.0
    w = np.zeros(X.shape[1])
    b = 0.0
    radius = 1.0 / math.sqrt(lam)
    for step in range(1, epochs + 1):
        eta = 1.0 / (lam * step)
        margins = targets * (X @ w + b)
        active = margins < 1.0
        grad_w = lam * w - (targets[active, None] * X[active]).sum(axis=0) / len(targets)
        grad_b = -targets[active].sum() / len(targets)
        w -= eta * grad_w
        b -= eta * grad_b
        norm = np.linalg.norm(w)
        if norm > radius:
            w *= radius / norm
    return w, float(b)


def _train_svm(fit: LabeledDataset, validation: LabeledDataset,
               spec: SplitSpec, options: TrainOptions) -> Model:
    variants = (False, True) if options.expansion_sweep else (False,)
    best = None
    for expanded in variants:
        transform = _fit_transform(fit, expanded)
        X = transform.apply(fit.X)
        X_val = transform.apply(validation.X)
        for lam in options.svm_lambda_grid:
            w, b = _pegasos(X, fit.y, lam, options.svm_epochs)
            accuracy, recall, _ = _metric_triple(validation.y, X_val @ w + b >= 0.0)
            score = selection_score(recall, accuracy) if recall is not None else float("-inf")
            if best is None or score > best[0]:
                best = (score, expanded, transform, w, b, lam)
    score, expanded, transform, w, b, lam = best
    return Model(kind=LINEAR_SVM, feature_names=fit.feature_names, task=fit.task,
                 network=fit.network, transform=transform,
                 params={"weights": w, "bias": b}, threshold=None,
                 hyperparams={"lambda": lam, "expanded": expanded,
                              "epochs": options.svm_epochs},
                 validation_score=score)


# -- k-nearest neighbors -------------------------------------------------------

def _neighbor_order(train_X: np.ndarray, query_X: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest training rows per query row, ties by index.

    Distances drop the query's own squared norm (constant per row); the
    matrix is built chunk by chunk into one preallocated buffer.
    """
    k = min(k, train_X.shape[0])
    train32 = np.ascontiguousarray(train_X, dtype=np.float32)
    query32 = np.ascontiguousarray(query_X, dtype=np.float32)
    train_t = np.ascontiguousarray(train32.T)
    train_sq = (train32 * train32).sum(axis=1)
    out = np.empty((query_X.shape[0], k), dtype=np.int64)
    buffer = min(k + 16, train_X.shape[0])
    chunk_rows = min(_KNN_CHUNK_ROWS, query_X.shape[0])
    dists = np.empty((chunk_rows, train_X.shape[0]), dtype=np.float32)
    for start in range(0, query_X.shape[0], chunk_rows):
        chunk = query32[start:start + chunk_rows]
        block = dists[:chunk.shape[0]]
        np.matmul(chunk, train_t, out=block)
        block *= -2.0
        block += train_sq
        # argpartition order is not stable; resolve ties by (distance, index)
        part = np.argpartition(block, buffer - 1, axis=1)[:, :buffer]
        part_d = np.take_along_axis(block, part, axis=1)
        order = np.lexsort((part, part_d), axis=1)[:, :k]
        out[start:start + chunk.shape[0]] = np.take_along_axis(part, order, axis=1)
    return out


def _knn_scores(train_X: np.ndarray, train_y: np.ndarray, query_X: np.ndarray,
                k: int) -> np.ndarray:
    nearest = _neighbor_order(train_X, query_X, k)
    return train_y[nearest].mean(axis=1)


def _train_knn(fit: LabeledDataset, validation: LabeledDataset,
               spec: SplitSpec, options: TrainOptions) -> Model:
    transform = _fit_transform(fit, expanded=False)
    X = transform.apply(fit.X)
    X_val = transform.apply(validation.X)
    y = fit.y.astype(float)
    grid = [k for k in options.knn_k_grid if k <= X.shape[0]] or [1]
    nearest = _neighbor_order(X, X_val, max(grid))
    votes = np.cumsum(y[nearest], axis=1)
    best = None
    for k in grid:
        scores = votes[:, k - 1] / k
        accuracy, recall, _ = _metric_triple(validation.y, scores >= 0.5)
        score = selection_score(recall, accuracy) if recall is not None else float("-inf")
        if best is None or score > best[0]:
            best = (score, k)
    score, k = best
    return Model(kind=KNN, feature_names=fit.feature_names, task=fit.task,
                 network=fit.network, transform=transform,
                 params={"train_X": X, "train_y": y, "k": k}, threshold=None,
                 hyperparams={"k": k}, validation_score=score)


# -- random forest --------------------------------------------------------------

@dataclass
class _Tree:
    feature: np.ndarray   # -1 for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray     # positive fraction at leaves


def _bin_features(X: np.ndarray, n_bins: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """Quantile-bin each column; returns bin codes and per-column cut values."""
    codes = np.empty(X.shape, dtype=np.int16)
    cuts: list[np.ndarray] = []
    for j in range(X.shape[1]):
        col = X[:, j]
        uniq = np.unique(col)
        if len(uniq) <= n_bins:
            edges = (uniq[:-1] + uniq[1:]) / 2.0
        else:
            qs = np.quantile(col, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
            edges = np.unique(qs)
        codes[:, j] = np.searchsorted(edges, col, side="right")
        cuts.append(edges)
    return codes, cuts


def _grow_tree(codes: np.ndarray, cuts: list[np.ndarray], y: np.ndarray,
               rows: np.ndarray, mtry: int, min_leaf: int,
               rng: np.random.Generator) -> _Tree:
    """Gini-split tree on pre-binned features, built level by level.

    All nodes of a level are split in one batch: a combined (node, bin) key
    feeds a single bincount per feature, keeping per-node overhead off the
    hot path. Routing uses ``code <= cut``, equivalently ``x < cut value``.
    """
    n_features = codes.shape[1]
    max_bins = max(len(c) + 1 for c in cuts)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    new_node()  # root
    active_rows = rows
    active_node = np.zeros(len(rows), dtype=np.int64)
    while len(active_rows):
        node_ids, node_slot = np.unique(active_node, return_inverse=True)
        n_active = len(node_ids)
        counts = np.bincount(node_slot, minlength=n_active)
        pos = np.bincount(node_slot, weights=y[active_rows], minlength=n_active)
        for s in range(n_active):
            value[node_ids[s]] = pos[s] / counts[s]
        splittable = (pos > 0) & (pos < counts) & (counts >= 2 * min_leaf)

        # mtry features per node via a row-wise permutation of uniforms
        perm = rng.random((n_active, n_features)).argsort(axis=1)[:, :mtry]
        sampled = np.zeros((n_active, n_features), dtype=bool)
        sampled[np.arange(n_active)[:, None], perm] = True

        best_imp = np.full(n_active, np.inf)
        best_feat = np.full(n_active, -1, dtype=np.int64)
        best_cut = np.zeros(n_active, dtype=np.int64)
        for f in range(n_features):
            use = sampled[:, f] & splittable
            if not use.any():
                continue
            row_mask = use[node_slot]
            slots = node_slot[row_mask]
            members = active_rows[row_mask]
            key = slots * max_bins + codes[members, f]
            size = n_active * max_bins
            cnt = np.bincount(key, minlength=size).reshape(n_active, max_bins)
            posb = np.bincount(key, weights=y[members], minlength=size).reshape(n_active, max_bins)
            left_n = cnt.cumsum(axis=1)[:, :-1]
            left_p = posb.cumsum(axis=1)[:, :-1]
            right_n = counts[:, None] - left_n
            right_p = pos[:, None] - left_p
            valid = (left_n >= min_leaf) & (right_n >= min_leaf) & use[:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                imp = (left_p * (left_n - left_p) / left_n
                       + right_p * (right_n - right_p) / right_n)
            imp[~valid] = np.inf
            cut_idx = imp.argmin(axis=1)
            imp_best = imp[np.arange(n_active), cut_idx]
            better = imp_best < best_imp  # strict: ties keep the lower feature index
            best_imp = np.where(better, imp_best, best_imp)
            best_feat = np.where(better, f, best_feat)
            best_cut = np.where(better, cut_idx, best_cut)

        parent_imp = pos * (counts - pos) / counts
        do_split = splittable & (best_feat >= 0) & (best_imp < parent_imp - 1e-12)
        left_child = np.full(n_active, -1, dtype=np.int64)
        right_child = np.full(n_active, -1, dtype=np.int64)
        for s in np.flatnonzero(do_split):
            node = node_ids[s]
            feature[node] = int(best_feat[s])
            threshold[node] = float(cuts[best_feat[s]][best_cut[s]])
            left_child[s] = left[node] = new_node()
            right_child[s] = right[node] = new_node()

        row_active = do_split[node_slot]
        members = active_rows[row_active]
        slots = node_slot[row_active]
        goes_left = codes[members, best_feat[slots]] <= best_cut[slots]
        active_rows = members
        active_node = np.where(goes_left, left_child[slots], right_child[slots])
    return _Tree(feature=np.asarray(feature), threshold=np.asarray(threshold),
                 left=np.asarray(left), right=np.asarray(right),
                 value=np.asarray(value))


def _tree_scores(tree: _Tree, X: np.ndarray) -> np.ndarray:
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = tree.feature[node] >= 0
    while active.any():
        idx = np.flatnonzero(active)
        feats = tree.feature[node[idx]]
        # training routes code <= cut, i.e. raw value strictly below the cut value
        goes_left = X[idx, feats] < tree.threshold[node[idx]]
        node[idx] = np.where(goes_left, tree.left[node[idx]], tree.right[node[idx]])
        active = tree.feature[node] >= 0
    return tree.value[node]


def _forest_votes(trees: Sequence[_Tree], X: np.ndarray) -> np.ndarray:
    votes = np.empty((X.shape[0], len(trees)), dtype=float)
    for t, tree in enumerate(trees):
        votes[:, t] = _tree_scores(tree, X) >= 0.5
    return votes


def _train_forest(fit: LabeledDataset, validation: LabeledDataset,
                  spec: SplitSpec, options: TrainOptions) -> Model:
    transform = _fit_transform(fit, expanded=False)
    X = transform.apply(fit.X)
    y = fit.y.astype(float)
    codes, cuts = _bin_features(X, options.forest_bins)
    mtry = max(1, math.ceil(math.sqrt(X.shape[1])))
    rng = np.random.default_rng([spec.rng_seed, KINDS.index(RANDOM_FOREST)])
    max_trees = max(options.forest_tree_grid)
    trees = []
    for _ in range(max_trees):
        rows = rng.integers(0, X.shape[0], size=X.shape[0])
        trees.append(_grow_tree(codes, cuts, y, rows, mtry, options.forest_min_leaf, rng))
    # the sweep reuses prefixes of one bootstrap stream instead of refitting
    votes = _forest_votes(trees, transform.apply(validation.X))
    cumulative = np.cumsum(votes, axis=1)
    best = None
    for n_trees in options.forest_tree_grid:
        n = min(n_trees, max_trees)
        scores = cumulative[:, n - 1] / n
        accuracy, recall, _ = _metric_triple(validation.y, scores >= 0.5)
        score = selection_score(recall, accuracy) if recall is not None else float("-inf")
        if best is None or score > best[0]:
            best = (score, n)
    score, n_trees = best
    return Model(kind=RANDOM_FOREST, feature_names=fit.feature_names, task=fit.task,
                 network=fit.network, transform=transform,
                 params={"trees": trees[:n_trees], "n_trees": n_trees}, threshold=None,
                 hyperparams={"n_trees": n_trees, "min_leaf": options.forest_min_leaf,
                              "mtry": mtry},
                 validation_score=score)


# -- Gaussian naive Bayes --------------------------------------------------------

def _gaussian_log_odds(params: Mapping[str, Any], X: np.ndarray) -> np.ndarray:
    def loglik(mean, var, prior):
        return (np.log(prior)
                - 0.5 * (np.log(2.0 * np.pi * var) + (X - mean) ** 2 / var).sum(axis=1))
    return (loglik(params["pos_mean"], params["pos_var"], params["pos_prior"])
            - loglik(params["neg_mean"], params["neg_var"], params["neg_prior"]))


def _train_bayes(fit: LabeledDataset, validation: LabeledDataset,
                 spec: SplitSpec, options: TrainOptions) -> Model:
    transform = _fit_transform(fit, expanded=False)
    X = transform.apply(fit.X)
    pos = X[fit.y == 1]
    neg = X[fit.y == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("naive Bayes needs both classes in the training split")
    floor = 1e-9
    params = {
        "pos_mean": pos.mean(axis=0), "pos_var": pos.var(axis=0) + floor,
        "neg_mean": neg.mean(axis=0), "neg_var": neg.var(axis=0) + floor,
        "pos_prior": len(pos) / len(X), "neg_prior": len(neg) / len(X),
    }
    model = Model(kind=NAIVE_BAYES, feature_names=fit.feature_names, task=fit.task,
                  network=fit.network, transform=transform, params=params, threshold=None)
    model.validation_score = _validation_selection(model, validation)
    return model


# -- evaluation ----------------------------------------------------------------

@dataclass
class RocPoint:
    fpr: float
    tpr: float
    threshold: float


@dataclass
class EvaluationReport:
    """Test-set metrics for one trained model."""

    kind: str
    task: str
    network: str
    method: str
    accuracy: float
    recall: float | None
    precision: float | None
    selection_score: float | None
    tp: int
    fp: int
    fn: int
    tn: int
    roc: list[RocPoint]
    auc: float | None
    hyperparams: dict[str, Any] = field(default_factory=dict)

    @property
    def n_test(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "task": self.task,
            "network": self.network,
            "method": self.method,
            "accuracy": self.accuracy,
            "recall": self.recall,
            "precision": self.precision,
            "selection_score": self.selection_score,
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
            "auc": self.auc,
            "n_test": self.n_test,
            "hyperparams": {k: (v if isinstance(v, (int, float, bool, str)) else repr(v))
                            for k, v in self.hyperparams.items()},
        }


def roc_curve(y_true: np.ndarray, scores: np.ndarray) -> list[RocPoint]:
    """ROC points from sweeping the decision threshold over all distinct scores.

    The first point is the no-positive corner (0, 0); the last threshold is
    the minimum score, at which every row is classified positive, closing
    the curve at (1, 1).
    """
    y_true = np.asarray(y_true).astype(bool)
    scores = np.asarray(scores, dtype=float)
    n_pos = int(y_true.sum())
    n_neg = int((~y_true).sum())
    if n_pos == 0 or n_neg == 0:
        return []
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_y = y_true[order]
    distinct = np.flatnonzero(np.diff(sorted_scores)) if len(sorted_scores) > 1 else np.array([], dtype=int)
    boundaries = np.concatenate([distinct, [len(sorted_scores) - 1]])
    tp_cum = np.cumsum(sorted_y)
    fp_cum = np.cumsum(~sorted_y)
    points = [RocPoint(0.0, 0.0, float("inf"))]
    for b in boundaries:
        points.append(RocPoint(fpr=fp_cum[b] / n_neg, tpr=tp_cum[b] / n_pos,
                               threshold=float(sorted_scores[b])))
    return points


def roc_auc(points: Sequence[RocPoint]) -> float | None:
    if not points:
        return None
    fpr = np.asarray([p.fpr for p in points])
    tpr = np.asarray([p.tpr for p in points])
    return float(np.trapezoid(tpr, fpr))


def evaluate(model: Model, test: LabeledDataset) -> EvaluationReport:
    """Confusion-count metrics plus the threshold-swept ROC on a test dataset."""
    if test.feature_names != model.feature_names:
        raise ValueError("test dataset features do not match the model")
    labels, scores = predict(model, test.X)
    accuracy, recall, precision = _metric_triple(test.y, labels)
    tp = int(np.sum(labels & (test.y == 1)))
    fp = int(np.sum(labels & (test.y == 0)))
    fn = int(np.sum(~labels & (test.y == 1)))
    tn = int(np.sum(~labels & (test.y == 0)))
    points = roc_curve(test.y, scores)
    return EvaluationReport(
        kind=model.kind, task=test.task, network=test.network, method=test.method,
        accuracy=accuracy, recall=recall, precision=precision,
        selection_score=(selection_score(recall, accuracy) if recall is not None else None),
        tp=tp, fp=fp, fn=fn, tn=tn, roc=points, auc=roc_auc(points),
        hyperparams=dict(model.hyperparams))


def select_model(reports: Mapping[str, EvaluationReport]) -> str:
    """Kind with the best selection score; ties go to accuracy, then kind order."""
    scored = {kind: r for kind, r in reports.items() if r.selection_score is not None}
    if not scored:
        raise ValueError("no evaluation report carries a defined selection score")
    return max(scored, key=lambda kind: (scored[kind].selection_score,
                                         scored[kind].accuracy,
                                         -KINDS.index(kind)))
