"""From-scratch classifiers and evaluation: logistic regression, Pegasos
linear SVM, random forest, stratified k-fold CV, and the binary-rate report.

The positive class is "malicious" throughout. Ties predict benign.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .features import (FEATURE_NAMES, LABEL_BENIGN, LABEL_MALICIOUS,
                       N_FEATURES, FeatureVector)

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

KINDS = ("logreg", "svm", "rf")


class LearnError(ValueError):
    pass


class SingleClassError(LearnError):
    def __init__(self, label: str):
        super().__init__(f"dataset contains only {label!r} samples")


class ClassTooSmallError(LearnError):
    def __init__(self, label: str, size: int, k: int):
        super().__init__(f"class {label!r} has {size} samples, fewer than k={k}")


class SchemaMismatchError(LearnError):
    pass


class AllZeroMatrixError(LearnError):
    def __init__(self):
        super().__init__("confusion matrix is all zeros")


@dataclass(frozen=True)
class LabeledDataset:
    vectors: tuple[FeatureVector, ...]

    def __post_init__(self):
        for v in self.vectors:
            if v.label is None:
                raise LearnError(f"sample {v.sample_id!r} has no label")

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, y) with y=1 for malicious, 0 for benign."""
        X = np.array([v.values for v in self.vectors], dtype=float)
        y = np.array([1 if v.label == LABEL_MALICIOUS else 0 for v in self.vectors])
        return X, y

    def subset(self, indices: list[int]) -> "LabeledDataset":
        return LabeledDataset(tuple(self.vectors[i] for i in indices))

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass
class HyperParams:
    logreg_lr: float = 0.1
    logreg_l2: float = 1e-4
    logreg_epochs: int = 500
    svm_lambda: float = 1e-4
    svm_steps: int = 2000
    rf_trees: int = 100
    rf_min_leaf: int = 1
    rf_max_depth: int | None = None


@dataclass
class ModelParams:
    kind: str
    # linear models
    weights: np.ndarray | None = None
    bias: float = 0.0
    feat_mean: np.ndarray | None = None
    feat_std: np.ndarray | None = None
    constant_features: tuple[int, ...] = ()
    # random forest: nested {"feature", "threshold", "left", "right"} / {"leaf": p}
    trees: list[dict] = field(default_factory=list)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: float
    fn: float
    fp: float
    tn: float

    @property
    def total(self) -> float:
        return self.tp + self.fn + self.fp + self.tn


@dataclass(frozen=True)
class MetricReport:
    """Six rates in percent; None where the defining ratio has denominator 0."""
    fnr: float | None
    fpr: float | None
    fdr: float | None
    for_: float | None
    f1: float | None
    ar: float | None


def compute_metrics(m: ConfusionMatrix) -> MetricReport:
    if m.total == 0:
        raise AllZeroMatrixError()

    def rate(num: float, den: float) -> float | None:
        return None if den == 0 else 100.0 * num / den

    return MetricReport(
        fnr=rate(m.fn, m.fn + m.tp),
        fpr=rate(m.fp, m.fp + m.tn),
        fdr=rate(m.fp, m.fp + m.tp),
        for_=rate(m.fn, m.fn + m.tn),
        f1=rate(2 * m.tp, 2 * m.tp + m.fn + m.fp),
        ar=rate(m.tp + m.tn, m.total),
    )


def _standardize_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, tuple[int, ...]]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    constant = tuple(int(i) for i in np.flatnonzero(std == 0.0))
    if constant:
        log.warning("constant feature column(s): %s",
                    ", ".join(FEATURE_NAMES[i] for i in constant))
    std = np.where(std == 0.0, 1.0, std)
    return mean, std, constant


def logreg_loss_and_grad(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float,
) -> tuple[float, np.ndarray, float]:
    """Mean L2-regularized log loss with its gradient (bias unregularized)."""
    z = X @ w + b
    # stable log(1 + e^-|z|) formulation
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * w @ w)
    p = 1.0 / (1.0 + np.exp(-z))
    residual = p - y
    grad_w = X.T @ residual / len(y) + l2 * w
    grad_b = float(residual.mean())
    return loss, grad_w, grad_b


def _fit_logreg(X: np.ndarray, y: np.ndarray, hyper: HyperParams) -> tuple[np.ndarray, float, list[float]]:
    w = np.zeros(X.shape[1])
    b = 0.0
    losses = []
    for _ in range(hyper.logreg_epochs):
        loss, grad_w, grad_b = logreg_loss_and_grad(w, b, X, y, hyper.logreg_l2)
        losses.append(loss)
        w = w - hyper.logreg_lr * grad_w
        b = b - hyper.logreg_lr * grad_b
    return w, b, losses


def _fit_svm(X: np.ndarray, y: np.ndarray, hyper: HyperParams, seed: int) -> tuple[np.ndarray, float]:
    """Pegasos stochastic subgradient on the hinge loss.

    Samples are visited in seeded-shuffled passes. The bias rides along as a
    constant-1 feature so it shares the step-size decay; the huge early
    steps (eta = 1/(lambda*t)) would otherwise leave it unbounded.
    """
    rng = np.random.default_rng(seed)
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    signed = np.where(y == 1, 1.0, -1.0)
    w = np.zeros(d + 1)
    lam = hyper.svm_lambda
    t = 0
    while t < hyper.svm_steps:
        order = rng.permutation(n)
        for i in order:
            t += 1
            eta = 1.0 / (lam * t)
            margin = signed[i] * (Xa[i] @ w)
            w = (1.0 - eta * lam) * w
            if margin < 1.0:
                w = w + eta * signed[i] * Xa[i]
            if t >= hyper.svm_steps:
                break
    return w[:-1], float(w[-1])


def _gini_best_split(
    X: np.ndarray, y: np.ndarray, feature_ids: np.ndarray, min_leaf: int,
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, impurity) among the sampled features.

    Threshold t splits into x <= t / x > t; candidates are midpoints of
    consecutive distinct sorted values. Returns None when nothing splits.
    """
    n = len(y)
    best: tuple[int, float, float] | None = None
    for f in feature_ids:
        col = X[:, int(f)]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        ys = y[order]
        # positions where the value changes: splits between i-1 and i
        change = np.flatnonzero(xs[1:] != xs[:-1]) + 1
        if change.size == 0:
            continue
        left_pos = np.cumsum(ys)[change - 1]
        left_n = change.astype(float)
        total_pos = float(ys.sum())
        right_n = n - left_n
        right_pos = total_pos - left_pos
        ok = (left_n >= min_leaf) & (right_n >= min_leaf)
        if not ok.any():
            continue
        pl = left_pos / left_n
        pr = right_pos / right_n
        gini = (left_n * 2 * pl * (1 - pl) + right_n * 2 * pr * (1 - pr)) / n
        gini = np.where(ok, gini, np.inf)
        i = int(np.argmin(gini))
        score = float(gini[i])
        if best is None or score < best[2]:
            pos = change[i]
            threshold = (xs[pos - 1] + xs[pos]) / 2.0
            best = (int(f), float(threshold), score)
    return best


def _build_tree(
    X: np.ndarray, y: np.ndarray, rng: np.random.Generator,
    hyper: HyperParams, depth: int,
) -> dict:
    n = len(y)
    pos = float(y.sum())
    if pos == 0 or pos == n or n < 2 * hyper.rf_min_leaf or \
            (hyper.rf_max_depth is not None and depth >= hyper.rf_max_depth):
        return {"leaf": pos / n}
    d = X.shape[1]
    k = min(d, math.isqrt(d) + (0 if math.isqrt(d) ** 2 == d else 1))
    feature_ids = rng.choice(d, size=k, replace=False)
    split = _gini_best_split(X, y, feature_ids, hyper.rf_min_leaf)
    if split is None:
        return {"leaf": pos / n}
    f, threshold, _ = split
    mask = X[:, f] <= threshold
    return {
        "feature": f,
        "threshold": threshold,
        "left": _build_tree(X[mask], y[mask], rng, hyper, depth + 1),
        "right": _build_tree(X[~mask], y[~mask], rng, hyper, depth + 1),
    }


def _fit_forest(X: np.ndarray, y: np.ndarray, hyper: HyperParams, seed: int) -> list[dict]:
    n = len(y)
    trees = []
    for ti in range(hyper.rf_trees):
        rng = np.random.default_rng(seed + ti)
        sample = rng.integers(0, n, size=n)
        trees.append(_build_tree(X[sample], y[sample], rng, hyper, depth=0))
    return trees


def _tree_prob(tree: dict, x: np.ndarray) -> float:
    node = tree
    while "leaf" not in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return node["leaf"]


def train(kind: str, data: LabeledDataset, hyper: HyperParams | None = None,
          seed: int = 42) -> ModelParams:
    """Fit one classifier; deterministic given (data order, hyper, seed)."""
    if kind not in KINDS:
        raise LearnError(f"unknown classifier kind {kind!r}")
    hyper = hyper or HyperParams()
    X, y = data.arrays()
    if y.min() == y.max():
        raise SingleClassError(LABEL_MALICIOUS if y[0] == 1 else LABEL_BENIGN)
    if kind == "rf":
        return ModelParams(kind="rf", trees=_fit_forest(X, y, hyper, seed))
    mean, std, constant = _standardize_fit(X)
    Xs = (X - mean) / std
    if kind == "logreg":
        w, b, _ = _fit_logreg(Xs, y, hyper)
    else:
        w, b = _fit_svm(Xs, y, hyper, seed)
    return ModelParams(kind=kind, weights=w, bias=b, feat_mean=mean,
                       feat_std=std, constant_features=constant)


def predict(model: ModelParams, x: FeatureVector) -> str:
    """Classify one sample; score ties go to benign."""
    if len(x.values) != N_FEATURES:
        raise SchemaMismatchError(f"expected {N_FEATURES} features, got {len(x.values)}")
    vec = np.array(x.values, dtype=float)
    if model.kind == "rf":
        prob = float(np.mean([_tree_prob(t, vec) for t in model.trees]))
        return LABEL_MALICIOUS if prob > 0.5 else LABEL_BENIGN
    z = ((vec - model.feat_mean) / model.feat_std) @ model.weights + model.bias
    return LABEL_MALICIOUS if z > 0 else LABEL_BENIGN


def stratified_kfold(data: LabeledDataset, k: int = 10, seed: int = 42,
                     ) -> list[tuple[list[int], list[int]]]:
    """Per-class seeded shuffle, then round-robin deal into k folds."""
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    # one dealing position carried across classes, so the per-class
    # remainders spread over different folds and totals stay within 1
    pos = 0
    for label in (LABEL_MALICIOUS, LABEL_BENIGN):
        indices = [i for i, v in enumerate(data.vectors) if v.label == label]
        if len(indices) < k:
            raise ClassTooSmallError(label, len(indices), k)
        shuffled = [indices[j] for j in rng.permutation(len(indices))]
        for idx in shuffled:
            folds[pos % k].append(idx)
            pos += 1
    splits = []
    for j in range(k):
        test = sorted(folds[j])
        train_idx = sorted(i for jj in range(k) if jj != j for i in folds[jj])
        splits.append((train_idx, test))
    return splits


def cross_validate(kind: str, data: LabeledDataset, hyper: HyperParams | None = None,
                   k: int = 10, seed: int = 42) -> tuple[ConfusionMatrix, MetricReport]:
    """k-fold CV; returns the fold-averaged confusion matrix and the rates
    computed from the summed (pre-averaging) counts."""
    hyper = hyper or HyperParams()
    splits = stratified_kfold(data, k=k, seed=seed)
    tp = fn = fp = tn = 0
    for fold, (train_idx, test_idx) in enumerate(splits):
        model = train(kind, data.subset(train_idx), hyper, seed=seed + fold)
        for i in test_idx:
            sample = data.vectors[i]
            predicted = predict(model, sample)
            if sample.label == LABEL_MALICIOUS:
                if predicted == LABEL_MALICIOUS:
                    tp += 1
                else:
                    fn += 1
            else:
                if predicted == LABEL_MALICIOUS:
                    fp += 1
                else:
                    tn += 1
    summed = ConfusionMatrix(tp=tp, fn=fn, fp=fp, tn=tn)
    averaged = ConfusionMatrix(tp=tp / k, fn=fn / k, fp=fp / k, tn=tn / k)
    return averaged, compute_metrics(summed)


def model_to_json(model: ModelParams) -> bytes:
    payload: dict = {"version": MODEL_FORMAT_VERSION, "kind": model.kind}
    if model.kind == "rf":
        payload["trees"] = model.trees
    else:
        payload["weights"] = list(model.weights)
        payload["bias"] = model.bias
        payload["feat_mean"] = list(model.feat_mean)
        payload["feat_std"] = list(model.feat_std)
        payload["constant_features"] = list(model.constant_features)
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def model_from_json(data: bytes) -> ModelParams:
    raw = json.loads(data.decode("utf-8"))
    if raw.get("version") != MODEL_FORMAT_VERSION:
        raise LearnError(f"unsupported model version {raw.get('version')!r}")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise LearnError(f"unknown classifier kind {kind!r}")
    if kind == "rf":
        return ModelParams(kind="rf", trees=raw["trees"])
    return ModelParams(
        kind=kind,
        weights=np.array(raw["weights"], dtype=float),
        bias=float(raw["bias"]),
        feat_mean=np.array(raw["feat_mean"], dtype=float),
        feat_std=np.array(raw["feat_std"], dtype=float),
        constant_features=tuple(raw["constant_features"]),
    )
