"""Feature normalization, ridge-penalized logistic regression, and
stratified k-fold cross-validation producing the per-fold metric vector.

Training is deterministic: full-batch Newton (IRLS) from a zero start with
step halving, falling back to a gradient step when the Hessian solve
fails. The L2 penalty applies to the weights only, never the intercept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FoldAccuracies",
    "LogisticModel",
    "zscore_fit_apply",
    "train_logistic",
    "predict",
    "stratified_folds",
    "cv_with_folds",
    "stratified_kfold_cv",
    "f1_score",
]

GRAD_TOL = 1e-6
MAX_ITER = 500


@dataclass(frozen=True)
class LogisticModel:
    """Fitted binary logistic model: P(class 1 | x) = sigmoid(b0 + x.b)."""

    intercept: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if not np.isfinite(self.intercept) or not np.all(np.isfinite(w)):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class FoldAccuracies:
    """The k per-fold metric values from cross-validation."""

    values: np.ndarray
    metric: str = "accuracy"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a non-empty vector")
        if np.any(v < 0) or np.any(v > 1):
            raise ValueError("metric values must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


def zscore_fit_apply(train: np.ndarray, test: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature z-scoring with statistics from the training rows only.

    Uses the population standard deviation; features that are constant on
    the training rows map to zero in both outputs (no information there).
    """
    train = np.asarray(train, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if train.shape[0] == 0:
        raise ValueError("training matrix is empty")
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    safe = np.where(std > 0, std, 1.0)
    train_z = (train - mean) / safe
    test_z = (test - mean) / safe
    dead = std == 0
    if np.any(dead):
        train_z[:, dead] = 0.0
        test_z[:, dead] = 0.0
    return train_z, test_z


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def penalized_nll(beta: np.ndarray, x1: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Negative log-likelihood plus (lam/2)*||weights||^2 (intercept free)."""
    z = x1 @ beta
    # log(1 + exp(z)) - y*z, computed stably
    nll = np.sum(np.logaddexp(0.0, z) - y * z)
    return float(nll + 0.5 * lam * np.dot(beta[1:], beta[1:]))


def _penalized_grad(beta: np.ndarray, x1: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    p = _sigmoid(x1 @ beta)
    g = x1.T @ (p - y)
    g[1:] += lam * beta[1:]
    return g


def train_logistic(features: np.ndarray, y: np.ndarray, lam: float = 1.0) -> LogisticModel:
    """Fit the penalized logistic model by Newton/IRLS.

    Deterministic in (features, y, lam): zero initialization, damped Newton
    steps until the penalized-loss gradient norm drops below 1e-6 (or 500
    iterations). Requires both classes to be present.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] != y.size:
        raise ValueError(f"{x.shape[0]} rows but {y.size} labels")
    if len(np.unique(y)) < 2:
        raise ValueError("training labels contain a single class")
    n, d = x.shape
    x1 = np.hstack([np.ones((n, 1)), x])
    beta = np.zeros(d + 1)
    loss = penalized_nll(beta, x1, y, lam)
    reg = np.zeros(d + 1)
    reg[1:] = lam
    for _ in range(MAX_ITER):
        g = _penalized_grad(beta, x1, y, lam)
        if np.linalg.norm(g) <= GRAD_TOL:
            break
        p = _sigmoid(x1 @ beta)
        w = p * (1.0 - p)
        h = (x1 * w[:, None]).T @ x1 + np.diag(reg)
        try:
            step = np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            step = g  # gradient fallback when the Hessian is singular
        # backtracking keeps the iteration monotone on flat regions
        scale = 1.0
        for _ in range(50):
            cand = beta - scale * step
            cand_loss = penalized_nll(cand, x1, y, lam)
            if cand_loss <= loss:
                break
            scale *= 0.5
        else:
            break
        if cand_loss == loss and np.allclose(cand, beta):
            break
        beta, loss = cand, cand_loss
    return LogisticModel(intercept=float(beta[0]), weights=beta[1:].copy())


def predict(model: LogisticModel, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Class-1 probabilities and hard 0/1 labels (ties at 0.5 go to class 0)."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] != model.weights.size:
        raise ValueError(
            f"feature width {x.shape[1]} does not match model width {model.weights.size}"
        )
    prob = _sigmoid(model.intercept + x @ model.weights)
    return prob, (prob > 0.5).astype(np.intp)


def f1_score(pred: np.ndarray, truth: np.ndarray, positive_class=1) -> float:
    """F1 for the positive class; 0 when precision + recall is 0."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.size == 0 or pred.shape != truth.shape:
        raise ValueError("pred and truth must be equal-length and non-empty")
    tp = np.sum((pred == positive_class) & (truth == positive_class))
    fp = np.sum((pred == positive_class) & (truth != positive_class))
    fn = np.sum((pred != positive_class) & (truth == positive_class))
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 0.0
    return float(2 * tp / denom)


def stratified_folds(codes: np.ndarray, k: int, seed: int | None) -> list[np.ndarray]:
    """Deterministic stratified partition into k folds.

    Each class's trials are shuffled by the seeded generator and dealt into
    k contiguous chunks whose sizes differ by at most one, so per-fold class
    proportions match the whole within one trial.
    """
    codes = np.asarray(codes)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    classes, counts = np.unique(codes, return_counts=True)
    if counts.min() < k:
        raise ValueError(
            f"k={k} exceeds the smallest class size {counts.min()}"
        )
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in classes:
        idx = np.flatnonzero(codes == cls)
        idx = rng.permutation(idx)
        for fold_i, chunk in enumerate(np.array_split(idx, k)):
            folds[fold_i].extend(chunk.tolist())
    return [np.asarray(sorted(f), dtype=np.intp) for f in folds]


def cv_with_folds(
    features: np.ndarray,
    codes: np.ndarray,
    folds: list[np.ndarray],
    metric: str = "accuracy",
    lam: float = 1.0,
) -> FoldAccuracies:
    """Run the normalize/train/score cycle over an explicit fold partition."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    codes = np.asarray(codes)
    if metric not in ("accuracy", "f1"):
        raise ValueError(f"unknown metric {metric!r}")
    all_idx = np.arange(x.shape[0])
    values = np.empty(len(folds))
    for i, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(all_idx, test_idx, assume_unique=False)
        train_z, test_z = zscore_fit_apply(x[train_idx], x[test_idx])
        model = train_logistic(train_z, codes[train_idx], lam=lam)
        _, pred = predict(model, test_z)
        truth = codes[test_idx]
        if metric == "accuracy":
            values[i] = np.mean(pred == truth)
        else:
            values[i] = f1_score(pred, truth, positive_class=1)
    return FoldAccuracies(values=values, metric=metric)


def stratified_kfold_cv(
    features: np.ndarray,
    y,
    k: int,
    seed: int | None,
    metric: str = "accuracy",
    lam: float = 1.0,
) -> FoldAccuracies:
    """Stratified k-fold cross-validation of the logistic classifier.

    ``y`` may be a LabelVector or a 0/1 code array. For each fold the
    normalization statistics and the model come from the training folds
    only; values are returned in fold order.
    """
    codes = np.asarray(getattr(y, "codes", y))
    folds = stratified_folds(codes, k, seed)
    return cv_with_folds(features, codes, folds, metric=metric, lam=lam)
