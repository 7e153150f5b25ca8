"""Class-weighted, L2-regularized logistic regression over sparse features.

The objective is

    L(w, b) = sum_i cw_i * BCE(sigmoid(w . x_i + b), y_i) + ||w||^2 / (2C)

with per-class weights cw and unregularized bias. It is minimized by
full-batch gradient descent with an Armijo backtracking line search, which
guarantees a non-increasing loss trace and makes training deterministic
(zero initialization, no randomness).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from .features import FeatureVector

_ARMIJO_C = 1e-4
_MIN_STEP = 1e-20


@dataclass(frozen=True)
class ClassWeights:
    w_pos: float
    w_neg: float


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    C: float
    converged: bool = True
    n_iter: int = 0
    loss_trace: list = field(default_factory=list)

    @property
    def width(self) -> int:
        return int(self.weights.shape[0])


def balanced_class_weights(labels: Sequence[int]) -> ClassWeights:
    """Per-class weights n / (2 * n_c), equalizing total class weight."""
    n = len(labels)
    n_pos = int(np.sum(np.asarray(labels) == 1))
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present to balance weights")
    return ClassWeights(w_pos=n / (2.0 * n_pos), w_neg=n / (2.0 * n_neg))


def to_csr(X: Sequence[FeatureVector]) -> sparse.csr_matrix:
    """Stack sparse feature vectors into a CSR design matrix."""
    if not X:
        raise ValueError("empty feature matrix")
    width = X[0].width
    for i, vec in enumerate(X):
        if vec.width != width:
            raise ValueError(
                f"feature width mismatch at row {i}: {vec.width} != {width}"
            )
    indptr = [0]
    indices: list = []
    data: list = []
    for vec in X:
        cols = sorted(vec.pairs)
        indices.extend(cols)
        data.extend(vec.pairs[c] for c in cols)
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), indices, indptr),
        shape=(len(X), width),
    )


def _log_sigmoid_terms(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    # BCE(sigmoid(z), y) computed from logits, stable for large |z|.
    return y * np.logaddexp(0.0, -z) + (1.0 - y) * np.logaddexp(0.0, z)


def weighted_loss(
    Xc: sparse.csr_matrix,
    y: np.ndarray,
    cw: np.ndarray,
    w: np.ndarray,
    b: float,
    C: float,
) -> float:
    z = Xc @ w + b
    return float(np.dot(cw, _log_sigmoid_terms(z, y)) + np.dot(w, w) / (2.0 * C))


def weighted_gradient(
    Xc: sparse.csr_matrix,
    y: np.ndarray,
    cw: np.ndarray,
    w: np.ndarray,
    b: float,
    C: float,
) -> tuple:
    z = Xc @ w + b
    p = np.empty_like(z)
    pos = z >= 0
    p[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    p[~pos] = ez / (1.0 + ez)
    residual = cw * (p - y)
    grad_w = Xc.T @ residual + w / C
    grad_b = float(residual.sum())
    return grad_w, grad_b


def train_logreg(
    X: Sequence[FeatureVector],
    y: Sequence[int],
    C: float = 1.0,
    tol: float = 1e-6,
    max_iter: int = 5000,
    seed: int = 0,
    class_weights: ClassWeights | None = None,
) -> LogRegModel:
    """Fit by full-batch gradient descent with backtracking line search.

    Starts from zero parameters and stops when the gradient infinity norm
    drops below ``tol`` or after ``max_iter`` accepted steps. ``seed`` is
    accepted for interface symmetry with the neural trainer but unused
    (the solve is deterministic). If the tolerance is not reached the model
    is still returned, flagged ``converged=False``.

    When ``class_weights`` is omitted, balanced weights are computed from
    ``y``.
    """
    if len(X) == 0 or len(X) != len(y):
        raise ValueError("X and y must be nonempty and equal length")
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    del seed
    yv = np.asarray(y, dtype=np.float64)
    if not np.all((yv == 0.0) | (yv == 1.0)):
        raise ValueError("labels must be 0 or 1")
    if class_weights is None:
        class_weights = balanced_class_weights(list(int(v) for v in yv))
    cw = np.where(yv == 1.0, class_weights.w_pos, class_weights.w_neg)

    Xc = to_csr(X)
    w = np.zeros(Xc.shape[1])
    b = 0.0
    loss = weighted_loss(Xc, yv, cw, w, b, C)
    trace = [loss]

    converged = False
    step = 1.0
    iteration = 0
    if max_iter > 0:
        for iteration in range(1, max_iter + 1):
            grad_w, grad_b = weighted_gradient(Xc, yv, cw, w, b, C)
            grad_inf = max(
                float(np.max(np.abs(grad_w))) if grad_w.size else 0.0,
                abs(grad_b),
            )
            if grad_inf < tol:
                converged = True
                iteration -= 1
                break
            grad_sq = float(np.dot(grad_w, grad_w) + grad_b * grad_b)
            while step >= _MIN_STEP:
                cand_w = w - step * grad_w
                cand_b = b - step * grad_b
                cand_loss = weighted_loss(Xc, yv, cw, cand_w, cand_b, C)
                if cand_loss <= loss - _ARMIJO_C * step * grad_sq:
                    break
                step *= 0.5
            if step < _MIN_STEP:
                break  # no usable descent step; stop with converged=False
            w, b, loss = cand_w, cand_b, cand_loss
            trace.append(loss)
            step = min(step * 2.0, 1e4)
        else:
            iteration = max_iter

    return LogRegModel(
        weights=w,
        bias=b,
        C=C,
        converged=converged,
        n_iter=iteration,
        loss_trace=trace,
    )


def decision_value(model: LogRegModel, x: FeatureVector) -> float:
    if x.width != model.width:
        raise ValueError(
            f"feature width {x.width} does not match model width {model.width}"
        )
    return sum(model.weights[col] * val for col, val in x.pairs.items()) + model.bias


def predict_proba(model: LogRegModel, x: FeatureVector) -> float:
    """Logistic of the linear score, in (0, 1)."""
    z = decision_value(model, x)
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    ez = np.exp(z)
    return ez / (1.0 + ez)


def predict_proba_many(model: LogRegModel, X: Sequence[FeatureVector]) -> np.ndarray:
    Xc = to_csr(X)
    if Xc.shape[1] != model.width:
        raise ValueError(
            f"feature width {Xc.shape[1]} does not match model width {model.width}"
        )
    z = Xc @ model.weights + model.bias
    p = np.empty_like(z)
    pos = z >= 0
    p[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    p[~pos] = ez / (1.0 + ez)
    return p


def classify(p: float, threshold: float = 0.5) -> int:
    """1 iff p >= threshold; ties go to the positive (hateful) class."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    return 1 if p >= threshold else 0


def save_logreg(model: LogRegModel, path: str) -> None:
    """JSON record with weights as 17-significant-digit decimal strings,
    which round-trip float64 values exactly."""
    payload = {
        "width": model.width,
        "bias": model.bias,
        "C": model.C,
        "weights": [f"{v:.17g}" for v in model.weights],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True)
        handle.write("\n")


def load_logreg(path: str) -> LogRegModel:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    weights = np.asarray([float(v) for v in payload["weights"]], dtype=np.float64)
    if weights.shape[0] != payload["width"]:
        raise ValueError(
            f"{path}: weight count {weights.shape[0]} does not match width "
            f"{payload['width']}"
        )
    return LogRegModel(weights=weights, bias=float(payload["bias"]), C=float(payload["C"]))
