"""Training losses with analytic gradients and a finite-difference checker.

Every loss returns a LossResult carrying the scalar value and the gradient
with respect to its prediction inputs. Probabilities are clamped to
[EPS, 1-EPS] before any log; a clamped input is treated as constant, so
its reported gradient is zero. Batch losses reduce in a fixed order for
bit-reproducible values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .anchors import IGNORE, POSITIVE, AnchorLabel, RefineLabel

EPS = 1e-7  # probability clamp for log stability

__all__ = [
    "EPS",
    "LossResult",
    "mse_loss",
    "smooth_l1",
    "focal_loss",
    "binary_cross_entropy",
    "grn_loss",
    "rn_loss",
    "gradient_check",
]


@dataclass(frozen=True, eq=False)
class LossResult:
    """Scalar loss value plus gradients aligned with the prediction inputs.

    Composite losses flatten their gradients: all classification
    probabilities first (row-major), then all residual predictions.
    """

    value: float
    gradients: np.ndarray

    @property
    def gradient(self) -> float:
        """The gradient of a single-input loss as a plain float."""
        return float(self.gradients)


def mse_loss(pred: Sequence[float], gt: Sequence[float]) -> LossResult:
    """Mean squared error (1/N) sum (gt - pred)^2."""
    p = np.asarray(pred, dtype=float).reshape(-1)
    g = np.asarray(gt, dtype=float).reshape(-1)
    if p.shape != g.shape:
        raise ValueError(f"length mismatch: pred {p.shape} vs gt {g.shape}")
    if p.size == 0:
        raise ValueError("mse_loss needs at least one element")
    diff = g - p
    return LossResult(float(diff @ diff) / p.size, -2.0 * diff / p.size)


def _smooth_l1_terms(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise smooth-L1 of x = pred - gt and its gradient in x."""
    ax = np.abs(x)
    quad = ax < 1.0
    vals = np.where(quad, 0.5 * x * x, ax - 0.5)
    grads = np.where(quad, x, np.sign(x))
    return vals, grads


def smooth_l1(pred: float, gt: float) -> LossResult:
    """Smooth L1 with the standard knee at |pred - gt| = 1."""
    vals, grads = _smooth_l1_terms(np.asarray(float(pred) - float(gt)))
    return LossResult(float(vals), grads)


def _clamp_prob(p: float) -> tuple[float, bool]:
    if p < EPS:
        return EPS, True
    if p > 1.0 - EPS:
        return 1.0 - EPS, True
    return p, False


def focal_loss(p: float, y: int, gamma: float = 2.0, alpha: float = 0.25) -> LossResult:
    """Focal loss for a single probability against a binary target."""
    if y not in (0, 1):
        raise ValueError(f"target must be 0 or 1, got {y}")
    q, clamped = _clamp_prob(float(p))
    if y == 1:
        value = -alpha * (1.0 - q) ** gamma * math.log(q)
        grad = alpha * gamma * (1.0 - q) ** (gamma - 1.0) * math.log(q) - alpha * (1.0 - q) ** gamma / q
    else:
        value = -(1.0 - alpha) * q ** gamma * math.log(1.0 - q)
        grad = (
            -(1.0 - alpha) * gamma * q ** (gamma - 1.0) * math.log(1.0 - q)
            + (1.0 - alpha) * q ** gamma / (1.0 - q)
        )
    return LossResult(value, np.asarray(0.0 if clamped else grad))


def binary_cross_entropy(p: float, y: int) -> LossResult:
    """Cross entropy for a single probability against a binary target."""
    if y not in (0, 1):
        raise ValueError(f"target must be 0 or 1, got {y}")
    q, clamped = _clamp_prob(float(p))
    value = -(y * math.log(q) + (1 - y) * math.log(1.0 - q))
    grad = -y / q + (1 - y) / (1.0 - q)
    return LossResult(value, np.asarray(0.0 if clamped else grad))


def grn_loss(
    class_probs: np.ndarray,
    residuals: np.ndarray,
    labels: Sequence[AnchorLabel],
    lambda_cls: float = 0.2,
    lambda_u: float = 1.0,
    k1: int | None = None,
) -> LossResult:
    """Proposal-generation loss: focal classification over anchors plus
    smooth-L1 regression for positive anchors.

    class_probs is (n, M); residuals is (n, 8) ordered as
    [res_c(3), res_r(3), theta, s_q] and is read only for rows whose label
    has a positive anchor (ignored rows get exactly zero gradient). Only
    the classification term is averaged (by k1, default n); the regression
    sum is unnormalized.
    """
    probs = np.asarray(class_probs, dtype=float)
    res = np.asarray(residuals, dtype=float)
    n = len(labels)
    if n == 0:
        raise ValueError("grn_loss needs at least one label")
    m = labels[0].classes.shape[0]
    if probs.shape != (n, m):
        raise ValueError(f"class_probs shape {probs.shape} does not match ({n}, {m})")
    if res.shape != (n, 8):
        raise ValueError(f"residuals shape {res.shape} does not match ({n}, 8)")
    k1 = n if k1 is None else int(k1)
    if k1 < 1:
        raise ValueError("k1 must be >= 1")

    grad_probs = np.zeros_like(probs)
    grad_res = np.zeros_like(res)
    cls_total = 0.0
    reg_total = 0.0
    for i, label in enumerate(labels):
        for j, cls in enumerate(label.classes):
            if cls == IGNORE:
                continue
            term = focal_loss(probs[i, j], int(cls))
            cls_total += term.value
            grad_probs[i, j] = term.gradient
        if label.residuals is not None:
            vals, grads = _smooth_l1_terms(res[i] - label.residuals.as_array())
            reg_total += float(np.sum(vals))
            grad_res[i] = grads
    value = (lambda_cls / k1) * cls_total + lambda_u * reg_total
    grad_probs *= lambda_cls / k1
    grad_res *= lambda_u
    return LossResult(value, np.concatenate([grad_probs.ravel(), grad_res.ravel()]))


def rn_loss(
    class_probs: np.ndarray,
    residuals: np.ndarray,
    labels: Sequence[RefineLabel],
    lambda_rcls: float = 0.2,
    lambda_ru: float = 1.0,
) -> LossResult:
    """Refinement loss: cross-entropy over non-ignored proposals plus
    smooth-L1 regression averaged over positives.

    class_probs is (n,); residuals is (n, 8) as in grn_loss and is read
    only for positive rows. Raises when every label is ignored.
    """
    probs = np.asarray(class_probs, dtype=float).reshape(-1)
    res = np.asarray(residuals, dtype=float)
    n = len(labels)
    if probs.shape != (n,):
        raise ValueError(f"class_probs shape {probs.shape} does not match ({n},)")
    if res.shape != (n, 8):
        raise ValueError(f"residuals shape {res.shape} does not match ({n}, 8)")
    n_cls = sum(1 for lb in labels if lb.y != IGNORE)
    if n_cls == 0:
        raise ValueError("rn_loss has no non-ignored labels to train on")
    n_reg = sum(1 for lb in labels if lb.y == POSITIVE)

    grad_probs = np.zeros_like(probs)
    grad_res = np.zeros_like(res)
    cls_total = 0.0
    reg_total = 0.0
    for i, label in enumerate(labels):
        if label.y == IGNORE:
            continue
        term = binary_cross_entropy(probs[i], int(label.y))
        cls_total += term.value
        grad_probs[i] = term.gradient
        if label.y == POSITIVE:
            vals, grads = _smooth_l1_terms(res[i] - label.residuals.as_array())
            reg_total += float(np.sum(vals))
            grad_res[i] = grads
    value = (lambda_rcls / n_cls) * cls_total
    grad_probs *= lambda_rcls / n_cls
    if n_reg > 0:
        value += (lambda_ru / n_reg) * reg_total
        grad_res *= lambda_ru / n_reg
    return LossResult(value, np.concatenate([grad_probs.ravel(), grad_res.ravel()]))


def gradient_check(
    fn: Callable[[np.ndarray], LossResult],
    inputs: np.ndarray,
    h: float = 1e-6,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    fn maps a flat input vector to a LossResult whose gradients align with
    that vector. The error denominator is floored at 1 so zero-gradient
    coordinates compare absolutely. Inputs must sit at least ~10h away
    from any non-smooth point (the smooth-L1 knee, probability clamps).
    """
    x = np.asarray(inputs, dtype=float).reshape(-1)
    analytic = np.asarray(fn(x).gradients, dtype=float).reshape(-1)
    if analytic.shape != x.shape:
        raise ValueError(f"gradient shape {analytic.shape} does not match inputs {x.shape}")
    worst = 0.0
    for k in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[k] += h
        lo[k] -= h
        fd = (fn(hi).value - fn(lo).value) / (2.0 * h)
        err = abs(analytic[k] - fd) / max(1.0, abs(analytic[k]), abs(fd))
        worst = max(worst, err)
    return worst
