"""Dense float64 math: neural-net primitives, losses, and their gradients.

Every primitive comes as a forward function plus a hand-derived
``*_backward`` companion; there is no autodiff tape. Backward functions
recompute cheap intermediates from the forward inputs instead of carrying
caches, which keeps each pair self-contained and directly checkable with
``grad_check``.

All arrays are ``numpy.float64``. Non-finite values are a contract
violation and are rejected at the few places they could first appear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import Rng

LAYER_NORM_EPS = 1e-12
_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


def ensure_finite(x, name: str = "tensor") -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains NaN or Inf")


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Rowwise softmax along ``axis``, stabilized by max subtraction."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("softmax of an empty array")
    ensure_finite(x, "softmax input")
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("log_softmax of an empty array")
    ensure_finite(x, "log_softmax input")
    shifted = x - np.max(x, axis=axis, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))


def softmax_backward(d_out: np.ndarray, y: np.ndarray, axis: int = -1) -> np.ndarray:
    """Gradient through softmax given its output ``y``."""
    inner = np.sum(d_out * y, axis=axis, keepdims=True)
    return y * (d_out - inner)


def cross_entropy(logits: np.ndarray, target: int) -> float:
    """Negative log-probability of ``target`` under softmax(logits).

    Computed as logsumexp(logits) - logits[target]; never materializes
    probabilities, so tiny ones cannot underflow to -log(0).
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1:
        raise ValueError(f"logits must be 1-D, got shape {logits.shape}")
    if not 0 <= target < logits.shape[0]:
        raise ValueError(f"target {target} out of range for {logits.shape[0]} classes")
    ensure_finite(logits, "logits")
    m = float(np.max(logits))
    lse = m + math.log(float(np.sum(np.exp(logits - m))))
    return lse - float(logits[target])


def cross_entropy_backward(logits: np.ndarray, target: int) -> np.ndarray:
    """d loss / d logits = softmax(logits) - onehot(target)."""
    d = softmax(np.asarray(logits, dtype=np.float64))
    d[target] -= 1.0
    return d


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over rows and its gradient.

    logits: [n, K], targets: [n] int class ids. Gradient is
    (softmax - onehot) / n, matching the mean reduction.
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets)
    n, k = logits.shape
    if targets.shape != (n,):
        raise ValueError(f"targets shape {targets.shape} does not match {n} rows")
    if n == 0:
        raise ValueError("cross-entropy over zero rows")
    if targets.min() < 0 or targets.max() >= k:
        raise ValueError("target class id out of range")
    logp = log_softmax(logits, axis=-1)
    loss = -float(np.mean(logp[np.arange(n), targets]))
    d = np.exp(logp)
    d[np.arange(n), targets] -= 1.0
    return loss, d / n


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean squared error over all entries."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise ValueError("mse over zero elements")
    return float(np.mean((pred - target) ** 2))


def mse_backward(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    return 2.0 * (pred - target) / pred.size


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.matmul(a, b)


def matmul_backward(d_out: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of ``a @ b`` for the two layouts used by the model.

    Either both operands carry the same leading batch dims, or ``b`` is a
    plain 2-D weight shared across a stacked ``a`` (gradient summed over
    the stack).
    """
    if b.ndim == 2 and a.ndim >= 2:
        da = np.matmul(d_out, b.T)
        db = np.matmul(a.reshape(-1, a.shape[-1]).T, d_out.reshape(-1, d_out.shape[-1]))
        return da, db
    if a.ndim == b.ndim:
        da = np.matmul(d_out, np.swapaxes(b, -1, -2))
        db = np.matmul(np.swapaxes(a, -1, -2), d_out)
        return da, db
    raise ValueError(f"unsupported operand ranks: {a.ndim} and {b.ndim}")


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = LAYER_NORM_EPS) -> np.ndarray:
    """Normalize the last axis to zero mean and unit variance, then scale and shift."""
    mu = np.mean(x, axis=-1, keepdims=True)
    var = np.var(x, axis=-1, keepdims=True)
    xhat = (x - mu) / np.sqrt(var + eps)
    return gamma * xhat + beta


def layer_norm_backward(
    d_out: np.ndarray, x: np.ndarray, gamma: np.ndarray, eps: float = LAYER_NORM_EPS
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of layer_norm wrt input, gamma, beta.

    With xhat the normalized input and m the last-axis width:
    dx = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat)).
    """
    mu = np.mean(x, axis=-1, keepdims=True)
    var = np.var(x, axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv_std
    reduce_axes = tuple(range(d_out.ndim - 1))
    d_gamma = np.sum(d_out * xhat, axis=reduce_axes)
    d_beta = np.sum(d_out, axis=reduce_axes)
    d_xhat = d_out * gamma
    dx = inv_std * (
        d_xhat
        - np.mean(d_xhat, axis=-1, keepdims=True)
        - xhat * np.mean(d_xhat * xhat, axis=-1, keepdims=True)
    )
    return dx, d_gamma, d_beta


def gelu(x: np.ndarray) -> np.ndarray:
    """GELU, tanh approximation: 0.5 x (1 + tanh(c (x + 0.044715 x^3)))."""
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * x * (1.0 + np.tanh(_GELU_C * (x + _GELU_A * x**3)))


def gelu_backward(d_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    t = np.tanh(_GELU_C * (x + _GELU_A * x**3))
    local = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * _GELU_C * (1.0 + 3.0 * _GELU_A * x**2)
    return d_out * local


def embedding_lookup(table: np.ndarray, ids: np.ndarray) -> np.ndarray:
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ValueError(f"embedding id out of range for table of {table.shape[0]} rows")
    return table[ids]


def embedding_lookup_backward(d_out: np.ndarray, ids: np.ndarray, num_rows: int) -> np.ndarray:
    """Scatter-add of output gradients onto the rows that were looked up."""
    d_table = np.zeros((num_rows, d_out.shape[-1]), dtype=np.float64)
    np.add.at(d_table, np.asarray(ids).reshape(-1), d_out.reshape(-1, d_out.shape[-1]))
    return d_table


@dataclass
class GradCheckReport:
    name: str
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def grad_check(
    f,
    theta: np.ndarray,
    name: str = "theta",
    h: float = 1e-5,
    tol: float = 1e-4,
    n_coords: int | None = None,
    rng: Rng | None = None,
) -> GradCheckReport:
    """Compare an analytic gradient against central finite differences.

    ``f(theta) -> (loss, grad)`` with grad shaped like theta. Relative error
    per coordinate is |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-8); the report
    carries the max over the checked coordinates. When ``n_coords`` is given
    and smaller than theta.size a random subset is checked.
    """
    theta = np.asarray(theta, dtype=np.float64)
    loss, grad = f(theta)
    if not math.isfinite(loss):
        raise ValueError("loss is not finite at the evaluation point")
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != theta.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match theta {theta.shape}")
    ensure_finite(grad, "analytic gradient")

    size = theta.size
    if n_coords is None or n_coords >= size:
        coords = np.arange(size)
    else:
        rng = rng or Rng(0)
        coords = np.unique(rng.integers(size, n_coords))

    flat = theta.reshape(-1)
    g_flat = grad.reshape(-1)
    max_rel = 0.0
    for c in coords:
        orig = flat[c]
        flat[c] = orig + h
        lp = f(theta)[0]
        flat[c] = orig - h
        lm = f(theta)[0]
        flat[c] = orig
        g_fd = (lp - lm) / (2.0 * h)
        g_ad = g_flat[c]
        rel = abs(g_ad - g_fd) / max(abs(g_ad), abs(g_fd), 1e-8)
        if rel > max_rel:
            max_rel = rel
    return GradCheckReport(name=name, max_rel_error=max_rel, tolerance=tol)
