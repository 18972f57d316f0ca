"""Dense numeric kernels shared by the model and the order-selection test:
matrix utilities, ELU, masked softmax cross-entropy, Adam, and the
chi-squared CDF via the regularized lower incomplete gamma function.

Matrices are plain float64 numpy arrays. Everything here is deterministic
for a fixed BLAS thread configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_EPS = 1e-15
_MAX_ITER = 1_000_000
_FPMIN = 1e-300

# Beyond this the chi-squared CDF switches to the Wilson-Hilferty normal
# approximation; the gamma series converges too slowly for huge shape values.
WILSON_HILFERTY_DOF = 10**6


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Shape-checked dense matrix product."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-D arrays, got {a.ndim}-D and {b.ndim}-D")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch: {a.shape} @ {b.shape}")
    return a @ b


def elu(x):
    """Exponential linear unit with alpha=1: x for x > 0, exp(x)-1 otherwise."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x > 0, x, np.expm1(x))
    return float(out) if out.ndim == 0 else out


def elu_grad(x):
    """Derivative of `elu` at the pre-activation x."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x > 0, 1.0, np.exp(x))
    return float(out) if out.ndim == 0 else out


def softmax_cross_entropy(
    logits: np.ndarray, labels: np.ndarray, mask: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean negative log-softmax over the masked rows.

    `mask` is a boolean row selector or an integer index array. Returns the
    scalar loss and its gradient with respect to the logits (zero outside
    the mask). Row-max subtraction keeps the exponentials bounded.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    mask = np.asarray(mask)
    rows = np.flatnonzero(mask) if mask.dtype == bool else mask.astype(int)
    if rows.size == 0:
        raise ValueError("empty mask")
    z = logits[rows] - logits[rows].max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1, keepdims=True))
    log_probs = z - log_norm
    picked = labels[rows]
    n = rows.size
    loss = -float(log_probs[np.arange(n), picked].mean())
    grad_rows = np.exp(log_probs)
    grad_rows[np.arange(n), picked] -= 1.0
    grad = np.zeros_like(logits)
    grad[rows] = grad_rows / n
    return loss, grad


@dataclass
class AdamState:
    """Adam accumulators for a named collection of parameter matrices."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]
) -> dict[str, np.ndarray]:
    """One Adam update with bias correction; returns new parameter arrays
    and advances the accumulators in `state`."""
    state.step += 1
    t = state.step
    updated = {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name}")
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        state.m[name] = m
        state.v[name] = v
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        updated[name] = p - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return updated


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    """Weight matrix of shape (fan_out, fan_in), uniform in
    +-sqrt(6 / (fan_in + fan_out))."""
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def _lower_gamma_series(a: float, x: float) -> float:
    # P(a, x) by series expansion, reliable for x < a + 1.
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))

def _upper_gamma_cf(a: float, x: float) -> float:
    # Q(a, x) by modified Lentz continued fraction, reliable for x >= a + 1.
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_lower_gamma(a: float, x: float) -> float:
    """P(a, x), the regularized lower incomplete gamma function."""
    if a <= 0:
        raise ValueError("shape parameter must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        p = _lower_gamma_series(a, x)
    else:
        p = 1.0 - _upper_gamma_cf(a, x)
    return min(max(p, 0.0), 1.0)


def _standard_normal_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def chi_squared_cdf(x: float, dof: int) -> float:
    """P(X <= x) for X chi-squared with `dof` degrees of freedom.

    Uses P(dof/2, x/2); for dof above WILSON_HILFERTY_DOF the cube-root
    normal approximation of Wilson and Hilferty is used instead.
    """
    if dof < 1:
        raise ValueError("dof must be >= 1")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0.0:
        return 0.0
    if dof > WILSON_HILFERTY_DOF:
        mean = 1.0 - 2.0 / (9.0 * dof)
        sd = math.sqrt(2.0 / (9.0 * dof))
        z = ((x / dof) ** (1.0 / 3.0) - mean) / sd
        return _standard_normal_cdf(z)
    return regularized_lower_gamma(dof / 2.0, x / 2.0)
