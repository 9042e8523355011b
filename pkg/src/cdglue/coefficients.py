"""Model-space trigonometry and distortion coefficients.

The building blocks are the generalized sine/cosine familes cos_k / sin_k
(solutions of v'' + kappa*v = 0), the comparison function md_k (solution of
v'' + kappa*v = 1) and the model diameter pi_k.  On top of them sit the two
distortion coefficients sigma and tau used by every curvature-dimension
inequality in this package.

Sign branches on kappa are exact comparisons against zero, and values at or
within ``CUTOFF_GUARD`` of the positive-curvature cutoff are reported as
+infinity rather than as huge cancellation-polluted floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .extreal import ExtendedReal

# Evaluation this close to the cutoff pi_k is treated as infinite.
CUTOFF_GUARD = 1e-12


@dataclass(frozen=True)
class CurvatureDimension:
    """A curvature bound K paired with a dimension parameter N >= 1."""

    K: float
    N: float

    def __post_init__(self) -> None:
        if not self.N >= 1.0:
            raise ValueError(f"dimension parameter must be >= 1, got {self.N}")


def cos_k(kappa: float, x: float) -> float:
    """Solution of v'' + kappa*v = 0 with v(0) = 1, v'(0) = 0."""
    if kappa < 0:
        return math.cosh(math.sqrt(-kappa) * x)
    if kappa == 0:
        return 1.0
    return math.cos(math.sqrt(kappa) * x)


def sin_k(kappa: float, x: float) -> float:
    """Solution of v'' + kappa*v = 0 with v(0) = 0, v'(0) = 1."""
    if kappa < 0:
        r = math.sqrt(-kappa)
        return math.sinh(r * x) / r
    if kappa == 0:
        return float(x)
    r = math.sqrt(kappa)
    return math.sin(r * x) / r


def md_k(kappa: float, x: float) -> float:
    """Solution of v'' + kappa*v = 1 with v(0) = 0, v'(0) = 0."""
    if kappa == 0:
        return 0.5 * x * x
    return (1.0 - cos_k(kappa, x)) / kappa


def pi_k(kappa: float) -> ExtendedReal:
    """Diameter of the simply connected model surface of curvature kappa."""
    if kappa <= 0:
        return ExtendedReal.infinity()
    return ExtendedReal.of(math.pi / math.sqrt(kappa))


_KINDS = ("cos", "sin", "md", "pi")


def kappa_model(kind: str, kappa: float, x: float = 0.0) -> ExtendedReal:
    """Evaluate one of the model functions; ``pi`` ignores ``x``."""
    if kind not in _KINDS:
        raise ValueError(f"unknown model function {kind!r}, expected one of {_KINDS}")
    if kind == "pi":
        return pi_k(kappa)
    if x < 0:
        raise ValueError(f"{kind}_k requires x >= 0, got {x}")
    fn = {"cos": cos_k, "sin": sin_k, "md": md_k}[kind]
    return ExtendedReal.of(fn(kappa, x))


def _check_t_theta(t: float, theta: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if theta < 0.0:
        raise ValueError(f"theta must be nonnegative, got {theta}")


def sigma_coeff(K: float, N: float, t: float, theta: float) -> ExtendedReal:
    """Distortion coefficient sigma: sin_{K/N}(t*theta) / sin_{K/N}(theta).

    Finite for theta in [0, pi_{K/N}); +infinity at or beyond the cutoff.
    sigma(theta=0) is exactly t.
    """
    _check_t_theta(t, theta)
    if N <= 0:
        raise ValueError(f"sigma requires N > 0, got {N}")
    kappa = K / N
    cut = pi_k(kappa)
    if cut.is_finite and theta >= cut.value - CUTOFF_GUARD:
        return ExtendedReal.infinity()
    if theta == 0.0:
        return ExtendedReal.of(t)
    return ExtendedReal.of(sin_k(kappa, t * theta) / sin_k(kappa, theta))


def tau_coeff(K: float, N: float, t: float, theta: float) -> ExtendedReal:
    """Modified distortion coefficient tau.

    For K > 0 and N = 1 this is theta * infinity (zero when theta = 0); for
    N = 1 otherwise the exponent 1 - 1/N vanishes and tau reduces to t;
    in the generic case tau = t^{1/N} * sigma_{K,N-1}(theta)^{1-1/N}, with
    0 * inf = 0.
    """
    _check_t_theta(t, theta)
    if N < 1:
        raise ValueError(f"tau requires N >= 1, got {N}")
    if K > 0 and N == 1:
        if theta == 0.0:
            return ExtendedReal.of(0.0)
        return ExtendedReal.infinity()
    if N == 1:
        return ExtendedReal.of(t)
    s = sigma_coeff(K, N - 1.0, t, theta)
    return ExtendedReal.of(t ** (1.0 / N)).times(s.power(1.0 - 1.0 / N))


# ---------------------------------------------------------------------------
# vectorized evaluation (values plus explicit infinity masks)
# ---------------------------------------------------------------------------


def _sin_k_arr(kappa: float, x: np.ndarray) -> np.ndarray:
    if kappa < 0:
        r = math.sqrt(-kappa)
        return np.sinh(r * x) / r
    if kappa == 0:
        return np.asarray(x, dtype=float)
    r = math.sqrt(kappa)
    return np.sin(r * x) / r


def sigma_grid(K: float, N: float, t, theta) -> tuple[np.ndarray, np.ndarray]:
    """sigma on broadcast arrays; returns ``(values, infinite_mask)``.

    Entries under the mask are set to NaN and must not be consumed as values.
    """
    if N <= 0:
        raise ValueError(f"sigma requires N > 0, got {N}")
    kappa = K / N
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    t, theta = np.broadcast_arrays(t, theta)
    if kappa > 0:
        cut = math.pi / math.sqrt(kappa)
        inf_mask = theta >= cut - CUTOFF_GUARD
    else:
        inf_mask = np.zeros(theta.shape, dtype=bool)
    safe_theta = np.where((theta == 0.0) | inf_mask, 1.0, theta)
    vals = _sin_k_arr(kappa, t * safe_theta) / _sin_k_arr(kappa, safe_theta)
    vals = np.where(theta == 0.0, t, vals)
    vals = np.where(inf_mask, np.nan, vals)
    return vals, inf_mask


def tau_grid(K: float, N: float, t, theta) -> tuple[np.ndarray, np.ndarray]:
    """tau on broadcast arrays; returns ``(values, infinite_mask)``."""
    if N < 1:
        raise ValueError(f"tau requires N >= 1, got {N}")
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    t, theta = np.broadcast_arrays(t, theta)
    if K > 0 and N == 1:
        inf_mask = theta > 0.0
        vals = np.where(inf_mask, np.nan, 0.0)
        return vals, inf_mask
    if N == 1:
        return t.astype(float).copy(), np.zeros(t.shape, dtype=bool)
    svals, smask = sigma_grid(K, N - 1.0, t, theta)
    expo = 1.0 - 1.0 / N
    vals = t ** (1.0 / N) * np.where(smask, 1.0, svals) ** expo
    # 0 * inf = 0: an infinite sigma is killed by t = 0
    inf_mask = smask & (t > 0.0)
    vals = np.where(smask & (t == 0.0), 0.0, vals)
    vals = np.where(inf_mask, np.nan, vals)
    return vals, inf_mask
