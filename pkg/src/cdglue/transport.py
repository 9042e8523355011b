"""Exact discrete optimal transport and curvature-dimension checks.

The transport solver is an exact LP (HiGHS simplex family) on the squared
distance cost, never an entropic approximation: curvature checks need exact
optimal plans to avoid false violations.  A passing CD check certifies the
existential definition via the constructed interpolation; a failing one means
no certificate was found along this interpolation, not a disproof.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from .coefficients import sigma_grid, tau_coeff, tau_grid
from .errors import CdglueError
from .report import CheckReport
from .space import (
    DiscreteGeodesic,
    MetricMeasureSpace,
    as_weight_vector,
    geodesic_between,
    renyi_entropy,
)

MARGINAL_TOL = 1e-9
DEFAULT_T_GRID = np.arange(17) / 16.0


class MarginalMismatch(CdglueError):
    pass


class NoGeodesicFound(CdglueError):
    pass


@dataclass
class Coupling:
    """A transport plan between two measures on the same space."""

    plan: np.ndarray
    source: np.ndarray
    target: np.ndarray

    def validate(self, tol: float = MARGINAL_TOL) -> None:
        rows = self.plan.sum(axis=1)
        cols = self.plan.sum(axis=0)
        if np.abs(rows - self.source).max() > tol:
            raise MarginalMismatch("row sums do not match the source marginal")
        if np.abs(cols - self.target).max() > tol:
            raise MarginalMismatch("column sums do not match the target marginal")

    def support(self) -> list[tuple[int, int, float]]:
        ii, jj = np.nonzero(self.plan)
        return [(int(i), int(j), float(self.plan[i, j])) for i, j in zip(ii, jj)]


@dataclass
class Interpolation:
    """Measures along a transport path, one weight vector per grid time."""

    times: np.ndarray
    measures: np.ndarray  # shape (len(times), n)
    max_step: float = 0.0

    def measure_at(self, t: float) -> np.ndarray:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-12:
            raise KeyError(f"time {t} not on the interpolation grid")
        return self.measures[k]


def optimal_coupling(
    space: MetricMeasureSpace, mu0, mu1
) -> tuple[Coupling, float]:
    """Exact optimal coupling for the squared-distance cost, plus W2."""
    a = as_weight_vector(space, mu0)
    b = as_weight_vector(space, mu1)
    if a.min() < 0 or b.min() < 0:
        raise MarginalMismatch("measures must be nonnegative")
    if abs(a.sum() - 1.0) > 1e-6 or abs(b.sum() - 1.0) > 1e-6:
        raise MarginalMismatch(
            f"measures must be probabilities (sums {a.sum()}, {b.sum()})"
        )
    si = np.nonzero(a)[0]
    sj = np.nonzero(b)[0]
    m, k = len(si), len(sj)
    cost = space.dist[np.ix_(si, sj)] ** 2

    if m == 1:
        plan_s = b[sj][None, :]
    elif k == 1:
        plan_s = a[si][:, None]
    else:
        c = cost.reshape(-1)
        rows, cols, vals = [], [], []
        for p in range(m):
            rows += [p] * k
            cols += list(range(p * k, (p + 1) * k))
            vals += [1.0] * k
        for q in range(k):
            rows += [m + q] * m
            cols += list(range(q, m * k, k))
            vals += [1.0] * m
        A_eq = coo_matrix((vals, (rows, cols)), shape=(m + k, m * k))
        b_eq = np.concatenate([a[si], b[sj]])
        res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        if res.status != 0:
            raise CdglueError(f"transport LP failed: {res.message}")
        plan_s = np.maximum(res.x.reshape(m, k), 0.0)

    plan = np.zeros((space.n, space.n))
    plan[np.ix_(si, sj)] = plan_s
    coupling = Coupling(plan, a, b)
    coupling.validate(tol=1e-7)
    w2 = math.sqrt(max(float((plan_s * cost).sum()), 0.0))
    return coupling, w2


def displacement_interpolation(
    space: MetricMeasureSpace,
    coupling: Coupling,
    t_grid=None,
    max_gap: float | None = None,
) -> Interpolation:
    """Snap each transported atom onto a discrete geodesic at every time.

    For a pair (x, y) carrying mass, the mass at time t sits at the chain
    node nearest to arclength t*d(x,y) (ties to the lowest id).  Endpoint
    slices reproduce the marginals exactly.
    """
    ts = np.asarray(DEFAULT_T_GRID if t_grid is None else t_grid, dtype=float)
    support = coupling.support()
    chains: dict[tuple[int, int], DiscreteGeodesic] = {}
    max_step = 0.0
    for i, j, _ in support:
        if (i, j) in chains or i == j:
            continue
        chain = geodesic_between(space, space.ids[i], space.ids[j])
        if max_gap is not None and chain.max_step > max_gap:
            raise NoGeodesicFound(
                f"no geodesic with resolution {max_gap} between "
                f"{space.ids[i]!r} and {space.ids[j]!r}"
            )
        chains[(i, j)] = chain
        max_step = max(max_step, chain.max_step)

    measures = np.zeros((len(ts), space.n))
    for i, j, mass in support:
        if i == j:
            measures[:, i] += mass
            continue
        chain = chains[(i, j)]
        arcs = chain.arclengths
        node_idx = [space.index(pid) for pid in chain.ids]
        for ti, t in enumerate(ts):
            target = t * arcs[-1]
            k = int(np.searchsorted(arcs, target))
            best = None
            for cand in (k - 1, k, k + 1):
                if 0 <= cand < len(arcs):
                    key = (abs(arcs[cand] - target), chain.ids[cand])
                    if best is None or key < best[0]:
                        best = (key, cand)
            measures[ti, node_idx[best[1]]] += mass
    return Interpolation(ts, measures, max_step)


def _coef_grid(variant: str, K: float, N: float, t, theta):
    if variant == "full":
        return tau_grid(K, N, t, theta)
    if variant == "reduced":
        return sigma_grid(K, N, t, theta)
    raise ValueError(f"unknown CD variant {variant!r}")


def check_cd(
    space: MetricMeasureSpace,
    K: float,
    N: float,
    mu0,
    mu1,
    t_grid=None,
    variant: str = "reduced",
    C_tol: float = 1.0,
    coupling: tuple[Coupling, float] | None = None,
) -> CheckReport:
    """Verify the curvature-dimension entropy inequality along the constructed
    interpolation; coefficients are tau (full) or sigma (reduced).

    The default tolerance is C_tol * sqrt(h) where h is the largest chain step
    used while snapping mass, the known scale of the placement error.
    """
    started = time.perf_counter()
    a = as_weight_vector(space, mu0)
    b = as_weight_vector(space, mu1)
    m = space.weight
    for vec in (a, b):
        if ((vec > 0) & (m <= 0)).any():
            raise MarginalMismatch("input measure not absolutely continuous")
    cpl, _ = optimal_coupling(space, a, b) if coupling is None else coupling
    ts = np.asarray(DEFAULT_T_GRID if t_grid is None else t_grid, dtype=float)
    interp = displacement_interpolation(space, cpl, ts)

    support = cpl.support()
    ii = np.array([i for i, _, _ in support])
    jj = np.array([j for _, j, _ in support])
    pi = np.array([p for _, _, p in support])
    theta = space.dist[ii, jj]
    rho0 = a[ii] / m[ii]
    rho1 = b[jj] / m[jj]

    worst = math.inf
    witness = None
    for t in ts:
        s_t = renyi_entropy(interp.measure_at(t), space, N)
        ca, ma = _coef_grid(variant, K, N, 1.0 - t, theta)
        cb, mb = _coef_grid(variant, K, N, t, theta)
        if (ma | mb).any():
            rhs = -math.inf
        else:
            rhs = -float(
                ((ca * rho0 ** (-1.0 / N) + cb * rho1 ** (-1.0 / N)) * pi).sum()
            )
        margin = rhs - s_t
        if margin < worst:
            worst = margin
            witness = {"t": float(t), "entropy": s_t, "bound": rhs}
    tol = C_tol * math.sqrt(interp.max_step) if interp.max_step > 0 else C_tol * 1e-9
    return CheckReport.from_margin(
        f"check-cd[{variant}]", worst, tol, witness, started=started
    )


def mcp_scalar_test(
    N: float, theta: float, t_grid=None, tol: float = 1e-12
) -> CheckReport:
    """Scalar measure-contraction test: t^N >= tau_{N,N+1}^{(t)}(theta)^{N+1}
    for every t on the grid."""
    started = time.perf_counter()
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    ts = np.asarray(DEFAULT_T_GRID if t_grid is None else t_grid, dtype=float)
    worst = math.inf
    witness = None
    for t in ts:
        coeff = tau_coeff(N, N + 1.0, float(t), theta)
        lhs = float(t) ** N
        rhs = coeff.power(N + 1.0)
        margin = -math.inf if rhs.infinite else lhs - rhs.value
        if margin < worst:
            worst = margin
            witness = {"t": float(t), "theta": theta}
    return CheckReport.from_margin("mcp-scalar", worst, tol, witness, started=started)


def mcp_threshold(N: float, precision: float = 1e-6, t_grid=None) -> float:
    """Largest theta passing the scalar test, located by bisection.

    The passing set is a bounded interval starting at zero, so bisection on
    [0, pi] converges; a denser default t-grid than the scalar test's is used
    because more constraints can only shrink the passing set.
    """
    if precision <= 0:
        raise ValueError("precision must be positive")
    ts = np.arange(257) / 256.0 if t_grid is None else np.asarray(t_grid, float)
    lo, hi = 0.0, math.pi
    while hi - lo > precision:
        mid = 0.5 * (lo + hi)
        if mcp_scalar_test(N, mid, ts).passed:
            lo = mid
        else:
            hi = mid
    return lo
