"""Discrete one-dimensional localisation along a 1-Lipschitz guide.

The guide's transport relation pairs points that saturate the Lipschitz
bound; maximal chains of mutually related non-branching points are the
needles.  Disintegration assigns each point's weight to its needle and turns
it into a density against arclength; the per-needle curvature check is a
sigma-concavity inequality of the density.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .coefficients import CUTOFF_GUARD, _sin_k_arr
from .errors import CdglueError
from .report import CheckReport
from .space import MetricMeasureSpace, as_value_vector, second_differences

RELATION_TOL = 1e-9


class NotOneLipschitz(CdglueError):
    pass


class OverlappingChains(CdglueError):
    pass


class NonPositiveDensity(CdglueError):
    pass


class SideConditionFailed(CdglueError):
    pass


@dataclass
class GuideFunction:
    """Per-point values of a 1-Lipschitz function on a space."""

    space: MetricMeasureSpace
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = as_value_vector(self.space, self.values)

    @classmethod
    def from_distance(cls, space: MetricMeasureSpace, pid: str) -> "GuideFunction":
        return cls(space, space.dist[space.index(str(pid))].copy())

    def lipschitz_defect(self) -> float:
        """Worst excess of |u(x)-u(y)| over d(x,y); <= 0 means 1-Lipschitz."""
        du = np.abs(self.values[:, None] - self.values[None, :])
        defect = du - self.space.dist
        np.fill_diagonal(defect, -np.inf)
        return float(defect.max()) if self.space.n > 1 else 0.0

    def require_lipschitz(self, tol: float = RELATION_TOL) -> None:
        defect = self.lipschitz_defect()
        if defect > tol:
            raise NotOneLipschitz(f"guide exceeds the Lipschitz bound by {defect}")


@dataclass
class NeedleChain:
    """An ordered transport ray: ids, arclengths, and after disintegration a
    positive density per node plus the chain's quotient weight."""

    ids: list[str]
    arclengths: np.ndarray
    density: np.ndarray | None = None
    q: float | None = None

    def to_profile(self) -> "DensityProfile":
        if self.density is None:
            raise ValueError("chain has no density yet; run disintegrate first")
        return DensityProfile(self.arclengths.copy(), self.density.copy())


@dataclass
class DensityProfile:
    """Values on a strictly increasing grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, float)
        self.values = np.asarray(self.values, float)
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise ValueError("grid and values must be 1d arrays of equal length")
        if (np.diff(self.grid) <= 0).any():
            raise ValueError("grid must be strictly increasing")
        if not np.isfinite(self.values).all():
            raise ValueError("values must be finite")

    @property
    def max_step(self) -> float:
        return float(np.diff(self.grid).max()) if len(self.grid) > 1 else 0.0


def _relation_matrix(
    space: MetricMeasureSpace, u: GuideFunction, tol: float
) -> np.ndarray:
    du = u.values[:, None] - u.values[None, :]
    gamma = np.abs(du - space.dist) <= tol
    np.fill_diagonal(gamma, False)
    return gamma


def transport_relation(
    space: MetricMeasureSpace, u: GuideFunction, tol: float = RELATION_TOL
) -> set[tuple[str, str]]:
    """Ordered pairs (x, y), x != y, with u(x) - u(y) = d(x, y)."""
    u.require_lipschitz(tol)
    gamma = _relation_matrix(space, u, tol)
    ii, jj = np.nonzero(gamma)
    return {(space.ids[i], space.ids[j]) for i, j in zip(ii, jj)}


def extract_chains(
    space: MetricMeasureSpace, u: GuideFunction, tol: float = RELATION_TOL
) -> tuple[list[NeedleChain], list[str], list[str]]:
    """Maximal needle chains, branch points, and unused points.

    A transport point is branching when two of its relation neighbors are not
    mutually related; branch points are excluded from chains and reported.
    Chains are the relation's equivalence classes on the remaining points,
    ordered by decreasing guide value (single-point classes have no length and
    are reported as unused).
    """
    u.require_lipschitz(tol)
    gamma = _relation_matrix(space, u, tol)
    rel = gamma | gamma.T
    in_transport = rel.any(axis=1)
    rel_closed = rel | np.eye(space.n, dtype=bool)

    branch = np.zeros(space.n, dtype=bool)
    for x in np.nonzero(in_transport)[0]:
        nbrs = np.nonzero(rel[x])[0]
        sub = rel_closed[np.ix_(nbrs, nbrs)]
        if not sub.all():
            branch[x] = True

    keep = in_transport & ~branch
    # connected components of the relation restricted to non-branching points
    comp = -np.ones(space.n, dtype=int)
    n_comp = 0
    for x in np.nonzero(keep)[0]:
        if comp[x] >= 0:
            continue
        stack = [x]
        comp[x] = n_comp
        while stack:
            y = stack.pop()
            for z in np.nonzero(rel[y] & keep)[0]:
                if comp[z] < 0:
                    comp[z] = n_comp
                    stack.append(z)
        n_comp += 1

    chains = []
    stranded: list[int] = []
    for c in range(n_comp):
        members = np.nonzero(comp == c)[0]
        if len(members) < 2:
            stranded.extend(int(x) for x in members)
            continue
        order = sorted(members, key=lambda k: (-u.values[k], space.ids[k]))
        ids = [space.ids[k] for k in order]
        arcs = [0.0]
        for a, b in zip(order[:-1], order[1:]):
            arcs.append(arcs[-1] + space.dist[a, b])
        chains.append(NeedleChain(ids, np.array(arcs)))
    chains.sort(key=lambda ch: ch.ids[0])

    branch_ids = [space.ids[k] for k in np.nonzero(branch)[0]]
    unused = ~in_transport
    unused_ids = sorted(
        [space.ids[k] for k in np.nonzero(unused)[0]]
        + [space.ids[k] for k in stranded]
    )
    return chains, branch_ids, unused_ids


def disintegrate(
    space: MetricMeasureSpace, chains: list[NeedleChain]
) -> list[NeedleChain]:
    """Assign each point's weight to its chain and form arclength densities.

    Node cells follow the midpoint rule (half the neighbor gaps, half-cells at
    the ends); the density is node weight / cell length and q is the chain's
    total weight, so the normalized conditional density is density / q.
    """
    seen: set[str] = set()
    out = []
    for chain in chains:
        dup = seen.intersection(chain.ids)
        if dup:
            raise OverlappingChains(f"points on multiple chains: {sorted(dup)[:5]}")
        seen.update(chain.ids)
        w = np.array([space.weight[space.index(pid)] for pid in chain.ids])
        r = chain.arclengths
        gaps = np.diff(r)
        cells = np.empty(len(r))
        cells[0] = gaps[0] / 2.0
        cells[-1] = gaps[-1] / 2.0
        if len(r) > 2:
            cells[1:-1] = (r[2:] - r[:-2]) / 2.0
        out.append(
            NeedleChain(
                list(chain.ids), r.copy(), density=w / cells, q=float(w.sum())
            )
        )
    return out


def check_needle_density(
    profile: DensityProfile | NeedleChain,
    K: float,
    N: float,
    C_tol: float = 1.0,
) -> CheckReport:
    """Per-needle curvature check of a positive density.

    With v = density^{1/(N-1)} and kappa = K/(N-1), verifies over all grid
    triples r_i < r_j < r_k that
        v_j >= [sin_kappa(r_k - r_j) * v_i + sin_kappa(r_j - r_i) * v_k]
               / sin_kappa(r_k - r_i),
    which is the sigma-combination of the endpoint values.  Triples whose
    span reaches the model diameter make the bound infinite and fail.
    Tolerance is C_tol * h^2 for the largest grid step h.
    """
    started = time.perf_counter()
    if isinstance(profile, NeedleChain):
        profile = profile.to_profile()
    if N <= 1:
        raise ValueError(f"needle check requires N > 1, got {N}")
    if (profile.values <= 0).any():
        k = int(np.argmax(profile.values <= 0))
        raise NonPositiveDensity(
            f"density must be positive, value {profile.values[k]} at grid index {k}"
        )
    r = profile.grid
    n = len(r)
    kappa = K / (N - 1.0)
    v = profile.values ** (1.0 / (N - 1.0))
    cut = math.pi / math.sqrt(kappa) if kappa > 0 else math.inf

    diffs = r[None, :] - r[:, None]
    S = _sin_k_arr(kappa, np.where(diffs > 0, diffs, 1.0))

    worst = math.inf
    witness = None
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    for i in range(n - 2):
        span = diffs[i]  # r - r_i
        # bound[j, k] = (S[j,k]*v_i + S[i,j]*v_k) / S[i,k]
        bound = (S * v[i] + S[i][:, None] * v[None, :]) / S[i][None, :]
        margins = v[:, None] - bound
        valid = upper.copy()
        valid[: i + 1, :] = False
        valid[:, : i + 1] = False
        if kappa > 0:
            blown = valid & (span[None, :] >= cut - CUTOFF_GUARD)
            if blown.any():
                j, k = np.unravel_index(int(np.argmax(blown)), blown.shape)
                return CheckReport.from_margin(
                    "needle-density",
                    -math.inf,
                    C_tol * profile.max_step**2,
                    {"r0": float(r[i]), "rt": float(r[j]), "r1": float(r[k])},
                    started=started,
                )
        margins = np.where(valid, margins, math.inf)
        k_flat = int(margins.argmin())
        j, k = np.unravel_index(k_flat, margins.shape)
        if margins[j, k] < worst:
            worst = float(margins[j, k])
            witness = {"r0": float(r[i]), "rt": float(r[j]), "r1": float(r[k])}
    if not math.isfinite(worst):
        worst = 0.0
    tol = C_tol * profile.max_step**2
    return CheckReport.from_margin(
        "needle-density", worst, tol, witness, started=started
    )


def _fit_slope(rs: np.ndarray, vs: np.ndarray) -> float:
    rbar, vbar = rs.mean(), vs.mean()
    return float(((rs - rbar) * (vs - vbar)).sum() / ((rs - rbar) ** 2).sum())


def _side_condition(
    profile: DensityProfile, k: float, C: float, label: str
) -> None:
    if len(profile.grid) < 3:
        return
    d2 = second_differences(profile.values, profile.grid)
    resid = d2 + k * profile.values[1:-1]
    tol = C * profile.max_step**2 * max(1.0, float(np.abs(profile.values).max()))
    if resid.max() > tol:
        j = int(resid.argmax())
        raise SideConditionFailed(
            f"{label} profile violates u'' <= -k*u at grid index {j + 1} "
            f"(residual {resid[j]:.3g} > tol {tol:.3g})"
        )


def check_kink(
    u_left: DensityProfile,
    u_right: DensityProfile,
    c: float,
    k: float,
    slope_tol: float | None = None,
    side_C: float = 10.0,
) -> CheckReport:
    """Concave-kink test at a junction of two one-sided profiles.

    Both sides must satisfy u'' <= -k*u away from the junction (checked
    first); the junction passes iff the left slope estimate dominates the
    right one.  Slopes come from least-squares lines through the three grid
    points nearest the junction on each side.
    """
    started = time.perf_counter()
    if len(u_left.grid) < 3 or len(u_right.grid) < 3:
        raise ValueError("each side needs at least 3 grid points")
    if u_left.grid[-1] > c + RELATION_TOL or u_right.grid[0] < c - RELATION_TOL:
        raise ValueError("left profile must end at the junction, right must start there")
    _side_condition(u_left, k, side_C, "left")
    _side_condition(u_right, k, side_C, "right")

    slope_left = _fit_slope(u_left.grid[-3:], u_left.values[-3:])
    slope_right = _fit_slope(u_right.grid[:3], u_right.values[:3])
    if slope_tol is None:
        h = float(np.diff(u_left.grid[-3:]).max() + np.diff(u_right.grid[:3]).max())
        slope_tol = 4.0 * h
    margin = slope_left - slope_right
    witness = {"c": float(c), "slope_left": slope_left, "slope_right": slope_right}
    return CheckReport.from_margin(
        "kink", margin, slope_tol, witness, started=started
    )
