"""Finite metric measure spaces and the checks that live directly on them.

A space is a list of opaque point ids, a symmetric distance matrix and a
nonnegative weight per point (the reference measure), with an optional set of
declared boundary ids.  Discrete geodesics are id chains whose arclength
increments match the pairwise distances.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .coefficients import md_k, pi_k
from .errors import CdglueError
from .report import CheckReport

METRIC_TOL = 1e-9
GEODESIC_TOL = 1e-6


class DisconnectedGraph(CdglueError):
    pass


class DisconnectedSubset(CdglueError):
    pass


class AbsoluteContinuityViolation(CdglueError):
    pass


class PerimeterBoundViolated(CdglueError):
    pass


@dataclass
class MetricMeasureSpace:
    ids: list[str]
    dist: np.ndarray
    weight: np.ndarray
    boundary_ids: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.ids = [str(i) for i in self.ids]
        self.dist = np.asarray(self.dist, dtype=float)
        self.weight = np.asarray(self.weight, dtype=float)
        n = len(self.ids)
        if len(set(self.ids)) != n:
            raise ValueError("point ids must be unique")
        if self.dist.shape != (n, n):
            raise ValueError(f"dist must be {n}x{n}, got {self.dist.shape}")
        if self.weight.shape != (n,):
            raise ValueError(f"weight must have length {n}")
        self._index = {pid: k for k, pid in enumerate(self.ids)}
        unknown = [b for b in self.boundary_ids if b not in self._index]
        if unknown:
            raise ValueError(f"boundary ids not in space: {unknown}")
        self.boundary_ids = [str(b) for b in self.boundary_ids]

    @property
    def n(self) -> int:
        return len(self.ids)

    def index(self, pid: str) -> int:
        try:
            return self._index[pid]
        except KeyError:
            raise KeyError(f"unknown point id {pid!r}") from None

    def d(self, a: str, b: str) -> float:
        return float(self.dist[self.index(a), self.index(b)])

    @property
    def total_mass(self) -> float:
        return float(self.weight.sum())

    def boundary_indices(self) -> list[int]:
        return [self.index(b) for b in self.boundary_ids]


def as_weight_vector(space: MetricMeasureSpace, mu) -> np.ndarray:
    """Coerce a measure given as array or id->mass mapping to a full vector."""
    if isinstance(mu, dict):
        vec = np.zeros(space.n)
        for pid, mass in mu.items():
            vec[space.index(str(pid))] = float(mass)
        return vec
    vec = np.asarray(mu, dtype=float)
    if vec.shape != (space.n,):
        raise ValueError(f"measure must have length {space.n}, got {vec.shape}")
    return vec.copy()


def as_value_vector(space: MetricMeasureSpace, values) -> np.ndarray:
    """Coerce a function given as array or id->value mapping; mappings must
    cover every point."""
    if isinstance(values, dict):
        missing = [pid for pid in space.ids if pid not in values and str(pid) not in values]
        if missing:
            raise ValueError(f"values missing for points: {missing[:5]}")
        return np.array([float(values[pid]) for pid in space.ids])
    vec = np.asarray(values, dtype=float)
    if vec.shape != (space.n,):
        raise ValueError(f"values must have length {space.n}, got {vec.shape}")
    return vec.copy()


@dataclass
class DiscreteGeodesic:
    """An ordered id chain with cumulative arclengths.

    Consecutive increments equal the pairwise distances by construction; the
    total length must match dist(first, last) up to ``GEODESIC_TOL`` so the
    chain is an honest (epsilon-)geodesic.
    """

    ids: list[str]
    arclengths: np.ndarray

    @classmethod
    def from_ids(
        cls, space: MetricMeasureSpace, ids: list[str], tol: float = GEODESIC_TOL
    ) -> "DiscreteGeodesic":
        ids = [str(i) for i in ids]
        if len(ids) < 1:
            raise ValueError("geodesic needs at least one node")
        arcs = [0.0]
        for a, b in zip(ids[:-1], ids[1:]):
            arcs.append(arcs[-1] + space.d(a, b))
        arcs_arr = np.array(arcs)
        if len(ids) >= 2:
            direct = space.d(ids[0], ids[-1])
            if abs(arcs_arr[-1] - direct) > tol:
                raise ValueError(
                    f"chain is not a geodesic: length {arcs_arr[-1]} vs "
                    f"d(first,last)={direct}"
                )
        return cls(ids, arcs_arr)

    @property
    def length(self) -> float:
        return float(self.arclengths[-1])

    def steps(self) -> np.ndarray:
        return np.diff(self.arclengths)

    @property
    def max_step(self) -> float:
        st = self.steps()
        return float(st.max()) if st.size else 0.0


def validate_space(space: MetricMeasureSpace, tol: float = METRIC_TOL) -> CheckReport:
    """Check the metric-measure axioms; witness is the worst-violating spot."""
    started = time.perf_counter()
    D, w = space.dist, space.weight
    n = space.n
    worst = 0.0
    witness: dict | None = None

    diag = np.abs(np.diag(D))
    if n and diag.max() > worst:
        worst = float(diag.max())
        witness = {"kind": "diagonal", "ids": [space.ids[int(diag.argmax())]]}

    asym = np.abs(D - D.T)
    if n and asym.max() > worst:
        worst = float(asym.max())
        i, j = np.unravel_index(int(asym.argmax()), asym.shape)
        witness = {"kind": "symmetry", "ids": [space.ids[i], space.ids[j]]}

    if n and D.min() < -worst:
        worst = float(-D.min())
        i, j = np.unravel_index(int(D.argmin()), D.shape)
        witness = {"kind": "negative_distance", "ids": [space.ids[i], space.ids[j]]}

    if n and w.min() < -worst:
        worst = float(-w.min())
        witness = {"kind": "negative_weight", "ids": [space.ids[int(w.argmin())]]}

    # worst triangle defect: d(i,k) - d(i,j) - d(j,k) over all j
    for j in range(n):
        defect = D - (D[:, j][:, None] + D[j, :][None, :])
        m = float(defect.max())
        if m > worst:
            worst = m
            i, k = np.unravel_index(int(defect.argmax()), defect.shape)
            witness = {
                "kind": "triangle",
                "ids": [space.ids[i], space.ids[j], space.ids[k]],
            }

    margin = -worst
    notes: list[str] = []
    if space.total_mass <= 0.0:
        margin = -math.inf
        witness = {"kind": "total_weight", "total": space.total_mass}
        notes.append("total weight must be positive")

    return CheckReport.from_margin(
        "validate-space", margin, tol, witness, notes, started
    )


def metric_from_graph(
    nodes: list[str],
    weighted_edges: list[tuple],
    weight=None,
    boundary: list[str] | None = None,
) -> MetricMeasureSpace:
    """Shortest-path completion of a positively weighted connected graph.

    Edge endpoints may be node ids or integer indices into ``nodes``.
    """
    nodes = [str(x) for x in nodes]
    idx = {pid: k for k, pid in enumerate(nodes)}
    n = len(nodes)

    def _resolve(x) -> int:
        if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
            if not 0 <= x < n:
                raise ValueError(f"edge index {x} out of range")
            return int(x)
        return idx[str(x)]

    rows, cols, vals = [], [], []
    for a, b, wgt in weighted_edges:
        if wgt <= 0:
            raise ValueError(f"edge weights must be positive, got {wgt}")
        i, j = _resolve(a), _resolve(b)
        rows += [i, j]
        cols += [j, i]
        vals += [float(wgt), float(wgt)]
    graph = csr_matrix((vals, (rows, cols)), shape=(n, n))
    D = dijkstra(graph, directed=False)
    if np.isinf(D).any():
        raise DisconnectedGraph("graph is not connected")
    np.fill_diagonal(D, 0.0)
    if weight is None:
        weight = np.ones(n)
    return MetricMeasureSpace(nodes, D, np.asarray(weight, float), boundary or [])


def renyi_entropy(mu, space: MetricMeasureSpace, N: float) -> float:
    """N-Renyi entropy of mu relative to the space weights.

    Returns -sum_i rho_i^{1-1/N} m_i with rho_i = mu_i / m_i.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    mu_vec = as_weight_vector(space, mu)
    if mu_vec.min() < 0:
        raise ValueError("measure must be nonnegative")
    m = space.weight
    bad = (mu_vec > 0) & (m <= 0)
    if bad.any():
        pid = space.ids[int(np.argmax(bad))]
        raise AbsoluteContinuityViolation(
            f"measure puts mass on weight-zero point {pid!r}"
        )
    supp = mu_vec > 0
    rho = mu_vec[supp] / m[supp]
    return float(-(rho ** (1.0 - 1.0 / N) * m[supp]).sum())


def intrinsic_submetric(
    space: MetricMeasureSpace,
    subset: list[str],
    r_nn: float,
    allow_disconnected: bool = False,
) -> MetricMeasureSpace:
    """Length metric induced on a subset via its r_nn-neighbor graph.

    Two subset points are joined by an edge iff their ambient distance is at
    most ``r_nn``; the result is the shortest-path metric of that graph.  The
    connectivity radius is a declared knob: discrete subsets carry no
    canonical length structure.
    """
    subset = [str(s) for s in subset]
    if not subset:
        raise ValueError("subset must be nonempty")
    sel = [space.index(s) for s in subset]
    D = space.dist[np.ix_(sel, sel)].copy()
    adj = np.where(D <= r_nn, D, np.inf)
    np.fill_diagonal(adj, 0.0)
    intrinsic = _fw_closure(adj)
    if np.isinf(intrinsic).any() and not allow_disconnected:
        raise DisconnectedSubset(
            f"subset not connected at connectivity radius {r_nn}"
        )
    w = space.weight[sel]
    return MetricMeasureSpace(subset, intrinsic, w)


def _fw_closure(D: np.ndarray) -> np.ndarray:
    """Min-plus transitive closure (vectorized Floyd-Warshall)."""
    D = np.array(D, dtype=float)
    n = D.shape[0]
    for k in range(n):
        np.minimum(D, D[:, k][:, None] + D[k, :][None, :], out=D)
    return D


def second_differences(values: np.ndarray, arcs: np.ndarray) -> np.ndarray:
    """Normalized second differences on a (possibly nonuniform) grid.

    Entry k estimates f''(r_{k+1}) for interior nodes, from the standard
    three-point formula.
    """
    v = np.asarray(values, float)
    r = np.asarray(arcs, float)
    h0 = np.diff(r)[:-1]
    h1 = np.diff(r)[1:]
    fwd = (v[2:] - v[1:-1]) / h1
    bwd = (v[1:-1] - v[:-2]) / h0
    return 2.0 * (fwd - bwd) / (h0 + h1)


def check_alexandrov_comparison(
    space: MetricMeasureSpace,
    kappa: float,
    geodesics: list[DiscreteGeodesic],
    witnesses: list[str],
    C: float = 10.0,
) -> CheckReport:
    """Triangle-comparison check along geodesics against witness points.

    Along each geodesic g and witness y, verifies the second-difference form
    of (md_kappa o d_y o g)'' + kappa * md_kappa(d_y o g) <= 1 with tolerance
    C * h^2.  Requires the perimeter bound d(y,g(0)) + L + d(g(L),y) < 2*pi_k.
    """
    started = time.perf_counter()
    cut = pi_k(kappa)
    worst = math.inf
    witness: dict | None = None
    h_max = 0.0
    for gi, geo in enumerate(geodesics):
        if len(geo.ids) < 3:
            continue
        h_max = max(h_max, geo.max_step)
        for y in witnesses:
            perimeter = space.d(y, geo.ids[0]) + geo.length + space.d(geo.ids[-1], y)
            if cut.is_finite and perimeter >= 2.0 * cut.value:
                raise PerimeterBoundViolated(
                    f"perimeter {perimeter} exceeds 2*pi_kappa for witness {y!r}"
                )
            f = np.array([space.d(y, pid) for pid in geo.ids])
            g = np.array([md_k(kappa, x) for x in f])
            d2 = second_differences(g, geo.arclengths)
            margins = 1.0 - (d2 + kappa * g[1:-1])
            k = int(margins.argmin())
            if margins[k] < worst:
                worst = float(margins[k])
                witness = {
                    "geodesic": gi,
                    "node": geo.ids[k + 1],
                    "witness": y,
                }
    if not math.isfinite(worst):
        worst = 0.0  # no interior node to test
    tol = C * h_max * h_max
    return CheckReport.from_margin(
        "alexandrov-comparison", worst, tol, witness, started=started
    )


def geodesic_between(
    space: MetricMeasureSpace, a: str, b: str, tol: float = METRIC_TOL
) -> DiscreteGeodesic:
    """Deterministic maximal discrete geodesic from a to b.

    Candidates are the points metrically between a and b; the chain greedily
    extends to the nearest candidate aligned with the current node, breaking
    ties by lowest id.
    """
    ia, ib = space.index(str(a)), space.index(str(b))
    if ia == ib:
        return DiscreteGeodesic([space.ids[ia]], np.zeros(1))
    D = space.dist
    total = D[ia, ib]
    da = D[ia]
    db = D[ib]
    between = np.abs(da + db - total) <= tol
    cand = [k for k in np.nonzero(between)[0] if k not in (ia, ib)]
    cand.sort(key=lambda k: (da[k], space.ids[k]))
    chain = [ia]
    arc = 0.0
    cur = ia
    for k in cand:
        if da[k] <= arc + tol:
            continue
        if abs(D[cur, k] - (da[k] - arc)) <= tol:
            chain.append(k)
            cur = k
            arc = da[k]
    chain.append(ib)
    ids = [space.ids[k] for k in chain]
    arcs = [0.0]
    for u, v in zip(chain[:-1], chain[1:]):
        arcs.append(arcs[-1] + D[u, v])
    return DiscreteGeodesic(ids, np.array(arcs))
