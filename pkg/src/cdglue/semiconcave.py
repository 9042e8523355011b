"""Concavity of scalar fields along geodesics and across glued seams.

Normal directions at boundary points are user-declared chains: a discrete
space carries no canonical space of directions, so the geometry-aware
scenario generators emit them where they are unambiguous.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import CdglueError
from .gluing import GluedSpace, double_space, glue_function
from .report import CheckReport
from .space import (
    DiscreteGeodesic,
    MetricMeasureSpace,
    as_value_vector,
    geodesic_between,
    second_differences,
)


class ChainTooShort(CdglueError):
    pass


class ChainLeavesWrongSide(CdglueError):
    pass


@dataclass
class ScalarField:
    space: MetricMeasureSpace
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = as_value_vector(self.space, self.values)
        self._lipschitz: float | None = None

    @property
    def lipschitz_bound(self) -> float:
        if self._lipschitz is None:
            D = self.space.dist
            dv = np.abs(self.values[:, None] - self.values[None, :])
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(D > 0, dv / np.where(D > 0, D, 1.0), 0.0)
            self._lipschitz = float(ratios.max()) if self.space.n > 1 else 0.0
        return self._lipschitz

    def along(self, geo: DiscreteGeodesic) -> np.ndarray:
        return np.array([self.values[self.space.index(pid)] for pid in geo.ids])


@dataclass
class DirectionalSlope:
    base: str
    chain: DiscreteGeodesic
    slope: float


def check_lambda_concave(
    field: ScalarField,
    geodesics: list[DiscreteGeodesic],
    lam: float,
    C_tol: float = 1.0,
) -> CheckReport:
    """Second differences of the field along each geodesic stay below lam.

    Margins are in second-derivative units; the tolerance C_tol * h is the
    third-order-in-step allowance divided by h^2.
    """
    started = time.perf_counter()
    worst = math.inf
    witness = None
    h_max = 0.0
    for gi, geo in enumerate(geodesics):
        if len(geo.ids) < 3:
            continue
        h_max = max(h_max, geo.max_step)
        d2 = second_differences(field.along(geo), geo.arclengths)
        margins = lam - d2
        k = int(margins.argmin())
        if margins[k] < worst:
            worst = float(margins[k])
            witness = {"geodesic": gi, "node": geo.ids[k + 1]}
    if not math.isfinite(worst):
        worst = 0.0
    tol = C_tol * h_max
    return CheckReport.from_margin(
        "lambda-concavity", worst, tol, witness, started=started
    )


def directional_slope(
    field: ScalarField, pid: str, chain: DiscreteGeodesic, n_fit: int = 5
) -> DirectionalSlope:
    """Forward slope at a point, from a least-squares line through the first
    few chain nodes (at least three)."""
    pid = str(pid)
    if chain.ids[0] != pid:
        raise ValueError(f"chain must start at {pid!r}, starts at {chain.ids[0]!r}")
    if len(chain.ids) < 3:
        raise ChainTooShort("need at least 3 nodes to estimate a slope")
    k = min(max(3, min(n_fit, len(chain.ids))), len(chain.ids))
    rs = chain.arclengths[:k]
    vs = field.along(chain)[:k]
    rbar, vbar = rs.mean(), vs.mean()
    slope = float(((rs - rbar) * (vs - vbar)).sum() / ((rs - rbar) ** 2).sum())
    return DirectionalSlope(pid, chain, slope)


def _side_chain(
    glued: GluedSpace, side: int, seam_qid: str, ids: list[str]
) -> DiscreteGeodesic:
    space = glued.sides[side]
    ids = [str(x) for x in ids]
    entries = dict(glued.provenance[seam_qid])
    if side not in entries:
        raise ChainLeavesWrongSide(f"{seam_qid!r} has no preimage on side {side}")
    if ids[0] != entries[side]:
        raise ChainLeavesWrongSide(
            f"chain must start at the seam preimage {entries[side]!r}, got {ids[0]!r}"
        )
    try:
        return DiscreteGeodesic.from_ids(space, ids)
    except KeyError as exc:
        raise ChainLeavesWrongSide(f"chain leaves side {side}: {exc}") from exc


def check_normal_condition(
    phi0: ScalarField,
    phi1: ScalarField,
    glued: GluedSpace,
    normal_pairs: list[tuple],
    slope_tol: float | None = None,
) -> CheckReport:
    """At each seam point, inward slopes of the two side fields sum to <= 0.

    ``normal_pairs`` entries are (seam quotient id, chain into side 0, chain
    into side 1), chains given as id lists in the side spaces.
    """
    started = time.perf_counter()
    worst = math.inf
    witness = None
    auto_tol = 0.0
    for seam_qid, ids0, ids1 in normal_pairs:
        c0 = _side_chain(glued, 0, str(seam_qid), list(ids0))
        c1 = _side_chain(glued, 1, str(seam_qid), list(ids1))
        s0 = directional_slope(phi0, c0.ids[0], c0).slope
        s1 = directional_slope(phi1, c1.ids[0], c1).slope
        auto_tol = max(auto_tol, 4.0 * (c0.max_step + c1.max_step))
        margin = -(s0 + s1)
        if margin < worst:
            worst = float(margin)
            witness = {"seam": str(seam_qid), "slope0": s0, "slope1": s1}
    if not math.isfinite(worst):
        worst = 0.0
    tol = auto_tol if slope_tol is None else slope_tol
    return CheckReport.from_margin(
        "normal-condition", worst, tol, witness, started=started
    )


def enumerate_geodesics(
    space: MetricMeasureSpace,
    max_pairs: int = 400,
    seed: int = 0,
    min_nodes: int = 3,
) -> list[DiscreteGeodesic]:
    """Deterministic sample of shortest-path chains between point pairs."""
    pairs = [
        (space.ids[i], space.ids[j])
        for i in range(space.n)
        for j in range(i + 1, space.n)
    ]
    if len(pairs) > max_pairs:
        rng = np.random.default_rng(seed)
        keep = rng.choice(len(pairs), size=max_pairs, replace=False)
        pairs = [pairs[k] for k in sorted(keep)]
    out = []
    for a, b in pairs:
        geo = geodesic_between(space, a, b)
        if len(geo.ids) >= min_nodes:
            out.append(geo)
    return out


def _cross_side_geodesics(
    glued: GluedSpace, max_pairs: int, seed: int
) -> list[DiscreteGeodesic]:
    space = glued.space
    side_sets = [
        [qid for qid in space.ids if glued.side_of(qid) == [s]] for s in (0, 1)
    ]
    pairs = [(a, b) for a in side_sets[0] for b in side_sets[1]]
    if len(pairs) > max_pairs:
        rng = np.random.default_rng(seed)
        keep = rng.choice(len(pairs), size=max_pairs, replace=False)
        pairs = [pairs[k] for k in sorted(keep)]
    out = []
    for a, b in pairs:
        geo = geodesic_between(space, a, b)
        if len(geo.ids) >= 3:
            out.append(geo)
    return out


def check_double_semiconcave(
    field: ScalarField,
    lam: float,
    normal_chains: dict[str, list[str]],
    C_tol: float = 1.0,
    slope_tol: float | None = None,
    max_pairs: int = 400,
    seed: int = 0,
) -> CheckReport:
    """Two-route verdict on concavity across the double of a space.

    Route one: lam-concavity along geodesics of the space plus the sign of
    the field's slope along every declared boundary-normal chain.  Route two:
    build the double, lift the field across the seam, and check lam-concavity
    directly on seam-crossing geodesics.  The two routes must agree; the
    report fails on disagreement regardless of the individual verdicts.
    """
    started = time.perf_counter()
    space = field.space
    if not space.boundary_ids:
        raise ValueError("double-semiconcavity needs a declared boundary")
    missing = [b for b in space.boundary_ids if b not in normal_chains]
    if missing:
        raise ValueError(f"normal chains missing for boundary points: {missing}")

    geos = enumerate_geodesics(space, max_pairs=max_pairs, seed=seed)
    concavity = check_lambda_concave(field, geos, lam, C_tol)

    slope_margin = math.inf
    slope_witness = None
    auto_tol = 0.0
    for b in space.boundary_ids:
        chain = DiscreteGeodesic.from_ids(space, normal_chains[b])
        ds = directional_slope(field, b, chain)
        auto_tol = max(auto_tol, 4.0 * chain.max_step)
        if -ds.slope < slope_margin:
            slope_margin = -ds.slope
            slope_witness = {"boundary": b, "slope": ds.slope}
    stol = auto_tol if slope_tol is None else slope_tol
    route_a = concavity.passed and slope_margin >= -stol

    doubled = double_space(space)
    lifted = ScalarField(
        doubled.space, glue_function(field.values, field.values, doubled)
    )
    cross = _cross_side_geodesics(doubled, max_pairs, seed)
    within = enumerate_geodesics(doubled.space, max_pairs=max_pairs, seed=seed)
    direct = check_lambda_concave(lifted, cross + within, lam, C_tol)
    route_b = direct.passed

    agree = route_a == route_b
    # margins shifted by their own tolerances compose under a zero tolerance:
    # the report passes iff both routes pass (and disagreement implies one
    # route failed, so a disagreeing report always fails)
    worst = min(
        concavity.worst_margin + concavity.tolerance,
        slope_margin + stol,
        direct.worst_margin + direct.tolerance,
    )
    notes = []
    if not agree:
        notes.append("routes disagree: characterization vs direct double check")
    return CheckReport.from_margin(
        "double-semiconcave",
        worst,
        0.0,
        {
            "route_characterization": route_a,
            "route_double": route_b,
            "concavity": concavity.witness,
            "boundary": slope_witness,
            "double": direct.witness,
        },
        notes,
        started,
    )
