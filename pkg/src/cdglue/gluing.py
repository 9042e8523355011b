"""Gluing of two spaces along identified boundaries.

The glued pseudo-distance is the infimum over chains that hop between the two
sides at identified boundary points.  Because each side's matrix is already a
metric, any chain collapses to: one hop to the seam, moves inside the closed
seam metric, one hop out.  The construction below therefore closes the seam
block first (small Floyd-Warshall) and assembles everything else with min-plus
products, which reproduces the full chain infimum exactly on finite spaces.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import CdglueError
from .report import CheckReport
from .space import (
    MetricMeasureSpace,
    _fw_closure,
    as_value_vector,
    intrinsic_submetric,
)

ISO_TOL = 1e-6
SEAM_TOL = 1e-9


class MissingBoundary(CdglueError):
    pass


class IsometryInvalid(CdglueError):
    pass


class SeamMismatch(CdglueError):
    pass


@dataclass(frozen=True)
class BoundaryIsometry:
    """A bijective pairing (id in X0 boundary, id in X1 boundary)."""

    pairs: tuple

    def __init__(self, pairs) -> None:
        object.__setattr__(
            self, "pairs", tuple((str(a), str(b)) for a, b in pairs)
        )
        lhs = [a for a, _ in self.pairs]
        rhs = [b for _, b in self.pairs]
        if len(set(lhs)) != len(lhs) or len(set(rhs)) != len(rhs):
            raise IsometryInvalid("boundary pairing is not a bijection")

    @classmethod
    def identity(cls, boundary_ids: list[str]) -> "BoundaryIsometry":
        return cls([(b, b) for b in boundary_ids])

    def inverse(self) -> "BoundaryIsometry":
        return BoundaryIsometry([(b, a) for a, b in self.pairs])


@dataclass
class GluedSpace:
    """Quotient space plus the provenance of every quotient point.

    ``provenance`` maps each quotient id to the tuple of (side, original id)
    pairs it came from; seam points carry one entry per side.
    """

    space: MetricMeasureSpace
    provenance: dict[str, tuple]
    seam_ids: list[str]
    sides: tuple[MetricMeasureSpace, MetricMeasureSpace]
    to_quotient: dict[tuple[int, str], str] = field(default_factory=dict)

    def side_of(self, qid: str) -> list[int]:
        return sorted({side for side, _ in self.provenance[qid]})


def _auto_radius(space: MetricMeasureSpace, subset: list[str]) -> float:
    """Default connectivity radius: twice the largest nearest-neighbor gap."""
    sel = [space.index(s) for s in subset]
    if len(sel) < 2:
        return 0.0
    D = space.dist[np.ix_(sel, sel)].copy()
    np.fill_diagonal(D, np.inf)
    return 2.0 * float(D.min(axis=1).max())


def validate_boundary_isometry(
    X0: MetricMeasureSpace,
    X1: MetricMeasureSpace,
    iso: BoundaryIsometry,
    r_nn: float | None = None,
    tol: float = ISO_TOL,
) -> CheckReport:
    """Check that the pairing is an isometry of the intrinsic boundary metrics.

    Boundary components that fall apart at the connectivity radius are
    compared only where both sides are finite, and flagged as an advisory.
    """
    started = time.perf_counter()
    if not X0.boundary_ids or not X1.boundary_ids:
        raise MissingBoundary("both spaces must declare a boundary")
    lhs = [a for a, _ in iso.pairs]
    rhs = [b for _, b in iso.pairs]
    if set(lhs) != set(X0.boundary_ids) or set(rhs) != set(X1.boundary_ids):
        return CheckReport.from_margin(
            "boundary-isometry",
            -np.inf,
            tol,
            {"kind": "coverage", "detail": "pairing does not cover the boundaries"},
            started=started,
        )
    notes: list[str] = []
    r0 = _auto_radius(X0, lhs) if r_nn is None else r_nn
    r1 = _auto_radius(X1, rhs) if r_nn is None else r_nn
    B0 = intrinsic_submetric(X0, lhs, r0, allow_disconnected=True)
    B1 = intrinsic_submetric(X1, rhs, r1, allow_disconnected=True)
    D0, D1 = B0.dist, B1.dist
    inf0, inf1 = np.isinf(D0), np.isinf(D1)
    if inf0.any() or inf1.any():
        notes.append("DisconnectedSubset: intrinsic boundary metric is not connected")
    worst = 0.0
    witness = None
    both = ~(inf0 | inf1)
    if (inf0 != inf1).any():
        i, j = np.unravel_index(int(np.argmax(inf0 != inf1)), inf0.shape)
        return CheckReport.from_margin(
            "boundary-isometry",
            -np.inf,
            tol,
            {"kind": "connectivity-mismatch", "pair": [lhs[i], lhs[j]]},
            notes,
            started,
        )
    diff = np.where(both, np.abs(D0 - D1), 0.0)
    if diff.size and diff.max() > worst:
        worst = float(diff.max())
        i, j = np.unravel_index(int(diff.argmax()), diff.shape)
        witness = {
            "kind": "intrinsic-distance",
            "pair0": [lhs[i], lhs[j]],
            "pair1": [rhs[i], rhs[j]],
            "d0": float(D0[i, j]),
            "d1": float(D1[i, j]),
        }
    return CheckReport.from_margin(
        "boundary-isometry", -worst, tol, witness, notes, started
    )


def _minplus(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Min-plus matrix product, used to route paths through the seam."""
    return (A[:, :, None] + B[None, :, :]).min(axis=1)


def glue_spaces(
    X0: MetricMeasureSpace,
    X1: MetricMeasureSpace,
    iso: BoundaryIsometry,
    r_nn: float | None = None,
    validate: bool = True,
) -> GluedSpace:
    """Glue X0 and X1 along the pairing; seam keeps the side-0 ids.

    Seam weights are the sum of the two preimage weights (the pushforward-sum
    measure).  For weights that discretize an n-dimensional volume the
    boundary should carry zero weight per side; that is the caller's choice
    and is documented, not enforced.
    """
    if validate:
        rep = validate_boundary_isometry(X0, X1, iso, r_nn)
        if not rep.passed:
            raise IsometryInvalid(f"boundary pairing is not an isometry: {rep.witness}")
    s0 = [X0.index(a) for a, _ in iso.pairs]
    s1 = [X1.index(b) for _, b in iso.pairs]
    D0, D1 = X0.dist, X1.dist
    n0, n1 = X0.n, X1.n

    # closed seam metric: cheapest of the two sides, then transitive closure
    W = _fw_closure(np.minimum(D0[np.ix_(s0, s0)], D1[np.ix_(s1, s1)]))
    A0 = D0[:, s0]  # every side-0 point to the seam, inside side 0
    A1 = D1[:, s1]
    R0 = _minplus(A0, W)  # to seam, then within the closed seam metric
    R1 = _minplus(A1, W)
    d00 = np.minimum(D0, _minplus(R0, A0.T))
    d11 = np.minimum(D1, _minplus(R1, A1.T))
    d01 = _minplus(R0, A1.T)

    seam1 = set(s1)
    interior1 = [k for k in range(n1) if k not in seam1]

    qids = list(X0.ids)
    used = set(qids)
    prov: dict[str, list] = {pid: [(0, pid)] for pid in X0.ids}
    to_q: dict[tuple[int, str], str] = {(0, pid): pid for pid in X0.ids}
    for (a, b) in iso.pairs:
        prov[a].append((1, b))
        to_q[(1, b)] = a
    for k in interior1:
        pid = X1.ids[k]
        qid = pid if pid not in used else f"{pid}#1"
        if qid in used:
            raise ValueError(f"cannot derive a fresh quotient id for {pid!r}")
        used.add(qid)
        qids.append(qid)
        prov[qid] = [(1, pid)]
        to_q[(1, pid)] = qid

    m = n0 + len(interior1)
    D = np.zeros((m, m))
    D[:n0, :n0] = d00
    D[:n0, n0:] = d01[:, interior1]
    D[n0:, :n0] = d01[:, interior1].T
    D[n0:, n0:] = d11[np.ix_(interior1, interior1)]
    # seam rows live in the side-0 block; symmetrize away closure round-off
    D = np.minimum(D, D.T)
    np.fill_diagonal(D, 0.0)

    w = np.zeros(m)
    w[:n0] = X0.weight
    for (a, _), k1 in zip(iso.pairs, s1):
        w[X0.index(a)] += X1.weight[k1]
    w[n0:] = X1.weight[interior1]

    space = MetricMeasureSpace(qids, D, w)
    seam_ids = [a for a, _ in iso.pairs]
    return GluedSpace(
        space=space,
        provenance={k: tuple(v) for k, v in prov.items()},
        seam_ids=seam_ids,
        sides=(X0, X1),
        to_quotient=to_q,
    )


def double_space(X: MetricMeasureSpace) -> GluedSpace:
    """Glue X with a copy of itself by the identity pairing of its boundary."""
    if not X.boundary_ids:
        raise MissingBoundary("double requires a declared boundary")
    copy = MetricMeasureSpace(
        list(X.ids), X.dist.copy(), X.weight.copy(), list(X.boundary_ids)
    )
    iso = BoundaryIsometry.identity(X.boundary_ids)
    return glue_spaces(X, copy, iso, validate=False)


def mirror_map(double: GluedSpace) -> dict[str, str]:
    """Side-swapping involution of a doubled space (fixes the seam)."""
    out = {}
    for qid, entries in double.provenance.items():
        if len(entries) == 2:
            out[qid] = qid
        else:
            side, orig = entries[0]
            out[qid] = double.to_quotient[(1 - side, orig)]
    return out


def glue_function(phi0, phi1, glued: GluedSpace, tol: float = SEAM_TOL) -> np.ndarray:
    """Combine per-side values into one function on the quotient.

    The two sides must agree on paired boundary points within ``tol``.
    Returns values aligned with ``glued.space.ids``.
    """
    X0, X1 = glued.sides
    v0 = as_value_vector(X0, phi0)
    v1 = as_value_vector(X1, phi1)
    out = np.zeros(glued.space.n)
    for qid, entries in glued.provenance.items():
        vals = []
        for side, orig in entries:
            src = v0 if side == 0 else v1
            sp = X0 if side == 0 else X1
            vals.append(src[sp.index(orig)])
        if len(vals) == 2 and abs(vals[0] - vals[1]) > tol:
            raise SeamMismatch(
                f"side values differ at seam point {qid!r}: {vals[0]} vs {vals[1]}"
            )
        out[glued.space.index(qid)] = vals[0]
    return out
