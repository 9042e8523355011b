"""JSON and CSV wire formats.

Space schema: ``{"points": [id, ...], "dist": [[...]] | "edges": [[i, j, w],
...], "weight": [...], "boundary": [id, ...]}``.  Matrices are row-major
lists of decimal reals; edge endpoints may be ids or indices into ``points``.
Measures and scalar fields are id-keyed objects; isometries are lists of id
pairs.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InputFormatError
from .gluing import BoundaryIsometry, GluedSpace
from .needles import NeedleChain
from .report import CheckReport
from .space import MetricMeasureSpace, metric_from_graph


def _read_json(path) -> object:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: invalid JSON ({exc})") from exc


def load_space(path) -> MetricMeasureSpace:
    data = _read_json(path)
    return space_from_dict(data, origin=str(path))


def space_from_dict(data, origin: str = "<dict>") -> MetricMeasureSpace:
    if not isinstance(data, dict) or "points" not in data:
        raise InputFormatError(f"{origin}: expected an object with a 'points' list")
    points = [str(p) for p in data["points"]]
    weight = data.get("weight")
    boundary = [str(b) for b in data.get("boundary", [])]
    if "dist" in data:
        dist = np.asarray(data["dist"], dtype=float)
        w = np.ones(len(points)) if weight is None else np.asarray(weight, float)
        try:
            return MetricMeasureSpace(points, dist, w, boundary)
        except ValueError as exc:
            raise InputFormatError(f"{origin}: {exc}") from exc
    if "edges" in data:
        try:
            return metric_from_graph(points, data["edges"], weight, boundary)
        except (ValueError, KeyError) as exc:
            raise InputFormatError(f"{origin}: {exc}") from exc
    raise InputFormatError(f"{origin}: need either 'dist' or 'edges'")


def space_to_dict(space: MetricMeasureSpace) -> dict:
    return {
        "points": list(space.ids),
        "dist": space.dist.tolist(),
        "weight": space.weight.tolist(),
        "boundary": list(space.boundary_ids),
    }


def glued_to_dict(glued: GluedSpace) -> dict:
    out = space_to_dict(glued.space)
    out["provenance"] = {
        qid: [[side, orig] for side, orig in entries]
        for qid, entries in glued.provenance.items()
    }
    out["seam"] = list(glued.seam_ids)
    return out


def load_measure(space: MetricMeasureSpace, path) -> np.ndarray:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise InputFormatError(f"{path}: expected an id->mass object")
    vec = np.zeros(space.n)
    for pid, mass in data.items():
        try:
            vec[space.index(str(pid))] = float(mass)
        except KeyError as exc:
            raise InputFormatError(f"{path}: {exc}") from exc
    return vec


def load_field(space: MetricMeasureSpace, path) -> np.ndarray:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise InputFormatError(f"{path}: expected an id->value object")
    missing = [pid for pid in space.ids if pid not in data]
    if missing:
        raise InputFormatError(f"{path}: values missing for {missing[:5]}")
    return np.array([float(data[pid]) for pid in space.ids])


def load_isometry(path) -> BoundaryIsometry:
    data = _read_json(path)
    if not isinstance(data, list):
        raise InputFormatError(f"{path}: expected a list of id pairs")
    try:
        return BoundaryIsometry(data)
    except (TypeError, ValueError) as exc:
        raise InputFormatError(f"{path}: {exc}") from exc


def load_normal_chains(path) -> dict[str, list[str]]:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise InputFormatError(f"{path}: expected boundary-id -> chain object")
    return {str(k): [str(x) for x in v] for k, v in data.items()}


def dump_json(payload, path) -> None:
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def reports_payload(reports: list[CheckReport], extra: dict | None = None) -> dict:
    payload = {
        "pass": all(r.passed for r in reports),
        "reports": [r.to_dict() for r in reports],
    }
    if extra:
        payload.update(extra)
    return payload


def write_needle_csv(path, chains: list[NeedleChain], guide) -> None:
    """Needle dump: chain_id, node_id, arclength, u, weight, h."""
    space = guide.space
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["chain_id", "node_id", "arclength", "u", "weight", "h"])
        for ci, chain in enumerate(chains):
            dens = chain.density
            for k, (pid, arc) in enumerate(zip(chain.ids, chain.arclengths)):
                idx = space.index(pid)
                writer.writerow(
                    [
                        ci,
                        pid,
                        repr(float(arc)),
                        repr(float(guide.values[idx])),
                        repr(float(space.weight[idx])),
                        "" if dens is None else repr(float(dens[k])),
                    ]
                )
