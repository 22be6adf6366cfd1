"""Finite discrete probability measures on Euclidean space and on vertex sets.

Two canonical containers back everything downstream: `EmpiricalMeasure`
(weighted point set in R^d) and `VertexDistribution` (probability vector
aligned with a network's node order). Both are immutable after construction
and validate their invariants eagerly, so later modules can assume clean
inputs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Strict invariant on stored probabilities; inputs within LOAD_RTOL of unit
# mass are renormalized, anything worse is rejected as a real bug.
PROB_ATOL = 1e-12
LOAD_RTOL = 1e-9


class EmptySupport(ValueError):
    """A measure needs at least one support point."""


class ZeroTotal(ValueError):
    """Counts summed to zero; no distribution can be formed."""


class IndexOutOfRange(IndexError):
    """Node index outside the vertex set."""


def _normalize_mass(w: np.ndarray, what: str) -> np.ndarray:
    if np.any(w < 0):
        raise ValueError(f"{what} must be nonnegative")
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{what} must be finite")
    total = float(w.sum())
    if abs(total - 1.0) > LOAD_RTOL:
        raise ValueError(f"{what} sum to {total!r}, further than {LOAD_RTOL} from 1")
    return w / total


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted point set: sum_i weights[i] * delta(points[i]).

    points has shape (n, d), weights shape (n,) and unit total mass.
    Duplicate points are allowed and never merged.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            raise EmptySupport("empirical measure needs at least one point")
        if pts.ndim != 2:
            raise ValueError("points must form an (n, d) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must have finite coordinates")
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != pts.shape[0]:
            raise ValueError(
                f"{w.shape[0]} weights for {pts.shape[0]} points"
            )
        w = _normalize_mass(w, "weights")
        pts = pts.copy()
        w = w.copy()
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def translated(self, shift) -> "EmpiricalMeasure":
        shift = np.asarray(shift, dtype=float).reshape(1, self.dim)
        return EmpiricalMeasure(self.points + shift, self.weights)

    def scaled(self, s: float) -> "EmpiricalMeasure":
        return EmpiricalMeasure(self.points * float(s), self.weights)


@dataclass(frozen=True)
class VertexDistribution:
    """Probability vector on the nodes of a network, in node order."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if p.size == 0:
            raise EmptySupport("distribution needs at least one vertex")
        p = _normalize_mass(p, "probabilities")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def n(self) -> int:
        return self.probs.shape[0]


def uniform_empirical(points) -> EmpiricalMeasure:
    """Equal-weight empirical measure on the given points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise EmptySupport("no points given")
    n = pts.shape[0]
    return EmpiricalMeasure(pts, np.full(n, 1.0 / n))


def point_mass(index: int, n: int) -> VertexDistribution:
    """Indicator distribution e_index on n vertices."""
    if not 0 <= index < n:
        raise IndexOutOfRange(f"index {index} outside [0, {n})")
    probs = np.zeros(n)
    probs[index] = 1.0
    return VertexDistribution(probs)


def frequency_distribution(counts) -> VertexDistribution:
    """Normalize a nonnegative count vector into vertex frequencies."""
    c = np.asarray(counts, dtype=float).reshape(-1)
    if np.any(c < 0):
        raise ValueError("counts must be nonnegative")
    total = c.sum()
    if total <= 0:
        raise ZeroTotal("all counts are zero")
    return VertexDistribution(c / total)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def load_points_csv(path) -> EmpiricalMeasure:
    """Read a point cloud CSV: header row, d numeric coordinate columns,
    optional trailing `weight` column."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, header row required") from None
        rows = [row for row in reader if row]
    if not header:
        raise ValueError(f"{path}: header row required")
    has_weight = header[-1].strip().lower() == "weight"
    d = len(header) - (1 if has_weight else 0)
    if d < 1:
        raise ValueError(f"{path}: no coordinate columns")
    if not rows:
        raise EmptySupport(f"{path}: no data rows")
    data = np.array([[float(v) for v in row] for row in rows])
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: row width does not match header")
    if has_weight:
        return EmpiricalMeasure(data[:, :d], data[:, d])
    return uniform_empirical(data)


def save_points_csv(measure: EmpiricalMeasure, path) -> None:
    path = Path(path)
    header = [f"x{k + 1}" for k in range(measure.dim)] + ["weight"]
    lines = [",".join(header)]
    for p, w in zip(measure.points, measure.weights):
        lines.append(",".join(f"{v:.17g}" for v in p) + f",{w:.17g}")
    path.write_text("\n".join(lines) + "\n")


def load_distribution_json(path) -> VertexDistribution:
    """Read `{"probs": [...]}`."""
    with Path(path).open() as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict) or "probs" not in obj:
        raise ValueError(f"{path}: expected an object with a 'probs' key")
    return VertexDistribution(np.asarray(obj["probs"], dtype=float))


def save_distribution_json(dist: VertexDistribution, path) -> None:
    Path(path).write_text(
        json.dumps({"probs": [float(p) for p in dist.probs]}) + "\n"
    )
