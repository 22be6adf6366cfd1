"""Heat-kernel diffusion geometry on R^d.

The scale parameter t plays the role of diffusion time: the Gaussian kernel
G_t has normalizer C_d(t) = (4*pi*t)^(d/2), the squared diffusion distance is

    d_t^2(x, y) = 2 * (1/C_d(2t) - G_2t(x, y)),

and the Fréchet function of a measure alpha is the alpha-average of
d_t^2(., x), a localized second moment.  Because d_t^2 is an affine function
of the Gaussian kernel, the Fréchet function at scale t/2 is an affine
function of the Gaussian kernel density estimate at bandwidth t, and its
gradient has the closed form

    grad V(x) = (1/(2t)) * sum_i w_i * (x - p_i) * G_2t(p_i, x).

All evaluations are pure and vectorized over grids of query points.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .measures import EmpiricalMeasure

# grid-point-by-support-point blocks are evaluated in chunks of this many
# matrix entries to bound peak memory
_CHUNK_ENTRIES = 4_000_000

DEFAULT_RESOLUTION = {1: 256, 2: 256, 3: 64}
BOX_PAD_FACTOR = 4.0  # box expansion in units of sqrt(2t) per side
PROB_SLOP = 1e-12


class NonFiniteIterate(ArithmeticError):
    """A flow iterate left the representable range; the step is too large."""


def _check_scale(t: float) -> float:
    t = float(t)
    if not (t > 0.0 and math.isfinite(t)):
        raise ValueError(f"scale must be a positive finite real, got {t!r}")
    return t


def gaussian_normalizer(dim: int, t: float) -> float:
    """C_d(t) = (4*pi*t)^(d/2)."""
    return (4.0 * math.pi * t) ** (dim / 2.0)


def heat_kernel(x, y, t: float) -> float:
    """Gaussian heat kernel G_t(x, y) on R^d."""
    t = _check_scale(t)
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    sq = float(np.dot(y - x, y - x))
    return math.exp(-sq / (4.0 * t)) / gaussian_normalizer(x.shape[0], t)


def diffusion_distance_sq(x, y, t: float) -> float:
    """Squared diffusion distance d_t^2(x, y) = 2*(1/C_d(2t) - G_2t(x, y))."""
    t = _check_scale(t)
    x = np.asarray(x, dtype=float).reshape(-1)
    d = x.shape[0]
    inv_c = 1.0 / gaussian_normalizer(d, 2.0 * t)
    val = 2.0 * (inv_c - heat_kernel(x, y, 2.0 * t))
    return max(val, 0.0)


def _kernel_block(queries: np.ndarray, support: np.ndarray, t: float) -> np.ndarray:
    """G_t between each query row and each support row, shape (m, n)."""
    diff = queries[:, None, :] - support[None, :, :]
    sq = np.einsum("mnd,mnd->mn", diff, diff)
    return np.exp(-sq / (4.0 * t)) / gaussian_normalizer(support.shape[1], t)


def frechet_values(alpha: EmpiricalMeasure, queries, t: float) -> np.ndarray:
    """V_{alpha,t} at each query point (vectorized form of frechet_function)."""
    t = _check_scale(t)
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    if q.shape[1] != alpha.dim:
        raise ValueError(f"dimension mismatch: {q.shape[1]} vs {alpha.dim}")
    inv_c = 1.0 / gaussian_normalizer(alpha.dim, 2.0 * t)
    out = np.empty(q.shape[0])
    step = max(1, _CHUNK_ENTRIES // max(1, alpha.n))
    for lo in range(0, q.shape[0], step):
        block = _kernel_block(q[lo : lo + step], alpha.points, 2.0 * t)
        out[lo : lo + step] = 2.0 * (inv_c - block @ alpha.weights)
    np.clip(out, 0.0, None, out=out)
    return out


def frechet_function(alpha: EmpiricalMeasure, x, t: float) -> float:
    """Diffusion Fréchet function: alpha-weighted average of d_t^2(p_i, x)."""
    return float(frechet_values(alpha, np.asarray(x, dtype=float).reshape(1, -1), t)[0])


def frechet_gradients(alpha: EmpiricalMeasure, queries, t: float) -> np.ndarray:
    """Gradient of V_{alpha,t} at each query point, shape (m, d)."""
    t = _check_scale(t)
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    if q.shape[1] != alpha.dim:
        raise ValueError(f"dimension mismatch: {q.shape[1]} vs {alpha.dim}")
    out = np.empty_like(q)
    step = max(1, _CHUNK_ENTRIES // max(1, alpha.n))
    for lo in range(0, q.shape[0], step):
        qb = q[lo : lo + step]
        g = _kernel_block(qb, alpha.points, 2.0 * t) * alpha.weights[None, :]
        diff = qb[:, None, :] - alpha.points[None, :, :]
        out[lo : lo + step] = np.einsum("mn,mnd->md", g, diff) / (2.0 * t)
    return out


def frechet_gradient(alpha: EmpiricalMeasure, x, t: float) -> np.ndarray:
    return frechet_gradients(alpha, np.asarray(x, dtype=float).reshape(1, -1), t)[0]


# ---------------------------------------------------------------------------
# Dense field evaluation on regular grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned box with a per-axis resolution (>= 2 unless the extent
    is a single cell)."""

    lows: tuple
    highs: tuple
    resolution: tuple

    def __post_init__(self):
        lows = tuple(float(v) for v in np.atleast_1d(self.lows))
        highs = tuple(float(v) for v in np.atleast_1d(self.highs))
        res = tuple(int(r) for r in np.atleast_1d(self.resolution))
        if not len(lows) == len(highs) == len(res):
            raise ValueError("lows, highs and resolution must share a length")
        for lo, hi, r in zip(lows, highs, res):
            if r < 1:
                raise ValueError("resolution must be at least 1 per axis")
            if hi < lo or (hi == lo and r > 1):
                raise ValueError(f"degenerate box [{lo}, {hi}] with resolution {r}")
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)
        object.__setattr__(self, "resolution", res)

    @property
    def dim(self) -> int:
        return len(self.lows)

    def axes(self) -> tuple:
        return tuple(
            np.linspace(lo, hi, r)
            for lo, hi, r in zip(self.lows, self.highs, self.resolution)
        )

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)


def default_grid(alpha: EmpiricalMeasure, t: float, resolution: int | None = None) -> GridSpec:
    """Bounding box of the support padded by 4*sqrt(2t) per side."""
    t = _check_scale(t)
    d = alpha.dim
    if resolution is None:
        if d not in DEFAULT_RESOLUTION:
            raise ValueError(
                f"no default grid for dimension {d}; pass an explicit GridSpec"
            )
        resolution = DEFAULT_RESOLUTION[d]
    pad = BOX_PAD_FACTOR * math.sqrt(2.0 * t)
    lows = alpha.points.min(axis=0) - pad
    highs = alpha.points.max(axis=0) + pad
    return GridSpec(tuple(lows), tuple(highs), (resolution,) * d)


@dataclass(frozen=True)
class FrechetField:
    """V_{alpha,t} sampled on a regular grid.

    `axes` holds the per-axis tick coordinates; `values` has shape
    tuple(len(a) for a in axes).  Every value lies in [0, 2/C_d(2t)].
    """

    axes: tuple
    values: np.ndarray
    t: float

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != tuple(len(a) for a in axes):
            raise ValueError("values shape does not match axes")
        if vals.size == 0:
            raise ValueError("empty grid")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        ceiling = 2.0 / gaussian_normalizer(len(axes), 2.0 * self.t)
        if vals.min() < -PROB_SLOP * ceiling or vals.max() > ceiling * (1 + PROB_SLOP):
            raise ValueError("field values outside [0, 2/C_d(2t)]")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return len(self.axes)

    def grid_points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)


def evaluate_field(
    alpha: EmpiricalMeasure,
    t: float,
    grid: GridSpec | None = None,
    resolution: int | None = None,
) -> FrechetField:
    """Dense evaluation of the Fréchet function on a regular grid."""
    t = _check_scale(t)
    if grid is None:
        grid = default_grid(alpha, t, resolution)
    if grid.dim != alpha.dim:
        raise ValueError(f"grid dimension {grid.dim} != measure dimension {alpha.dim}")
    vals = frechet_values(alpha, grid.points(), t).reshape(grid.resolution)
    return FrechetField(grid.axes(), vals, t)


def local_minima(field: FrechetField) -> list:
    """Grid indices strictly below every axis neighbor (plateaus excluded)."""
    v = field.values
    mask = np.ones(v.shape, dtype=bool)
    for ax in range(v.ndim):
        lo = [slice(None)] * v.ndim
        hi = [slice(None)] * v.ndim
        lo[ax] = slice(None, -1)
        hi[ax] = slice(1, None)
        left, right = v[tuple(lo)], v[tuple(hi)]
        mask[tuple(lo)] &= left < right
        mask[tuple(hi)] &= right < left
    return [tuple(idx) for idx in np.argwhere(mask)]


# ---------------------------------------------------------------------------
# Gradient flow of the Fréchet function
# ---------------------------------------------------------------------------

MAX_BACKTRACKS = 30


def default_flow_step(dim: int, t: float) -> float:
    # ~0.45 / L where L = 1/(2t*C_d(2t)) bounds the gradient's Lipschitz scale
    return 0.9 * t * gaussian_normalizer(dim, 2.0 * t)


def gradient_flow(
    points,
    alpha: EmpiricalMeasure,
    t: float,
    step: float | None = None,
    max_iters: int = 10_000,
    tol: float | None = None,
    record_every: int = 1,
) -> list:
    """Evolve query points by explicit-Euler descent of the Fréchet function.

    Each point moves independently along -grad V.  Backtracking (halving the
    step up to 30 times, keeping the point still as a last resort) makes the
    per-iteration descent of V unconditional; the assertion is checked every
    iteration rather than assumed.  Terminates when the largest per-point
    displacement drops below `tol` or after `max_iters` iterations.

    Returns the recorded snapshots, always including the initial and final
    point sets.
    """
    t = _check_scale(t)
    x = np.atleast_2d(np.asarray(points, dtype=float)).copy()
    if x.shape[1] != alpha.dim:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {alpha.dim}")
    if step is None:
        step = default_flow_step(alpha.dim, t)
    step = float(step)
    if step <= 0:
        raise ValueError("step must be positive")
    if tol is None:
        tol = 1e-6 * math.sqrt(t)
    tol = float(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")

    snapshots = [x.copy()]
    values = frechet_values(alpha, x, t)
    for it in range(1, max_iters + 1):
        grad = frechet_gradients(alpha, x, t)
        scale = np.full(x.shape[0], step)
        proposal = x - scale[:, None] * grad
        new_vals = frechet_values(alpha, proposal, t)
        for _ in range(MAX_BACKTRACKS):
            # NaN proposals compare false and stay flagged for another halving
            bad = ~(new_vals <= values)
            if not bad.any():
                break
            scale[bad] *= 0.5
            proposal[bad] = x[bad] - scale[bad, None] * grad[bad]
            new_vals[bad] = frechet_values(alpha, proposal[bad], t)
        still_bad = ~(new_vals <= values)
        if still_bad.any():
            # keep those points in place: a zero move never increases V
            proposal[still_bad] = x[still_bad]
            new_vals[still_bad] = values[still_bad]
        if not np.all(np.isfinite(proposal)):
            raise NonFiniteIterate("flow produced a non-finite iterate; reduce step")
        assert np.all(new_vals <= values), "descent assertion violated"
        displacement = np.sqrt(((proposal - x) ** 2).sum(axis=1)).max()
        x = proposal
        values = new_vals
        if it % record_every == 0:
            snapshots.append(x.copy())
        if displacement < tol:
            break
    if snapshots and not np.array_equal(snapshots[-1], x):
        snapshots.append(x.copy())
    return snapshots


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def save_field_csv(field: FrechetField, path) -> None:
    """Rows `x1,...,xd,value` in row-major grid order."""
    path = Path(path)
    header = [f"x{k + 1}" for k in range(field.dim)] + ["value"]
    pts = field.grid_points()
    flat = field.values.reshape(-1)
    lines = [",".join(header)]
    for p, v in zip(pts, flat):
        lines.append(",".join(f"{c:.17g}" for c in p) + f",{v:.17g}")
    path.write_text("\n".join(lines) + "\n")


def load_field_csv(path, t: float) -> FrechetField:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    d = len(header) - 1
    data = np.asarray(rows)
    axes = []
    shape = []
    for k in range(d):
        ticks = np.unique(data[:, k])
        axes.append(ticks)
        shape.append(len(ticks))
    if int(np.prod(shape)) != data.shape[0]:
        raise ValueError(f"{path}: rows do not form a full regular grid")
    order = np.lexsort(tuple(data[:, k] for k in reversed(range(d))))
    values = data[order, d].reshape(shape)
    return FrechetField(tuple(axes), values, t)


def save_trajectory(snapshots, t: float, step: float, out_dir) -> Path:
    """One CSV per snapshot plus a JSON manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, snap in enumerate(snapshots):
        p = out_dir / f"snapshot_{k:04d}.csv"
        header = [f"x{j + 1}" for j in range(snap.shape[1])]
        lines = [",".join(header)]
        for row in snap:
            lines.append(",".join(f"{c:.17g}" for c in row))
        p.write_text("\n".join(lines) + "\n")
        paths.append(p.name)
    manifest = out_dir / "manifest.json"
    manifest.write_text(
        json.dumps({"t": t, "step": step, "snapshots": paths}, indent=2) + "\n"
    )
    return manifest


def load_trajectory(manifest_path) -> tuple:
    """Returns (snapshots, t, step) as written by save_trajectory."""
    manifest_path = Path(manifest_path)
    with manifest_path.open() as fh:
        manifest = json.load(fh)
    snaps = []
    for name in manifest["snapshots"]:
        with (manifest_path.parent / name).open(newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            snaps.append(np.asarray([[float(v) for v in row] for row in reader if row]))
    return snaps, float(manifest["t"]), float(manifest["step"])
