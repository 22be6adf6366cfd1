"""Spectral diffusion geometry on weighted networks.

Everything is driven by the dense symmetric eigendecomposition of the graph
Laplacian D - W: the heat kernel exp(-t*Laplacian), diffusion distances,
diffusion Fréchet vectors, and commute-time distances are all spectral sums.
Eigenvalues below 1e-10 * max(1, lambda_max) are snapped to exactly zero and
connectivity is read off the multiplicity of the zero eigenvalue.

Diffusion distances and Fréchet vectors stay well defined on disconnected
networks; only the commute-time metric requires connectivity.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .measures import IndexOutOfRange, VertexDistribution

SYMMETRY_ATOL = 1e-12
EIG_SNAP_RTOL = 1e-10


class DisconnectedNetwork(ValueError):
    """Commute-time quantities are undefined when lambda_2 vanishes."""


class EigensolverError(RuntimeError):
    """The dense symmetric eigensolver failed to converge."""


@dataclass(frozen=True)
class WeightedNetwork:
    """Symmetric nonnegative weight matrix with zero diagonal plus labels."""

    labels: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be a square matrix")
        n = w.shape[0]
        if n < 1:
            raise ValueError("network needs at least one node")
        labels = tuple(str(l) for l in self.labels)
        if len(labels) != n:
            raise ValueError(f"{len(labels)} labels for {n} nodes")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if np.abs(w - w.T).max() > SYMMETRY_ATOL:
            raise ValueError("weights must be symmetric")
        if np.any(np.diag(w) != 0.0):
            raise ValueError("diagonal must be exactly zero (no self-loops)")
        w = 0.5 * (w + w.T)
        w.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def network_from_weights(weights, labels=None) -> WeightedNetwork:
    w = np.asarray(weights, dtype=float)
    if labels is None:
        labels = tuple(str(i) for i in range(w.shape[0]))
    return WeightedNetwork(tuple(labels), w)


def laplacian(net: WeightedNetwork) -> np.ndarray:
    """Graph Laplacian: degree matrix minus weight matrix."""
    w = net.weights
    return np.diag(w.sum(axis=1)) - w


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending, zeros snapped exact) and orthonormal
    eigenvectors (columns) of the graph Laplacian."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    connected: bool

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def trace_heat(self, t: float) -> float:
        """Tr exp(-t * Laplacian) = sum_k exp(-lambda_k * t)."""
        return float(np.exp(-self.eigenvalues * t).sum())


def spectrum(net: WeightedNetwork) -> SpectralDecomposition:
    lap = laplacian(net)
    try:
        vals, vecs = np.linalg.eigh(lap)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigendecomposition failed: {exc}") from exc
    snap = EIG_SNAP_RTOL * max(1.0, float(vals[-1]))
    vals = vals.copy()
    vals[np.abs(vals) < snap] = 0.0
    if np.any(vals < 0):
        raise EigensolverError("negative eigenvalue beyond snapping tolerance")
    n_zero = int(np.count_nonzero(vals == 0.0))
    if n_zero == 0:
        raise EigensolverError("Laplacian lost its zero eigenvalue")
    vecs = vecs.copy()
    if n_zero == 1:
        # the exact kernel of a connected Laplacian is the constant vector
        vecs[:, 0] = 1.0 / math.sqrt(net.n)
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return SpectralDecomposition(vals, vecs, connected=(n_zero == 1))


def heat_kernel_matrix(spec: SpectralDecomposition, t: float) -> np.ndarray:
    """exp(-t * Laplacian) assembled spectrally; symmetric, rows sum to 1."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t!r}")
    decay = np.exp(-spec.eigenvalues * t)
    h = (spec.eigenvectors * decay[None, :]) @ spec.eigenvectors.T
    return 0.5 * (h + h.T)


def diffusion_distance_sq_matrix(spec: SpectralDecomposition, t: float) -> np.ndarray:
    """All pairwise squared diffusion distances at scale t.

    d_t^2(i,j) = A_ii + A_jj - 2*A_ij with A = exp(-2t * Laplacian).
    """
    a = heat_kernel_matrix(spec, 2.0 * t)
    diag = np.diag(a)
    d2 = diag[:, None] + diag[None, :] - 2.0 * a
    np.clip(d2, 0.0, None, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def diffusion_distance(spec: SpectralDecomposition, i: int, j: int, t: float) -> float:
    """Diffusion distance between vertices i and j at scale t."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t!r}")
    n = spec.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexOutOfRange(f"vertex pair ({i}, {j}) outside [0, {n})")
    diff = spec.eigenvectors[i, :] - spec.eigenvectors[j, :]
    d2 = float(np.sum(np.exp(-2.0 * spec.eigenvalues * t) * diff * diff))
    return math.sqrt(max(d2, 0.0))


@dataclass(frozen=True)
class DiffusionFrechetVector:
    """Per-vertex expected squared diffusion distance under a distribution."""

    values: np.ndarray
    t: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("Fréchet vector entries must be finite and nonnegative")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def dfv(spec: SpectralDecomposition, xi: VertexDistribution, t: float) -> DiffusionFrechetVector:
    """Diffusion Fréchet vector: F(i) = sum_j d_t^2(i,j) * xi_j."""
    if xi.n != spec.n:
        raise ValueError(f"distribution length {xi.n} != node count {spec.n}")
    d2 = diffusion_distance_sq_matrix(spec, t)
    vals = d2 @ xi.probs
    np.clip(vals, 0.0, None, out=vals)
    return DiffusionFrechetVector(vals, t)


def commute_time_matrix(spec: SpectralDecomposition) -> np.ndarray:
    """All pairwise commute-time distances (connected networks only)."""
    if not spec.connected:
        raise DisconnectedNetwork("commute-time distance needs a connected network")
    if spec.n == 1:
        return np.zeros((1, 1))
    inv = np.zeros_like(spec.eigenvalues)
    pos = spec.eigenvalues > 0
    inv[pos] = 1.0 / spec.eigenvalues[pos]
    # pseudoinverse of the Laplacian via the spectral sum
    lp = (spec.eigenvectors * inv[None, :]) @ spec.eigenvectors.T
    diag = np.diag(lp)
    d2 = diag[:, None] + diag[None, :] - (lp + lp.T)
    np.clip(d2, 0.0, None, out=d2)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(d2)


def commute_time_distance(spec: SpectralDecomposition, i: int, j: int) -> float:
    """Commute-time distance sqrt(sum_{k>=2} (phi_k(i)-phi_k(j))^2 / lambda_k)."""
    if not spec.connected:
        raise DisconnectedNetwork("commute-time distance needs a connected network")
    n = spec.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexOutOfRange(f"vertex pair ({i}, {j}) outside [0, {n})")
    pos = spec.eigenvalues > 0
    diff = spec.eigenvectors[i, pos] - spec.eigenvectors[j, pos]
    d2 = float(np.sum(diff * diff / spec.eigenvalues[pos]))
    return math.sqrt(max(d2, 0.0))


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def load_network_json(path) -> WeightedNetwork:
    """Read `{"labels": [...], "edges": [{"i":…, "j":…, "w":…}, …]}`."""
    path = Path(path)
    with path.open() as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict) or "labels" not in obj or "edges" not in obj:
        raise ValueError(f"{path}: expected 'labels' and 'edges' keys")
    labels = [str(l) for l in obj["labels"]]
    n = len(labels)
    w = np.zeros((n, n))
    seen = set()
    for edge in obj["edges"]:
        i, j, wt = int(edge["i"]), int(edge["j"]), float(edge["w"])
        if i == j:
            raise ValueError(f"{path}: self-loop on node {i}")
        if not 0 <= i < j < n:
            raise ValueError(f"{path}: edge ({i}, {j}) must satisfy 0 <= i < j < {n}")
        if (i, j) in seen:
            raise ValueError(f"{path}: duplicate edge ({i}, {j})")
        seen.add((i, j))
        w[i, j] = w[j, i] = wt
    return WeightedNetwork(tuple(labels), w)


def save_network_json(net: WeightedNetwork, path) -> None:
    edges = []
    for i in range(net.n):
        for j in range(i + 1, net.n):
            if net.weights[i, j] > 0:
                edges.append({"i": i, "j": j, "w": float(net.weights[i, j])})
    Path(path).write_text(
        json.dumps({"labels": list(net.labels), "edges": edges}, indent=2) + "\n"
    )


def save_dfv_csv(labels, vectors, path) -> None:
    """CSV `label,value`, with one value column per scale for sweeps."""
    vectors = list(vectors)
    if len(vectors) == 1:
        header = ["label", "value"]
    else:
        header = ["label"] + [f"value_t={v.t:.17g}" for v in vectors]
    lines = [",".join(header)]
    for idx, label in enumerate(labels):
        row = [str(label)] + [f"{v.values[idx]:.17g}" for v in vectors]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_dfv_csv(path) -> tuple:
    """Returns (labels, columns) where columns is a list of value arrays."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    labels = [row[0] for row in rows]
    cols = [
        np.asarray([float(row[k]) for row in rows])
        for k in range(1, len(header))
    ]
    return labels, cols
