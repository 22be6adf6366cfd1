"""Correlation-based co-occurrence networks with locally adaptive sparsification.

Edges are weighted by absolute Pearson correlation between taxon count
columns.  Sparsification keeps edge (i, j) when its weight ranks in the top
alpha fraction locally at i or at j: with

    F_ij = (1/n) * sum_k 1{w_ik <= w_ij}

the edge survives iff 1 - F_ij < alpha or 1 - F_ji < alpha.  The sum runs
over all k literally (w_ii = 0 contributes); `exclude_self` switches to the
variant that drops k = i and divides by n - 1.  A maximum-weight spanning
forest pass restores connectivity afterwards, since the rule alone cannot
guarantee it; restored edges are recorded so they can be audited.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .networks import WeightedNetwork

MIN_SAMPLES = 3


class ZeroVarianceColumn(ValueError):
    """Pearson correlation is undefined for a constant column."""


@dataclass(frozen=True)
class AbundanceTable:
    """Per-sample taxa counts: rows are samples, columns are labeled taxa."""

    taxa: tuple
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=float)
        if c.ndim != 2:
            raise ValueError("counts must be a samples-by-taxa matrix")
        taxa = tuple(str(t) for t in self.taxa)
        if len(taxa) != c.shape[1]:
            raise ValueError(f"{len(taxa)} taxa labels for {c.shape[1]} columns")
        if c.shape[0] < MIN_SAMPLES:
            raise ValueError(
                f"need at least {MIN_SAMPLES} samples to estimate correlations, got {c.shape[0]}"
            )
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("counts must be finite and nonnegative")
        zero_cols = np.nonzero(~c.any(axis=0))[0]
        if zero_cols.size:
            raise ValueError(f"taxa absent from every sample: {[taxa[k] for k in zero_cols]}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "taxa", taxa)
        object.__setattr__(self, "counts", c)

    @property
    def n_samples(self) -> int:
        return self.counts.shape[0]

    @property
    def n_taxa(self) -> int:
        return self.counts.shape[1]


@dataclass(frozen=True)
class LansDecision:
    """Audit record of one sparsification run."""

    F: np.ndarray
    alpha: float
    kept: np.ndarray
    repaired_edges: tuple

    def __post_init__(self):
        f = np.asarray(self.F, dtype=float)
        kept = np.asarray(self.kept, dtype=bool)
        if f.min() < 0.0 or f.max() > 1.0:
            raise ValueError("F entries must lie in [0, 1]")
        if not np.array_equal(kept, kept.T):
            raise ValueError("kept mask must be symmetric")
        f.setflags(write=False)
        kept.setflags(write=False)
        object.__setattr__(self, "F", f)
        object.__setattr__(self, "kept", kept)
        object.__setattr__(self, "repaired_edges", tuple(self.repaired_edges))


def correlation_network(table: AbundanceTable) -> WeightedNetwork:
    """Absolute-Pearson-correlation weights on the taxa."""
    c = table.counts
    stds = c.std(axis=0)
    flat = np.nonzero(stds == 0)[0]
    if flat.size:
        raise ZeroVarianceColumn(
            f"constant count columns: {[table.taxa[k] for k in flat]}"
        )
    rho = np.corrcoef(c, rowvar=False)
    w = np.abs(rho)
    np.clip(w, 0.0, 1.0, out=w)
    np.fill_diagonal(w, 0.0)
    return WeightedNetwork(table.taxa, 0.5 * (w + w.T))


def lans_fractions(weights: np.ndarray, exclude_self: bool = False) -> np.ndarray:
    """F_ij = fraction of neighbors k of i with w_ik <= w_ij (ties count)."""
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    # F[i, j] counts k with w[i, k] <= w[i, j]
    le = w[:, :, None] <= w[:, None, :]  # le[i, k, j]
    counts = le.sum(axis=1).astype(float)
    if exclude_self:
        # remove the k = i term (w_ii = 0 always satisfies <=)
        counts -= 1.0
        denom = max(n - 1, 1)
    else:
        denom = n
    return counts / denom


def _components(adjacency: np.ndarray) -> np.ndarray:
    n = adjacency.shape[0]
    comp = np.full(n, -1)
    cur = 0
    for start in range(n):
        if comp[start] >= 0:
            continue
        stack = [start]
        comp[start] = cur
        while stack:
            i = stack.pop()
            for j in np.nonzero(adjacency[i])[0]:
                if comp[j] < 0:
                    comp[j] = cur
                    stack.append(int(j))
        cur += 1
    return comp


def lans_sparsify(net: WeightedNetwork, alpha: float, exclude_self: bool = False):
    """Apply the local significance rule, then reconnect greedily.

    Returns (sparsified network, LansDecision).  Reconnection adds dropped
    edges in decreasing weight order whenever they bridge distinct
    components, until the component structure of the input is restored.
    """
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    w = net.weights
    n = net.n
    F = lans_fractions(w, exclude_self=exclude_self)
    # the disjunction over (i, j) and (j, i) makes the mask symmetric
    kept = ((1.0 - F < alpha) | (1.0 - F.T < alpha)) & (w > 0)

    target_components = len(set(_components(w > 0)))
    repaired = []
    comp = _components(kept)
    if len(set(comp)) > target_components:
        dropped = [
            (w[i, j], i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if w[i, j] > 0 and not kept[i, j]
        ]
        # decreasing weight, ties broken by index for determinism
        dropped.sort(key=lambda e: (-e[0], e[1], e[2]))
        for _, i, j in dropped:
            if comp[i] != comp[j]:
                kept[i, j] = kept[j, i] = True
                repaired.append((i, j))
                comp[comp == comp[j]] = comp[i]
                if len(set(comp)) <= target_components:
                    break

    new_w = np.where(kept, w, 0.0)
    decision = LansDecision(F=F, alpha=alpha, kept=kept, repaired_edges=tuple(repaired))
    return WeightedNetwork(net.labels, new_w), decision


def build_pipeline(table: AbundanceTable, alpha: float, exclude_self: bool = False) -> WeightedNetwork:
    """Correlation network followed by sparsification."""
    net, _ = lans_sparsify(correlation_network(table), alpha, exclude_self=exclude_self)
    return net


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def load_abundance_csv(path) -> AbundanceTable:
    """Header row of taxa labels, one row of counts per sample."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no sample rows")
    return AbundanceTable(tuple(h.strip() for h in header), np.asarray(rows))


def save_abundance_csv(table: AbundanceTable, path) -> None:
    lines = [",".join(table.taxa)]
    for row in table.counts:
        lines.append(",".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
