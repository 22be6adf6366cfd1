"""Seeded generators for benchmark data sets and random test instances."""

from __future__ import annotations

import numpy as np

from .cooccurrence import AbundanceTable
from .measures import EmpiricalMeasure
from .networks import WeightedNetwork, network_from_weights


def two_cluster_line(seed: int = 0, n: int = 400, centers=(-2.0, 2.0), sigma: float = 0.3) -> np.ndarray:
    """1-D sample split evenly between two Gaussian bumps; shape (n, 1)."""
    rng = np.random.default_rng(seed)
    half = n // 2
    sizes = [half, n - half]
    parts = [rng.normal(c, sigma, size=(k, 1)) for c, k in zip(centers, sizes)]
    return np.concatenate(parts, axis=0)


def blob_plane(seed: int = 0, centers=((0.0, 0.0), (6.0, 0.0), (3.0, 5.0)),
               sigma: float = 0.35, n_per: int = 80) -> np.ndarray:
    """2-D sample with one isotropic Gaussian blob per center; shape (k*n_per, 2)."""
    rng = np.random.default_rng(seed)
    parts = [rng.normal(0.0, sigma, size=(n_per, 2)) + np.asarray(c) for c in centers]
    return np.concatenate(parts, axis=0)


def random_connected_network(rng: np.random.Generator, n: int, edge_prob: float = 0.5) -> WeightedNetwork:
    """Erdős–Rényi-style weighted network, resampled until connected."""
    while True:
        w = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < edge_prob:
                    w[i, j] = w[j, i] = rng.uniform(1e-6, 1.0)
        net = network_from_weights(w)
        if n == 1 or _is_connected(w):
            return net


def _is_connected(w: np.ndarray) -> bool:
    n = w.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in np.nonzero(w[i] > 0)[0]:
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    return bool(seen.all())


def random_empirical_measure(
    rng: np.random.Generator, dim: int, n_max: int = 50, uniform_weights: bool = False
) -> EmpiricalMeasure:
    """Standard-normal support scaled by a random factor in [0.1, 10] with
    symmetric-Dirichlet weights."""
    n = int(rng.integers(1, n_max + 1))
    scale = rng.uniform(0.1, 10.0)
    pts = rng.standard_normal((n, dim)) * scale
    if uniform_weights:
        w = np.full(n, 1.0 / n)
    else:
        w = rng.dirichlet(np.ones(n))
    return EmpiricalMeasure(pts, w)


# Planted two-class abundance benchmark: 24 taxa in 4 communities of 6.
# Taxa in a community co-fluctuate through a shared log-normal factor, which
# is what the co-occurrence network recovers from reference samples.  The
# class difference is a shift of community 0's factor (a smooth,
# network-structured change).  Two nuisance mechanisms make the raw
# frequency vector a poor feature space at small sample sizes: per-taxon
# idiosyncratic log noise, and occasional "dysbiosis" events that recompose
# community 1 internally while preserving its total mass, so the event is
# confined to stiff (within-community) diffusion modes and equally likely in
# both classes.
COMMUNITY_SIZE = 6
N_COMMUNITIES = 4
SIGNAL_COMMUNITY = 0
EVENT_COMMUNITY = 1
BASE_INTENSITY = np.tile([3.0, 2.0, 1.5, 2.5, 1.0, 2.0], N_COMMUNITIES)

# canonical instance for parameter-selection experiments
SELECT_FIXTURE_SEED = 15
SELECT_FIXTURE_N_PER_CLASS = 28


def planted_communities():
    """Node index groups of the planted abundance benchmark."""
    return [
        tuple(range(c * COMMUNITY_SIZE, (c + 1) * COMMUNITY_SIZE))
        for c in range(N_COMMUNITIES)
    ]


def planted_abundance_sample(
    rng: np.random.Generator,
    shift: float,
    factor_scale: float = 0.6,
    idio_scale: float = 0.5,
    depth: int = 2000,
    event_prob: float = 0.3,
    event_scale: float = 2.2,
) -> np.ndarray:
    """One sample of taxa counts; `shift` raises community 0's log factor."""
    groups = planted_communities()
    log_int = np.empty(BASE_INTENSITY.shape[0])
    for ci, grp in enumerate(groups):
        g = rng.normal(shift if ci == SIGNAL_COMMUNITY else 0.0, factor_scale)
        log_int[list(grp)] = g + rng.normal(0.0, idio_scale, len(grp))
    intensity = BASE_INTENSITY * np.exp(log_int)
    if rng.random() < event_prob:
        grp = list(groups[EVENT_COMMUNITY])
        total = intensity[grp].sum()
        boost = np.exp(rng.normal(0.0, event_scale, len(grp)))
        intensity[grp] = intensity[grp] * boost
        intensity[grp] *= total / intensity[grp].sum()
    return rng.multinomial(depth, intensity / intensity.sum()).astype(float)


def planted_abundance_tables(
    seed: int,
    n_per_class: int = 12,
    shift: float = 1.0,
    depth: int = 2000,
):
    """Two-class abundance table with the planted community-level difference.

    Returns (AbundanceTable, labels) with labels in {0, 1}; class 0 is the
    reference group a co-occurrence network should be estimated from.
    """
    rng = np.random.default_rng(seed)
    taxa = tuple(f"taxon_{k + 1}" for k in range(BASE_INTENSITY.shape[0]))
    rows = []
    labels = []
    for cls, sh in ((0, 0.0), (1, shift)):
        for _ in range(n_per_class):
            rows.append(planted_abundance_sample(rng, sh, depth=depth))
            labels.append(cls)
    table = AbundanceTable(taxa, np.asarray(rows))
    return table, np.asarray(labels)
