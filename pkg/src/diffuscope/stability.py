"""Numerical certification of the Wasserstein stability inequalities.

Each check evaluates one inequality on one concrete instance and returns a
BoundReport with both sides, the slack, and a satisfied flag.  The
tolerance -1e-9 * max(1, |rhs|) absorbs floating-point noise only: with one
documented exception (the scale-free gradient-field constant, see
check_gradient_stability), the inequalities are exact theorems and a
violated report means a bug.

Euclidean sup-norms are certified on a finite grid.  The grid box is the
union support bounding box padded by 4*sqrt(2t); both the function gap and
the gradient gap decay like Gaussian tails away from the supports, so the
box contains the maximizer and the grid maximum is a sound (if slightly
conservative) stand-in for the supremum.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .euclid import (
    GridSpec,
    frechet_gradients,
    frechet_values,
    gaussian_normalizer,
    heat_kernel,
)
from .measures import EmpiricalMeasure, VertexDistribution
from .networks import SpectralDecomposition, dfv, spectrum
from .synthetic import random_connected_network, random_empirical_measure
from .transport import wasserstein_euclidean, wasserstein_network

VIOLATION_RTOL = 1e-9

FAMILIES = ("gauss_a", "gauss_b", "frechet", "gradient", "dfv")

# per-dimension grid resolution used by the batch harness; the grid maximum
# is a lower bound of the true sup, so any resolution yields a sound check
HARNESS_RESOLUTION = {1: 256, 2: 64, 3: 24}


@dataclass(frozen=True)
class BoundReport:
    """One evaluated inequality: lhs <= rhs up to float noise."""

    family: str
    lhs: float
    rhs: float
    slack: float
    instance_digest: str
    satisfied: bool


def _report(family: str, lhs: float, rhs: float, digest: str) -> BoundReport:
    slack = rhs - lhs
    satisfied = slack >= -VIOLATION_RTOL * max(1.0, abs(rhs))
    return BoundReport(
        family=family,
        lhs=float(lhs),
        rhs=float(rhs),
        slack=float(slack),
        instance_digest=digest,
        satisfied=satisfied,
    )


def centered_kernel(y, t: float) -> float:
    """Heat kernel centered at the origin."""
    y = np.asarray(y, dtype=float).reshape(-1)
    return heat_kernel(np.zeros_like(y), y, t)


def check_lemma_gauss_a(y1, y2, t: float) -> BoundReport:
    """|K_t(y1) - K_t(y2)| <= |y1 - y2| / (C_d(t) * sqrt(2te))."""
    y1 = np.asarray(y1, dtype=float).reshape(-1)
    y2 = np.asarray(y2, dtype=float).reshape(-1)
    if y1.shape != y2.shape:
        raise ValueError("dimension mismatch")
    d = y1.shape[0]
    lhs = abs(centered_kernel(y1, t) - centered_kernel(y2, t))
    gap = float(np.linalg.norm(y1 - y2))
    rhs = gap / (gaussian_normalizer(d, t) * math.sqrt(2.0 * t * math.e))
    return _report("gauss_a", lhs, rhs, f"d={d} t={t:.6g} gap={gap:.6g}")


def check_lemma_gauss_b(y1, y2, t: float) -> BoundReport:
    """|y1 K_t(y1) - y2 K_t(y2)| <= ((e+2)/(e C_d(t))) |y1 - y2|."""
    y1 = np.asarray(y1, dtype=float).reshape(-1)
    y2 = np.asarray(y2, dtype=float).reshape(-1)
    if y1.shape != y2.shape:
        raise ValueError("dimension mismatch")
    d = y1.shape[0]
    lhs = float(np.linalg.norm(y1 * centered_kernel(y1, t) - y2 * centered_kernel(y2, t)))
    gap = float(np.linalg.norm(y1 - y2))
    rhs = (math.e + 2.0) / (math.e * gaussian_normalizer(d, t)) * gap
    return _report("gauss_b", lhs, rhs, f"d={d} t={t:.6g} gap={gap:.6g}")


def _union_grid(a: EmpiricalMeasure, b: EmpiricalMeasure, t: float, resolution: int | None) -> GridSpec:
    d = a.dim
    if resolution is None:
        resolution = HARNESS_RESOLUTION[d]
    pts = np.vstack([a.points, b.points])
    pad = 4.0 * math.sqrt(2.0 * t)
    lows = pts.min(axis=0) - pad
    highs = pts.max(axis=0) + pad
    return GridSpec(tuple(lows), tuple(highs), (resolution,) * d)


def check_frechet_stability(
    a: EmpiricalMeasure,
    b: EmpiricalMeasure,
    t: float,
    grid: GridSpec | None = None,
    resolution: int | None = None,
) -> BoundReport:
    """sup |V_a - V_b| <= W_1(a, b) / (C_d(2t) sqrt(te))."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    if grid is None:
        grid = _union_grid(a, b, t, resolution)
    pts = grid.points()
    lhs = float(np.abs(frechet_values(a, pts, t) - frechet_values(b, pts, t)).max())
    w1 = wasserstein_euclidean(a, b, 1.0).cost
    rhs = w1 / (gaussian_normalizer(a.dim, 2.0 * t) * math.sqrt(t * math.e))
    digest = f"d={a.dim} n_a={a.n} n_b={b.n} t={t:.6g} W1={w1:.6g}"
    return _report("frechet", lhs, rhs, digest)


def check_gradient_stability(
    a: EmpiricalMeasure,
    b: EmpiricalMeasure,
    t: float,
    grid: GridSpec | None = None,
    resolution: int | None = None,
) -> BoundReport:
    """sup |grad V_a - grad V_b| <= ((e+2)/(e C_d(2t))) W_1(a, b).

    Caution: this evaluates the scale-free form of the constant as commonly
    stated.  The kernel-moment derivation behind it actually produces an
    extra 1/(2t) factor, and without that factor the inequality is falsified
    by well-separated measures whenever t < 1/2 (a pair of point masses
    suffices).  Reports from this family can therefore be legitimately
    unsatisfied at small scales; the 1/(2t)-corrected bound is the one that
    holds at every scale (see the test suite).
    """
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    if grid is None:
        grid = _union_grid(a, b, t, resolution)
    pts = grid.points()
    diff = frechet_gradients(a, pts, t) - frechet_gradients(b, pts, t)
    lhs = float(np.sqrt((diff**2).sum(axis=1)).max())
    w1 = wasserstein_euclidean(a, b, 1.0).cost
    rhs = (math.e + 2.0) / (math.e * gaussian_normalizer(a.dim, 2.0 * t)) * w1
    digest = f"d={a.dim} n_a={a.n} n_b={b.n} t={t:.6g} W1={w1:.6g}"
    return _report("gradient", lhs, rhs, digest)


def check_dfv_stability(
    spec: SpectralDecomposition,
    xi: VertexDistribution,
    zeta: VertexDistribution,
    t: float,
) -> BoundReport:
    """max |F_xi - F_zeta| <= 4 sqrt((Tr exp(-2t L) - 1)/(2et)) W_1(xi, zeta)."""
    lhs = float(np.abs(dfv(spec, xi, t).values - dfv(spec, zeta, t).values).max())
    w1 = wasserstein_network(spec, xi, zeta, 1.0).cost
    # Tr exp(-2tL) - 1 summed without cancellation: the snapped zero modes
    # contribute exactly 1 each, one of which the -1 removes
    lam = spec.eigenvalues
    n_zero = int(np.count_nonzero(lam == 0.0))
    trace_excess = (n_zero - 1) + float(np.exp(-2.0 * t * lam[lam > 0]).sum())
    rhs = 4.0 * math.sqrt(max(trace_excess, 0.0) / (2.0 * math.e * t)) * w1
    digest = f"n={spec.n} t={t:.6g} W1={w1:.6g}"
    return _report("dfv", lhs, rhs, digest)


# ---------------------------------------------------------------------------
# Seeded randomized batches
# ---------------------------------------------------------------------------

def _log_uniform(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def _gauss_instances(rng, count):
    for _ in range(count):
        d = int(rng.integers(1, 4))
        scale = rng.uniform(0.1, 10.0)
        y1 = rng.standard_normal(d) * scale
        y2 = rng.standard_normal(d) * scale
        t = _log_uniform(rng, 1e-3, 1e2)
        yield y1, y2, t


def _measure_pair_instances(rng, count):
    for _ in range(count):
        d = int(rng.integers(1, 4))
        a = random_empirical_measure(rng, d, n_max=50)
        b = random_empirical_measure(rng, d, n_max=50)
        t = _log_uniform(rng, 0.01, 10.0)
        yield a, b, t


def _network_instances(rng, count):
    for _ in range(count):
        n = int(rng.integers(2, 16))
        net = random_connected_network(rng, n)
        spec = spectrum(net)
        xi = VertexDistribution(rng.dirichlet(np.ones(n)))
        zeta = VertexDistribution(rng.dirichlet(np.ones(n)))
        t = _log_uniform(rng, 1e-2, 1e1)
        yield spec, xi, zeta, t


def run_batch(family: str, count: int, seed: int, threads: int | None = None) -> list:
    """Seeded batch of checks for one inequality family."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    rng = np.random.default_rng(seed)
    if family == "gauss_a":
        args = list(_gauss_instances(rng, count))
        fn = check_lemma_gauss_a
    elif family == "gauss_b":
        args = list(_gauss_instances(rng, count))
        fn = check_lemma_gauss_b
    elif family == "frechet":
        args = list(_measure_pair_instances(rng, count))
        fn = check_frechet_stability
    elif family == "gradient":
        args = list(_measure_pair_instances(rng, count))
        fn = check_gradient_stability
    else:
        args = list(_network_instances(rng, count))
        fn = check_dfv_stability
    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda tup: fn(*tup), args))
    return [fn(*tup) for tup in args]


def summarize(family: str, reports: list) -> dict:
    """Summary row: `{family, count, min_slack_ratio, all_satisfied}`."""
    ratios = []
    for r in reports:
        if r.rhs > 0:
            ratios.append(r.lhs / r.rhs)
        else:
            ratios.append(0.0 if r.lhs <= 0 else math.inf)
    return {
        "family": family,
        "count": len(reports),
        "min_slack_ratio": min(ratios) if ratios else None,
        "all_satisfied": all(r.satisfied for r in reports),
    }


def report_document(families, count: int, seed: int, threads: int | None = None) -> dict:
    """Reports plus summaries for the requested families, reproducibly.

    Each family consumes an independent seeded stream, so adding families
    never perturbs another family's instances.
    """
    reports = {}
    for k, family in enumerate(families):
        reports[family] = run_batch(family, count, seed + k, threads=threads)
    return {
        "seed": seed,
        "count": count,
        "reports": [
            {
                "family": r.family,
                "lhs": r.lhs,
                "rhs": r.rhs,
                "slack": r.slack,
                "instance_digest": r.instance_digest,
                "satisfied": r.satisfied,
            }
            for family in families
            for r in reports[family]
        ],
        "summaries": [summarize(family, reports[family]) for family in families],
    }


def report_json(doc: dict) -> str:
    """Deterministic serialization (sorted keys, repr floats)."""
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
