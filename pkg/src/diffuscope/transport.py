"""Exact p-Wasserstein distances between finite discrete measures.

The solver is a transportation simplex on the dense bipartite cost matrix:
a northwest-corner start builds a spanning-tree basis, ordinary pivots pick
the most negative reduced cost, and any degenerate stretch (zero-gain
pivots) switches to Bland's rule — lexicographically first negative cell
enters, lexicographically smallest tie leaves — whose anti-cycling
guarantee makes termination unconditional.  Exact optima matter here:
downstream stability certificates compare against the true W_1, so an
approximate solver could manufacture spurious bound violations.

Costs are exact pairwise distances; p-th powers are applied to the finished
distance matrix and the final 1/p root once to the optimal objective.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .measures import EmpiricalMeasure, VertexDistribution
from .networks import SpectralDecomposition, commute_time_matrix

MARGINAL_ATOL = 1e-9
# reduced costs above -PIVOT_RTOL*scale are treated as nonnegative
PIVOT_RTOL = 1e-13


@dataclass(frozen=True)
class Coupling:
    """Joint distribution with prescribed marginals (a transport plan)."""

    matrix: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        r = np.asarray(self.row_marginal, dtype=float)
        c = np.asarray(self.col_marginal, dtype=float)
        if m.shape != (r.shape[0], c.shape[0]):
            raise ValueError("coupling shape does not match marginals")
        if m.min() < -MARGINAL_ATOL:
            raise ValueError("coupling entries must be nonnegative")
        if np.abs(m.sum(axis=1) - r).max() > MARGINAL_ATOL:
            raise ValueError("row sums do not match the first marginal")
        if np.abs(m.sum(axis=0) - c).max() > MARGINAL_ATOL:
            raise ValueError("column sums do not match the second marginal")
        if abs(m.sum() - 1.0) > MARGINAL_ATOL:
            raise ValueError("total mass must be 1")
        m = np.clip(m, 0.0, None)
        for arr in (m, r, c):
            arr.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "row_marginal", r)
        object.__setattr__(self, "col_marginal", c)


@dataclass(frozen=True)
class TransportResult:
    """Optimal W_p value together with an optimal plan."""

    cost: float
    plan: Coupling
    p: float


def _northwest_corner(a: np.ndarray, b: np.ndarray):
    m, n = a.shape[0], b.shape[0]
    flow = np.zeros((m, n))
    basis = []
    ra, rb = a.copy(), b.copy()
    i = j = 0
    while True:
        q = min(ra[i], rb[j])
        flow[i, j] = q
        basis.append((i, j))
        row_done = ra[i] <= rb[j]
        ra[i] -= q
        rb[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if row_done and i < m - 1:
            i += 1
        elif j < n - 1:
            j += 1
        else:
            i += 1
    return flow, basis


def _adjacency(basis, m, n):
    rows = [[] for _ in range(m)]
    cols = [[] for _ in range(n)]
    for i, j in basis:
        rows[i].append(j)
        cols[j].append(i)
    return rows, cols


def _potentials(cost, rows, cols):
    m, n = cost.shape
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    u[0] = 0.0
    queue = deque([(True, 0)])
    while queue:
        is_row, idx = queue.popleft()
        if is_row:
            for j in rows[idx]:
                if math.isnan(v[j]):
                    v[j] = cost[idx, j] - u[idx]
                    queue.append((False, j))
        else:
            for i in cols[idx]:
                if math.isnan(u[i]):
                    u[i] = cost[i, idx] - v[idx]
                    queue.append((True, i))
    return u, v


def _tree_path(rows, cols, start_row, end_col):
    """Basic cells along the unique tree path from row node to column node."""
    # nodes: ('r', i) and ('c', j); parents remember the connecting cell
    parent = {("r", start_row): None}
    queue = deque([("r", start_row)])
    target = ("c", end_col)
    while queue:
        node = queue.popleft()
        if node == target:
            break
        kind, idx = node
        if kind == "r":
            for j in rows[idx]:
                nxt = ("c", j)
                if nxt not in parent:
                    parent[nxt] = (node, (idx, j))
                    queue.append(nxt)
        else:
            for i in cols[idx]:
                nxt = ("r", i)
                if nxt not in parent:
                    parent[nxt] = (node, (i, idx))
                    queue.append(nxt)
    path = []
    node = target
    while parent[node] is not None:
        node, cell = parent[node]
        path.append(cell)
    path.reverse()  # cells from start_row towards end_col
    return path


def solve_transportation(supply, demand, cost, max_pivots: int | None = None):
    """Minimize sum(cost * flow) subject to prescribed marginals.

    Returns (flow, u, v): the optimal plan and the dual potentials, which
    certify optimality (all reduced costs nonnegative, dual objective equal
    to the primal cost up to round-off).
    """
    a = np.asarray(supply, dtype=float).reshape(-1)
    b = np.asarray(demand, dtype=float).reshape(-1)
    c = np.asarray(cost, dtype=float)
    m, n = a.shape[0], b.shape[0]
    if c.shape != (m, n):
        raise ValueError(f"cost shape {c.shape} does not match ({m}, {n})")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("marginals must be nonnegative")
    if abs(a.sum() - b.sum()) > MARGINAL_ATOL * max(1.0, a.sum()):
        raise ValueError("supply and demand totals differ")
    if max_pivots is None:
        max_pivots = 1000 * (m + n) * max(m, n)
    tol = PIVOT_RTOL * max(1.0, float(np.abs(c).max()))

    flow, basis = _northwest_corner(a, b)
    basis_set = set(basis)
    degenerate_streak = False
    for _ in range(max_pivots):
        rows, cols = _adjacency(basis, m, n)
        u, v = _potentials(c, rows, cols)
        if np.isnan(u).any() or np.isnan(v).any():
            raise RuntimeError("basis lost spanning-tree connectivity")
        reduced = c - u[:, None] - v[None, :]
        negative = reduced < -tol
        if not negative.any():
            return flow, u, v
        if degenerate_streak:
            # Bland's rule: first eligible cell in index order (anti-cycling)
            flat = int(np.argmax(negative.reshape(-1)))
        else:
            flat = int(np.argmin(np.where(negative, reduced, 0.0).reshape(-1)))
        enter = np.unravel_index(flat, (m, n))
        ei, ej = int(enter[0]), int(enter[1])
        path = _tree_path(rows, cols, ei, ej)
        # closed cycle: entering cell (+), then the tree path walked from the
        # column end back to the row end with alternating signs
        cycle = [(ei, ej)] + list(reversed(path))
        minus = cycle[1::2]
        theta = min(flow[cell] for cell in minus)
        leaving = min(cell for cell in minus if flow[cell] <= theta)
        for sign, cell in enumerate(cycle):
            if sign % 2 == 0:
                flow[cell] += theta
            else:
                flow[cell] -= theta
        flow[leaving] = 0.0
        basis_set.remove(leaving)
        basis_set.add((ei, ej))
        basis = sorted(basis_set)
        degenerate_streak = theta <= 0.0
    raise RuntimeError("transportation simplex exceeded the pivot budget")


def _finish(flow, powered_cost, p, row_marginal, col_marginal) -> TransportResult:
    total = float((flow * powered_cost).sum())
    cost = max(total, 0.0) ** (1.0 / p)
    plan = Coupling(flow, row_marginal, col_marginal)
    return TransportResult(cost=cost, plan=plan, p=p)


def _check_order(p) -> float:
    p = float(p)
    if not (p >= 1.0 and math.isfinite(p)):
        raise ValueError(f"order p must satisfy p >= 1, got {p!r}")
    return p


def euclidean_cost_matrix(a: EmpiricalMeasure, b: EmpiricalMeasure) -> np.ndarray:
    diff = a.points[:, None, :] - b.points[None, :, :]
    return np.sqrt(np.einsum("mnd,mnd->mn", diff, diff))


def wasserstein_euclidean(a: EmpiricalMeasure, b: EmpiricalMeasure, p=1.0) -> TransportResult:
    """Exact W_p between empirical measures under the Euclidean metric."""
    p = _check_order(p)
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    dist = euclidean_cost_matrix(a, b)
    flow, _, _ = solve_transportation(a.weights, b.weights, dist**p)
    return _finish(flow, dist**p, p, a.weights, b.weights)


def wasserstein_network(
    spec: SpectralDecomposition,
    xi: VertexDistribution,
    zeta: VertexDistribution,
    p=1.0,
) -> TransportResult:
    """Exact W_p between vertex distributions under the commute-time metric."""
    p = _check_order(p)
    if xi.n != spec.n or zeta.n != spec.n:
        raise ValueError("distribution lengths must match the node count")
    dist = commute_time_matrix(spec)
    flow, _, _ = solve_transportation(xi.probs, zeta.probs, dist**p)
    return _finish(flow, dist**p, p, xi.probs, zeta.probs)
