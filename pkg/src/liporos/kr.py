"""Molecules (finitely supported elements of the free space) and their
Kantorovich-Rubinstein norm.

The norm is computed twice. The potential LP maximises sum a_i f(x_i) over
f(0) = 0 with all pairwise slopes <= 1. Its dual, a transportation problem
that routes the net imbalance to the base point, is solved by a small
successive-shortest-path min-cost flow written here. Each serves as an
oracle for the other: for a genuine metric the two optima coincide.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import InputError, NumericError, SolverDisagreement
from .metric import PointCloud

AGREEMENT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Molecule:
    """sum_i w_i delta(x_i), with x_i given as indices into ``cloud``.

    Any weight on the base point is dropped (delta(0) = 0), as are zeros.
    """

    cloud: PointCloud
    indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if idx.shape != w.shape:
            raise InputError("molecule indices and weights differ in length")
        if len(np.unique(idx)) != len(idx):
            raise InputError("molecule support indices must be distinct")
        if idx.size and (idx.min() < 0 or idx.max() >= len(self.cloud)):
            raise InputError("molecule support index out of range")
        if not np.all(np.isfinite(w)):
            raise InputError("molecule weights must be finite")
        keep = (idx != self.cloud.base_index) & (w != 0.0)
        idx, w = idx[keep], w[keep]
        idx.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    @classmethod
    def delta(cls, cloud, i, weight=1.0):
        return cls(cloud, [i], [weight])

    @classmethod
    def from_pairs(cls, cloud, pairs):
        """From [(index, weight), ...]; repeated indices are summed."""
        acc = {}
        for i, w in pairs:
            acc[int(i)] = acc.get(int(i), 0.0) + float(w)
        keys = sorted(acc)
        return cls(cloud, keys, [acc[k] for k in keys])

    def __len__(self):
        return self.indices.size

    def is_zero(self):
        return self.indices.size == 0

    def pair(self, f_values) -> float:
        """<f, mu> = sum w_i f(x_i) for values given on the whole cloud."""
        return float(np.dot(self.weights, np.asarray(f_values)[self.indices]))

    def support_table(self):
        """Distances among [base, x_1, ..., x_k]."""
        nodes = np.concatenate([[self.cloud.base_index], self.indices])
        return self.cloud.dist[np.ix_(nodes, nodes)]

    def __add__(self, other):
        return Molecule.from_pairs(self.cloud, list(zip(self.indices, self.weights)) +
                                   list(zip(other.indices, other.weights)))

    def __mul__(self, s):
        return Molecule(self.cloud, self.indices, float(s) * self.weights)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)


def kr_lp(table, weights):
    """Potential LP. ``table`` is over [base, support]; returns (value, potentials)."""
    k = len(weights)
    if k == 0:
        return 0.0, np.zeros(0)
    n = k + 1
    rows, rhs = [], []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            row = np.zeros(k)
            if i > 0:
                row[i - 1] += 1.0
            if j > 0:
                row[j - 1] -= 1.0
            rows.append(row)
            rhs.append(table[i, j])
    res = linprog(
        -np.asarray(weights, dtype=float),
        A_ub=np.array(rows),
        b_ub=np.array(rhs),
        bounds=[(None, None)] * k,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise NumericError(f"potential LP failed: {res.message}")
    return float(-res.fun), np.asarray(res.x)


def kr_flow(table, weights, max_augment=100_000):
    """Min-cost transport of the positive part onto the negative part, with
    the base point (node 0) absorbing or supplying the net mass.

    Only direct edges source -> sink exist, so the value equals the LP value
    exactly when ``table`` satisfies the triangle inequality.
    Returns (value, plan) with plan[i, j] mass moved from node i to node j.
    """
    w = np.concatenate([[-float(np.sum(weights))], np.asarray(weights, dtype=float)])
    n = len(w)
    plan = np.zeros((n, n))
    if n == 1 or np.all(w == 0):
        return 0.0, plan
    src = np.flatnonzero(w > 0)
    snk = np.flatnonzero(w < 0)
    supply = w[src].copy()
    demand = -w[snk].copy()
    scale = max(supply.sum(), 1e-300)
    eps = 1e-15 * scale
    cost = table[np.ix_(src, snk)]
    # relaxations must beat this margin, which keeps round-off from forming negative cycles
    slack = 1e-12 * max(float(cost.max()), 1e-300)
    flow = np.zeros((src.size, snk.size))
    ns, nt = src.size, snk.size
    # node numbering: 0 = super source, 1..ns sources, ns+1..ns+nt sinks, last = super sink
    S, T = 0, ns + nt + 1
    N = T + 1
    for _ in range(max_augment):
        if supply.sum() <= eps:
            break
        dist = np.full(N, np.inf)
        prev = np.full(N, -1)
        dist[S] = 0.0
        for _ in range(N):
            changed = False
            for i in range(ns):
                if supply[i] > eps and dist[S] < dist[1 + i]:
                    dist[1 + i], prev[1 + i] = dist[S], S
                    changed = True
            for i in range(ns):
                u = 1 + i
                if not np.isfinite(dist[u]):
                    continue
                cand = dist[u] + cost[i]
                better = cand < dist[ns + 1:ns + 1 + nt] - slack
                if np.any(better):
                    idx = np.flatnonzero(better)
                    dist[ns + 1 + idx] = cand[idx]
                    prev[ns + 1 + idx] = u
                    changed = True
            for j in range(nt):
                v = ns + 1 + j
                if not np.isfinite(dist[v]):
                    continue
                back = flow[:, j] > eps
                cand = dist[v] - cost[:, j]
                better = back & (cand < dist[1:1 + ns] - slack)
                if np.any(better):
                    idx = np.flatnonzero(better)
                    dist[1 + idx] = cand[idx]
                    prev[1 + idx] = v
                    changed = True
                if demand[j] > eps and dist[v] < dist[T]:
                    dist[T], prev[T] = dist[v], v
                    changed = True
            if not changed:
                break
        if not np.isfinite(dist[T]):
            raise NumericError("min-cost flow found no augmenting path with supply left",
                               residual=float(supply.sum()))
        path = [T]
        while path[-1] != S:
            path.append(int(prev[path[-1]]))
            if len(path) > N + 1:
                raise NumericError("min-cost flow residual graph has a negative cycle")
        path.reverse()
        amount = np.inf
        for u, v in zip(path[:-1], path[1:]):
            if u == S:
                amount = min(amount, supply[v - 1])
            elif v == T:
                amount = min(amount, demand[u - ns - 1])
            elif u <= ns:
                pass
            else:
                amount = min(amount, flow[v - 1, u - ns - 1])
        for u, v in zip(path[:-1], path[1:]):
            if u == S:
                supply[v - 1] -= amount
            elif v == T:
                demand[u - ns - 1] -= amount
            elif u <= ns:
                flow[u - 1, v - ns - 1] += amount
            else:
                flow[v - 1, u - ns - 1] -= amount
    else:
        raise NumericError("min-cost flow exceeded its augmentation cap", residual=float(supply.sum()))
    plan[np.ix_(src, snk)] = flow
    return float(np.sum(flow * cost)), plan


@dataclass(frozen=True)
class KRResult:
    value: float
    lp_value: float
    flow_value: float
    potentials: np.ndarray
    plan: np.ndarray


def kr_solve(mu: Molecule, tol=AGREEMENT_TOL) -> KRResult:
    if mu.is_zero():
        return KRResult(0.0, 0.0, 0.0, np.zeros(0), np.zeros((1, 1)))
    table = mu.support_table()
    lp, pot = kr_lp(table, mu.weights)
    flow, plan = kr_flow(table, mu.weights)
    scale = max(1.0, abs(flow))
    if abs(lp - flow) > tol * scale:
        raise SolverDisagreement(
            f"KR solvers disagree: LP {lp!r} vs flow {flow!r}", residual=abs(lp - flow)
        )
    return KRResult(flow, lp, flow, pot, plan)


def kr_norm(mu: Molecule, tol=AGREEMENT_TOL) -> float:
    return kr_solve(mu, tol).value
