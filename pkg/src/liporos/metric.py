"""Finite point clouds, Lipschitz functions on them, quotient metrics and
nearest-point retractions."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InputError, InternalError
from .spaces import AmbientSpace, FiniteMetricSpace

_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Ordered, duplicate-free finite subset of an ambient space with a base point.

    ``parent``/``parent_indices`` are set on clouds produced by ``subcloud``
    so that block operations can be mapped back to the original cloud.
    """

    space: AmbientSpace
    points: np.ndarray
    base_index: int = 0
    parent: "PointCloud | None" = field(default=None, repr=False)
    parent_indices: "np.ndarray | None" = field(default=None, repr=False)

    def __post_init__(self):
        pts = self.space.check_point(np.atleast_2d(np.asarray(self.points, dtype=float)))
        if pts.shape[0] == 0:
            raise InputError("point cloud is empty")
        if not 0 <= int(self.base_index) < pts.shape[0]:
            raise InputError(f"base index {self.base_index} out of range for {pts.shape[0]} points")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise InputError("point cloud contains duplicate points")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "base_index", int(self.base_index))

    def __len__(self):
        return self.points.shape[0]

    @property
    def base(self):
        return self.points[self.base_index]

    @cached_property
    def dist(self) -> np.ndarray:
        """Full distance matrix (computed once)."""
        d = self.space.pairwise(self.points)
        d.setflags(write=False)
        return d

    def distances_to(self, x):
        return self.space.distances(x, self.points)

    def subcloud(self, indices, base_index=None):
        """Cloud on ``indices``; ``base_index`` is a position within ``indices``
        (defaults to the position of this cloud's base point, if present)."""
        idx = np.asarray(indices, dtype=int)
        if idx.size == 0:
            raise InputError("subcloud needs at least one point")
        if len(np.unique(idx)) != len(idx):
            raise InputError("subcloud indices must be distinct")
        if base_index is None:
            hits = np.flatnonzero(idx == self.base_index)
            if hits.size == 0:
                raise InputError("subcloud omits the base point; pass base_index explicitly")
            base_index = int(hits[0])
        root = self if self.parent is None else self.parent
        root_idx = idx if self.parent is None else self.parent_indices[idx]
        sub = PointCloud(self.space, self.points[idx], base_index, parent=root, parent_indices=root_idx)
        if "dist" in self.__dict__:
            sub.__dict__["dist"] = self.dist[np.ix_(idx, idx)]
        return sub

    def with_base(self, base_index):
        return PointCloud(self.space, self.points, base_index, self.parent, self.parent_indices)

    def dilated(self, lam):
        return PointCloud(self.space, self.space.dilate(self.points, lam), self.base_index)


@dataclass(frozen=True, eq=False)
class LipFunction:
    cloud: PointCloud
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.shape[0] != len(self.cloud):
            raise InputError(f"{v.shape[0]} values for a cloud of {len(self.cloud)} points")
        if not np.all(np.isfinite(v)):
            raise InputError("function values must be finite")
        if v[self.cloud.base_index] != 0.0:
            raise InputError("a Lip_0 function must vanish at the base point")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def rebased(cls, cloud, values):
        """Shift arbitrary values so they vanish at the base point."""
        v = np.asarray(values, dtype=float)
        return cls(cloud, v - v[cloud.base_index])

    @cached_property
    def norm(self) -> float:
        return lip_norm(self)

    def __add__(self, other):
        return LipFunction(self.cloud, self.values + other.values)

    def __mul__(self, s):
        return LipFunction(self.cloud, float(s) * self.values)

    __rmul__ = __mul__


def _max_slope(values, dist, rows=None):
    """Max |v_i - v_j| / d_ij over i != j; returns (value, i, j).

    Rows are processed in fixed-size chunks and the running argmax keeps the
    first maximal pair, so the result does not depend on chunking.
    """
    n = len(values)
    best, bi, bj = -1.0, 0, 0
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        d = dist[start:stop] if rows is None else rows(start, stop)
        diff = values[start:stop, None] - values[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = np.where(d > 0, diff / np.where(d > 0, d, 1.0), -np.inf)
        k = int(np.argmax(slope))
        i, j = divmod(k, n)
        if slope[i, j] > best:
            best, bi, bj = float(slope[i, j]), start + i, j
    return best, bi, bj


def lip_norm_pair(f: LipFunction):
    """Lipschitz constant of ``f`` together with an ordered pair attaining it."""
    if len(f.cloud) < 2:
        raise InputError("Lipschitz norm needs at least two points")
    val, i, j = _max_slope(f.values, f.cloud.dist)
    return max(val, 0.0), (i, j)


def lip_norm(f: LipFunction) -> float:
    return lip_norm_pair(f)[0]


def lip_constant_of_map(dist_domain, dist_image):
    """Exact Lipschitz constant of a map between finite spaces given both
    pairwise tables (image table indexed by domain points)."""
    n = dist_domain.shape[0]
    if n < 2:
        return 0.0, (0, 0)
    off = ~np.eye(n, dtype=bool)
    ratio = np.zeros_like(dist_domain)
    ratio[off] = dist_image[off] / dist_domain[off]
    k = int(np.argmax(ratio))
    i, j = divmod(k, n)
    return float(ratio[i, j]), (i, j)


@dataclass(frozen=True, eq=False)
class QuotientSpace:
    """M/A: points of M outside A plus one class point {A}, which is the base.

    ``members[k]`` is the parent index represented by quotient point k
    (``-1`` for the class point at position 0).
    """

    parent: PointCloud
    subset_indices: np.ndarray
    members: np.ndarray
    table: np.ndarray

    @cached_property
    def cloud(self) -> PointCloud:
        space = FiniteMetricSpace(self.table)
        return PointCloud(space, space.points(), base_index=0)

    def position(self, parent_index):
        hits = np.flatnonzero(self.members == parent_index)
        return 0 if hits.size == 0 else int(hits[0])


def _check_triangle(table, tol=1e-12):
    n = table.shape[0]
    for j in range(n):
        via = table[:, j, None] + table[None, j, :]
        bad = via < table - tol * np.maximum(1.0, table)
        if np.any(bad):
            i, k = np.argwhere(bad)[0]
            return int(i), int(j), int(k)
    return None


def quotient_metric(cloud: PointCloud, subset) -> QuotientSpace:
    """d(x, y) = min(d(x, y), d(x, A) + d(y, A)); d(x, {A}) = d(x, A)."""
    A = np.unique(np.asarray(subset, dtype=int))
    if A.size == 0:
        raise InputError("quotient needs a non-empty subset")
    if A.size >= len(cloud):
        raise InputError("quotient subset must not contain every point")
    if A.min() < 0 or A.max() >= len(cloud):
        raise InputError("subset index out of range")
    rest = np.setdiff1d(np.arange(len(cloud)), A)
    D = cloud.dist
    dA = D[np.ix_(rest, A)].min(axis=1)
    inner = np.minimum(D[np.ix_(rest, rest)], dA[:, None] + dA[None, :])
    n = rest.size + 1
    table = np.zeros((n, n))
    table[1:, 1:] = inner
    table[0, 1:] = dA
    table[1:, 0] = dA
    np.fill_diagonal(table, 0.0)
    bad = _check_triangle(table)
    if bad is not None:
        raise InternalError(f"quotient metric violates the triangle inequality at {bad}")
    members = np.concatenate([[-1], rest])
    table.setflags(write=False)
    return QuotientSpace(cloud, A, members, table)


@dataclass(frozen=True)
class Retraction:
    mapping: np.ndarray
    lip_constant: float
    worst_pair: tuple


def nearest_point_retraction(cloud: PointCloud, subset) -> Retraction:
    """Map every point to a nearest point of A (lowest index on ties) and
    measure the exact Lipschitz constant of that map over the cloud."""
    A = np.unique(np.asarray(subset, dtype=int))
    if A.size == 0:
        raise InputError("retraction needs a non-empty subset")
    D = cloud.dist
    # argmin returns the first minimiser and A is sorted, so ties go to the lowest index
    mapping = A[np.argmin(D[:, A], axis=1)]
    mapping[A] = A
    lip, pair = lip_constant_of_map(D, D[np.ix_(mapping, mapping)])
    return Retraction(mapping, lip, pair)


def dist_to_subset(cloud: PointCloud, subset):
    A = np.asarray(subset, dtype=int)
    return cloud.dist[:, A].min(axis=1)
