"""Pointed ambient metric spaces: R^n with l1/l2/linf, the Heisenberg group,
and finite metric tables (used for quotient spaces).

Points are numpy arrays of coordinates. Every space exposes the same small
surface: ``distance``, ``cdist``, ``geodesic_point``, ``translate``,
``dilate``, plus the JSON descriptor used by the CLI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist as _scipy_cdist

from . import heisenberg
from .errors import InputError

_P_METRIC = {1: "cityblock", 2: "euclidean", math.inf: "chebyshev"}


def _parse_p(p):
    if p in ("inf", "Inf", "infinity", math.inf):
        return math.inf
    try:
        p = int(p)
    except (TypeError, ValueError):
        raise InputError(f"unsupported l_p exponent {p!r}") from None
    if p not in (1, 2):
        raise InputError(f"unsupported l_p exponent {p!r}; expected 1, 2 or inf")
    return p


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise InputError(f"ball radius must be positive and finite, got {self.radius}")

    def to_dict(self):
        return {"center": [float(v) for v in self.center], "radius": float(self.radius)}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["center"], dtype=float), float(d["radius"]))


@dataclass(frozen=True, eq=False)
class BallSequence:
    """Ordered balls with optional density constants eps_n aligned to them.

    ``flags`` holds a per-ball note ("" when there is nothing to say), e.g.
    a density bound that is not yet valid after shrinking.
    """

    balls: tuple
    densities: "tuple | None" = None
    space: "AmbientSpace | None" = None
    flags: "tuple | None" = None

    def __post_init__(self):
        object.__setattr__(self, "balls", tuple(self.balls))
        if self.densities is not None:
            dens = tuple(float(e) for e in self.densities)
            if len(dens) != len(self.balls):
                raise InputError("densities must align with balls")
            if any(not (e >= 0) for e in dens):
                raise InputError("densities must be non-negative")
            object.__setattr__(self, "densities", dens)
        if self.flags is not None:
            if len(self.flags) != len(self.balls):
                raise InputError("flags must align with balls")
            object.__setattr__(self, "flags", tuple(str(f) for f in self.flags))

    def __len__(self):
        return len(self.balls)

    def __getitem__(self, i):
        return self.balls[i]

    @property
    def centers(self):
        return np.array([b.center for b in self.balls])

    @property
    def radii(self):
        return np.array([b.radius for b in self.balls])

    def to_dict(self):
        d = {"balls": [b.to_dict() for b in self.balls]}
        if self.densities is not None:
            d["densities"] = list(self.densities)
        if self.flags is not None:
            d["flags"] = list(self.flags)
        return d

    @classmethod
    def from_dict(cls, d, space=None):
        return cls([Ball.from_dict(b) for b in d["balls"]], d.get("densities"), space, d.get("flags"))


class AmbientSpace:
    """Common behaviour; concrete spaces implement ``cdist`` and friends."""

    kind: str
    dim: int
    is_geodesic = True

    @property
    def base_point(self):
        return np.zeros(self.dim)

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise InputError(f"point has {x.shape[-1]} coordinates, space {self.kind} expects {self.dim}")
        if not np.all(np.isfinite(x)):
            raise InputError("point coordinates must be finite")
        return x

    def distance(self, x, y) -> float:
        x = self.check_point(x)
        y = self.check_point(y)
        return float(self.cdist(x[None, :], y[None, :])[0, 0])

    def distances(self, x, ys):
        """Distances from one point to each row of ``ys``."""
        x = self.check_point(x)
        ys = self.check_point(np.atleast_2d(ys))
        return self.cdist(x[None, :], ys)[0]

    def pairwise(self, xs):
        xs = self.check_point(np.atleast_2d(xs))
        d = self.cdist(xs, xs)
        d = 0.5 * (d + d.T)
        np.fill_diagonal(d, 0.0)
        return d

    def geodesic_point(self, x, y, t):
        if not 0.0 <= t <= 1.0:
            raise InputError(f"geodesic parameter t must lie in [0, 1], got {t}")
        x = self.check_point(x)
        y = self.check_point(y)
        if t == 0.0:
            return x.copy()
        if t == 1.0:
            return y.copy()
        return self._geodesic(x, y, t)

    def dilate(self, x, lam):
        if not lam > 0:
            raise InputError(f"dilation factor must be positive, got {lam}")
        return self._dilate(self.check_point(x), lam)

    def grid_error(self, h):
        """Bound on how far a point of a pitch-h coordinate grid's region can
        be from the nearest grid node, in this metric (None if unknown)."""
        return None

    def box_half_widths(self, radius):
        """Coordinate half-widths of a box around the origin containing B(0, r)."""
        return np.full(self.dim, float(radius))

    def grid_in_ball(self, ball: Ball, h):
        """Nodes of a pitch-h coordinate grid aligned at the ball centre that
        lie inside the ball (the centre is always a node)."""
        raise NotImplementedError

    def sample_ball(self, ball: Ball, h):
        """Grid nodes inside the ball plus nodes of the surrounding band pushed
        radially onto the sphere, so boundary points are represented too."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class EuclideanSpace(AmbientSpace):
    dim: int
    p: float = 2

    kind = "euclidean"

    def __post_init__(self):
        if int(self.dim) < 1:
            raise InputError("dimension must be at least 1")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "p", _parse_p(self.p))

    def cdist(self, xs, ys):
        return _scipy_cdist(np.atleast_2d(xs), np.atleast_2d(ys), metric=_P_METRIC[self.p])

    def norm(self, v):
        return np.linalg.norm(np.asarray(v, dtype=float), ord=self.p, axis=-1)

    def _geodesic(self, x, y, t):
        # linear segment: one of many geodesics in l1/linf, chosen for determinism
        return x + t * (y - x)

    def translate(self, z, x):
        return self.check_point(z) + self.check_point(x)

    def _dilate(self, x, lam):
        return lam * x

    def grid_error(self, h):
        n = self.dim
        if self.p == 2:
            return h * math.sqrt(n) / 2.0
        if self.p == 1:
            return h * n / 2.0
        return h / 2.0

    def _mesh(self, radius, h, pad):
        m = int(math.floor(radius / h + 1e-9)) + pad
        axis = np.arange(-m, m + 1) * h
        return np.stack(np.meshgrid(*([axis] * self.dim), indexing="ij"), axis=-1).reshape(-1, self.dim)

    def grid_in_ball(self, ball, h):
        mesh = self._mesh(ball.radius, h, 0)
        keep = self.norm(mesh) <= ball.radius * (1 + 1e-12)
        return ball.center + mesh[keep]

    def sample_ball(self, ball, h):
        r = ball.radius
        mesh = self._mesh(r, h, 1 + int(self.dim))
        nrm = self.norm(mesh)
        inside = nrm <= r * (1 + 1e-12)
        band = ~inside & (nrm <= r + 2.0 * self.grid_error(h))
        pushed = mesh[band] * (r / nrm[band])[:, None]
        return ball.center + np.vstack([mesh[inside], pushed])

    def to_dict(self):
        return {"kind": "euclidean", "dim": self.dim, "p": "inf" if self.p == math.inf else int(self.p)}

    def __repr__(self):
        return f"EuclideanSpace(dim={self.dim}, p={self.to_dict()['p']})"


@dataclass(frozen=True, eq=False)
class HeisenbergSpace(AmbientSpace):
    """First Heisenberg group with its CC metric (normalisation: see
    ``liporos.heisenberg``)."""

    tol: float = heisenberg.DEFAULT_TOL
    max_iter: int = heisenberg.MAX_ITER

    kind = "heisenberg"
    dim = 3

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError("solver tolerance must be positive")

    def cdist(self, xs, ys):
        xs = np.atleast_2d(xs)
        ys = np.atleast_2d(ys)
        rel = heisenberg.relative(xs[:, None, :], ys[None, :, :])
        return heisenberg.cc_norm(rel, tol=self.tol, max_iter=self.max_iter)

    def _geodesic(self, x, y, t):
        return heisenberg.geodesic_point(x, y, t, tol=self.tol, max_iter=self.max_iter)

    def translate(self, z, x):
        return heisenberg.group_mul(self.check_point(z), self.check_point(x))

    def _dilate(self, x, lam):
        return heisenberg.dilate(x, lam)

    def box_half_widths(self, radius):
        return heisenberg.ball_box(radius)

    def grid_in_ball(self, ball, h):
        # grid is laid out in the ball's own frame (left-translated to the origin)
        half = self.box_half_widths(ball.radius)
        m = int(math.floor(ball.radius / h + 1e-9))
        axes = [np.arange(-m, m + 1) * h, np.arange(-m, m + 1) * h,
                np.linspace(-half[2], half[2], 2 * m + 1)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        keep = heisenberg.cc_norm(mesh, tol=self.tol) <= ball.radius * (1 + 1e-12)
        return heisenberg.group_mul(ball.center, mesh[keep])

    def sample_ball(self, ball, h):
        r = ball.radius
        m = int(math.floor(r / h + 1e-9)) + 1
        half = self.box_half_widths(r)
        axes = [np.arange(-m, m + 1) * h, np.arange(-m, m + 1) * h,
                np.linspace(-half[2], half[2], 2 * m - 1)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        nrm = heisenberg.cc_norm(mesh, tol=self.tol)
        inside = nrm <= r * (1 + 1e-12)
        band = ~inside & (nrm <= r + 2.0 * h)
        # anisotropic dilation moves a point radially in the CC metric
        pushed = heisenberg.dilate(mesh[band], r / nrm[band])
        return heisenberg.group_mul(ball.center, np.vstack([mesh[inside], pushed]))

    def to_dict(self):
        return {"kind": "heisenberg", "tol": self.tol}

    def __repr__(self):
        return f"HeisenbergSpace(tol={self.tol:g})"


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace(AmbientSpace):
    """A metric given by a table; points are 1-vectors holding the row index.

    Construction checks symmetry, zero diagonal and positivity only. The
    triangle inequality is left to callers (quotient construction checks it;
    the KR solver pair detects violations as a disagreement).
    """

    table: np.ndarray = field(repr=False)

    kind = "finite"
    dim = 1
    is_geodesic = False

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise InputError("distance table must be square")
        if not np.all(np.isfinite(t)):
            raise InputError("distance table must be finite")
        if np.any(np.diag(t) != 0):
            raise InputError("distance table must have a zero diagonal")
        if not np.allclose(t, t.T, rtol=0, atol=0):
            raise InputError("distance table must be symmetric")
        off = t[~np.eye(len(t), dtype=bool)]
        if np.any(off <= 0):
            raise InputError("distinct points must be at positive distance")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def size(self):
        return self.table.shape[0]

    @property
    def base_point(self):
        return np.zeros(1)

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 1:
            raise InputError("finite-metric points are 1-vectors holding an index")
        idx = x[..., 0]
        if np.any(idx != np.round(idx)) or np.any(idx < 0) or np.any(idx >= self.size):
            raise InputError("finite-metric point index out of range")
        return x

    def points(self):
        return np.arange(self.size, dtype=float)[:, None]

    def cdist(self, xs, ys):
        i = np.atleast_2d(xs)[:, 0].astype(int)
        j = np.atleast_2d(ys)[:, 0].astype(int)
        return self.table[np.ix_(i, j)]

    def _geodesic(self, x, y, t):
        raise InputError("finite metric spaces are not geodesic")

    def translate(self, z, x):
        raise InputError("finite metric spaces carry no group structure")

    def _dilate(self, x, lam):
        raise InputError("finite metric spaces carry no dilations")

    def to_dict(self):
        return {"kind": "finite", "table": self.table.tolist()}


def space_from_dict(d) -> AmbientSpace:
    """Build a space from its JSON descriptor."""
    kind = d.get("kind")
    if kind == "euclidean":
        return EuclideanSpace(int(d["dim"]), d.get("p", 2))
    if kind == "heisenberg":
        return HeisenbergSpace(tol=float(d.get("tol", heisenberg.DEFAULT_TOL)))
    if kind == "finite":
        return FiniteMetricSpace(np.asarray(d["table"], dtype=float))
    raise InputError(f"unknown space kind {kind!r}")
