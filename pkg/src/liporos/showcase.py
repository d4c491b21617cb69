"""Concrete examples: the lattices {(a_m, a_n)}, the dyadic annuli family and
synthetic porous / non-porous sets (nets, Cantor dust, fat Cantor products).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InputError
from .extraction import Annulus, check_well_separated
from .metric import PointCloud
from .porosity import BoxGrid, largest_hole
from .spaces import Ball, EuclideanSpace, HeisenbergSpace

# ------------------------------------------------------------- lattices


@dataclass(frozen=True)
class LatticeSpec:
    """a_n for n = 1..N from one of three rules.

    rule "powers": a_n = param ** n; "polynomial": a_n = sum_i param[i] n^i;
    "linear": a_n = param * n.
    """

    rule: str
    param: object
    N: int
    metric: str = "l1"

    def __post_init__(self):
        if self.rule not in ("powers", "polynomial", "linear"):
            raise InputError(f"unknown lattice rule {self.rule!r}")
        if self.metric not in ("l1", "linf"):
            raise InputError(f"lattice metric must be l1 or linf, got {self.metric!r}")
        if self.N < 2:
            raise InputError("lattice truncation N must be at least 2")

    @classmethod
    def powers(cls, base=2, N=12, metric="l1"):
        return cls("powers", base, N, metric)

    @classmethod
    def squares(cls, N, metric="linf"):
        return cls("polynomial", (0, 0, 1), N, metric)

    @classmethod
    def linear(cls, step=1, N=10, metric="l1"):
        return cls("linear", step, N, metric)

    def sequence(self):
        """a_1..a_N as Python numbers (ints whenever the rule has integer data)."""
        n = range(1, self.N + 1)
        if self.rule == "powers":
            a = [self.param ** k for k in n]
        elif self.rule == "polynomial":
            a = [sum(c * k ** i for i, c in enumerate(self.param)) for k in n]
        else:
            a = [self.param * k for k in n]
        if any(x < 0 for x in a) or any(y <= x for x, y in zip(a, a[1:])):
            raise InputError("lattice sequence must be non-negative and strictly increasing")
        return a

    @property
    def space(self):
        return EuclideanSpace(2, 1 if self.metric == "l1" else "inf")


def build_lattice(spec: LatticeSpec):
    """(cloud, A): all (a_m, a_n), base (a_1, a_1) at index 0, and the indices
    of the two boundary rows A = {(a_m, a_1)} u {(a_1, a_n)}.

    Point (a_m, a_n) sits at index (m - 1) N + (n - 1).
    """
    a = spec.sequence()
    N = spec.N
    pts = np.array([[a[m], a[n]] for m in range(N) for n in range(N)], dtype=float)
    A = sorted({m * N for m in range(N)} | set(range(N)))
    return PointCloud(spec.space, pts, 0), np.array(A)


def _int_coords(spec):
    a = spec.sequence()
    N = spec.N
    return [(a[m], a[n]) for m in range(N) for n in range(N)]


def _l1(x, y):
    return abs(x[0] - y[0]) + abs(x[1] - y[1])


@dataclass(frozen=True)
class BoundCheck:
    name: str
    bound: Fraction
    worst: Fraction  # extreme measured value (max ratio, or min separation)
    pair: tuple
    holds: bool

    def to_dict(self):
        return {"name": self.name, "bound": str(self.bound), "worst": str(self.worst),
                "worst_float": float(self.worst), "pair": list(self.pair), "holds": self.holds}


@dataclass(frozen=True)
class PowerLatticeReport:
    N: int
    checks: tuple

    @property
    def holds(self):
        return all(c.holds for c in self.checks)

    def __getitem__(self, name):
        return next(c for c in self.checks if c.name == name)

    def to_dict(self):
        return {"N": self.N, "holds": self.holds, "checks": [c.to_dict() for c in self.checks]}


def verify_power_lattice(spec: LatticeSpec, require_powers=True) -> PowerLatticeReport:
    """Exhaustive exact check of the three l1 constants of the power lattice.

    * d(x, A) + d(y, A) <= 4 d(x, y) for all x != y;
    * every nearest-point map onto A is 5-Lipschitz (worst choice over ties);
    * the singletons of M/A are well separated from the class {A} with 1/5.

    All arithmetic is on Python integers and Fractions.
    """
    if require_powers and not (spec.rule == "powers" and spec.param == 2):
        raise InputError("verify_power_lattice expects the powers(2) lattice")
    if spec.metric != "l1":
        raise InputError("the retraction constants are stated for the l1 metric")
    X = _int_coords(spec)
    N = spec.N
    A = sorted({m * N for m in range(N)} | set(range(N)))
    inA = set(A)
    dA = [min(_l1(x, X[a]) for a in A) for x in X]
    nearest = [[a for a in A if _l1(x, X[a]) == dA[i]] for i, x in enumerate(X)]
    n = len(X)

    four = (Fraction(0), (0, 0))
    retr = (Fraction(0), (0, 0))
    for i in range(n):
        for j in range(i + 1, n):
            d = _l1(X[i], X[j])
            r = Fraction(dA[i] + dA[j], d)
            if r > four[0]:
                four = (r, (i, j))
            far = max(_l1(X[a], X[b]) for a in nearest[i] for b in nearest[j])
            r = Fraction(far, d)
            if r > retr[0]:
                retr = (r, (i, j))

    rest = [i for i in range(n) if i not in inA]
    sep = (None, (0, 0))
    for s, i in enumerate(rest):
        for j in rest[s + 1:]:
            dq = min(_l1(X[i], X[j]), dA[i] + dA[j])
            r = Fraction(dq, dA[i] + dA[j])
            if sep[0] is None or r < sep[0]:
                sep = (r, (i, j))
    if sep[0] is None:
        sep = (Fraction(1), (0, 0))  # fewer than two singletons: vacuous
    checks = (
        BoundCheck("distance_to_A", Fraction(4), four[0], four[1], four[0] <= 4),
        BoundCheck("retraction_lipschitz", Fraction(5), retr[0], retr[1], retr[0] <= 5),
        BoundCheck("quotient_separation", Fraction(1, 5), sep[0], sep[1], sep[0] >= Fraction(1, 5)),
    )
    return PowerLatticeReport(N, checks)


@dataclass(frozen=True)
class SquareLatticeRow:
    n: int
    ball: Ball
    hole_radius: float
    ratio: float
    bound: float
    holds: bool

    def to_dict(self):
        return {"n": self.n, "ball": self.ball.to_dict(), "hole_radius": self.hole_radius,
                "ratio": self.ratio, "bound": self.bound, "holds": self.holds}


def square_truncation(n):
    """Smallest N such that the lattice reaches past the witness ball of index n."""
    k = math.isqrt(2 * n * n)
    return k + 2


def verify_square_lattice_nonporous(n_values, N=None, h_fraction=1.0 / 64.0, slack_factor=2.0):
    """Largest hole in B((n^2, n^2), n^2) (l_inf) against 4/n + slack_factor * h / r."""
    n_values = [int(v) for v in n_values]
    need = square_truncation(max(n_values))
    N = need if N is None else int(N)
    if N < need:
        raise InputError(f"truncation N={N} too small; need N >= {need} for n={max(n_values)}")
    cloud, _ = build_lattice(LatticeSpec.squares(N))
    rows = []
    for n in n_values:
        r = float(n * n)
        ball = Ball(np.array([r, r]), r)
        h = r * h_fraction
        hole = largest_hole(cloud, ball, h)
        bound = 4.0 / n + slack_factor * h / r
        rows.append(SquareLatticeRow(n, ball, float(hole.radius), float(hole.ratio), bound, hole.ratio <= bound))
    return rows


# --------------------------------------------------------------- annuli


@dataclass(frozen=True, eq=False)
class AnnuliFamily:
    n_values: list
    sets: list
    annuli: list
    base_point: np.ndarray

    def certificate(self, space, exhaustive=True):
        if exhaustive:
            return check_well_separated(space, self.sets, self.base_point)
        return check_well_separated(space, self.annuli, self.base_point)


def _unit_directions(space, k, rng):
    if isinstance(space, HeisenbergSpace):
        g = rng.normal(size=(k, 3))
        nrm = space.distances(space.base_point, g)
        return np.stack([space.dilate(x, 1.0 / s) for x, s in zip(g, nrm)])
    g = rng.normal(size=(k, space.dim))
    nrm = space.distances(np.zeros(space.dim), g)
    return g / nrm[:, None]


def build_annuli_family(space, n_max, samples_per_annulus, seed, n_min=1):
    """Point samples of R_{-3n} = {2^(-3n-1) <= d(x, 0) <= 2^(-3n+1)}, n_min..n_max.

    Radii are uniform in log scale. Two points per annulus lie exactly on
    the inner and outer spheres (along the first axis); the remaining
    directions are random and normalised in the space's own metric.
    """
    if n_max < 2:
        raise InputError("annuli family needs n_max >= 2")
    if samples_per_annulus < 2:
        raise InputError("need at least two samples per annulus")
    rng = np.random.default_rng(seed)
    base = space.base_point
    axis = np.zeros(space.dim)
    axis[0] = 1.0
    sets, annuli, ns = [], [], list(range(n_min, n_max + 1))
    for n in ns:
        lo, hi = math.ldexp(1.0, -3 * n - 1), math.ldexp(1.0, -3 * n + 1)
        k = samples_per_annulus - 2
        dirs = _unit_directions(space, k, rng) if k else np.zeros((0, space.dim))
        rho = np.exp2(rng.uniform(math.log2(lo), math.log2(hi), size=k))
        pts = [space.dilate(axis, lo), space.dilate(axis, hi)]
        pts += [space.dilate(u, s) for u, s in zip(dirs, rho)]
        P = np.array(pts)
        # normalisation round-off can leave a point an ulp outside; pull it back
        d = space.distances(base, P)
        fix = (d < lo) | (d > hi)
        for i in np.flatnonzero(fix):
            target = min(max(d[i], lo * (1 + 1e-15)), hi * (1 - 1e-15))
            P[i] = space.dilate(P[i], target / d[i])
        sets.append(P)
        annuli.append(Annulus(base, lo, hi))
    return AnnuliFamily(ns, sets, annuli, base)


# ------------------------------------------------------------ test sets


@dataclass(frozen=True)
class NetSpec:
    step: float = 1.0


@dataclass(frozen=True)
class CantorDustSpec:
    ratio: float = 0.25
    depth: int = 6
    dim: int = 2

    def __post_init__(self):
        if not 0 < self.ratio < 0.5:
            raise InputError("Cantor ratio must lie in (0, 1/2)")
        if self.depth < 1 or self.dim < 1:
            raise InputError("Cantor depth and dimension must be positive")


@dataclass(frozen=True)
class FatCantorSpec:
    """Remove from each interval of step k a centred open interval of
    absolute length removed[k - 1] (k = 1..depth)."""

    removed: tuple = field(default_factory=lambda: tuple(Fraction(1, 4 ** k) for k in range(1, 6)))
    depth: int = 5

    def __post_init__(self):
        rem = tuple(Fraction(r) for r in self.removed)
        object.__setattr__(self, "removed", rem)
        if len(rem) < self.depth:
            raise InputError("need one removed length per construction step")
        if any(r <= 0 for r in rem):
            raise InputError("removed lengths must be positive")
        total = sum(Fraction(2) ** k * r for k, r in enumerate(rem[: self.depth]))
        if total >= 1:
            raise InputError("removed lengths must sum (with multiplicity) below 1")

    @classmethod
    def quarter_powers(cls, depth=5):
        return cls(tuple(Fraction(1, 4 ** k) for k in range(1, depth + 1)), depth)


def cantor_intervals(ratio, depth):
    """Left endpoints and common length of the 2^depth intervals."""
    left = np.array([0.0])
    length = 1.0
    for _ in range(depth):
        new = length * ratio
        left = np.concatenate([left, left + length - new])
        length = new
    return np.sort(left), length


def fat_cantor_intervals(spec: FatCantorSpec):
    """Exact intervals [a, b] (Fractions) remaining after ``depth`` steps."""
    ivs = [(Fraction(0), Fraction(1))]
    for k in range(spec.depth):
        rem = spec.removed[k]
        nxt = []
        for a, b in ivs:
            if b - a <= rem:
                raise InputError(f"step {k + 1} removes more than an interval's length")
            mid = (a + b) / 2
            nxt += [(a, mid - rem / 2), (mid + rem / 2, b)]
        ivs = nxt
    return ivs


def fat_cantor_measure(intervals, lo, hi):
    """Exact length of (union of intervals) within [lo, hi]."""
    lo, hi = Fraction(lo), Fraction(hi)
    return sum((max(Fraction(0), min(b, hi) - max(a, lo)) for a, b in intervals), Fraction(0))


def _grid_pitch(intervals, max_cells):
    den = 1
    for a, b in intervals:
        den = math.lcm(den, a.denominator, b.denominator)
    if den > max_cells:
        raise InputError(f"exact grid needs {den} cells per axis (> {max_cells})")
    return Fraction(1, den)


def build_test_set(kind, box=None, seed=0, max_cells=4096):
    """Deterministic fixtures. ``box`` = (lower, upper) corners.

    NetSpec -> PointCloud of the step-lattice in the box.
    CantorDustSpec -> PointCloud of the interval centres of the product dust,
      scaled to the box (default unit cube).
    FatCantorSpec -> BoxGrid of C x [0, 1] with the exact pitch (the lcm of
      the endpoint denominators), scaled to the box (default unit square).
    ``seed`` is accepted for interface uniformity; none of these use randomness.
    """
    del seed
    if isinstance(kind, NetSpec):
        if box is None:
            raise InputError("a net needs an explicit box")
        lo, hi = (np.asarray(b, dtype=float) for b in box)
        if kind.step <= 0 or np.any(hi <= lo):
            raise InputError("net step and box must be positive")
        axes = [lo[i] + kind.step * np.arange(int(math.floor((hi[i] - lo[i]) / kind.step + 1e-9)) + 1)
                for i in range(lo.size)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lo.size)
        return PointCloud(EuclideanSpace(lo.size, "inf"), pts, 0)
    if isinstance(kind, CantorDustSpec):
        left, length = cantor_intervals(kind.ratio, kind.depth)
        c = left + length / 2
        lo = np.zeros(kind.dim) if box is None else np.asarray(box[0], dtype=float)
        hi = np.ones(kind.dim) if box is None else np.asarray(box[1], dtype=float)
        axes = [lo[i] + (hi[i] - lo[i]) * c for i in range(kind.dim)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, kind.dim)
        return PointCloud(EuclideanSpace(kind.dim, "inf"), pts, 0)
    if isinstance(kind, FatCantorSpec):
        ivs = fat_cantor_intervals(kind)
        pitch = _grid_pitch(ivs, max_cells)
        n = int(1 / pitch)
        centres = [(Fraction(2 * i + 1, 2) * pitch) for i in range(n)]
        inside = np.zeros(n, dtype=bool)
        j = 0
        for i, x in enumerate(centres):
            while j < len(ivs) and ivs[j][1] < x:
                j += 1
            inside[i] = j < len(ivs) and ivs[j][0] <= x <= ivs[j][1]
        lo = np.zeros(2) if box is None else np.asarray(box[0], dtype=float)
        hi = np.ones(2) if box is None else np.asarray(box[1], dtype=float)
        if not np.isclose(hi[0] - lo[0], hi[1] - lo[1]):
            raise InputError("fat Cantor grid needs a square box")
        mask = np.repeat(inside[:, None], n, axis=1)
        return BoxGrid(mask, lo, float(pitch) * (hi[0] - lo[0]))
    raise InputError(f"unknown test-set kind {kind!r}")
