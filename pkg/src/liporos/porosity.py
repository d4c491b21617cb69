"""Porosity and density as finite search problems.

A hole in a probe ball B(p, r) is a ball B(x, s) inside B(p, r) missing the
cloud; the best s is max_x min(d(x, cloud in B), r - d(x, p)). Covering
radii measure the opposite thing: how far a point of B can be from the
cloud inside B. Both are evaluated on coordinate grids of pitch h (with
local refinement for holes), so results are lower bounds whose slack is
controlled by ``space.grid_error(h)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, InputError
from .metric import PointCloud
from .spaces import Ball, BallSequence, EuclideanSpace

DEFAULT_H_FRACTION = 1.0 / 64.0
PROTOCOL_NOTE = (
    "probes are centred at cloud points; lambda_hat(r) is the minimum hole ratio "
    "over those probes only, a lower-bound protocol for the all-balls condition"
)


def worker_count():
    try:
        return max(1, int(os.environ.get("LIPOROS_THREADS", "1")))
    except ValueError:
        return 1


def _points_in_ball(cloud, ball):
    d = cloud.distances_to(ball.center)
    return cloud.points[d <= ball.radius]


class _Nearest:
    """Distance to a finite point set, via a k-d tree where the metric allows."""

    def __init__(self, space, pts):
        self.space = space
        self.pts = pts
        self.tree = None
        if isinstance(space, EuclideanSpace) and len(pts):
            self.tree = cKDTree(pts)

    def __call__(self, X):
        X = np.atleast_2d(X)
        if len(self.pts) == 0:
            return np.full(len(X), np.inf)
        if self.tree is not None:
            d, _ = self.tree.query(X, k=1, p=self.space.p)
            return d
        out = np.empty(len(X))
        for s in range(0, len(X), 2048):
            out[s:s + 2048] = self.space.cdist(X[s:s + 2048], self.pts).min(axis=1)
        return out


# ---------------------------------------------------------------- holes


@dataclass(frozen=True, eq=False)
class Hole:
    center: np.ndarray
    radius: float
    probe: Ball

    @property
    def ratio(self):
        return self.radius / self.probe.radius


def _check_h(probe, h, limit=4):
    if not (h > 0 and h <= probe.radius / limit * (1 + 1e-12)):
        raise InputError(f"resolution h={h} too coarse for radius {probe.radius} (need h <= r/{limit})")


def _axis_steps(space, probe, h):
    half = space.box_half_widths(probe.radius)
    return h * half / probe.radius


def largest_hole(cloud: PointCloud, probe: Ball, h, refine=True) -> Hole:
    """Largest ball B(x, s) inside ``probe`` avoiding the cloud (grid + refinement).

    The returned radius is attained at the returned centre, hence a valid
    lower bound on the true optimum.
    """
    _check_h(probe, h)
    space = cloud.space
    inside = _points_in_ball(cloud, probe)
    if len(inside) == 0:
        return Hole(probe.center.copy(), float(probe.radius), probe)
    nearest = _Nearest(space, inside)

    def score(X):
        X = np.atleast_2d(X)
        edge = probe.radius - space.distances(probe.center, X)
        return np.minimum(nearest(X), edge)

    nodes = space.grid_in_ball(probe, h)
    vals = score(nodes)
    best = int(np.argmax(vals))
    x, s = nodes[best].copy(), float(vals[best])
    if refine:
        x, s = _pattern_search(score, x, s, _axis_steps(space, probe, h))
    return Hole(x, max(s, 0.0), probe)


def _pattern_search(score, x, s, steps, min_scale=1.0 / 1024):
    """Coordinate descent with step halving; accepts strict improvements only."""
    dim = len(x)
    scale = 0.5
    eye = np.eye(dim)
    while scale >= min_scale:
        moves = np.vstack([eye * steps * scale, -eye * steps * scale])
        cand = x + moves
        vals = score(cand)
        k = int(np.argmax(vals))
        if vals[k] > s:
            x, s = cand[k], float(vals[k])
        else:
            scale *= 0.5
    return x, s


def hole_is_valid(cloud, hole, tol=1e-9):
    """Re-check a reported hole against the raw cloud: no cloud point of the
    probe strictly inside it, and containment in the probe."""
    space = cloud.space
    inside = _points_in_ball(cloud, hole.probe)
    clear = True if len(inside) == 0 else bool(space.distances(hole.center, inside).min() >= hole.radius - tol)
    contained = space.distance(hole.center, hole.probe.center) + hole.radius <= hole.probe.radius + tol
    return clear and contained


@dataclass(frozen=True, eq=False)
class ProbeRecord:
    scale: float
    probe_index: int
    probe: Ball
    hole: Hole

    def to_dict(self):
        return {
            "scale": self.scale,
            "probe_index": self.probe_index,
            "probe": self.probe.to_dict(),
            "hole_center": [float(v) for v in self.hole.center],
            "hole_radius": float(self.hole.radius),
            "ratio": float(self.hole.ratio),
        }


@dataclass(frozen=True, eq=False)
class PorosityReport:
    scales: list
    records: list
    lambda_hat: list
    resolutions: list
    seed: int
    note: str = PROTOCOL_NOTE

    def witnesses(self) -> BallSequence:
        """Per scale, the probe with the smallest hole ratio."""
        balls = []
        for r in self.scales:
            recs = [rec for rec in self.records if rec.scale == r]
            worst = min(recs, key=lambda rec: (rec.hole.ratio, rec.probe_index))
            balls.append(worst.probe)
        return BallSequence(balls)

    def non_porous_trend(self, threshold=0.05):
        """"large scales" or "small scales" when lambda_hat decays monotonically
        below ``threshold`` towards that end of the scale range, else None."""
        lam = np.asarray(self.lambda_hat)
        if len(lam) < 2:
            return None
        if np.all(np.diff(lam) <= 0) and lam[-1] <= threshold:
            return "large scales"
        if np.all(np.diff(lam) >= 0) and lam[0] <= threshold:
            return "small scales"
        return None

    def to_dict(self):
        return {
            "non_porous_trend": self.non_porous_trend(),
            "note": self.note,
            "seed": self.seed,
            "scales": [float(r) for r in self.scales],
            "resolutions": [float(h) for h in self.resolutions],
            "lambda_hat": [float(v) for v in self.lambda_hat],
            "records": [rec.to_dict() for rec in self.records],
            "witnesses": self.witnesses().to_dict(),
        }


def porosity_profile(cloud: PointCloud, scales, probes_per_scale, seed, h=None, h_fraction=DEFAULT_H_FRACTION,
                     workers=None) -> PorosityReport:
    """Hole ratios of cloud-centred probes across scales.

    Probe centres for scale k are drawn with a generator spawned from
    ``seed`` for that scale, so results do not depend on evaluation order or
    thread count.
    """
    scales = [float(r) for r in scales]
    if not scales or any(r <= 0 for r in scales) or scales != sorted(scales):
        raise InputError("scales must be positive and sorted")
    if probes_per_scale < 1:
        raise InputError("need at least one probe per scale")
    n = len(cloud)
    children = np.random.SeedSequence(seed).spawn(len(scales))
    jobs = []
    resolutions = []
    for r, child in zip(scales, children):
        rng = np.random.default_rng(child)
        idx = rng.choice(n, size=min(probes_per_scale, n), replace=False)
        hr = h if h is not None else r * h_fraction
        resolutions.append(hr)
        for k, i in enumerate(sorted(int(v) for v in idx)):
            jobs.append((r, k, Ball(cloud.points[i], r), hr))

    def run(job):
        r, k, probe, hr = job
        return ProbeRecord(r, k, probe, largest_hole(cloud, probe, hr))

    workers = workers or worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, jobs))
    else:
        records = [run(j) for j in jobs]
    lam = [min(rec.hole.ratio for rec in records if rec.scale == r) for r in scales]
    return PorosityReport(scales, records, lam, resolutions, int(seed))


# -------------------------------------------------------------- density


def covering_radius_point(cloud: PointCloud, ball: Ball, h):
    """(covering radius, farthest sample point) of cloud-in-ball inside the ball."""
    inside = _points_in_ball(cloud, ball)
    if len(inside) == 0:
        raise DomainError("ball sees no points; density is undefined")
    _check_h(ball, h, limit=2)
    nodes = cloud.space.sample_ball(ball, h)
    d = _Nearest(cloud.space, inside)(nodes)
    k = int(np.argmax(d))
    return float(d[k]), nodes[k]


def covering_radius(cloud: PointCloud, ball: Ball, h) -> float:
    """max over sampled x in the ball of d(x, cloud in ball).

    Sample nodes are a pitch-h grid plus boundary projections, so the result
    underestimates the true supremum by at most 2 * space.grid_error(h)
    (one grid_error for points whose nearest node lies inside the ball).
    """
    return covering_radius_point(cloud, ball, h)[0]


@dataclass(frozen=True, eq=False)
class DensityProfile:
    balls: BallSequence
    covering: np.ndarray
    eps: np.ndarray
    resolutions: np.ndarray
    asymptotically_dense: "bool | None" = None

    def to_dict(self):
        return {
            "balls": self.balls.to_dict(),
            "covering": [float(v) for v in self.covering],
            "eps": [float(v) for v in self.eps],
            "resolutions": [float(v) for v in self.resolutions],
            "asymptotically_dense": self.asymptotically_dense,
        }


def density_profile(cloud, balls, h=None, h_fraction=DEFAULT_H_FRACTION, threshold=None, tail=3) -> DensityProfile:
    """eps_n = covering radius of B_n / r_n for each ball.

    With ``threshold`` set, flags asymptotic density when the last ``tail``
    values are non-increasing and end below the threshold.
    """
    if isinstance(balls, Ball):
        balls = BallSequence([balls])
    cov, hs = [], []
    for i, b in enumerate(balls):
        hb = h if h is not None else b.radius * h_fraction
        try:
            cov.append(covering_radius(cloud, b, hb))
        except DomainError as exc:
            raise DomainError(f"ball {i}: {exc}") from exc
        hs.append(hb)
    cov = np.array(cov)
    eps = cov / balls.radii
    flag = None
    if threshold is not None:
        t = eps[-tail:]
        flag = bool(t[-1] < threshold and np.all(np.diff(t) <= 1e-12))
    return DensityProfile(BallSequence(balls.balls, tuple(eps), balls.space), cov, eps, np.array(hs), flag)


@dataclass(frozen=True, eq=False)
class TransferReport:
    status: str  # "holds", "fails" or "hypothesis not met"
    detail: str
    outer_covering: "float | None" = None
    inner_covering: "float | None" = None
    violating_point: "np.ndarray | None" = None

    def __bool__(self):
        return self.status == "holds"


def ball_contains(space, outer: Ball, inner: Ball, tol=1e-12):
    """Sufficient containment test d(c, c') + r' <= r."""
    return space.distance(outer.center, inner.center) + inner.radius <= outer.radius * (1 + tol)


def verify_density_transfer(cloud, region: Ball, delta, inner: Ball, h) -> TransferReport:
    """If cloud-in-region is delta-dense in the region, cloud-in-inner must be
    2 delta-dense in any inner ball of radius >= delta.

    Inner balls of diameter <= delta that see a cloud point hold trivially
    and are reported before the radius hypothesis is checked.

    The hypothesis is certified conservatively (grid estimate plus its
    worst-case slack must not exceed delta); the conclusion is checked as
    covering_radius(inner) <= 2 delta + grid_error(h).
    """
    space = cloud.space
    slack = space.grid_error(h)
    if slack is None:
        slack = h
    if not ball_contains(space, region, inner):
        return TransferReport("hypothesis not met", "inner ball is not contained in the region")
    if 2.0 * inner.radius <= delta and len(_points_in_ball(cloud, inner)):
        # any one point of a ball of diameter <= delta is delta-dense in it
        return TransferReport("holds", "trivial: inner diameter is at most delta")
    if inner.radius < delta:
        return TransferReport("hypothesis not met", "inner radius is below delta")
    try:
        outer_cov = covering_radius(cloud, region, h)
    except DomainError:
        return TransferReport("hypothesis not met", "region sees no cloud points")
    if outer_cov + 2.0 * slack > delta:
        return TransferReport("hypothesis not met", "cloud is not certifiably delta-dense in the region",
                              outer_covering=outer_cov)
    try:
        inner_cov, worst = covering_radius_point(cloud, inner, h)
    except DomainError:
        return TransferReport("fails", "inner ball sees no cloud points", outer_covering=outer_cov)
    if inner_cov <= 2.0 * delta + slack:
        return TransferReport("holds", "", outer_cov, inner_cov)
    return TransferReport("fails", "covering radius of the inner ball exceeds 2 delta",
                          outer_cov, inner_cov, worst)


# --------------------------------------------------- measure and doubling


@dataclass(frozen=True, eq=False)
class BoxGrid:
    """Boolean occupancy of the cells of a box; cell centres are
    lower + (i + 1/2) * pitch along each axis."""

    mask: np.ndarray
    lower: np.ndarray
    pitch: float

    def __post_init__(self):
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool))
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))

    @property
    def upper(self):
        return self.lower + self.pitch * np.array(self.mask.shape)

    def centers_along(self, axis):
        return self.lower[axis] + (np.arange(self.mask.shape[axis]) + 0.5) * self.pitch


def lebesgue_density_scan(grid: BoxGrid, point, radii, p=math.inf):
    """Fraction of cells with centre in B(point, r) that belong to the set."""
    point = np.asarray(point, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if point.shape != grid.lower.shape or np.any(point < grid.lower) or np.any(point > grid.upper):
        raise InputError("point lies outside the grid box")
    if grid.pitch > radii.min() / 8 * (1 + 1e-12):
        raise InputError("grid pitch must be at most min radius / 8")
    out = []
    for r in radii:
        sl, offs = [], []
        for ax in range(grid.mask.ndim):
            c = grid.centers_along(ax)
            lo = np.searchsorted(c, point[ax] - r, side="left")
            hi = np.searchsorted(c, point[ax] + r, side="right")
            sl.append(slice(lo, hi))
            offs.append(c[lo:hi] - point[ax])
        sub = grid.mask[tuple(sl)]
        mesh = np.meshgrid(*offs, indexing="ij")
        if p == math.inf:
            inball = np.ones(sub.shape, dtype=bool)
        else:
            nrm = np.sum([np.abs(m) ** p for m in mesh], axis=0) ** (1.0 / p)
            inball = nrm <= r
        total = int(inball.sum())
        out.append(float((sub & inball).sum()) / total if total else float("nan"))
    return np.array(out)


def doubling_estimate(space, ball: Ball, h=None) -> int:
    """Greedy cover of a discretised ball by balls of half the radius centred
    at sample points; an upper-bound estimate of the doubling constant."""
    h = ball.radius / 8 if h is None else h
    _check_h(ball, h, limit=8)
    nodes = space.sample_ball(ball, h)
    half = ball.radius / 2 * (1 + 1e-12)
    covers = np.vstack([space.cdist(nodes[s:s + 512], nodes) <= half for s in range(0, len(nodes), 512)])
    uncovered = np.ones(len(nodes), dtype=bool)
    count = 0
    while uncovered.any():
        gain = covers[:, uncovered].sum(axis=1)
        k = int(np.argmax(gain))
        uncovered &= ~covers[k]
        count += 1
    return count
