"""Well-separated families and the ball extractor.

A family (A_n) is well separated with respect to x0 and lambda when
d(x, y) >= lambda (d(x, x0) + d(y, x0)) for x, y in different members.
Certificates below are closed-form lower bounds on the best lambda:

* balls: (d(p_i, p_j) - r_i - r_j) / (d(p_i, x0) + r_i + d(p_j, x0) + r_j)
* annuli {a <= d(x, c) <= b}: radial ranges s in [s_lo, s_hi] of d(x, x0)
  give d(x, y) >= s_x - s_y, hence (s_lo_i - s_hi_j) / (s_lo_i + s_hi_j)
* finite point sets: the exact minimum over all cross pairs.

``extract_well_separated`` turns a sequence of density witnesses into a
pairwise disjoint certified family by the usual case split on radii
(bounded / unbounded) and on the behaviour of the centres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ExtractionError, InputError
from .metric import PointCloud
from .porosity import density_profile
from .spaces import Ball, BallSequence

NOT_YET_VALID = "bound not yet valid"
_REL = 1e-12


@dataclass(frozen=True)
class Annulus:
    center: np.ndarray
    inner: float
    outer: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not (0 <= self.inner < self.outer and math.isfinite(self.outer)):
            raise InputError(f"annulus needs 0 <= inner < outer, got {self.inner}, {self.outer}")


@dataclass(frozen=True, eq=False)
class SeparationCertificate:
    base_point: np.ndarray
    lam: float
    witness: "tuple | None"  # (i, j, numerator, denominator) at the minimum
    kind: str
    bounds: np.ndarray  # pairwise certified values, inf on the diagonal
    touching: tuple = ()

    def __bool__(self):
        return self.lam > 0

    def to_dict(self):
        w = None
        if self.witness is not None:
            i, j, num, den = self.witness
            w = {"pair": [int(i), int(j)], "numerator": float(num), "denominator": float(den)}
        return {
            "base_point": [float(v) for v in self.base_point],
            "lambda": None if math.isinf(self.lam) else float(self.lam),
            "kind": self.kind,
            "witness": w,
            "touching": [[int(i), int(j)] for i, j in self.touching],
        }


def _finalise(x0, kind, num, den):
    """Pairwise num/den matrices -> certificate (non-positive numerators touch)."""
    k = num.shape[0]
    bounds = np.full((k, k), np.inf)
    touching = []
    for i in range(k):
        for j in range(i + 1, k):
            val = 0.0 if num[i, j] <= 0 else num[i, j] / den[i, j]
            if num[i, j] <= 0:
                touching.append((i, j))
            bounds[i, j] = bounds[j, i] = val
    iu = np.triu_indices(k, 1)
    m = int(np.argmin(bounds[iu]))
    i, j = int(iu[0][m]), int(iu[1][m])
    return SeparationCertificate(np.asarray(x0, dtype=float), float(bounds[i, j]),
                                 (i, j, float(num[i, j]), float(den[i, j])), kind, bounds, tuple(touching))


def _certify_balls(space, balls, x0):
    P = np.array([b.center for b in balls])
    r = np.array([b.radius for b in balls])
    D = space.pairwise(P)
    d0 = space.distances(x0, P)
    num = D - r[:, None] - r[None, :]
    den = (d0 + r)[:, None] + (d0 + r)[None, :]
    return _finalise(x0, "balls", num, den)


def _certify_annuli(space, annuli, x0):
    e = np.array([space.distance(a.center, x0) for a in annuli])
    inner = np.array([a.inner for a in annuli])
    outer = np.array([a.outer for a in annuli])
    lo = np.maximum.reduce([np.zeros_like(e), inner - e, e - outer])
    hi = outer + e
    k = len(annuli)
    num = np.zeros((k, k))
    den = np.ones((k, k))
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            # the member lying radially farther out comes first
            a, b = (i, j) if lo[i] >= hi[j] else (j, i)
            num[i, j] = lo[a] - hi[b]
            den[i, j] = lo[a] + hi[b] if lo[a] + hi[b] > 0 else 1.0
    return _finalise(x0, "annuli", num, den)


def _certify_points(space, sets, x0, chunk=1024):
    k = len(sets)
    d0 = [space.distances(x0, S) for S in sets]
    num = np.full((k, k), np.inf)
    den = np.ones((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            best = (np.inf, 1.0)
            for s in range(0, len(sets[i]), chunk):
                D = space.cdist(sets[i][s:s + chunk], sets[j])
                dd = d0[i][s:s + chunk, None] + d0[j][None, :]
                # pairs where both points are x0 carry no constraint
                live = dd > 0
                if not np.any(live):
                    continue
                ratio = np.where(live, D / np.where(live, dd, 1.0), np.inf)
                a, b = np.unravel_index(int(np.argmin(ratio)), ratio.shape)
                if ratio[a, b] * best[1] < best[0]:
                    best = (float(D[a, b]), float(dd[a, b]))
            num[i, j] = num[j, i] = best[0]
            den[i, j] = den[j, i] = best[1]
    cert = _finalise(x0, "points", num, den)
    return cert


def check_well_separated(space, members, x0) -> SeparationCertificate:
    """Certified separation constant of a family of balls, annuli or finite point sets."""
    if isinstance(members, BallSequence):
        members = list(members.balls)
    members = list(members)
    if len(members) < 2:
        raise InputError("separation needs at least two sets")
    x0 = space.check_point(x0)
    if all(isinstance(m, Ball) for m in members):
        return _certify_balls(space, members, x0)
    if all(isinstance(m, Annulus) for m in members):
        return _certify_annuli(space, members, x0)
    sets = [space.check_point(np.atleast_2d(np.asarray(m, dtype=float))) for m in members]
    if any(len(S) == 0 for S in sets):
        raise InputError("empty point set in separation check")
    return _certify_points(space, sets, x0)


def vacuous_certificate(x0, k=1):
    return SeparationCertificate(np.asarray(x0, dtype=float), math.inf, None, "balls", np.full((k, k), np.inf))


def shrink_balls(balls: BallSequence, lam, centers=None) -> BallSequence:
    """Inner balls B(q_n, lam r_n) with density bounds eps'_n = 2 eps_n / lam.

    The bound is only valid once eps_n <= lam; other balls are flagged.
    """
    if not 0 < lam < 1:
        raise InputError(f"shrink factor must lie in (0, 1), got {lam}")
    space = balls.space
    centers = balls.centers if centers is None else np.asarray(centers, dtype=float)
    if len(centers) != len(balls):
        raise InputError("one centre per ball is required")
    out = []
    for n, (b, q) in enumerate(zip(balls, centers)):
        off = 0.0 if space is None and np.array_equal(q, b.center) else space.distance(q, b.center)
        if off > (1 - lam) * b.radius * (1 + _REL):
            raise InputError(f"ball {n}: B(q, lam r) is not contained in the original ball")
        out.append(Ball(q, lam * b.radius))
    dens, flags = None, balls.flags
    if balls.densities is not None:
        dens = tuple(2.0 * e / lam for e in balls.densities)
        old = balls.flags or ("",) * len(balls)
        flags = tuple(NOT_YET_VALID if (e > lam or f == NOT_YET_VALID) else f
                      for e, f in zip(balls.densities, old))
    return BallSequence(out, dens, space, flags)


# ------------------------------------------------------------- extractor


@dataclass(frozen=True, eq=False)
class _Item:
    ball: Ball
    eps: float
    src: int
    flag: str = ""


@dataclass
class _Trace:
    entries: list = field(default_factory=list)

    def log(self, step, case, target, items, **extra):
        e = {"step": step, "paper_case": case, "constant_target": target,
             "indices": [int(it.src) for it in items]}
        e.update(extra)
        self.entries.append(e)


def _seq(items, space):
    return BallSequence([it.ball for it in items], [it.eps for it in items], space, [it.flag for it in items])


def _shrink(items, space, lam, centers=None):
    seq = shrink_balls(_seq(items, space), lam, centers)
    return [_Item(b, e, it.src, f) for b, e, f, it in zip(seq.balls, seq.densities, seq.flags, items)]


def _disjoint(space, balls, scale=1.0):
    """Strict pairwise disjointness of the balls with radii scaled by ``scale``."""
    if len(balls) < 2:
        return True
    P = np.array([b.center for b in balls])
    r = scale * np.array([b.radius for b in balls])
    D = space.pairwise(P)
    gap = D - r[:, None] - r[None, :]
    np.fill_diagonal(gap, np.inf)
    return bool(np.all(gap > 0))


def _greedy_disjoint(space, items, scale):
    keep = []
    for it in items:
        if all(space.distance(it.ball.center, k.ball.center) > scale * (it.ball.radius + k.ball.radius) for k in keep):
            keep.append(it)
    return keep


def _scale_filter(items, growing):
    keep = [items[0]]
    for it in items[1:]:
        last = keep[-1].ball.radius
        if (it.ball.radius > 8 * last) if growing else (it.ball.radius < last / 8):
            keep.append(it)
    return keep


def _recentre(cloud, p, r):
    """A point at distance 3r/4 from p on the geodesic towards the farthest cloud point."""
    space = cloud.space
    if not getattr(space, "is_geodesic", True):
        raise ExtractionError("re-centring needs a geodesic ambient space")
    d = cloud.distances_to(p)
    k = int(np.argmax(d))
    if d[k] < 0.75 * r:
        return None
    return space.geodesic_point(p, cloud.points[k], 0.75 * r / d[k])


def _longest_chain(space, items, growing):
    """Longest run of consecutive items whose half-balls meet and whose balls nest."""
    best, run = [], [items[0]]
    for prev, cur in zip(items[:-1], items[1:]):
        d = space.distance(prev.ball.center, cur.ball.center)
        meet = d <= 0.5 * (prev.ball.radius + cur.ball.radius)
        small, big = (prev, cur) if growing else (cur, prev)
        nested = space.distance(small.ball.center, big.ball.center) + small.ball.radius < big.ball.radius
        if meet and nested:
            run.append(cur)
        else:
            if len(run) > len(best):
                best = run
            run = [cur]
    return run if len(run) > len(best) else best


def _chain_recentre(cloud, chain, growing, trace):
    """B''_n = B(q_n, r_n / 8) along a nested chain; the innermost ball is kept whole."""
    space = cloud.space
    keep, centers, whole = [], [], None
    order = list(range(len(chain)))
    for pos in order:
        it = chain[pos]
        if (not growing and pos == len(chain) - 1) or (growing and pos == 0):
            whole = it
            continue
        nb = chain[pos + 1] if not growing else chain[pos - 1]
        p, r = it.ball.center, it.ball.radius
        if space.distance(p, nb.ball.center) >= r / 4:
            q = p
        else:
            q = _recentre(cloud, p, r)
            if q is None:
                trace.log("drop: no cloud point far enough to re-centre", "", None, [it])
                continue
        keep.append(it)
        centers.append(q)
    out = _shrink(keep, space, 1.0 / 8.0, centers) if keep else []
    out = out + [whole] if not growing else [whole] + out
    return sorted(out, key=lambda it: it.src)


def _disjointify(cloud, items, growing, trace, min_family, case):
    space = cloud.space
    if _disjoint(space, [it.ball for it in items]):
        trace.log("candidates already pairwise disjoint", case, None, items)
        return items
    halves = _greedy_disjoint(space, items, 0.5)
    if len(halves) >= min_family:
        out = _shrink(halves, space, 0.5)
        trace.log("greedy disjoint half-balls B'_n = B(p_n, r_n/2)", case, None, out)
        return out
    rel = "r_{n+1} > 8 r_n" if growing else "r_{n+1} < r_n / 8"
    filt = _scale_filter(items, growing)
    trace.log(f"subsequence with {rel}", case, None, filt)
    halves = _greedy_disjoint(space, filt, 0.5)
    if len(halves) >= min_family:
        out = _shrink(halves, space, 0.5)
        trace.log("greedy disjoint half-balls B'_n = B(p_n, r_n/2)", case, None, out)
        return out
    chain = _longest_chain(space, filt, growing)
    if len(chain) < 2:
        return halves
    trace.log("nested chain of pairwise meeting half-balls", case, None, chain)
    out = _chain_recentre(cloud, chain, growing, trace)
    trace.log("re-centred balls B''_n = B(q_n, r_n/8)", case, None, out)
    if not _disjoint(space, [it.ball for it in out]):
        raise ExtractionError("re-centred balls are not pairwise disjoint")
    return out


def _dist_low(space, ball, x0):
    return space.distance(ball.center, x0) - ball.radius


def _rad_up(space, ball, x0):
    return space.distance(ball.center, x0) + ball.radius


def _greedy(items, ok):
    keep = []
    for it in items:
        if all(ok(it, k) for k in keep):
            keep.append(it)
    return keep


def _subcases(cloud, items, growing, x0):
    """[(name, target, base point, items)] for every applicable subcase."""
    space = cloud.space
    lo = {id(it): _dist_low(space, it.ball, x0) for it in items}
    hi = {id(it): _rad_up(space, it.ball, x0) for it in items}
    out = []
    if not growing:
        away = [it for it in items if lo[id(it)] > 0]
        out.append(("Case 1: centres unbounded", 0.25, x0,
                    _greedy(away, lambda n, k: lo[id(n)] >= 2 * hi[id(k)])))
        out.append(("Case 1: centres accumulate at x0", 0.25, x0,
                    _greedy(away, lambda n, k: hi[id(n)] <= 0.5 * lo[id(k)])))
        P = np.array([it.ball.center for it in items])
        D = space.pairwise(P)
        off = D[~np.eye(len(items), dtype=bool)]
        theta = float(off.min())
        if theta > 0:
            disc = [it for it in items if it.ball.radius <= theta / 4]
            if len(disc) >= 2:
                Pd = np.array([it.ball.center for it in disc])
                Dd = space.pairwise(Pd)
                offd = Dd[~np.eye(len(disc), dtype=bool)]
                th, R = float(offd.min()), float(offd.max())
                out.append(("Case 1: centres uniformly discrete (x0 = p_1)", th / (4 * R), disc[0].ball.center, disc))
    else:
        far = [it for it in items if lo[id(it)] >= it.ball.radius]
        near = [it for it in items if lo[id(it)] < it.ball.radius]
        out.append(("Case 2: d(B_n, x0) >= r_n", 0.5, x0,
                    _greedy(far, lambda n, k: n.ball.radius >= 3 * hi[id(k)])))
        if len(near) >= 2:
            out.append(("Case 2: d(B_n, x0) <= r_n", 1.0 / 6.0, x0, near))
    return out


@dataclass(frozen=True, eq=False)
class Extraction:
    balls: BallSequence
    certificate: SeparationCertificate
    trace: list

    @property
    def indices(self):
        return list(self.trace[-1]["indices"])

    def to_dict(self):
        return {"balls": self.balls.to_dict(), "certificate": self.certificate.to_dict(), "trace": self.trace}


def extract_well_separated(cloud: PointCloud, candidates: BallSequence, x0=None, min_family=3,
                           h_fraction=1.0 / 32.0) -> Extraction:
    """Pairwise disjoint, certified well-separated family drawn from ``candidates``.

    Every output ball is a candidate, its concentric half, or a re-centred
    eighth; densities are carried through the shrinking bookkeeping. Fails
    with ExtractionError rather than emit an uncertified family.
    """
    space = cloud.space
    x0 = cloud.base if x0 is None else space.check_point(x0)
    n = len(candidates)
    if n == 0:
        raise ExtractionError("no candidate balls")
    trace = _Trace()
    eps = candidates.densities
    if eps is None:
        eps = tuple(density_profile(cloud, candidates, h_fraction=h_fraction).eps)
        trace.log("measured densities", "", None, [_Item(b, 0.0, i) for i, b in enumerate(candidates)])
    flags = candidates.flags or ("",) * n
    items = [_Item(b, float(e), i, f) for i, (b, e, f) in enumerate(zip(candidates.balls, eps, flags))]
    if n == 1:
        trace.log("single candidate (no pairs)", "vacuous", math.inf, items)
        return Extraction(_seq(items, space), vacuous_certificate(x0), trace.entries)

    P = candidates.centers
    r = candidates.radii
    if np.all(space.pairwise(P) == 0) and r.max() < 8 * r.min():
        raise ExtractionError("degenerate input: all candidates concentric with comparable radii")
    growing = bool(r.max() / r.min() >= 64 and r[-1] > r[0])
    case = "Case 2: radii unbounded" if growing else "Case 1: radii bounded"
    trace.log("classify radii", case, None, items, spread=float(r.max() / r.min()))

    items = _disjointify(cloud, items, growing, trace, min_family, case)
    if len(items) < min_family:
        raise ExtractionError(f"insufficient witnesses: {len(items)} usable after disjointification (need {min_family})")

    best = None
    for name, target, base, sub in _subcases(cloud, items, growing, x0):
        if len(sub) < 2:
            continue
        if "<= r_n" in name:
            sub = _shrink(sub, space, 0.5)
        cert = check_well_separated(space, [it.ball for it in sub], base)
        key = (cert.lam >= target, len(sub), cert.lam)
        if best is None or key > best[0]:
            best = (key, name, target, sub, cert)
    if best is None:
        raise ExtractionError("insufficient witnesses: no subcase keeps two balls")
    _, name, target, sub, cert = best
    if not _disjoint(space, [it.ball for it in sub]) or not cert.lam > 0:
        raise ExtractionError("extracted family failed its certificate")
    extra = {"lambda": float(cert.lam), "target_met": bool(cert.lam >= target)}
    if "discrete" in name:
        extra["note"] = "finite reading: theta and R measured from the retained centres"
    trace.log("select subcase and certify", name, float(target), sub, **extra)
    return Extraction(_seq(sub, space), cert, trace.entries)
