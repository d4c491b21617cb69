"""Independent reference computations used as test oracles.

Nothing here imports the solvers under test: each oracle recomputes its
quantity from first principles (high-precision root finding, cumulative
distribution functions, exact gap bookkeeping) so that agreement is evidence
rather than tautology.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np

mpmath.mp.dps = 50


def cc_norm_mp(a, b, c):
    """Heisenberg CC norm of (a, b, c) by 50-digit bisection on the arc half-angle.

    Isoperimetric oracle: the minimiser over a chord of length rho enclosing
    area |c| is a circular arc with half-angle phi solving
    rho^2 (2 phi - sin 2 phi) / (8 sin^2 phi) = |c|, of length rho phi / sin phi.
    """
    a, b, c = (mpmath.mpf(float(v)) for v in (a, b, c))
    rho = mpmath.sqrt(a * a + b * b)
    c = abs(c)
    if c == 0:
        return float(rho)
    if rho == 0:
        return float(2 * mpmath.sqrt(mpmath.pi * c))
    q = c / (rho * rho)

    def mu(phi):
        return (2 * phi - mpmath.sin(2 * phi)) / (8 * mpmath.sin(phi) ** 2)

    if q <= mpmath.pi / 8:
        # phi in (0, pi/2]; arithmetic bisection
        lo, hi = mpmath.mpf(0), mpmath.pi / 2
        for _ in range(400):
            mid = (lo + hi) / 2
            if mu(mid) < q:
                lo = mid
            else:
                hi = mid
        phi = (lo + hi) / 2
        return float(rho * phi / mpmath.sin(phi))
    # psi = pi - phi may be astronomically small; geometric bisection on psi
    def mu_psi(psi):
        return (2 * mpmath.pi - 2 * psi + mpmath.sin(2 * psi)) / (8 * mpmath.sin(psi) ** 2)

    lo, hi = mpmath.mpf("1e-1000"), mpmath.pi / 2
    for _ in range(600):
        mid = mpmath.sqrt(lo * hi)
        if mu_psi(mid) < q:
            hi = mid
        else:
            lo = mid
    psi = mpmath.sqrt(lo * hi)
    return float(rho * (mpmath.pi - psi) / mpmath.sin(psi))


def kr_norm_line(points, weights):
    """KR norm of sum w_i delta(x_i) on the real line with base 0.

    On R the Wasserstein-1 cost equals the L1 norm of the cumulative mass
    function; the base point absorbs the net mass.
    """
    xs = np.concatenate([[0.0], np.asarray(points, dtype=float)])
    ws = np.concatenate([[-float(np.sum(weights))], np.asarray(weights, dtype=float)])
    order = np.argsort(xs, kind="stable")
    xs, ws = xs[order], ws[order]
    cum = np.cumsum(ws)[:-1]
    return float(np.sum(np.abs(cum) * np.diff(xs)))


def largest_gap_hole_1d(points, lo, hi):
    """Largest ball inside [lo, hi] missing the finite set ``points`` (exact, 1D)."""
    pts = sorted(p for p in points if lo <= p <= hi)
    if not pts:
        return (hi - lo) / 2
    best = max(pts[0] - lo, hi - pts[-1]) / 2
    for u, v in zip(pts, pts[1:]):
        best = max(best, (v - u) / 2)
    return best


def covering_radius_1d(points, lo, hi):
    """sup over t in [lo, hi] of the distance to the points inside [lo, hi] (exact)."""
    pts = sorted(p for p in points if lo <= p <= hi)
    best = max(pts[0] - lo, hi - pts[-1])
    for u, v in zip(pts, pts[1:]):
        best = max(best, (v - u) / 2)
    return best


def cantor_gaps(ratio, depth):
    """Intervals of the depth-``depth`` middle-gap Cantor construction in [0, 1]."""
    ratio = Fraction(ratio)
    ivs = [(Fraction(0), Fraction(1))]
    for _ in range(depth):
        nxt = []
        for a, b in ivs:
            w = (b - a) * ratio
            nxt += [(a, a + w), (b - w, b)]
        ivs = nxt
    return ivs


def dust_hole_1d(points, center, r):
    """Largest sub-interval radius of [center - r, center + r] missing ``points``."""
    return largest_gap_hole_1d(points, center - r, center + r)


def dust_uniform_fraction(coords, scale):
    """Exact min over probe centres p in the dust of the hole fraction at radius ``scale``.

    In the sup norm a square misses a product set iff one coordinate interval
    misses its factor, so the planar hole is the larger of two 1D holes and
    the worst probe sits where both factors are worst; for a symmetric
    product this reduces to the 1D minimum.
    """
    return min(dust_hole_1d(coords, p, scale) for p in coords) / scale


def fat_cantor_measure_exact(removed, depth):
    """Lebesgue measure after removing centred intervals of lengths removed[k] from each of 2^k pieces."""
    total = Fraction(1)
    for k in range(depth):
        total -= (2 ** k) * Fraction(removed[k])
    return total


def greedy_pairs_bruteforce(values, dist):
    """Max slope over all ordered pairs by plain iteration."""
    n = len(values)
    best = 0.0
    for i, j in itertools.permutations(range(n), 2):
        if dist[i][j] > 0:
            best = max(best, abs(values[i] - values[j]) / dist[i][j])
    return best


def l1_power_lattice_exact(N, a=lambda n: 2 ** n):
    """Points (a_m, a_n) as exact ints, the set A (m = 1 or n = 1) and the l1 table."""
    pts = [(a(m), a(n)) for m in range(1, N + 1) for n in range(1, N + 1)]
    A = [i for i, (x, y) in enumerate(pts) if x == a(1) or y == a(1)]
    D = [[abs(p[0] - q[0]) + abs(p[1] - q[1]) for q in pts] for p in pts]
    return pts, A, D


def sup_norm_distance(x, y):
    return max(abs(u - v) for u, v in zip(x, y))


def lebesgue_density_interval(intervals, x, r):
    """Exact fraction of [x - r, x + r] covered by disjoint ``intervals``."""
    lo, hi = x - r, x + r
    tot = 0.0
    for a, b in intervals:
        tot += max(0.0, min(b, hi) - max(a, lo))
    return tot / (2 * r)


def kalton_lambda(n, t):
    """Lambda_n(t) straight from the piecewise definition, in high precision."""
    t = mpmath.mpf(t)
    lo, mid, hi = mpmath.ldexp(1, n - 1), mpmath.ldexp(1, n), mpmath.ldexp(1, n + 1)
    if lo <= t <= mid:
        return float(t / lo - 1)
    if mid <= t <= hi:
        return float(2 - t / mid)
    return 0.0


def is_close(a, b, rel=1e-12, abs_=0.0):
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_)
