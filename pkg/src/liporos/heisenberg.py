"""Carnot-Caratheodory geometry of the first Heisenberg group.

Group law: (a, b, c) * (a', b', c') = (a + a', b + b', c + c' + (ab' - ba') / 2).
Horizontal curves then satisfy c' = (a b' - b a') / 2, so the vertical
coordinate of a curve leaving the origin is the signed area between the
curve and its chord. Length minimisers are circular arcs (isoperimetric
problem): an arc over a chord of length rho with half-angle phi has

    length  L   = rho * phi / sin(phi)
    area    |c| = rho**2 * (2 phi - sin 2 phi) / (8 sin(phi)**2)

and the distance is found by a bracketed solve for phi. Everything here is
vectorised over leading array dimensions.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError

DEFAULT_TOL = 1e-10
MAX_ITER = 200

# mu(pi/2) = pi/8 separates the two bisection variables below
_SWITCH = np.pi / 8.0


def group_mul(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a, b, c = x[..., 0], x[..., 1], x[..., 2]
    a2, b2, c2 = y[..., 0], y[..., 1], y[..., 2]
    return np.stack([a + a2, b + b2, c + c2 + 0.5 * (a * b2 - b * a2)], axis=-1)


def group_inv(x):
    return -np.asarray(x, dtype=float)


def relative(x, y):
    """x^{-1} * y without forming the inverse explicitly."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a, b, c = x[..., 0], x[..., 1], x[..., 2]
    a2, b2, c2 = y[..., 0], y[..., 1], y[..., 2]
    return np.stack([a2 - a, b2 - b, c2 - c - 0.5 * (a * b2 - b * a2)], axis=-1)


def dilate(x, lam):
    x = np.asarray(x, dtype=float)
    return np.stack([lam * x[..., 0], lam * x[..., 1], lam * lam * x[..., 2]], axis=-1)


def _two_phi_minus_sin(phi):
    """2 phi - sin(2 phi), with a series where the subtraction cancels."""
    u = 2.0 * phi
    small = np.abs(u) < 1e-2
    u2 = u * u
    series = u * u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0 * (1.0 - u2 / 72.0)))
    return np.where(small, series, u - np.sin(u))


def _u_minus_sin_over_u2(u):
    """(u - sin u) / u**2, finite at u = 0."""
    small = np.abs(u) < 1e-2
    u2 = u * u
    series = u / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0 * (1.0 - u2 / 72.0)))
    safe = np.where(small, 1.0, u)
    return np.where(small, series, (safe - np.sin(safe)) / (safe * safe))


def _area_ratio_phi(phi):
    s = np.sin(phi)
    return _two_phi_minus_sin(phi) / (8.0 * s * s)


def _area_ratio_psi(psi):
    # phi = pi - psi; 2 phi - sin 2 phi = 2 pi - 2 psi + sin 2 psi
    s = np.sin(psi)
    return (2.0 * np.pi - 2.0 * psi + np.sin(2.0 * psi)) / (8.0 * s * s)


def _solve_half_angle(q, tol, max_iter):
    """Solve mu(phi) = q for phi in [0, pi).

    Returns (phi, phi / sin(phi), relative width of the final length
    bracket); the length factor is formed in the active variable, since
    sin(pi - psi) loses all relative accuracy once psi is tiny. Two
    parametrisations keep the bracket well conditioned: phi itself for
    q <= pi/8, and psi = pi - phi beyond. Each step probes a pair of points
    straddling a secant-Newton estimate and keeps whichever sides they
    certify, falling back to the bisection midpoint when the estimate
    leaves the bracket; the bracket is therefore always valid.
    """
    q = np.asarray(q, dtype=float)
    low_branch = q <= _SWITCH
    lo = np.zeros_like(q)
    hi = np.full_like(q, np.pi / 2.0)

    def mu(v):
        # exact limits at v = 0: mu(phi) -> 0 and mu(psi) -> infinity
        zero = v == 0
        safe = np.where(zero, 1.0, v)
        val = np.where(low_branch, _area_ratio_phi(safe), _area_ratio_psi(safe))
        return np.where(zero, np.where(low_branch, 0.0, np.inf), val)

    def below(m):
        # True where the root lies above the probe; mu increases with phi, decreases with psi
        return np.where(low_branch, m < q, m > q)

    def length_factor(v):
        # phi / sin(phi) expressed in the active variable
        phi = np.where(low_branch, v, np.pi - v)
        sv = np.sin(v)
        return np.where(v == 0.0, np.where(low_branch, 1.0, np.inf), phi / np.where(sv == 0.0, 1.0, sv))

    # asymptotic roots: mu(phi) ~ phi / 6 as phi -> 0, mu(psi) ~ pi / (4 psi^2) as psi -> 0
    with np.errstate(divide="ignore"):
        guess = np.where(low_branch, 6.0 * q, np.sqrt(np.pi / (4.0 * np.maximum(q, _SWITCH))))
    x = np.clip(guess, 0.0, np.pi / 4.0)
    delta = 0.01 * x
    width = np.full_like(q, np.inf)
    # converged entries are frozen, so a result does not depend on its batch
    done = np.zeros(q.shape, dtype=bool)
    eps = np.finfo(float).eps
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(max_iter):
            live = ~done
            a = np.clip(x - delta, lo, hi)
            b = np.clip(x + delta, lo, hi)
            ma, mb = mu(a), mu(b)
            up_a, up_b = below(ma) & live, below(mb) & live
            dn_a, dn_b = ~below(ma) & live, ~below(mb) & live
            lo = np.where(up_a, np.maximum(lo, a), lo)
            hi = np.where(dn_a, np.minimum(hi, a), hi)
            lo = np.where(up_b, np.maximum(lo, b), lo)
            hi = np.where(dn_b, np.minimum(hi, b), hi)
            f_lo, f_hi = length_factor(lo), length_factor(hi)
            width = np.where(live, np.abs(f_hi - f_lo) / np.minimum(f_lo, f_hi), width)
            done |= (width <= tol * 1e-3) | (hi - lo <= 4 * eps * np.maximum(hi, 1e-300))
            if np.all(done):
                break
            slope = (mb - ma) / np.where(b == a, 1.0, b - a)
            nxt = a + (q - ma) / slope
            # geometric midpoint while the bracket spans orders of magnitude
            mid = np.where((lo > 0) & (hi > 4.0 * lo), np.sqrt(lo * hi), 0.5 * (lo + hi))
            ok = np.isfinite(nxt) & (nxt > lo) & (nxt < hi) & (b > a)
            step = np.abs(nxt - x)
            x = np.where(ok, nxt, mid)
            delta = np.where(ok, np.maximum(0.01 * step, 4 * eps * x), 0.25 * (hi - lo))
    v = 0.5 * (lo + hi)
    phi = np.where(low_branch, v, np.pi - v)
    return phi, length_factor(v), width


def cc_norm(g, tol=DEFAULT_TOL, max_iter=MAX_ITER, return_phi=False):
    """Distance from the identity to g (array of shape (..., 3))."""
    g = np.asarray(g, dtype=float)
    a, b, c = g[..., 0], g[..., 1], g[..., 2]
    rho = np.hypot(a, b)
    abs_c = np.abs(c)
    horizontal = abs_c == 0.0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        # dividing twice avoids underflow of rho**2; an infinite ratio means rho is negligible
        safe_rho = np.where(rho == 0.0, 1.0, rho)
        ratio = abs_c / safe_rho / safe_rho
        vertical = ~horizontal & ((rho == 0.0) | ~np.isfinite(ratio))
    generic = ~vertical & ~horizontal

    dist = np.where(vertical, 2.0 * np.sqrt(np.pi * abs_c), rho)
    phi = np.where(vertical, np.pi, 0.0)
    if np.any(generic):
        q = ratio[generic]
        ph, factor, width = _solve_half_angle(q, tol, max_iter)
        bad = width > tol
        if np.any(bad):
            raise NumericError(
                f"CC geodesic solver did not converge in {max_iter} iterations",
                residual=float(np.max(width)),
            )
        dist = dist.copy()
        phi = phi.copy()
        dist[generic] = rho[generic] * factor
        phi[generic] = ph
    if return_phi:
        return dist, phi
    return dist


def cc_distance(x, y, tol=DEFAULT_TOL, max_iter=MAX_ITER):
    return cc_norm(relative(x, y), tol=tol, max_iter=max_iter)


def geodesic_from_origin(g, t, tol=DEFAULT_TOL, max_iter=MAX_ITER):
    """Point at fraction t along the circular-arc lift from 0 to g."""
    g = np.asarray(g, dtype=float)
    a, b, c = g[0], g[1], g[2]
    length, phi = cc_norm(g, tol=tol, max_iter=max_iter, return_phi=True)
    length = float(length)
    phi = float(phi)
    if length == 0.0:
        return np.zeros(3)
    # signed curvature; |k| L = 2 phi
    k = np.sign(c) * 2.0 * phi / length
    theta0 = np.arctan2(b, a) - 0.5 * k * length
    s = t * length
    u = k * s
    half = 0.5 * u
    sinc = np.sinc(half / np.pi)
    x = s * np.cos(theta0 + half) * sinc
    y = s * np.sin(theta0 + half) * sinc
    z = 0.5 * s * s * float(_u_minus_sin_over_u2(np.asarray(u)))
    return np.array([x, y, z])


def geodesic_point(x, y, t, tol=DEFAULT_TOL, max_iter=MAX_ITER):
    x = np.asarray(x, dtype=float)
    # endpoints returned verbatim: a c-error of e costs ~2 sqrt(pi e) in distance
    if t == 0.0:
        return x.copy()
    if t == 1.0:
        return np.asarray(y, dtype=float).copy()
    step = geodesic_from_origin(relative(x, y), t, tol=tol, max_iter=max_iter)
    return group_mul(x, step)


def ball_box(radius):
    """Half-widths of a coordinate box containing the CC ball of this radius.

    |a|, |b| <= r since horizontal speed is 1; |c| <= r^2 / (2 pi) since a
    curve of length r and its chord enclose at most a half-disc of arc r.
    """
    return np.array([radius, radius, radius * radius / (2.0 * np.pi)])
