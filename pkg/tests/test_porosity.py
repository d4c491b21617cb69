import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liporos.errors import DomainError, InputError
from liporos.metric import PointCloud
from liporos.porosity import (BoxGrid, covering_radius, density_profile, doubling_estimate, hole_is_valid,
                              largest_hole, lebesgue_density_scan, porosity_profile, verify_density_transfer)
from liporos.showcase import (CantorDustSpec, FatCantorSpec, LatticeSpec, NetSpec, build_lattice, build_test_set,
                              cantor_intervals, fat_cantor_intervals)
from liporos.spaces import Ball, BallSequence, EuclideanSpace
from oracles import (cantor_gaps, covering_radius_1d, dust_hole_1d, dust_uniform_fraction, fat_cantor_measure_exact,
                     largest_gap_hole_1d, lebesgue_density_interval)

E1 = EuclideanSpace(1)
E2 = EuclideanSpace(2)
Einf = EuclideanSpace(2, "inf")


def cloud_of(points, space=E2):
    return PointCloud(space, np.asarray(points, dtype=float))


# ---------------------------------------------------------------- holes


def test_hole_in_empty_probe_is_the_probe():
    c = cloud_of([[100.0, 100.0]])
    probe = Ball([0.0, 0.0], 2.0)
    hole = largest_hole(c, probe, 0.25)
    assert hole.radius == 2.0 and np.array_equal(hole.center, probe.center)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_hole_around_the_centre_point(dim):
    S = EuclideanSpace(dim)
    probe = Ball(np.zeros(dim), 1.0)
    hole = largest_hole(PointCloud(S, np.zeros((1, dim))), probe, 1 / 16)
    assert hole.radius == pytest.approx(0.5, abs=1e-3)
    assert hole.radius <= 0.5 + 1e-12
    assert S.distance(hole.center, probe.center) == pytest.approx(0.5, abs=1e-3)


def test_unit_grid_sup_norm_hole_is_half():
    g = np.arange(-12, 13, dtype=float)
    c = cloud_of(np.stack(np.meshgrid(g, g), -1).reshape(-1, 2), Einf)
    h = 10 / 64
    hole = largest_hole(c, Ball([0.0, 0.0], 10.0), h)
    assert 0.5 - h <= hole.radius <= 0.5 + 1e-12
    assert hole_is_valid(c, hole)


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, math.inf]))
def test_holes_are_valid_and_near_the_1d_optimum(seed, p):
    rng = np.random.default_rng(seed)
    pts = np.unique(rng.uniform(-3, 3, size=(int(rng.integers(1, 12)), 1)), axis=0)
    c = PointCloud(EuclideanSpace(1, p), pts)
    probe = Ball([0.0], 2.0)
    h = 2.0 / 32
    hole = largest_hole(c, probe, h)
    exact = largest_gap_hole_1d(pts[:, 0].tolist(), -2.0, 2.0)
    assert hole_is_valid(c, hole)
    assert exact - h <= hole.radius <= exact + 1e-12


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_hole_monotone_under_adding_points(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, size=(15, 2))
    extra = rng.uniform(-1, 1, size=(5, 2))
    probe = Ball([0.0, 0.0], 1.0)
    h = 1 / 16
    small = largest_hole(cloud_of(pts), probe, h)
    big = largest_hole(cloud_of(np.vstack([pts, extra])), probe, h)
    assert big.radius <= small.radius + E2.grid_error(h)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.25, 2.0, 8.0]), st.sampled_from([1, 2, math.inf]))
def test_hole_dilation_equivariance(seed, lam, p):
    S = EuclideanSpace(2, p)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, size=(12, 2))
    probe = Ball(np.array([0.25, -0.5]), 1.0)
    h = 1 / 16
    a = largest_hole(PointCloud(S, pts), probe, h)
    b = largest_hole(PointCloud(S, lam * pts), Ball(lam * probe.center, lam), lam * h)
    assert b.radius == pytest.approx(lam * a.radius, rel=1e-12)
    assert np.allclose(b.center, lam * a.center, rtol=1e-12, atol=1e-12)


def test_hole_resolution_validation():
    c = cloud_of([[0.0, 0.0]])
    with pytest.raises(InputError):
        largest_hole(c, Ball([0.0, 0.0], 1.0), 0.5)


def test_square_lattice_witness_ball():
    # hole ratio in B((n^2, n^2), n^2) stays below 4/n
    n = 10
    cloud, _ = build_lattice(LatticeSpec.squares(16))
    r = float(n * n)
    h = r / 64
    hole = largest_hole(cloud, Ball([r, r], r), h)
    assert hole.ratio <= 4 / n + h / r


# ------------------------------------------------------------- profiles


def test_profile_is_deterministic_and_thread_independent():
    rng = np.random.default_rng(0)
    c = cloud_of(rng.uniform(0, 10, size=(200, 2)))
    a = porosity_profile(c, [0.5, 1, 2], 6, seed=3, workers=1)
    b = porosity_profile(c, [0.5, 1, 2], 6, seed=3, workers=4)
    assert a.to_dict() == b.to_dict()
    assert a.lambda_hat == [min(r.hole.ratio for r in a.records if r.scale == s) for s in a.scales]
    assert len(a.witnesses()) == 3


def test_profile_validation():
    c = cloud_of([[0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(InputError):
        porosity_profile(c, [2.0, 1.0], 2, seed=0)
    with pytest.raises(InputError):
        porosity_profile(c, [1.0], 0, seed=0)


def test_middle_half_dust_uniform_hole_fraction():
    # ratio 1/4 keeps the outer quarters, removing the middle half
    dust = build_test_set(CantorDustSpec(0.25, 5))
    scales = [4.0 ** -k for k in range(4, -1, -1)]
    rep = porosity_profile(dust, scales, 12, seed=1)
    assert min(rep.lambda_hat) >= 0.2


def test_dust_profile_matches_exact_gap_oracle():
    spec = CantorDustSpec(0.25, 6)
    dust = build_test_set(spec)
    left, length = cantor_intervals(spec.ratio, spec.depth)
    coords = (left + length / 2).tolist()
    scales = [0.25 ** k for k in range(5, -1, -1)]
    rep = porosity_profile(dust, scales, 8, seed=0)
    for rec in rep.records:
        p = rec.probe.center
        exact = max(dust_hole_1d(coords, p[0], rec.scale), dust_hole_1d(coords, p[1], rec.scale))
        h = rec.scale / 64
        assert exact - h <= rec.hole.radius <= exact + 1e-12
    for r, lam in zip(rep.scales, rep.lambda_hat):
        assert lam >= dust_uniform_fraction(coords, r) - 1 / 64
        assert lam >= 0.25


def test_dust_gap_oracle_self_consistency():
    # the exact Fraction construction agrees with the float generator
    left, length = cantor_intervals(0.25, 4)
    ivs = cantor_gaps(0.25, 4)
    assert np.allclose(left, [float(a) for a, _ in ivs])
    assert all(float(b - a) == length for a, b in ivs)


def test_net_holes_shrink_relative_to_scale():
    # interior probes of the unit net see holes of radius at most 1/2 (sup norm)
    net = build_test_set(NetSpec(1.0), box=([0, 0], [100, 100]))
    for r in (2.0, 4.0, 8.0, 16.0, 32.0):
        for centre in ([50.0, 50.0], [40.0, 63.0], [r, 100 - r]):
            hole = largest_hole(net, Ball(centre, r), r / 64)
            assert hole.ratio <= 0.5 / r + 1e-12


def test_net_profile_reports_large_scale_trend():
    # probes are cloud-centred, so some overhang the box; lambda_hat takes the minimum
    net = build_test_set(NetSpec(1.0), box=([0, 0], [400, 400]))
    rep = porosity_profile(net, [2.0, 4.0, 8.0, 16.0, 32.0], 16, seed=0)
    for r, lam in zip(rep.scales, rep.lambda_hat):
        assert lam <= 0.5 / r + 1e-12
    assert rep.non_porous_trend(0.05) == "large scales"


def test_dense_grid_has_small_holes():
    g = np.arange(0, 20.01, 0.1)
    c = cloud_of(np.stack(np.meshgrid(g, g), -1).reshape(-1, 2), Einf)
    rep = porosity_profile(c, [2.0, 4.0], 16, seed=2)
    interior = [rec for rec in rep.records if np.all(np.abs(rec.probe.center - 10) <= 10 - rec.scale)]
    assert interior
    for rec in interior:
        assert rec.hole.ratio <= 0.05 / rec.scale + 1e-12


# -------------------------------------------------------------- density


def test_covering_radius_single_centre_point():
    c = cloud_of([[0.0, 0.0]])
    h = 1 / 32
    v = covering_radius(c, Ball([0.0, 0.0], 1.0), h)
    assert 1.0 - 2 * E2.grid_error(h) <= v <= 1.0 + 1e-12


def test_covering_radius_grid_sup_norm():
    g = np.arange(-5, 5.01, 0.5)
    c = cloud_of(np.stack(np.meshgrid(g, g), -1).reshape(-1, 2), Einf)
    h = 3 / 64
    # the ball's boundary lies on grid lines, so the cloud inside covers it
    v = covering_radius(c, Ball([0.5, -1.0], 2.5), h)
    assert 0.25 - 2 * Einf.grid_error(h) <= v <= 0.25 + 1e-12


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_covering_radius_matches_1d_oracle(seed):
    rng = np.random.default_rng(seed)
    pts = np.unique(np.concatenate([[0.0], rng.uniform(-2, 2, size=int(rng.integers(1, 15)))]))
    c = PointCloud(E1, pts[:, None])
    h = 1 / 64
    v = covering_radius(c, Ball([0.0], 1.0), h)
    exact = covering_radius_1d(pts.tolist(), -1.0, 1.0)
    assert exact - 2 * E1.grid_error(h) <= v <= exact + 1e-12


def test_covering_radius_bounded_by_density():
    # the points inside the ball form a delta-net of it, so the value is at most delta
    rng = np.random.default_rng(4)
    g = np.linspace(3.0, 7.0, 21)
    pts = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
    pts = pts + rng.uniform(-0.01, 0.01, size=pts.shape) * (np.abs(pts - 5) < 1.9)
    c = cloud_of(pts, Einf)
    delta = 0.1 + 0.01
    assert covering_radius(c, Ball([5.0, 5.0], 2.0), 1 / 16) <= delta


def test_covering_radius_empty_ball_is_domain_error():
    c = cloud_of([[10.0, 10.0]])
    with pytest.raises(DomainError):
        covering_radius(c, Ball([0.0, 0.0], 1.0), 0.1)


def test_density_profile_flags_dense_sequences():
    g = np.arange(-40, 40.01, 0.5)
    c = cloud_of(np.stack(np.meshgrid(g, g), -1).reshape(-1, 2), Einf)
    balls = BallSequence([Ball([0.0, 0.0], r) for r in (2.0, 4.0, 8.0, 16.0)])
    prof = density_profile(c, balls, threshold=0.1)
    assert np.all(np.diff(prof.eps) <= 1e-12)
    assert prof.asymptotically_dense is True
    assert np.allclose(prof.eps * balls.radii, prof.covering)


# --------------------------------------------------------------- transfer


def test_transfer_trivial_when_delta_large():
    rng = np.random.default_rng(5)
    c = cloud_of(rng.uniform(-1, 1, size=(50, 2)))
    region = Ball([0.0, 0.0], 1.0)
    inner = Ball(c.points[np.argmin(np.linalg.norm(c.points, axis=1))], 0.2)
    rep = verify_density_transfer(c, region, 0.4, inner, 1 / 32)
    assert rep.status == "holds" and rep.detail.startswith("trivial")


def test_transfer_hypothesis_violations():
    rng = np.random.default_rng(6)
    c = cloud_of(rng.uniform(-1, 1, size=(50, 2)))
    region = Ball([0.0, 0.0], 1.0)
    rep = verify_density_transfer(c, region, 0.5, Ball([0.0, 0.0], 0.3), 1 / 32)
    # radius 0.3 < delta but diameter 0.6 > delta, so the transfer bound does not apply
    assert rep.status == "hypothesis not met" and "below delta" in rep.detail
    rep = verify_density_transfer(c, region, 0.5, Ball([0.9, 0.0], 0.5), 1 / 32)
    assert rep.status == "hypothesis not met"


def test_transfer_on_random_configurations():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 100:
        c = cloud_of(rng.uniform(-1, 1, size=(50, 2)))
        region = Ball([0.0, 0.0], 1.0)
        h = 1 / 32
        delta = covering_radius(c, region, h) + 2 * E2.grid_error(h) + rng.uniform(0, 0.1)
        s = rng.uniform(delta, max(delta, 1.0))
        if s >= 1.0:
            continue
        off = rng.normal(size=2)
        off *= rng.uniform(0, 1 - s) / np.linalg.norm(off)
        rep = verify_density_transfer(c, region, delta, Ball(off, s), h)
        assert rep.status == "holds", rep.detail
        checked += 1


# ------------------------------------------------------ measure / doubling


def test_density_scan_full_box_and_half_plane():
    n = 256
    full = BoxGrid(np.ones((n, n), bool), [0.0, 0.0], 1 / n)
    assert np.all(lebesgue_density_scan(full, [0.5, 0.5], [0.1, 0.2, 0.4]) == 1.0)
    half = BoxGrid(np.repeat((np.arange(n) < n // 2)[:, None], n, axis=1), [0.0, 0.0], 1 / n)
    for p in (math.inf, 2, 1):
        d = lebesgue_density_scan(half, [0.5, 0.5], [0.05, 0.1, 0.3], p=p)
        assert np.allclose(d, 0.5, atol=1 / n / 0.05)


def test_density_scan_validation():
    g = BoxGrid(np.ones((64, 64), bool), [0.0, 0.0], 1 / 64)
    with pytest.raises(InputError):
        lebesgue_density_scan(g, [2.0, 0.5], [0.25])
    with pytest.raises(InputError):
        lebesgue_density_scan(g, [0.5, 0.5], [0.05])


def test_fat_cantor_density_tends_to_one_at_set_points():
    spec = FatCantorSpec.quarter_powers(5)
    grid = build_test_set(spec)
    ivs = fat_cantor_intervals(spec)
    assert float(grid.mask.mean()) == float(fat_cantor_measure_exact(spec.removed, 5))
    fivs = [(float(a), float(b)) for a, b in ivs]
    for a, b in fivs[::7]:
        x = (a + b) / 2
        # windows stay inside the box, where the scan and the exact measure share a normaliser
        radii = [0.25 / 2 ** k for k in range(8)
                 if 0.25 / 2 ** k >= 8 * grid.pitch and 0 <= x - 0.25 / 2 ** k and x + 0.25 / 2 ** k <= 1]
        d = lebesgue_density_scan(grid, [x, 0.5], radii)
        exact = [lebesgue_density_interval(fivs, x, r) for r in radii]
        assert np.allclose(d, exact, atol=grid.pitch / min(radii))
        assert d[-1] == 1.0


@pytest.mark.parametrize("S, lo, hi", [(EuclideanSpace(1), 2, 3), (Einf, 4, 6)])
def test_doubling_examples(S, lo, hi):
    est = doubling_estimate(S, Ball(np.zeros(S.dim), 1.0))
    assert lo <= est <= hi


def test_doubling_estimate_scale_stable():
    vals = [doubling_estimate(E2, Ball(np.zeros(2), r)) for r in (1.0, 10.0, 100.0)]
    assert max(vals) <= 2 * min(vals)
