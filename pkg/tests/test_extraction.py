import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liporos.errors import ExtractionError, InputError
from liporos.extraction import (NOT_YET_VALID, Annulus, check_well_separated, extract_well_separated,
                                shrink_balls)
from liporos.metric import PointCloud
from liporos.showcase import build_annuli_family
from liporos.spaces import Ball, BallSequence, EuclideanSpace
from liporos.suite import extractor_regimes

E2 = EuclideanSpace(2)


def sampled_min_ratio(space, sets, x0):
    best = math.inf
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            D = space.cdist(sets[i], sets[j])
            dd = space.distances(x0, sets[i])[:, None] + space.distances(x0, sets[j])[None, :]
            best = min(best, float((D / dd).min()))
    return best


def sample_ball(rng, space, ball, k):
    u = rng.normal(size=(k, space.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return ball.center + u * (ball.radius * np.sqrt(rng.uniform(0, 1, size=(k, 1))))


# --------------------------------------------------------- certificates


def test_two_singletons_exact():
    x, y, x0 = np.array([3.0, 0.0]), np.array([0.0, 4.0]), np.zeros(2)
    cert = check_well_separated(E2, [x[None], y[None]], x0)
    assert cert.lam == pytest.approx(5.0 / 7.0, rel=1e-15)


def test_ball_formula():
    balls = [Ball([10.0, 0.0], 1.0), Ball([-20.0, 0.0], 2.0)]
    cert = check_well_separated(E2, balls, np.zeros(2))
    assert cert.lam == pytest.approx((30 - 3) / (10 + 1 + 20 + 2), rel=1e-15)
    touching = check_well_separated(E2, [Ball([0.0, 0.0], 1.0), Ball([1.5, 0.0], 1.0)], np.array([5.0, 5.0]))
    assert touching.lam == 0.0 and touching.touching == ((0, 1),)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_ball_certificate_is_sound(seed):
    rng = np.random.default_rng(seed)
    balls = [Ball(rng.uniform(-50, 50, size=2), float(rng.uniform(0.1, 3))) for _ in range(4)]
    x0 = rng.uniform(-50, 50, size=2)
    cert = check_well_separated(E2, balls, x0)
    sets = [sample_ball(rng, E2, b, 200) for b in balls]
    assert sampled_min_ratio(E2, sets, x0) >= cert.lam - 1e-12


def test_annuli_certificate_meets_sixteenth():
    fam = build_annuli_family(E2, 6, 1000, seed=0)
    closed = check_well_separated(E2, fam.annuli, fam.base_point)
    exhaustive = check_well_separated(E2, fam.sets, fam.base_point)
    assert closed.lam >= 1 / 16
    assert exhaustive.lam >= closed.lam
    assert closed.lam == pytest.approx(1 / 3, rel=1e-12)


def test_consecutive_annuli_distance():
    for n in range(1, 6):
        outer = math.ldexp(1.0, -3 * (n + 1) + 1)
        inner = math.ldexp(1.0, -3 * n - 1)
        assert inner - outer >= math.ldexp(1.0, -3 * n - 2)


def test_single_member_is_rejected():
    with pytest.raises(InputError):
        check_well_separated(E2, [Annulus(np.zeros(2), 1, 2)], np.zeros(2))


# ---------------------------------------------------------------- shrink


def test_shrink_halves_radii_and_quadruples_eps():
    seq = BallSequence([Ball([0.0, 0.0], 2.0), Ball([9.0, 0.0], 4.0)], densities=[0.1, 0.2], space=E2)
    out = shrink_balls(seq, 0.5)
    assert list(out.radii) == [1.0, 2.0]
    assert out.densities == pytest.approx((0.4, 0.8))


def test_shrink_limit_factor_two():
    seq = BallSequence([Ball([0.0, 0.0], 2.0)], densities=[0.1], space=E2)
    out = shrink_balls(seq, 1 - 1e-9)
    assert out.densities[0] == pytest.approx(0.2, rel=1e-8)


def test_shrink_flags_invalid_bounds():
    seq = BallSequence([Ball([0.0, 0.0], 2.0), Ball([9.0, 0.0], 1.0)], densities=[0.7, 0.1], space=E2)
    out = shrink_balls(seq, 0.5)
    assert out.flags == (NOT_YET_VALID, "")


def test_shrink_containment():
    seq = BallSequence([Ball([0.0, 0.0], 2.0)], space=E2)
    ok = shrink_balls(seq, 0.5, centers=[[1.0, 0.0]])
    assert np.array_equal(ok.centers[0], [1.0, 0.0])
    with pytest.raises(InputError):
        shrink_balls(seq, 0.5, centers=[[1.5, 0.0]])
    with pytest.raises(InputError):
        shrink_balls(seq, 1.5)


# -------------------------------------------------------------- extractor


@pytest.mark.parametrize("regime", extractor_regimes(), ids=lambda r: r[0])
def test_regimes_reach_case_constants(regime):
    name, cloud, cands, x0, target = regime
    ex = extract_well_separated(cloud, cands, x0=x0)
    assert ex.certificate.lam >= target
    assert ex.trace[-1]["target_met"] is True
    balls = list(ex.balls.balls)
    P = np.array([b.center for b in balls])
    r = np.array([b.radius for b in balls])
    gap = E2.pairwise(P) - r[:, None] - r[None, :]
    np.fill_diagonal(gap, np.inf)
    assert np.all(gap > 0)
    rng = np.random.default_rng(0)
    sets = [sample_ball(rng, E2, b, 300) for b in balls]
    assert sampled_min_ratio(E2, sets, ex.certificate.base_point) >= ex.certificate.lam - 1e-12
    expected = "Case 1" if name == "shrinking" else "Case 2"
    assert ex.trace[-1]["paper_case"].startswith(expected)


def test_trace_is_serialisable_and_ordered():
    name, cloud, cands, x0, _ = extractor_regimes()[1]
    ex = extract_well_separated(cloud, cands, x0=x0)
    import json
    json.dumps(ex.to_dict())
    for e in ex.trace:
        assert {"step", "paper_case", "constant_target", "indices"} <= set(e)
    assert ex.indices == ex.trace[-1]["indices"]


def test_single_candidate_is_vacuous():
    cloud = PointCloud(E2, np.array([[0.0, 0.0], [1.0, 0.0]]))
    cands = BallSequence([Ball([0.5, 0.0], 1.0)], densities=[0.5], space=E2)
    ex = extract_well_separated(cloud, cands)
    assert ex.certificate.lam == math.inf
    assert np.array_equal(ex.balls.centers, cands.centers)
    assert ex.certificate.to_dict()["lambda"] is None


def test_concentric_comparable_radii_is_degenerate():
    cloud = PointCloud(E2, np.array([[0.0, 0.0], [1.0, 0.0]]))
    cands = BallSequence([Ball([0.0, 0.0], r) for r in (1.0, 1.5, 2.0)], densities=[0.1] * 3, space=E2)
    with pytest.raises(ExtractionError, match="degenerate"):
        extract_well_separated(cloud, cands)


def test_insufficient_witnesses():
    cloud = PointCloud(E2, np.array([[0.0, 0.0], [1.0, 0.0], [100.0, 0.0]]))
    cands = BallSequence([Ball([0.0, 0.0], 1.0), Ball([0.5, 0.0], 1.0)], densities=[0.1, 0.1], space=E2)
    with pytest.raises(ExtractionError, match="insufficient"):
        extract_well_separated(cloud, cands)


def test_nested_chain_is_recentred():
    # growing balls all centred near the origin: half-balls meet, so the B'' step runs
    space = E2
    balls = [Ball([0.1 * 9.0 ** k, 0.0], 9.0 ** k) for k in range(5)]
    g = np.linspace(-1, 1, 41)
    grid = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
    cloud = PointCloud(space, np.unique(np.vstack([grid * b.radius + b.center for b in balls]), axis=0))
    ex = extract_well_separated(cloud, BallSequence(balls, space=space), x0=np.zeros(2),
                                min_family=3)
    steps = [e["step"] for e in ex.trace]
    assert any("B''" in s for s in steps)
    out = list(ex.balls.balls)
    P = np.array([b.center for b in out])
    r = np.array([b.radius for b in out])
    gap = space.pairwise(P) - r[:, None] - r[None, :]
    np.fill_diagonal(gap, np.inf)
    assert np.all(gap > 0) and ex.certificate.lam > 0


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_extraction_output_is_sound(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(3, 7))
    centres = rng.uniform(-100, 100, size=(k, 2))
    radii = rng.uniform(0.5, 3, size=k)
    balls = [Ball(c, float(r)) for c, r in zip(centres, radii)]
    pts = np.vstack([sample_ball(rng, E2, b, 30) for b in balls] + [[[500.0, 500.0]]])
    cloud = PointCloud(E2, pts)
    cands = BallSequence(balls, densities=[0.2] * k, space=E2)
    try:
        ex = extract_well_separated(cloud, cands, x0=np.array([400.0, -300.0]), min_family=2)
    except ExtractionError:
        return
    out = list(ex.balls.balls)
    assert all(any(np.allclose(b.center, c.center) or np.linalg.norm(b.center - c.center) <= c.radius
                   for c in balls) for b in out)
    sets = [sample_ball(rng, E2, b, 100) for b in out]
    assert sampled_min_ratio(E2, sets, ex.certificate.base_point) >= ex.certificate.lam - 1e-12
