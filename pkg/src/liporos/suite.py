"""The verification suite: one seeded check per acceptance criterion.

Each check returns a CriterionResult whose ``measured`` dict holds only
deterministic quantities (no timings), so that repeated runs with the same
seed serialise identically. ``size="full"`` uses the acceptance sizes;
``"quick"`` shrinks the randomized sample counts for the CLI default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import heisenberg
from .extraction import check_well_separated, extract_well_separated
from .kalton import KALTON_CONSTANT, kalton_decompose, reconstruct, weight_of_distance
from .kr import Molecule, kr_lp, kr_flow, kr_norm
from .metric import LipFunction, PointCloud, lip_norm, nearest_point_retraction, quotient_metric
from .operators import glue, mcshane_extend
from .porosity import covering_radius, verify_density_transfer
from .showcase import (LatticeSpec, build_annuli_family, build_lattice, verify_power_lattice,
                       verify_square_lattice_nonporous)
from .spaces import Ball, BallSequence, EuclideanSpace, HeisenbergSpace

SIZES = {
    "full": {"kalton_distances": 100_000, "kalton_molecules": 1000, "kr_molecules": 1000, "kr_pairs": 1000,
             "glue_families": 100, "annulus_samples": 1000, "annulus_pairs": 10_000, "extract_pairs": 10_000,
             "transfer_trials": 1000, "heis_triples": 1000, "mcshane": 100},
    "quick": {"kalton_distances": 10_000, "kalton_molecules": 40, "kr_molecules": 40, "kr_pairs": 200,
              "glue_families": 12, "annulus_samples": 200, "annulus_pairs": 2000, "extract_pairs": 2000,
              "transfer_trials": 40, "heis_triples": 100, "mcshane": 10},
}

NAMES = {
    1: "power lattice constants",
    2: "square lattice hole ratios",
    3: "dyadic decomposition",
    4: "KR solver agreement",
    5: "glue operator bound",
    6: "annuli separation",
    7: "ball extractor regimes",
    8: "density transfer",
    9: "Heisenberg metric",
    10: "McShane extension",
}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)

    def to_dict(self):
        return {"criterion": self.number, "name": self.name, "passed": bool(self.passed), "measured": self.measured}


def _rng(seed, k):
    return np.random.default_rng(np.random.SeedSequence([int(seed), k]))


# ------------------------------------------------------------ criteria


def check_power_lattice(seed=0, size="full", N=12):
    rep = verify_power_lattice(LatticeSpec.powers(2, N))
    # floating route through the generic metric tools, as a second reading
    cloud, A = build_lattice(LatticeSpec.powers(2, N))
    retr = nearest_point_retraction(cloud, A)
    q = quotient_metric(cloud, A)
    singles = [q.cloud.points[k:k + 1] for k in range(1, len(q.cloud))]
    cert = check_well_separated(q.cloud.space, singles, q.cloud.base)
    ok = rep.holds and retr.lip_constant <= 5 and cert.lam >= 0.2
    return CriterionResult(1, NAMES[1], ok, {
        "exact": rep.to_dict(),
        "retraction_lipschitz_float": retr.lip_constant,
        "quotient_lambda_float": cert.lam,
    })


def check_square_lattice(seed=0, size="full", n_values=(5, 10, 20)):
    rows = verify_square_lattice_nonporous(list(n_values))
    return CriterionResult(2, NAMES[2], all(r.holds for r in rows), {"rows": [r.to_dict() for r in rows]})


def _multiscale_cloud(rng, k, dim=2, lo=-8.0, hi=8.0):
    """Base point 0 plus k points whose distances to 0 are log-uniform in [2^lo, 2^hi]."""
    u = rng.normal(size=(k, dim))
    u /= np.linalg.norm(u, axis=1)[:, None]
    rad = np.exp2(rng.uniform(lo, hi, size=k))
    return np.vstack([np.zeros(dim), u * rad[:, None]])


def check_kalton(seed=0, size="full"):
    S = SIZES[size]
    rng = _rng(seed, 3)
    t = np.exp2(rng.uniform(-40, 40, size=S["kalton_distances"]))
    worst_pu = 0.0
    for x in t:
        m = math.frexp(x)[1] - 1
        total = sum(weight_of_distance(n, x) for n in range(m - 3, m + 4))
        worst_pu = max(worst_pu, abs(total - 1.0))
    space = EuclideanSpace(2, 2)
    worst_ratio, exact = 0.0, True
    for _ in range(S["kalton_molecules"]):
        k = int(rng.integers(2, 11))
        cloud = PointCloud(space, _multiscale_cloud(rng, k))
        mu = Molecule(cloud, np.arange(1, k + 1), rng.normal(size=k))
        dec = kalton_decompose(mu, check=False)
        back = reconstruct(dec.layers, cloud)
        exact &= np.array_equal(back.indices, mu.indices) and np.array_equal(back.weights, mu.weights)
        worst_ratio = max(worst_ratio, dec.ratio)
    ok = worst_pu <= 1e-12 and exact and worst_ratio <= KALTON_CONSTANT
    return CriterionResult(3, NAMES[3], ok, {
        "partition_of_unity_max_error": worst_pu,
        "reconstruction_exact": bool(exact),
        "max_layer_norm_ratio": worst_ratio,
        "bound": KALTON_CONSTANT,
    })


def _mixed_spaces():
    return [EuclideanSpace(2, 1), EuclideanSpace(2, 2), EuclideanSpace(3, "inf"), HeisenbergSpace()]


def check_kr(seed=0, size="full"):
    S = SIZES[size]
    rng = _rng(seed, 4)
    spaces = _mixed_spaces()
    worst_gap = 0.0
    for i in range(S["kr_molecules"]):
        space = spaces[i % len(spaces)]
        k = int(rng.integers(1, 11))
        cloud = PointCloud(space, np.vstack([np.zeros(space.dim), rng.normal(size=(k, space.dim))]))
        mu = Molecule(cloud, np.arange(1, k + 1), rng.normal(size=k))
        table = mu.support_table()
        lp, _ = kr_lp(table, mu.weights)
        fl, _ = kr_flow(table, mu.weights)
        worst_gap = max(worst_gap, abs(lp - fl))
    worst_pair = 0.0
    for i in range(S["kr_pairs"]):
        space = spaces[i % len(spaces)]
        P = np.vstack([np.zeros(space.dim), rng.normal(size=(2, space.dim)) * 3.0])
        cloud = PointCloud(space, P)
        mu = Molecule(cloud, [1, 2], [1.0, -1.0])
        worst_pair = max(worst_pair, abs(kr_norm(mu) - cloud.dist[1, 2]))
    ok = worst_gap <= 1e-8 and worst_pair <= 1e-10
    return CriterionResult(4, NAMES[4], ok, {"max_lp_flow_gap": worst_gap, "max_pair_error": worst_pair})


def _unit_block_function(rng, block):
    vals = rng.normal(size=len(block))
    vals -= vals[block.base_index]
    f = LipFunction(block, vals)
    return f * (1.0 / lip_norm(f))


def _ray_blocks(rng, n_blocks):
    """Point clusters around the base point at geometrically growing distances."""
    space = EuclideanSpace(2, 2)
    pts = [np.zeros(2)]
    owner = [-1]
    for b in range(n_blocks):
        centre = 4.0 ** b * np.array([math.cos(b), math.sin(b)]) * 3.0
        k = int(rng.integers(1, 6))
        pts.extend(centre + rng.uniform(-0.5, 0.5, size=(k, 2)) * 4.0 ** b)
        owner.extend([b] * k)
    cloud = PointCloud(space, np.array(pts))
    owner = np.array(owner)
    blocks = [np.concatenate([[0], np.flatnonzero(owner == b)]) for b in range(n_blocks)]
    return cloud, blocks


def check_glue(seed=0, size="full"):
    S = SIZES[size]
    rng = _rng(seed, 5)
    worst = -math.inf
    lams = []
    # lattice quotient: every singleton of M/A is a block with the class point
    cloud, A = build_lattice(LatticeSpec.powers(2, 8))
    q = quotient_metric(cloud, A).cloud
    q_blocks = [np.array([0, k]) for k in range(1, len(q))]
    q_cert = check_well_separated(q.space, [q.points[k:k + 1] for k in range(1, len(q))], q.base)
    for fam in range(S["glue_families"]):
        if fam % 4 == 0:
            c, blocks, cert = q, q_blocks, q_cert
        else:
            c, blocks = _ray_blocks(rng, int(rng.integers(2, 6)))
            sets = [c.points[b[1:]] for b in blocks]
            cert = check_well_separated(c.space, sets, c.base)
        fs = [_unit_block_function(rng, c.subcloud(b)) for b in blocks]
        g = glue(fs, cert, check=False)
        worst = max(worst, lip_norm(g) - 1.0 / cert.lam)
        lams.append(cert.lam)
    return CriterionResult(5, NAMES[5], bool(worst <= 1e-9 and q_cert.lam >= 0.2), {
        "max_excess_over_inverse_lambda": worst,
        "quotient_lambda": q_cert.lam,
        "min_lambda": min(lams),
    })


def _sample_in_ball(rng, space, ball, k):
    u = rng.normal(size=(k, space.dim))
    nrm = space.distances(np.zeros(space.dim), u)
    rad = ball.radius * rng.uniform(0, 1, size=k) ** (1.0 / space.dim)
    pts = ball.center + u / nrm[:, None] * rad[:, None]
    d = space.distances(ball.center, pts)
    return pts[d <= ball.radius]


def _sampled_ratio(rng, space, sets, x0, pairs):
    worst = math.inf
    k = len(sets)
    for _ in range(pairs):
        i, j = rng.choice(k, size=2, replace=False)
        x = sets[i][rng.integers(len(sets[i]))]
        y = sets[j][rng.integers(len(sets[j]))]
        den = space.distance(x, x0) + space.distance(y, x0)
        if den > 0:
            worst = min(worst, space.distance(x, y) / den)
    return worst


def check_annuli(seed=0, size="full", n_max=6):
    S = SIZES[size]
    space = EuclideanSpace(2, 2)
    fam = build_annuli_family(space, n_max, S["annulus_samples"], seed)
    closed = check_well_separated(space, fam.annuli, fam.base_point)
    exhaustive = check_well_separated(space, fam.sets, fam.base_point)
    sampled = _sampled_ratio(_rng(seed, 6), space, fam.sets, fam.base_point, S["annulus_pairs"])
    ok = closed.lam >= 1 / 16 and exhaustive.lam >= closed.lam and sampled >= closed.lam
    return CriterionResult(6, NAMES[6], ok, {
        "lambda_closed_form": closed.lam,
        "lambda_exhaustive": exhaustive.lam,
        "min_sampled_ratio": sampled,
        "target_constant": 1 / 16,
    })


def _grid_cloud_in(balls, extra, k=9):
    pts = [np.atleast_2d(extra)]
    for b in balls:
        t = np.linspace(-1, 1, k) * b.radius / math.sqrt(2)
        g = np.stack(np.meshgrid(t, t, indexing="ij"), -1).reshape(-1, 2)
        pts.append(g + b.center)
    return np.vstack(pts)


def extractor_regimes(n=6):
    """The two synthetic regimes: (cloud, candidates, x0, target) each."""
    space = EuclideanSpace(2, 2)
    z = np.array([1.0, 2.0])
    shrinking = [Ball(z + [3.0 * 8.0 ** -k, 0.0], 8.0 ** -k) for k in range(1, n + 1)]
    cloud_a = PointCloud(space, _grid_cloud_in(shrinking, [[50.0, 50.0]]))
    growing = [Ball(np.array([5.0 * 8.0 ** k, 0.0]), 8.0 ** k) for k in range(0, n + 1)]
    cloud_b = PointCloud(space, _grid_cloud_in(growing, [[-1.0, -1.0]]))
    return [
        ("shrinking", cloud_a, BallSequence(shrinking, space=space), z, 0.25),
        ("growing", cloud_b, BallSequence(growing, space=space), np.zeros(2), 0.5),
    ]


def check_extractor(seed=0, size="full"):
    S = SIZES[size]
    rng = _rng(seed, 7)
    out = {}
    ok = True
    for name, cloud, cands, x0, target in extractor_regimes():
        ex = extract_well_separated(cloud, cands, x0=x0)
        balls = list(ex.balls.balls)
        P = np.array([b.center for b in balls])
        r = np.array([b.radius for b in balls])
        D = cloud.space.pairwise(P)
        gap = D - r[:, None] - r[None, :]
        np.fill_diagonal(gap, np.inf)
        disjoint = bool(np.all(gap > 0))
        sets = [_sample_in_ball(rng, cloud.space, b, 400) for b in balls]
        sampled = _sampled_ratio(rng, cloud.space, sets, ex.certificate.base_point, S["extract_pairs"])
        good = ex.certificate.lam >= target and disjoint and sampled >= ex.certificate.lam
        ok &= good
        out[name] = {"lambda": ex.certificate.lam, "target": target, "disjoint": disjoint,
                     "min_sampled_ratio": sampled, "case": ex.trace[-1]["paper_case"],
                     "kept": ex.trace[-1]["indices"]}
    return CriterionResult(7, NAMES[7], bool(ok), out)


def check_transfer(seed=0, size="full"):
    S = SIZES[size]
    rng = _rng(seed, 8)
    space = EuclideanSpace(2, 2)
    fails = not_met = 0
    for _ in range(S["transfer_trials"]):
        R = float(rng.uniform(0.5, 5.0))
        c = rng.uniform(-10, 10, size=2)
        A = Ball(c, R)
        cloud = PointCloud(space, np.vstack([_sample_in_ball(rng, space, A, 80)[:50], c + [3 * R, 0]]))
        h = R / 32
        delta = covering_radius(cloud, A, h) + 2 * space.grid_error(h)
        if delta > R:
            not_met += 1
            continue
        s = float(rng.uniform(delta, R))
        off = _sample_in_ball(rng, space, Ball(np.zeros(2), R - s + 1e-300), 4)
        inner = Ball(c + (off[0] if len(off) else np.zeros(2)), s)
        rep = verify_density_transfer(cloud, A, delta, inner, min(h, s / 2))
        if rep.status == "fails":
            fails += 1
        elif rep.status != "holds":
            not_met += 1
    ok = fails == 0 and not_met == 0
    return CriterionResult(8, NAMES[8], ok, {"trials": S["transfer_trials"], "failures": fails,
                                             "hypothesis_not_met": not_met})


def check_heisenberg(seed=0, size="full"):
    S = SIZES[size]
    rng = _rng(seed, 9)
    H = HeisenbergSpace()
    tol = H.tol
    k = S["heis_triples"]
    x, y, z = (rng.normal(size=(k, 3)) for _ in range(3))
    d = heisenberg.cc_distance(x, y)
    inv = np.max(np.abs(heisenberg.cc_distance(heisenberg.group_mul(z, x), heisenberg.group_mul(z, y)) - d))
    lam = rng.uniform(0.5, 2.0, size=k)
    dil = np.max(np.abs(heisenberg.cc_distance(heisenberg.dilate(x, lam), heisenberg.dilate(y, lam)) - lam * d))
    vert = max(abs(H.distance(np.zeros(3), [0.0, 0.0, c]) - 2 * math.sqrt(math.pi * c)) for c in (1e-2, 1.0, 1e2))
    mid = 0.0
    for i in range(k):
        m = H.geodesic_point(x[i], y[i], 0.5)
        mid = max(mid, abs(H.distance(x[i], m) - d[i] / 2), abs(H.distance(m, y[i]) - d[i] / 2))
    ok = inv <= 10 * tol and dil <= 10 * tol and vert <= 1e-6 and mid <= 1e-6
    return CriterionResult(9, NAMES[9], bool(ok), {"left_invariance": float(inv), "dilation": float(dil),
                                                   "vertical": float(vert), "midpoint": float(mid), "solver_tol": tol})


def check_mcshane(seed=0, size="full"):
    S = SIZES[size]
    rng = _rng(seed, 10)
    spaces = _mixed_spaces()
    exact, worst = True, -math.inf
    for i in range(S["mcshane"]):
        space = spaces[i % len(spaces)]
        k = int(rng.integers(3, 30))
        cloud = PointCloud(space, np.vstack([np.zeros(space.dim), rng.normal(size=(k, space.dim))]))
        f = LipFunction.rebased(cloud, rng.normal(size=k + 1))
        L = lip_norm(f) * float(rng.choice([1.0, 1.5]))
        exact &= np.array_equal(mcshane_extend(f, cloud.points, L), f.values)
        Q = np.vstack([cloud.points, rng.normal(size=(200, space.dim)) * 1.5])
        F = mcshane_extend(f, Q, L)
        D = space.pairwise(Q)
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = np.where(D > 0, np.abs(F[:, None] - F[None, :]) / np.where(D > 0, D, 1), 0.0)
        worst = max(worst, float(slope.max()) - L)
    return CriterionResult(10, NAMES[10], bool(exact and worst <= 1e-9),
                           {"restriction_exact": bool(exact), "max_excess_slope": worst})


CHECKS = {1: check_power_lattice, 2: check_square_lattice, 3: check_kalton, 4: check_kr, 5: check_glue,
          6: check_annuli, 7: check_extractor, 8: check_transfer, 9: check_heisenberg, 10: check_mcshane}


def run_suite(seed=0, size="quick", criteria=None):
    if size not in SIZES:
        raise ValueError(f"unknown suite size {size!r}")
    nums = sorted(CHECKS) if criteria is None else list(criteria)
    return [CHECKS[k](seed=seed, size=size) for k in nums]
