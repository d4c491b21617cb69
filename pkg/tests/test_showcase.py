from fractions import Fraction

import numpy as np
import pytest

from liporos.errors import InputError
from liporos.showcase import (FatCantorSpec, LatticeSpec, build_annuli_family, build_lattice,
                              build_test_set, cantor_intervals, fat_cantor_intervals, fat_cantor_measure,
                              square_truncation, verify_power_lattice, verify_square_lattice_nonporous)
from liporos.spaces import EuclideanSpace, HeisenbergSpace

from oracles import cantor_gaps, fat_cantor_measure_exact, l1_power_lattice_exact


def oracle_ratios(N, a=lambda n: 2 ** n):
    pts, A, D = l1_power_lattice_exact(N, a)
    dA = [min(D[i][k] for k in A) for i in range(len(pts))]
    four = max(Fraction(dA[i] + dA[j], D[i][j]) for i in range(len(pts)) for j in range(i))
    return four, dA


# ---------------------------------------------------------------- lattices


def test_powers_counting_example():
    cloud, A = build_lattice(LatticeSpec.powers(2, 3))
    assert len(cloud) == 9 and len(A) == 5
    assert np.array_equal(cloud.base, [2.0, 2.0])
    assert {tuple(cloud.points[i]) for i in A} == {(2, 2), (2, 4), (2, 8), (4, 2), (8, 2)}


def test_squares_and_linear_sequences():
    assert LatticeSpec.squares(4).sequence() == [1, 4, 9, 16]
    assert LatticeSpec.linear(1, 5).sequence() == [1, 2, 3, 4, 5]
    cloud, _ = build_lattice(LatticeSpec.squares(4))
    assert np.array_equal(cloud.points[-1], [16.0, 16.0])


@pytest.mark.parametrize("N", [2, 3, 6, 12])
def test_power_lattice_bounds_match_oracle(N):
    rep = verify_power_lattice(LatticeSpec.powers(2, N))
    four, _ = oracle_ratios(N)
    assert rep.holds
    assert rep["distance_to_A"].worst == four


def test_power_lattice_n12_frozen():
    # [DERIVED] exact extremal ratios at N = 12, frozen from the Fraction oracle
    rep = verify_power_lattice(LatticeSpec.powers(2, 12))
    assert rep["distance_to_A"].worst == Fraction(1535, 512)
    assert rep["retraction_lipschitz"].worst == Fraction(2047, 512)
    assert rep["quotient_separation"].worst == Fraction(512, 1535)


def test_linear_lattice_fails_four_bound():
    rep = verify_power_lattice(LatticeSpec.linear(1, 10), require_powers=False)
    chk = rep["distance_to_A"]
    assert not chk.holds
    four, _ = oracle_ratios(10, lambda n: n)
    assert chk.worst == four > 4
    i, j = chk.pair
    pts, A, D = l1_power_lattice_exact(10, lambda n: n)
    dA = [min(D[k][a] for a in A) for k in range(len(pts))]
    assert Fraction(dA[i] + dA[j], D[i][j]) == chk.worst


def test_lattice_spec_errors():
    with pytest.raises(InputError):
        LatticeSpec("cubes", 2, 5)
    with pytest.raises(InputError):
        LatticeSpec.powers(2, 1)
    with pytest.raises(InputError):
        LatticeSpec.powers(2, 5, metric="l2")
    with pytest.raises(InputError):
        LatticeSpec("polynomial", (5, -1), 4).sequence()
    with pytest.raises(InputError):
        verify_power_lattice(LatticeSpec.powers(3, 5))


@pytest.mark.parametrize("n", [5, 20])
def test_square_lattice_hole_ratio(n):
    (row,) = verify_square_lattice_nonporous([n])
    assert row.holds and row.ratio <= 4.0 / n + 2.0 / 64.0
    assert row.ratio > 0


def test_square_lattice_is_deterministic_and_checks_truncation():
    a = [r.to_dict() for r in verify_square_lattice_nonporous([5, 10])]
    b = [r.to_dict() for r in verify_square_lattice_nonporous([5, 10])]
    assert a == b
    with pytest.raises(InputError):
        verify_square_lattice_nonporous([20], N=square_truncation(20) - 1)


# ------------------------------------------------------------------ annuli


@pytest.mark.parametrize("space", [EuclideanSpace(2), EuclideanSpace(3, "inf"), HeisenbergSpace()],
                         ids=["l2", "linf", "heis"])
def test_annuli_family_in_shells(space):
    fam = build_annuli_family(space, 5, 50, seed=3)
    for n, P in zip(fam.n_values, fam.sets):
        d = space.distances(fam.base_point, P)
        assert d.min() >= 2.0 ** (-3 * n - 1) and d.max() <= 2.0 ** (-3 * n + 1)
    assert fam.certificate(space, exhaustive=False).lam >= 1 / 16
    assert fam.certificate(space).lam >= 1 / 16


def test_annuli_seed_determinism():
    s = EuclideanSpace(2)
    a, b = build_annuli_family(s, 4, 20, seed=7), build_annuli_family(s, 4, 20, seed=7)
    assert all(np.array_equal(x, y) for x, y in zip(a.sets, b.sets))
    with pytest.raises(InputError):
        build_annuli_family(s, 1, 20, seed=0)
    with pytest.raises(InputError):
        build_annuli_family(s, 3, 1, seed=0)


# ---------------------------------------------------------------- test sets


def test_cantor_intervals_match_oracle():
    left, length = cantor_intervals(0.25, 4)
    want = cantor_gaps(Fraction(1, 4), 4)
    assert [(Fraction(a), Fraction(a) + Fraction(length)) for a in left] == want


def test_fat_cantor_measure():
    spec = FatCantorSpec.quarter_powers(5)
    iv = fat_cantor_intervals(spec)
    exact = fat_cantor_measure_exact([Fraction(1, 4 ** (k + 1)) for k in range(5)], 5)
    assert fat_cantor_measure(iv, 0, 1) == exact
    assert len(iv) == 32


def test_fat_cantor_errors():
    with pytest.raises(InputError):
        FatCantorSpec([0.5, 0.5])
    with pytest.raises(InputError):
        FatCantorSpec([])


def test_unknown_test_set():
    with pytest.raises(InputError):
        build_test_set("sponge")
