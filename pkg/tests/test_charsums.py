"""Kloosterman sums, bilinear forms, hyperbola and group-twisted sums,
and multiplicative energies of matrix families."""

import cmath
import math
import random
from collections import Counter
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from incidencelab import (
    InvalidArgumentError,
    TooLargeError,
    WeightedSet,
    bilinear_form,
    bilinear_form_direct,
    characters,
    energy_t2k,
    enumerate_gl2,
    group_twisted_sum,
    hyperbola_group,
    hyperbola_sum,
    intersection_char_sum,
    kloosterman,
    make_character,
    matrix_family,
    point_set,
    projective_lift_check,
    twisted_bound_rhs,
)
from incidencelab.modring import char_eval, mat2_det, mat2_inv, mat2_mul


def brute_hyperbola(chi, aa, bb, xx, yy, wa, wb):
    p = chi.p
    total = 0j
    for a in aa:
        for x in xx:
            for b in bb:
                for y in yy:
                    if (a + x) * (b + y) % p == 1:
                        total += wa[a] * wb[b] * char_eval(chi, (a + x) % p)
    return total


def random_disk_weights(rng, elems):
    out = {}
    for e in elems:
        r = math.sqrt(rng.random())
        t = 2.0 * math.pi * rng.random()
        out[e] = r * cmath.exp(1j * t)
    return out


# ---------------------------------------------------------------------------
# families and weighted sets


def test_matrix_family_validation():
    fam = matrix_family(5, [(6, 1, 0, 1), (1, 1, 0, 1)])
    assert len(fam) == 1  # (6,1,0,1) reduces to (1,1,0,1)
    with pytest.raises(InvalidArgumentError):
        matrix_family(6, [(1, 0, 0, 1)])
    with pytest.raises(InvalidArgumentError):
        matrix_family(5, [(1, 2, 2, 4)])  # singular
    with pytest.raises(InvalidArgumentError):
        matrix_family(5, [(1, 2, 3)])


def test_enumerate_gl2_size():
    got = enumerate_gl2(5)
    assert len(got) == (25 - 1) * (25 - 5)
    assert all(mat2_det(g, 5) != 0 for g in got[:50])
    with pytest.raises(InvalidArgumentError):
        enumerate_gl2(6)


def test_weighted_set_validation():
    base = point_set(7, [1, 2])
    WeightedSet(base, {1: 0.5, 2: 0.5j})
    with pytest.raises(InvalidArgumentError):
        WeightedSet(base, {1: 0.5})
    with pytest.raises(InvalidArgumentError):
        WeightedSet(base, {1: 2.0, 2: 0.0})
    with pytest.raises(InvalidArgumentError):
        WeightedSet(point_set(7, [(1, 2)]), {(1, 2): 1.0})


# ---------------------------------------------------------------------------
# Kloosterman sums


def test_gauss_law():
    # A pure n-twist of a non-principal character has magnitude exactly sqrt(p).
    for p in (7, 11, 13):
        for idx in (1, 2, (p - 1) // 2):
            chi = make_character(p, idx)
            for n in (1, 2, p - 1):
                assert abs(abs(kloosterman(chi, n, 0)) - math.sqrt(p)) < 1e-9


def test_weil_bound_exhaustive():
    for p in (7, 11):
        cap = 2.0 * math.sqrt(p)
        for chi in characters(p):
            for n in range(p):
                for m in range(p):
                    if n == 0 and m == 0:
                        continue
                    assert abs(kloosterman(chi, n, m)) <= cap + 1e-9


def test_complete_sum_cases():
    p = 11
    assert abs(kloosterman(make_character(p, 0), 0, 0) - (p - 1)) < 1e-12
    for idx in range(1, p - 1):
        assert abs(kloosterman(make_character(p, idx), 0, 0)) < 1e-9


def test_kloosterman_argument_symmetry():
    # Substituting x -> 1/x swaps the arguments for the principal character.
    chi0 = make_character(13, 0)
    for n, m in [(1, 2), (3, 5), (0, 4)]:
        assert cmath.isclose(kloosterman(chi0, n, m), kloosterman(chi0, m, n),
                             abs_tol=1e-9)


def test_kloosterman_reduces_arguments():
    chi = make_character(7, 2)
    assert cmath.isclose(kloosterman(chi, 8, -1), kloosterman(chi, 1, 6),
                         abs_tol=1e-12)


# ---------------------------------------------------------------------------
# bilinear forms


def test_bilinear_dual_routes_agree():
    rng = random.Random(17)
    p = 7
    for idx in (0, 1, 3):
        chi = make_character(p, idx)
        alpha = np.zeros(p, dtype=complex)
        beta = np.zeros(p, dtype=complex)
        for n in rng.sample(range(p), 4):
            alpha[n] = random_disk_weights(rng, [n])[n]
        for m in rng.sample(range(p), 3):
            beta[m] = random_disk_weights(rng, [m])[m]
        via_table = bilinear_form(chi, alpha, beta)
        direct = bilinear_form_direct(chi, alpha, beta)
        assert abs(via_table - direct) <= 1e-9 * max(1.0, abs(direct))


def test_bilinear_form_validates_length():
    chi = make_character(7, 1)
    with pytest.raises(InvalidArgumentError):
        bilinear_form(chi, np.ones(6), np.ones(7))


# ---------------------------------------------------------------------------
# hyperbola sums and the group encoding


def test_hyperbola_sum_matches_brute_force():
    rng = random.Random(5)
    p = 11
    chi = make_character(p, 3)
    aa, bb = [1, 3, 8], [2, 5, 6]
    xx, yy = [0, 1, 4, 9], [3, 7, 10]
    wa = random_disk_weights(rng, aa)
    wb = random_disk_weights(rng, bb)
    got = hyperbola_sum(chi, aa, bb, xx, yy, c_a=wa, c_b=wb)
    expected = brute_hyperbola(chi, aa, bb, xx, yy, wa, wb)
    assert abs(got.value - expected) < 1e-9
    assert math.isclose(got.trivial_bound, math.sqrt(9) * 12)


def test_hyperbola_sum_accepts_weighted_sets():
    p = 7
    chi = make_character(p, 1)
    base = point_set(p, [1, 2], weights={1: 0.5, 2: 0.5})
    plain = hyperbola_sum(chi, [1, 2], [3], [0, 1], [2, 4],
                          c_a={1: 0.5, 2: 0.5}).value
    carried = hyperbola_sum(chi, base, [3], [0, 1], [2, 4]).value
    assert cmath.isclose(plain, carried, abs_tol=1e-12)


def test_hyperbola_group_structure():
    p = 11
    aa, bb = [1, 3, 8], [2, 5, 6]
    fam = hyperbola_group(p, aa, bb)
    assert len(fam) == len(aa) * len(bb)  # the map (a, b) -> g is injective
    for g in fam.sorted_elements():
        assert mat2_det(g, p) == p - 1  # determinant -1


def test_hyperbola_encodes_as_group_twisted_sum():
    # With unit weights the hyperbola sum over (A, B, X, Y) is literally the
    # sum twisted by the family of maps x -> 1/(a + x) - b evaluated on (X, Y).
    p = 13
    chi = make_character(p, 2)
    aa, bb = [1, 4, 6], [2, 9]
    xx, yy = [0, 3, 5, 11], [1, 7, 8]
    plain = hyperbola_sum(chi, aa, bb, xx, yy).value
    encoded = group_twisted_sum(chi, hyperbola_group(p, aa, bb), xx, yy)
    assert abs(plain - encoded) < 1e-9


def test_group_twisted_sum_skips_poles():
    # A family element with gamma = 1, delta = -a hits a pole at a and must
    # contribute nothing there.
    p = 7
    chi = make_character(p, 1)
    fam = matrix_family(p, [(0, 1, 1, 5)])  # pole at a = 2
    total = group_twisted_sum(chi, fam, [2], list(range(p)))
    assert total == 0j


def test_group_twisted_sum_modulus_mismatch():
    chi = make_character(7, 1)
    fam = matrix_family(11, [(1, 0, 0, 1)])
    with pytest.raises(InvalidArgumentError):
        group_twisted_sum(chi, fam, [1], [1])


def test_projective_lift_check_passes():
    rng = random.Random(23)
    p = 7
    chi = make_character(p, 2)
    fam = matrix_family(p, [(1, 1, 0, 1), (2, 0, 0, 3), (0, 1, 6, 0)])
    aa, bb = [1, 2, 5], [3, 4]
    wa = random_disk_weights(rng, aa)
    wb = random_disk_weights(rng, bb)
    res = projective_lift_check(chi, fam, aa, bb, c_a=wa, c_b=wb)
    assert res.passed
    assert res.residual < 1e-8
    assert cmath.isclose(res.lifted, res.affine_scaled, abs_tol=1e-8)


# ---------------------------------------------------------------------------
# energies


FAMILY_F5 = [(1, 1, 0, 1), (2, 0, 0, 3), (0, 1, 4, 0)]


def brute_t2k(family, k):
    p = family.p
    mats = family.sorted_elements()
    hist = Counter()
    for combo in product(mats, repeat=2 * k):
        acc = (1, 0, 0, 1)
        for i in range(0, 2 * k, 2):
            step = mat2_mul(combo[i], mat2_inv(combo[i + 1], p), p)
            acc = mat2_mul(acc, step, p)
        hist[acc] += 1
    return sum(v * v for v in hist.values())


def test_energy_t2k_frozen_value():
    fam = matrix_family(5, FAMILY_F5)
    assert energy_t2k(fam, 2) == 675


def test_energy_t2k_matches_brute_force():
    fam = matrix_family(5, FAMILY_F5)
    assert energy_t2k(fam, 2) == brute_t2k(fam, 2)
    assert energy_t2k(fam, 3) == brute_t2k(fam, 3)
    pair = matrix_family(7, [(1, 2, 3, 4), (0, 1, 1, 0)])
    assert energy_t2k(pair, 2) == brute_t2k(pair, 2)


def test_energy_t2k_singleton():
    fam = matrix_family(5, [(2, 0, 0, 3)])
    # One element: every product collapses to the identity.
    assert energy_t2k(fam, 2) == 1
    assert energy_t2k(fam, 3) == 1


def test_energy_t2k_balanced_identity():
    # Centering the indicator shifts the energy by exactly |G|^(4k) / |GL_2|.
    fam = matrix_family(5, FAMILY_F5)
    gl2 = len(enumerate_gl2(5))
    for k in (2, 3):
        raw = energy_t2k(fam, k)
        expected = float(Fraction(raw) - Fraction(len(fam) ** (4 * k), gl2))
        got = energy_t2k(fam, k, balanced=True)
        assert math.isclose(got, expected, rel_tol=1e-8, abs_tol=1e-8)


def test_energy_t2k_guards():
    fam = matrix_family(5, FAMILY_F5)
    with pytest.raises(InvalidArgumentError):
        energy_t2k(fam, 4)
    with pytest.raises(TooLargeError):
        energy_t2k(fam, 2, cap=4)
    with pytest.raises(TooLargeError):
        energy_t2k(fam, 2, balanced=True, cap=1000)


def test_twisted_bound_rhs():
    assert twisted_bound_rhs(2, 0, 5, 3, 100.0) == 0.0
    assert twisted_bound_rhs(2, 4, 0, 3, 100.0) == 0.0
    expected = (math.sqrt(4 * 5 * 3) * 96.0 ** (1 / 16)
                + math.sqrt(20) * 3 * 5 ** (-1 / 4))
    assert math.isclose(twisted_bound_rhs(2, 4, 5, 3, 96.0), expected, rel_tol=1e-12)
    with pytest.raises(InvalidArgumentError):
        twisted_bound_rhs(2, -1, 5, 3, 10.0)
    with pytest.raises(InvalidArgumentError):
        twisted_bound_rhs(2, 1, 5, 3, -1.0)


# ---------------------------------------------------------------------------
# intersection sums


def test_intersection_multiplicative_known():
    p = 7
    chi0 = make_character(p, 0)
    # {1, 2, 4} is closed under inversion mod 7.
    res = intersection_char_sum(chi0, [1, 2, 4])
    assert res.intersection_size == 3
    assert abs(res.value - 3) < 1e-12
    assert res.dropped == 0
    assert math.isclose(res.comparison, 9 / 7)


def test_intersection_shifted_known():
    p = 7
    res = intersection_char_sum(make_character(p, 0), [1, 2, 4], variant="shifted")
    # inverses {1, 2, 4}; shifted by one {2, 3, 5}; intersection {2}.
    assert res.intersection_size == 1
    assert abs(res.value - 1) < 1e-12


def test_intersection_drops_zero():
    res = intersection_char_sum(make_character(7, 1), [0, 1, 6])
    assert res.dropped == 1
    assert res.intersection_size == 2  # 1 and 6 are self-inverse
    with pytest.raises(InvalidArgumentError):
        intersection_char_sum(make_character(7, 1), [1], variant="additive")
