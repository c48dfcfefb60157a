"""Arithmetic layer: factorization, totients, characters, transforms."""

import cmath
import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incidencelab import (
    Character,
    InvalidArgumentError,
    InvalidModulusError,
    as_modulus,
    balanced,
    char_eval,
    characters,
    coprime_tuples,
    dft,
    dlog_table,
    factorize,
    idft,
    inv_mod,
    is_prime,
    jordan_totient,
    make_character,
    mobius,
    primitive_root,
    units,
)
from incidencelab.modring import IDENTITY2, mat2_det, mat2_inv, mat2_mul

moduli = st.integers(min_value=2, max_value=200)
small_primes = st.sampled_from([3, 5, 7, 11, 13, 17, 19, 23])


def brute_jordan(k, q):
    # Independent oracle: count k-tuples jointly coprime with q directly.
    return sum(1 for t in product(range(q), repeat=k) if math.gcd(*t, q) == 1)


def test_factorize_fields():
    m = factorize(12)
    assert m.q == 12
    assert m.factors == ((2, 2), (3, 1))
    assert m.least_prime == 2
    assert m.omega == 2
    assert m.tau == 6
    assert not m.is_prime
    assert factorize(13).is_prime
    assert int(m) == 12


def test_factorize_rejects_bad_input():
    for bad in (1, 0, -5):
        with pytest.raises(InvalidModulusError):
            factorize(bad)


@given(moduli)
def test_factorize_reconstructs(q):
    m = factorize(q)
    prod = 1
    for p, e in m.factors:
        assert is_prime(p)
        prod *= p**e
    assert prod == q


def test_as_modulus_idempotent():
    m = factorize(10)
    assert as_modulus(m) is m
    assert as_modulus(10) == m


def test_is_prime_small():
    primes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29}
    assert {n for n in range(31) if is_prime(n)} == primes


def test_jordan_totient_known_values():
    assert jordan_totient(2, 6) == 24
    assert jordan_totient(2, 5) == 24
    assert jordan_totient(2, 3) == 8
    assert jordan_totient(1, 12) == 4
    assert jordan_totient(3, 1) == 1


@given(st.integers(min_value=1, max_value=3), st.integers(min_value=2, max_value=30))
def test_jordan_totient_matches_brute_count(k, q):
    assert jordan_totient(k, q) == brute_jordan(k, q)


def test_jordan_totient_rejects_bad_order():
    with pytest.raises(InvalidArgumentError):
        jordan_totient(0, 7)


@given(moduli, st.integers(min_value=0, max_value=500))
def test_inv_mod(q, a):
    got = inv_mod(a, q)
    if math.gcd(a, q) == 1:
        assert got is not None and a * got % q == 1
    else:
        assert got is None


def test_units():
    assert units(12) == (1, 5, 7, 11)
    assert units(7) == (1, 2, 3, 4, 5, 6)
    assert len(units(30)) == jordan_totient(1, 30)


def test_coprime_tuples_dimension_one_is_ints():
    got = coprime_tuples(6, 1)
    assert got == [1, 5]
    assert all(isinstance(x, int) for x in got)


def test_coprime_tuples_counts_match_jordan():
    for q, n in [(6, 2), (5, 2), (9, 2), (12, 3)]:
        assert len(coprime_tuples(q, n)) == jordan_totient(n, q)


def test_coprime_tuples_includes_noncoprime_components():
    # (2, 3) mod 6: neither entry is a unit, but jointly coprime with 6.
    assert (2, 3) in coprime_tuples(6, 2)
    assert (2, 4) not in coprime_tuples(6, 2)


def test_primitive_root_small():
    assert primitive_root(3) == 2
    assert primitive_root(7) == 3
    assert primitive_root(11) == 2
    assert primitive_root(23) == 5


@given(small_primes)
def test_primitive_root_generates(p):
    g = primitive_root(p)
    assert {pow(g, e, p) for e in range(p - 1)} == set(range(1, p))


def test_dlog_table():
    p = 11
    g = primitive_root(p)
    table = dlog_table(p)
    assert table[0] == -1
    for x in range(1, p):
        assert pow(g, table[x], p) == x


def test_dlog_table_rejects_non_generator():
    # 3 generates only the squares mod 11.
    with pytest.raises(InvalidArgumentError):
        dlog_table(11, 3)


def test_character_orders_and_principal():
    p = 13
    chis = characters(p)
    assert len(chis) == p - 1
    assert chis[0].is_principal
    assert chis[0].order == 1
    for k, chi in enumerate(chis):
        assert chi.order == (p - 1) // math.gcd(k, p - 1)
    with pytest.raises(InvalidArgumentError):
        make_character(13, 12)


@given(small_primes, st.data())
def test_character_is_multiplicative(p, data):
    idx = data.draw(st.integers(min_value=0, max_value=p - 2))
    chi = make_character(p, idx)
    x = data.draw(st.integers(min_value=1, max_value=p - 1))
    y = data.draw(st.integers(min_value=1, max_value=p - 1))
    assert cmath.isclose(chi(x * y), chi(x) * chi(y), abs_tol=1e-12)


def test_character_vanishes_at_zero():
    chi = make_character(7, 2)
    assert chi(0) == 0
    assert chi(7) == 0
    assert chi(14) == 0


def test_character_orthogonality():
    # Sum over the group is p - 1 for the principal character, 0 otherwise.
    p = 17
    for chi in characters(p):
        total = sum(chi(x) for x in range(p))
        expected = p - 1 if chi.is_principal else 0
        assert abs(total - expected) < 1e-9


def test_character_values_matches_pointwise():
    chi = make_character(11, 3)
    vals = chi.values()
    for x in range(11):
        assert cmath.isclose(vals[x], char_eval(chi, x), abs_tol=1e-12)


def test_dft_of_indicator_at_zero_is_flat():
    f = np.zeros(8)
    f[0] = 1.0
    assert np.allclose(dft(f), np.ones(8))


def test_dft_idft_round_trip():
    rng = np.random.default_rng(7)
    f = rng.normal(size=12) + 1j * rng.normal(size=12)
    assert np.allclose(idft(dft(f)), f)


def test_dft_parseval():
    rng = np.random.default_rng(11)
    f = rng.normal(size=9) + 1j * rng.normal(size=9)
    fhat = dft(f)
    assert np.isclose(np.sum(np.abs(fhat) ** 2), 9 * np.sum(np.abs(f) ** 2))


def test_balanced_sums_to_zero():
    f = np.array([3.0, 1.0, -2.0, 5.0])
    g = balanced(f, 4)
    assert abs(g.sum()) < 1e-12
    assert np.allclose(g, f - f.sum() / 4)
    with pytest.raises(InvalidArgumentError):
        balanced(f, 5)


def test_mat2_inverse_law():
    q = 7
    g = (1, 2, 3, 4)
    assert mat2_mul(g, mat2_inv(g, q), q) == IDENTITY2
    assert mat2_det(g, q) == (4 - 6) % 7
    with pytest.raises(InvalidArgumentError):
        mat2_inv((1, 2, 2, 4), q)  # determinant 0


@given(small_primes, st.data())
def test_mobius_action_composes(p, data):
    ints = st.integers(min_value=0, max_value=p - 1)
    g = data.draw(st.tuples(ints, ints, ints, ints))
    h = data.draw(st.tuples(ints, ints, ints, ints))
    x = data.draw(ints)
    inner = mobius(h, x, p)
    if inner is None:
        return
    outer = mobius(g, inner, p)
    combined = mobius(mat2_mul(g, h, p), x, p)
    if outer is not None and combined is not None:
        assert outer == combined
