"""Point-set construction and the additive/multiplicative set algebra."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from incidencelab import (
    InvalidArgumentError,
    StructureError,
    interval,
    is_direct_sum,
    point_set,
    productset,
    rep_function,
    residues,
    sumset,
)
from incidencelab.setops import gcd_with_modulus, transform_set

small_q = st.integers(min_value=2, max_value=40)


@st.composite
def sets_mod_q(draw, q=None):
    if q is None:
        q = draw(small_q)
    elems = draw(st.sets(st.integers(min_value=0, max_value=q - 1),
                         min_size=1, max_size=q))
    return point_set(q, elems)


def test_point_set_basic():
    a = point_set(7, [3, 9, -1])
    assert a.sorted_elements() == [2, 3, 6]
    assert len(a) == 3
    assert 6 in a and 5 not in a
    assert a.dimension == 1
    assert a.weight(3) == 1.0 + 0j


def test_point_set_tuples_infer_dimension():
    a = point_set(5, [(1, 2), (6, -1)])
    assert a.dimension == 2
    assert a.sorted_elements() == [(1, 2), (1, 4)]


def test_point_set_rejects_reduction_collision():
    with pytest.raises(InvalidArgumentError):
        point_set(7, [1, 8])


def test_point_set_empty_needs_dimension():
    with pytest.raises(InvalidArgumentError):
        point_set(7, [])
    assert len(point_set(7, [], dimension=1)) == 0


def test_point_set_weights_must_cover_and_stay_small():
    a = point_set(7, [1, 2], weights={1: 0.5, 2: -0.25 + 0.1j})
    assert a.weight(2) == -0.25 + 0.1j
    with pytest.raises(InvalidArgumentError):
        point_set(7, [1, 2], weights={1: 0.5})
    with pytest.raises(InvalidArgumentError):
        point_set(7, [1], weights={1: 1.5})


def test_point_set_equality_ignores_identity():
    assert point_set(7, [1, 2]) == point_set(7, [8, 9])
    assert point_set(7, [1]) != point_set(11, [1])


def test_sumset_and_productset_known():
    q = 10
    a = point_set(q, [1, 2])
    b = point_set(q, [0, 5])
    assert sumset(a, b).sorted_elements() == [1, 2, 6, 7]
    assert productset(a, b).sorted_elements() == [0, 5]


def test_sumset_dimension_two():
    a = point_set(5, [(1, 2)])
    b = point_set(5, [(4, 4)])
    assert sumset(a, b).sorted_elements() == [(0, 1)]


def test_mixed_moduli_rejected():
    with pytest.raises(InvalidArgumentError):
        sumset(point_set(5, [1]), point_set(7, [1]))


@given(sets_mod_q(q=23), sets_mod_q(q=23))
def test_sumset_commutes(a, b):
    assert sumset(a, b) == sumset(b, a)


@given(sets_mod_q(q=19), sets_mod_q(q=19))
def test_sumset_size_bounds(a, b):
    s = sumset(a, b)
    assert max(len(a), len(b)) <= len(s) <= min(19, len(a) * len(b))


def test_is_direct_sum():
    q = 20
    i = point_set(q, [1, 2])
    lam = point_set(q, [0, 10])
    assert is_direct_sum(i, lam)
    assert not is_direct_sum(point_set(q, [1, 2]), point_set(q, [0, 1]))


def test_rep_function_sum():
    q = 7
    a = point_set(q, [1, 2, 3])
    counts = rep_function(a, a, "sum")
    assert sum(counts.values()) == 9
    assert counts[4] == 3  # 1+3, 2+2, 3+1


def test_rep_function_quotient_policies():
    q = 6
    a = point_set(q, [1])
    b = point_set(q, [2, 5])
    with pytest.raises(InvalidArgumentError):
        rep_function(a, b, "quotient")
    counts = rep_function(a, b, "quotient", on_noninvertible="skip")
    assert counts == {5: 1}  # 1/5 = 5 mod 6; 1/2 dropped


def test_rep_function_rejects_unknown_op():
    a = point_set(5, [1])
    with pytest.raises(InvalidArgumentError):
        rep_function(a, a, "difference")


@given(sets_mod_q(q=17), sets_mod_q(q=17))
def test_rep_function_total_mass(a, b):
    counts = rep_function(a, b, "product")
    assert sum(counts.values()) == len(a) * len(b)


def test_transform_invert_drops_nonunits():
    a = point_set(12, [1, 4, 5, 6])
    res = transform_set(a, "invert")
    assert res.dropped == 2
    assert res.points.sorted_elements() == [1, 5]


def test_transform_shift_and_dilate():
    a = point_set(10, [1, 2, 3])
    assert transform_set(a, "shift", 9).points.sorted_elements() == [0, 1, 2]
    # Dilation by a non-unit can merge elements.
    merged = transform_set(a, "dilate", 5)
    assert merged.points.sorted_elements() == [0, 5]
    with pytest.raises(InvalidArgumentError):
        transform_set(a, "shift")
    with pytest.raises(InvalidArgumentError):
        transform_set(a, "reflect")


def test_interval():
    i = interval(11, 4)
    assert residues(i) == [1, 2, 3, 4]
    with pytest.raises(StructureError):
        interval(11, 11)
    with pytest.raises(StructureError):
        interval(11, 0)


def test_gcd_with_modulus():
    assert gcd_with_modulus(4, 6) == 2
    assert gcd_with_modulus((2, 3), 6) == 1
    assert gcd_with_modulus((0, 0), 6) == 6
