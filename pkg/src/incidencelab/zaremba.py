"""Continued fractions with bounded partial quotients, the residue sets
they carve out of Z_q, and the multiplicative-structure measurements made
on those sets: subgroup witness search, product-representation energy,
interval-count regularity, and interval-union constructions.

Everything here is exact integer or rational arithmetic except the
regularity ratios and bound expressions, which are plain floats.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import (
    InvalidArgumentError,
    InvalidFractionError,
    StructureError,
)
from .modring import as_modulus, is_prime, primitive_root
from .setops import PointSet, interval, is_direct_sum, point_set, sumset


@dataclass(frozen=True)
class ContinuedFraction:
    """A reduced fraction a/q in (0, 1) with its quotient sequence, so the
    value is 1/(c_1 + 1/(c_2 + ...)).  Canonical form: the last quotient is
    at least 2 whenever there are two or more."""

    numerator: int
    denominator: int
    quotients: tuple

    @property
    def max_quotient(self) -> int:
        return max(self.quotients)

    def alternate_quotients(self) -> tuple:
        """The other representation of the same rational: [..., c_s - 1, 1]
        for canonical input, or the canonical form if given the long one."""
        qs = self.quotients
        if qs[-1] == 1:
            if len(qs) == 1:
                raise InvalidFractionError("[0;1] is 1/1, not a fraction in (0,1)")
            return qs[:-2] + (qs[-2] + 1,)
        return qs[:-1] + (qs[-1] - 1, 1)

    @property
    def alternate_max_quotient(self) -> int:
        return max(self.alternate_quotients())


def cf_expand(a: int, q: int) -> ContinuedFraction:
    """Quotients of a/q by the Euclidean algorithm.

    The algorithm lands in canonical form on its own: the last division is
    exact with a strictly smaller divisor, so the final quotient is >= 2.
    """
    a = int(a)
    q = int(q)
    if not 0 < a < q:
        raise InvalidFractionError(f"need 0 < a < q, got {a}/{q}")
    if math.gcd(a, q) != 1:
        raise InvalidFractionError(f"{a}/{q} is not reduced")
    quotients = []
    hi, lo = q, a
    while lo:
        c, r = divmod(hi, lo)
        quotients.append(c)
        hi, lo = lo, r
    return ContinuedFraction(a, q, tuple(quotients))


def cf_value(quotients) -> tuple:
    """Exact (numerator, denominator) of [0; c_1, ..., c_s], evaluated by
    the backward recurrence."""
    qs = [int(c) for c in quotients]
    if not qs:
        raise InvalidFractionError("empty quotient list")
    if any(c < 1 for c in qs):
        raise InvalidFractionError(f"quotients must be positive, got {qs}")
    value = Fraction(0)
    for c in reversed(qs):
        value = Fraction(1, c + value)
    return value.numerator, value.denominator


def convergents(quotients) -> list:
    """(numerator, denominator) of each convergent of [0; c_1, ..., c_s].
    Denominators increase strictly and the last one is the full q."""
    qs = [int(c) for c in quotients]
    if not qs or any(c < 1 for c in qs):
        raise InvalidFractionError(f"bad quotient list {qs}")
    out = []
    h_prev, h = 1, 0
    k_prev, k = 0, 1
    for c in qs:
        h_prev, h = h, c * h + h_prev
        k_prev, k = k, c * k + k_prev
        out.append((h, k))
    return out


def zaremba_set(q: int, bound: int, alternate: bool = False) -> set:
    """Numerators a in [1, q) with gcd(a, q) = 1 whose quotients all stay
    at or below ``bound``.  With alternate=True the max quotient is taken
    on the non-canonical twin expansion instead, as a sensitivity check."""
    if q < 2 or bound < 1:
        raise InvalidArgumentError(f"need q >= 2 and bound >= 1, got q={q}, bound={bound}")
    out = set()
    for a in range(1, q):
        if math.gcd(a, q) != 1:
            continue
        cf = cf_expand(a, q)
        top = cf.alternate_max_quotient if alternate else cf.max_quotient
        if top <= bound:
            out.add(a)
    return out


# ---------------------------------------------------------------------------
# multiplicative subgroups


@dataclass(frozen=True)
class SubgroupSpec:
    """A cyclic subgroup of Z_p^* given by a generator."""

    modulus: int
    generator: int
    elements: frozenset

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, x) -> bool:
        return int(x) % self.modulus in self.elements


def subgroup(p: int, generator: int) -> SubgroupSpec:
    """The subgroup of Z_p^* generated by one element."""
    if not is_prime(p):
        raise InvalidArgumentError(f"subgroups need a prime modulus, got {p}")
    g = int(generator) % p
    if g == 0:
        raise InvalidArgumentError("generator must be a unit")
    orbit = set()
    x = 1
    while True:
        orbit.add(x)
        x = x * g % p
        if x == 1:
            break
    return SubgroupSpec(p, g, frozenset(orbit))


def full_group(p: int) -> SubgroupSpec:
    if p == 2:
        return SubgroupSpec(2, 1, frozenset({1}))
    return subgroup(p, primitive_root(p))


def quadratic_residues(p: int) -> SubgroupSpec:
    """The squares in Z_p^*: index 2 for odd p."""
    if p == 2:
        return SubgroupSpec(2, 1, frozenset({1}))
    g = primitive_root(p)
    return subgroup(p, g * g % p)


def all_subgroups(p: int) -> list:
    """Every subgroup of the cyclic group Z_p^*, one per divisor of p - 1,
    in increasing order."""
    if p == 2:
        return [SubgroupSpec(2, 1, frozenset({1}))]
    g = primitive_root(p)
    divisors = sorted(d for d in range(1, p) if (p - 1) % d == 0)
    return [subgroup(p, pow(g, (p - 1) // d, p)) for d in divisors]


@dataclass(frozen=True)
class WitnessReport:
    """Result of searching a subgroup for a bounded-quotient numerator."""

    witness: int | None
    intersection: tuple
    intersection_size: int
    bounded_set_size: int
    lower_bound: float


def find_in_subgroup(q: int, bound: int, gamma: SubgroupSpec,
                     c0: float = 1.0, c_star: float = 1.0,
                     n_value: int = 1) -> WitnessReport:
    """Smallest element of the subgroup whose fraction over q has all
    quotients <= bound, plus the size of the full intersection.

    The reported lower bound is |A| |Gamma| / (q - 1) - c0 |A| n^(-c_star)
    with A the bounded-quotient set; it is a heuristic expression whose
    constants are knobs, not a proven floor on the intersection size.
    """
    if not is_prime(q):
        raise InvalidArgumentError(f"subgroup search needs a prime modulus, got {q}")
    if gamma.modulus != q:
        raise InvalidArgumentError(
            f"subgroup lives mod {gamma.modulus}, expected mod {q}")
    bounded = zaremba_set(q, bound)
    hits = sorted(bounded & gamma.elements)
    lower = (len(bounded) * len(gamma) / (q - 1)
             - c0 * len(bounded) * float(n_value) ** (-c_star))
    return WitnessReport(hits[0] if hits else None, tuple(hits), len(hits),
                         len(bounded), lower)


# ---------------------------------------------------------------------------
# energies and regularity


def _residue_list(z, q=None) -> tuple:
    """(sorted residues, modulus) from a PointSet or an iterable plus q."""
    if isinstance(z, PointSet):
        if z.dimension != 1:
            raise InvalidArgumentError("expected a dimension-1 set")
        return z.sorted_elements(), z.modulus.q
    if q is None:
        raise InvalidArgumentError("a bare iterable needs an explicit modulus")
    qq = as_modulus(q).q
    return sorted({int(x) % qq for x in z}), qq


def mult_energy(z, q=None) -> int:
    """Number of quadruples z1 z2 = z3 z4 in the set, counted exactly as
    the sum of squared product-representation counts."""
    elems, qq = _residue_list(z, q)
    rep = Counter((z1 * z2) % qq for z1 in elems for z2 in elems)
    return sum(c * c for c in rep.values())


def ad_regularity(z, base_length: int, w: float, q=None):
    """Extremes of |Z ∩ window| / (|D|^w N^(1-w)) over all centers z in Z
    and window lengths N, 2N, 4N, ... below q.

    Windows are centered at the element and wrapped mod q.  This is a
    characterization measurement, not a pass/fail test: the ratios say how
    close the set sits to dimension-w interval scaling.
    """
    rows = ad_regularity_rows(z, base_length, w, q)
    ratios = [r[-1] for r in rows]
    return min(ratios), max(ratios)


def ad_regularity_rows(z, base_length: int, w: float, q=None) -> list:
    """Per-(center, length) regularity data: (center, length, count, ratio)."""
    elems, qq = _residue_list(z, q)
    if not elems:
        raise InvalidArgumentError("regularity of an empty set is undefined")
    if base_length < 1:
        raise InvalidArgumentError(f"base length must be >= 1, got {base_length}")
    if not 0 < w <= 1:
        raise InvalidArgumentError(f"need 0 < w <= 1, got {w}")
    lengths = []
    length = base_length
    while length < qq:
        lengths.append(length)
        length *= 2
    if not lengths:
        raise InvalidArgumentError(
            f"base length {base_length} leaves no window below q={qq}")
    ind = np.zeros(qq, dtype=np.int64)
    ind[list(elems)] = 1
    pref = np.concatenate(([0], np.cumsum(ind)))
    total = int(pref[-1])
    rows = []
    for center in elems:
        for length in lengths:
            lo = (center - length // 2) % qq
            hi = lo + length
            if hi <= qq:
                count = int(pref[hi] - pref[lo])
            else:
                count = int(total - pref[lo] + pref[hi - qq])
            denom = float(length) ** w * float(base_length) ** (1.0 - w)
            rows.append((center, length, count, count / denom))
    return rows


@dataclass(frozen=True)
class IntervalUnion:
    """A set of the form {1..N} + Λ with the collision-free structure kept
    on record for downstream experiments."""

    points: PointSet
    interval_length: int
    translates: PointSet


def interval_union(translates: PointSet, length: int) -> IntervalUnion:
    """Union of the translates of {1..N}, required to be disjoint."""
    base = interval(translates.modulus, length)
    if not is_direct_sum(base, translates):
        raise StructureError(
            f"translates of a length-{length} interval overlap mod {translates.modulus.q}")
    return IntervalUnion(sumset(base, translates), length, translates)


@dataclass(frozen=True)
class EnergyBoundReport:
    """Exact multiplicative energy against three reference quantities: the
    structured-set bound |Z|^3 (p/|Z|)^(3-4w) N^(-2(1-w)), the trivial
    |Z|^3 cap, and the random-set baseline |Z|^4/p + |Z|^2."""

    energy: int
    bound_rhs: float
    trivial_bound: int
    random_baseline: float
    regime_ok: bool
    within_bound: bool


def energy_bound_report(z, base_length: int, w: float, p: int) -> EnergyBoundReport:
    """Compare exact energy with the dimension-w prediction at modulus p.

    The prediction only claims anything for w > 3/4; outside that regime
    the row is still computed but flagged.  Constants are taken to be 1,
    so this is a comparison table, not an inequality test.
    """
    elems, qq = _residue_list(z, p)
    if qq != p:
        raise InvalidArgumentError(f"set lives mod {qq}, expected mod {p}")
    if not elems:
        raise InvalidArgumentError("energy report needs a nonempty set")
    if base_length < 1 or not 0 < w <= 1:
        raise InvalidArgumentError(
            f"need base length >= 1 and 0 < w <= 1, got {base_length}, {w}")
    size = len(elems)
    energy = mult_energy(elems, p)
    rhs = (size ** 3 * (p / size) ** (3.0 - 4.0 * w)
           * float(base_length) ** (-2.0 * (1.0 - w)))
    baseline = size ** 4 / p + size ** 2
    return EnergyBoundReport(energy, rhs, size ** 3, baseline,
                             regime_ok=w > 0.75, within_bound=energy <= rhs)


@lru_cache(maxsize=64)
def _zaremba_cached(q: int, bound: int) -> frozenset:
    return frozenset(zaremba_set(q, bound))


def minimal_feasible_bound(q: int, gamma: SubgroupSpec = None) -> int:
    """Smallest quotient bound M for which the bounded set (intersected
    with the subgroup, when one is given) is nonempty."""
    if q < 3:
        raise InvalidArgumentError(f"need q >= 3, got {q}")
    for bound in range(1, q + 1):
        hits = _zaremba_cached(q, bound)
        if gamma is not None:
            hits = hits & gamma.elements
        if hits:
            return bound
    raise InvalidArgumentError(f"no feasible bound at q={q}")
