"""Incidence counting over Z_q with exact main terms and bound evaluators.

Three pair equations are supported between two point families A and B:

* dot:        a . b = lam with every tuple jointly coprime to q,
* det:        det(a_1 .. a_n, b_1 .. b_m) = lam for stacked d-vectors,
* crossratio: [a_1, a_2, b_1, b_2] = lam over a prime field.

Counts are exact integers, main terms exact rationals; only the bound side
of an inequality is floating point.  check_inequality packages one instance
into a SlackReport with slack = bound / |error| (infinite when error = 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product as _cartesian
from typing import NamedTuple

import numpy as np

from .errors import (
    InvalidArgumentError,
    InvalidLambdaError,
    InvalidModulusError,
    TooLargeError,
)
from .modring import as_modulus, inv_mod, is_prime, jordan_totient
from .setops import PointSet, gcd_with_modulus

KINDS = ("dot", "det", "crossratio")

_CHUNK = 1024          # rows of A per block in the dense counters
_CR_TABLE_MAX_Q = 61   # largest prime for which the q^2 x q^2 table is cached


def _check_same_modulus(a: PointSet, b: PointSet) -> int:
    if a.modulus.q != b.modulus.q:
        raise InvalidArgumentError(f"moduli differ: {a.modulus.q} vs {b.modulus.q}")
    return a.modulus.q


def _as_array(ps: PointSet) -> np.ndarray:
    """Sorted elements as an (len, dim) int64 array."""
    elems = ps.sorted_elements()
    arr = np.array(elems, dtype=np.int64)
    if ps.dimension == 1:
        arr = arr.reshape(-1, 1)
    return arr


# ---------------------------------------------------------------------------
# dot products


def count_dot(a: PointSet, b: PointSet, lam: int, check_lambda: bool = True) -> int:
    """Exact number of pairs (a, b) in A x B with a . b = lam mod q.

    check_lambda enforces the unit-target hypothesis of the dot-incidence
    bound; pass False to count against an arbitrary target (used e.g. by the
    total-mass identity sum_lam count = |A||B|).
    """
    q = _check_same_modulus(a, b)
    if a.dimension != b.dimension:
        raise InvalidArgumentError(f"dimensions differ: {a.dimension} vs {b.dimension}")
    lam %= q
    if check_lambda and math.gcd(lam, q) != 1:
        raise InvalidLambdaError(f"target {lam} is not a unit mod {q}")
    if not len(a) or not len(b):
        return 0
    arr_a = _as_array(a)
    arr_b = _as_array(b).T
    total = 0
    for i in range(0, arr_a.shape[0], _CHUNK):
        block = arr_a[i:i + _CHUNK] @ arr_b
        total += int(np.count_nonzero(block % q == lam))
    return total


def count_dot_via_characters(a: PointSet, b: PointSet, lam: int) -> tuple[int, float]:
    """count_dot recomputed by additive-character inversion.

    Returns (rounded count, residual), where residual is the distance of the
    character-sum value from the nearest integer.  Serves as an independent
    cross-check of the direct counter.
    """
    q = _check_same_modulus(a, b)
    if a.dimension != b.dimension:
        raise InvalidArgumentError(f"dimensions differ: {a.dimension} vs {b.dimension}")
    lam %= q
    if not len(a) or not len(b):
        return 0, 0.0
    arr_a = _as_array(a)
    arr_b = _as_array(b).T
    hist = np.zeros(q, dtype=np.int64)
    for i in range(0, arr_a.shape[0], _CHUNK):
        block = arr_a[i:i + _CHUNK] @ arr_b
        hist += np.bincount((block % q).ravel(), minlength=q)
    t = np.arange(q)
    inner = np.exp(2j * np.pi * np.outer(t, np.arange(q)) / q) @ hist.astype(complex)
    value = (np.exp(-2j * np.pi * t * lam / q) * inner).sum() / q
    rounded = int(round(value.real))
    return rounded, abs(value - rounded)


def theta(q, n: int) -> Fraction:
    """Arithmetic factor of the dot bound: prod_{p^e || q} sum_{r<=e} p^(-r(n-2)).

    Exact rational; for n = 2 every summand is 1 and the factor equals the
    divisor count tau(q).
    """
    if n < 2:
        raise InvalidArgumentError(f"the arithmetic factor needs n >= 2, got {n}")
    mod = as_modulus(q)
    total = Fraction(1)
    for p, e in mod.factors:
        total *= sum(Fraction(1, p ** (r * (n - 2))) for r in range(e + 1))
    return total


def dot_main_term(size_a: int, size_b: int, q, n: int) -> Fraction:
    """Expected count |A||B| q^(n-1) / J_n(q), exact."""
    mod = as_modulus(q)
    return Fraction(size_a * size_b * mod.q ** (n - 1), jordan_totient(n, mod))


def dot_bound_rhs(q, n: int, size_a: int, size_b: int) -> float:
    """2 q^(n-1) sqrt(|A||B|) (theta(q, n) / m^(n*))^(1/4) with m the least
    prime divisor of q, n* = 1 for n in {2, 3} and n - 3 beyond."""
    mod = as_modulus(q)
    n_star = 1 if n in (2, 3) else n - 3
    factor = theta(mod, n) / Fraction(mod.least_prime ** n_star)
    return 2.0 * mod.q ** (n - 1) * math.sqrt(size_a * size_b) * float(factor) ** 0.25


def second_eigenvalue_bound(q, n: int) -> float:
    """Bound on the largest non-principal eigenvalue of the dot matrix:
    (3 m^(-1) q^(4n-4) theta(q, n))^(1/4)."""
    mod = as_modulus(q)
    val = 3 * Fraction(mod.q ** (4 * n - 4), mod.least_prime) * theta(mod, n)
    return float(val) ** 0.25


# ---------------------------------------------------------------------------
# determinants


class DetMainTerms(NamedTuple):
    """Both candidate normalizations of the determinant main term."""

    per_modulus: Fraction       # |A||B| / q
    per_unit_group: Fraction    # |A||B| / (q - 1)


def det_arity(a: PointSet, b: PointSet) -> tuple[int, int, int]:
    """Recover (n, m, d) from the flattened dimensions n*d and m*d."""
    total = a.dimension + b.dimension
    d = math.isqrt(total)
    if d * d != total or d < 2 or a.dimension % d or b.dimension % d:
        raise InvalidArgumentError(
            f"dimensions ({a.dimension}, {b.dimension}) do not split into "
            "complementary tuples of d-vectors")
    return a.dimension // d, b.dimension // d, d


def _det_int(rows: list[list[int]]) -> int:
    """Exact integer determinant by fraction-free (Bareiss) elimination."""
    m = [list(r) for r in rows]
    d = len(m)
    sign = 1
    prev = 1
    for k in range(d - 1):
        if m[k][k] == 0:
            for r in range(k + 1, d):
                if m[r][k]:
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, d):
            for j in range(k + 1, d):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[d - 1][d - 1]


def count_det(a: PointSet, b: PointSet, lam: int) -> int:
    """Exact number of pairs with det(a_1..a_n, b_1..b_m) = lam mod q.

    Elements of A are flattened n-tuples of d-vectors (dimension n*d) and
    likewise for B, with n + m = d.  Requires odd q and a nonzero target.
    """
    q = _check_same_modulus(a, b)
    if q % 2 == 0:
        raise InvalidModulusError(f"determinant counting needs odd q, got {q}")
    lam %= q
    if lam == 0:
        raise InvalidLambdaError("target 0 is excluded for determinant counting")
    n, m, d = det_arity(a, b)
    if not len(a) or not len(b):
        return 0
    arr_a = _as_array(a)
    arr_b = _as_array(b)
    if d == 2:
        det = np.outer(arr_a[:, 0], arr_b[:, 1]) - np.outer(arr_a[:, 1], arr_b[:, 0])
        return int(np.count_nonzero(det % q == lam))
    total = 0
    rows_b = [[list(vb[j * d:(j + 1) * d]) for j in range(m)] for vb in arr_b.tolist()]
    for va in arr_a.tolist():
        top = [list(va[i * d:(i + 1) * d]) for i in range(n)]
        for bottom in rows_b:
            if _det_int(top + bottom) % q == lam:
                total += 1
    return total


def det_main_term(size_a: int, size_b: int, q) -> DetMainTerms:
    qq = int(q)
    ab = size_a * size_b
    return DetMainTerms(Fraction(ab, qq), Fraction(ab, qq - 1))


def det_bound_rhs(q, d: int, size_a: int, size_b: int) -> float:
    """q^(d^2/2 - d/4 - 3/4) sqrt(|A||B|) + |A||B| / q^2."""
    qq = int(q)
    ab = size_a * size_b
    return qq ** (d * d / 2.0 - d / 4.0 - 0.75) * math.sqrt(ab) + ab / qq ** 2


def independent_tuple_count(q, d: int, n: int) -> int:
    """Number of linearly independent n-tuples of vectors in (Z_q)^d for
    prime q: prod_{j=0..n-1} (q^d - q^j)."""
    qq = int(q)
    total = 1
    for j in range(n):
        total *= qq ** d - qq ** j
    return total


def independent_tuple_count_graded(q, d: int, n: int) -> int:
    """The graded variant prod_{j=1..n} (q^d - q^(d-j)) = q^(dn) prod (1 - q^-j).

    Counts n-tuples extending a fixed complementary (d-n)-tuple to a basis;
    it differs from independent_tuple_count already at n = 1, d = 2, and both
    are reported side by side wherever the distinction matters.
    """
    qq = int(q)
    total = 1
    for j in range(1, n + 1):
        total *= qq ** d - qq ** (d - j)
    return total


# ---------------------------------------------------------------------------
# cross-ratios


def cross_ratio(a: int, b: int, c: int, d: int, q) -> int | None:
    """[a, b, c, d] = (a-c)(b-d) / ((a-d)(b-c)) mod a prime q, or None when
    the denominator vanishes."""
    mod = as_modulus(q)
    if not mod.is_prime:
        raise InvalidModulusError(f"cross-ratios need a prime modulus, got {mod.q}")
    qq = mod.q
    den = (a - d) * (b - c) % qq
    if den == 0:
        return None
    num = (a - c) * (b - d) % qq
    return num * inv_mod(den, qq) % qq


@lru_cache(maxsize=8)
def _crossratio_table(q: int) -> np.ndarray:
    """Value table over pair indices i = a1*q + a2, j = b1*q + b2; entry -1
    marks an undefined cross-ratio."""
    inv = np.zeros(q, dtype=np.int64)
    inv[1:] = np.array([pow(x, q - 2, q) for x in range(1, q)], dtype=np.int64)
    r = np.arange(q * q, dtype=np.int64)
    x1, x2 = r // q, r % q
    a1, a2 = x1[:, None], x2[:, None]
    b1, b2 = x1[None, :], x2[None, :]
    num = (a1 - b1) * (a2 - b2) % q
    den = (a1 - b2) * (a2 - b1) % q
    val = num * inv[den] % q
    val[den == 0] = -1
    return val.astype(np.int32)


def count_crossratio(a: PointSet, b: PointSet, lam: int) -> int:
    """Exact number of pairs ((a1,a2),(b1,b2)) with [a1,a2,b1,b2] = lam.

    Undefined cross-ratios never count.  Requires prime q and lam outside
    {0, 1} (both are degenerate targets of the equation).
    """
    q = _check_same_modulus(a, b)
    if not a.modulus.is_prime:
        raise InvalidModulusError(f"cross-ratios need a prime modulus, got {q}")
    if a.dimension != 2 or b.dimension != 2:
        raise InvalidArgumentError("cross-ratio sets must consist of pairs")
    lam %= q
    if lam in (0, 1):
        raise InvalidLambdaError(f"target {lam} is degenerate for cross-ratios")
    if not len(a) or not len(b):
        return 0
    if q <= _CR_TABLE_MAX_Q:
        table = _crossratio_table(q)
        idx_a = [x1 * q + x2 for x1, x2 in a.sorted_elements()]
        idx_b = [x1 * q + x2 for x1, x2 in b.sorted_elements()]
        return int(np.count_nonzero(table[np.ix_(idx_a, idx_b)] == lam))
    total = 0
    for a1, a2 in a.sorted_elements():
        for b1, b2 in b.sorted_elements():
            if cross_ratio(a1, a2, b1, b2, a.modulus) == lam:
                total += 1
    return total


def crossratio_main_term(size_a: int, size_b: int, q) -> Fraction:
    return Fraction(size_a * size_b, int(q))


def crossratio_bound_rhs(q, size_a: int, size_b: int) -> float:
    """4 q^(3/4) sqrt(|A||B|)."""
    return 4.0 * int(q) ** 0.75 * math.sqrt(size_a * size_b)


# ---------------------------------------------------------------------------
# instances and slack reports


@dataclass(frozen=True)
class IncidenceInstance:
    """One fully validated (kind, A, B, lam) incidence-counting instance."""

    kind: str
    a: PointSet
    b: PointSet
    lam: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown incidence kind {self.kind!r}")
        q = _check_same_modulus(self.a, self.b)
        object.__setattr__(self, "lam", self.lam % q)
        if self.kind == "dot":
            if self.a.dimension != self.b.dimension:
                raise InvalidArgumentError("dot instances need equal dimensions")
            if math.gcd(self.lam, q) != 1:
                raise InvalidLambdaError(f"target {self.lam} is not a unit mod {q}")
            for ps in (self.a, self.b):
                for el in ps.elements:
                    if gcd_with_modulus(el, q) != 1:
                        raise InvalidArgumentError(
                            f"element {el!r} is not jointly coprime with {q}")
        elif self.kind == "det":
            if q % 2 == 0:
                raise InvalidModulusError(f"determinant instances need odd q, got {q}")
            if self.lam == 0:
                raise InvalidLambdaError("target 0 is excluded for determinants")
            det_arity(self.a, self.b)
        else:
            if not self.a.modulus.is_prime:
                raise InvalidModulusError(f"cross-ratio instances need prime q, got {q}")
            if self.a.dimension != 2 or self.b.dimension != 2:
                raise InvalidArgumentError("cross-ratio sets must consist of pairs")
            if self.lam in (0, 1):
                raise InvalidLambdaError(f"target {self.lam} is degenerate")

    @property
    def modulus(self):
        return self.a.modulus

    def hypothesis_warnings(self) -> tuple[str, ...]:
        """Hypotheses the bounds assume but counting does not require.

        Violations are surfaced here rather than raised, so instances beyond
        the proven range stay explorable.
        """
        out = []
        if self.kind == "dot" and self.modulus.least_prime < 5:
            out.append(f"least prime divisor {self.modulus.least_prime} < 5")
        if self.kind == "det" and not self.modulus.is_prime:
            out.append(f"modulus {self.modulus.q} is not prime")
        return tuple(out)


_SLACK_INF = float("inf")


@dataclass(frozen=True)
class SlackReport:
    """Outcome of one inequality check.

    error_lhs is the exact left-hand side (including any stated constant
    factor), bound_rhs the floating right-hand side, and slack their ratio,
    infinite when the error vanishes.
    """

    kind: str
    count: int
    main_term: Fraction
    error_lhs: Fraction
    bound_rhs: float
    slack: float
    warnings: tuple[str, ...] = ()
    extras: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.slack >= 1.0


def _slack(error_lhs: Fraction, bound_rhs: float) -> float:
    if error_lhs == 0:
        return _SLACK_INF
    return bound_rhs / float(error_lhs)


def check_inequality(inst: IncidenceInstance) -> SlackReport:
    """Count the instance and compare the exact error with the stated bound.

    For det instances the check uses the |A||B|/q normalization with the
    stated 1/8 prefactor and the additive |A||B|/q^2 term; the alternative
    |A||B|/(q-1) main term is carried in extras, together with which of the
    two sits closer to the actual count.
    """
    q_mod = inst.modulus
    size_a, size_b = len(inst.a), len(inst.b)
    if inst.kind == "dot":
        n = inst.a.dimension
        count = count_dot(inst.a, inst.b, inst.lam)
        main = dot_main_term(size_a, size_b, q_mod, n)
        err = abs(Fraction(count) - main)
        rhs = dot_bound_rhs(q_mod, n, size_a, size_b)
        extras = {}
    elif inst.kind == "det":
        n, m, d = det_arity(inst.a, inst.b)
        count = count_det(inst.a, inst.b, inst.lam)
        mains = det_main_term(size_a, size_b, q_mod.q)
        main = mains.per_modulus
        err = Fraction(1, 8) * abs(Fraction(count) - main)
        rhs = det_bound_rhs(q_mod.q, d, size_a, size_b)
        dev_mod = abs(Fraction(count) - mains.per_modulus)
        dev_unit = abs(Fraction(count) - mains.per_unit_group)
        if dev_mod < dev_unit:
            fit = "per_modulus"
        elif dev_unit < dev_mod:
            fit = "per_unit_group"
        else:
            fit = "tie"
        extras = {"main_per_unit_group": mains.per_unit_group, "better_fit": fit}
    else:
        count = count_crossratio(inst.a, inst.b, inst.lam)
        main = crossratio_main_term(size_a, size_b, q_mod.q)
        err = abs(Fraction(count) - main)
        rhs = crossratio_bound_rhs(q_mod.q, size_a, size_b)
        extras = {}
    return SlackReport(inst.kind, count, main, err, rhs, _slack(err, rhs),
                       inst.hypothesis_warnings(), extras)


# ---------------------------------------------------------------------------
# domains


@lru_cache(maxsize=32)
def independent_tuple_domain(q: int, d: int, n: int) -> tuple[tuple[int, ...], ...]:
    """All flattened linearly independent n-tuples of vectors in (Z_q)^d,
    lexicographically, for prime q.  Guarded by a hard size cap."""
    if not is_prime(q):
        raise InvalidModulusError(f"independent-tuple domains need prime q, got {q}")
    if q ** (d * n) > 2 * 10 ** 6:
        raise TooLargeError(f"domain of size {q ** (d * n)} exceeds the cap")
    out = []
    for flat in _cartesian(range(q), repeat=d * n):
        vecs = [flat[i * d:(i + 1) * d] for i in range(n)]
        if _rank_mod_p(vecs, q) == n:
            out.append(flat)
    return tuple(out)


def _rank_mod_p(vectors, p: int) -> int:
    """Rank over F_p by Gaussian elimination."""
    rows = [list(v) for v in vectors]
    rank = 0
    col = 0
    width = len(rows[0]) if rows else 0
    while rank < len(rows) and col < width:
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col] % p), None)
        if pivot is None:
            col += 1
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = pow(rows[rank][col] % p, p - 2, p)
        rows[rank] = [x * inv % p for x in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col] % p:
                f = rows[r][col] % p
                rows[r] = [(x - f * y) % p for x, y in zip(rows[r], rows[rank])]
        rank += 1
        col += 1
    return rank
