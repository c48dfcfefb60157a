"""Character sums over prime fields: twisted Kloosterman sums, bilinear
forms, hyperbola counts, sums twisted by fractional-linear group actions,
and multiplicative energies of matrix families.

Weighted sets carry complex weights of magnitude at most 1.  Every sum is
evaluated in a fixed (sorted) order so repeated runs are bit identical, and
the heavyweight identities all come with an independently computed second
route (table vs direct sum, affine vs projective lift).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product as _cartesian

import numpy as np

from .errors import InvalidArgumentError, TooLargeError
from .modring import (
    Character,
    as_complex_vector,
    char_eval,
    is_prime,
    mat2_inv,
    mat2_mul,
)
from .setops import PointSet

_WEIGHT_TOL = 1e-12
DEFAULT_CONVOLUTION_CAP = 10 ** 7


@dataclass(frozen=True)
class MatrixFamily:
    """A finite subset of GL_2(F_p), elements stored as flat (a, b, c, d)."""

    p: int
    elements: frozenset

    def __len__(self) -> int:
        return len(self.elements)

    def sorted_elements(self) -> list[tuple[int, int, int, int]]:
        return sorted(self.elements)


def matrix_family(p: int, mats) -> MatrixFamily:
    """Validate and reduce a family of invertible 2x2 matrices mod p."""
    if not is_prime(p):
        raise InvalidArgumentError(f"matrix families need a prime modulus, got {p}")
    reduced = set()
    for g in mats:
        if len(g) != 4:
            raise InvalidArgumentError(f"expected flat (a, b, c, d) tuples, got {g!r}")
        a, b, c, d = (int(v) % p for v in g)
        if (a * d - b * c) % p == 0:
            raise InvalidArgumentError(f"matrix {g!r} is singular mod {p}")
        reduced.add((a, b, c, d))
    return MatrixFamily(p, frozenset(reduced))


@lru_cache(maxsize=8)
def enumerate_gl2(p: int) -> tuple[tuple[int, int, int, int], ...]:
    """All of GL_2(F_p), lexicographically."""
    if not is_prime(p):
        raise InvalidArgumentError(f"GL_2 enumeration needs a prime, got {p}")
    return tuple(g for g in _cartesian(range(p), repeat=4)
                 if (g[0] * g[3] - g[1] * g[2]) % p)


@dataclass(frozen=True)
class WeightedSet:
    """A dimension-1 point set bundled with unit-disk weights."""

    base: PointSet
    weights: dict

    def __post_init__(self):
        if self.base.dimension != 1:
            raise InvalidArgumentError("weighted sets are one dimensional")
        if set(self.weights) != self.base.elements:
            raise InvalidArgumentError("weights must cover exactly the base set")
        for w in self.weights.values():
            if abs(complex(w)) > 1.0 + _WEIGHT_TOL:
                raise InvalidArgumentError(f"weight magnitude {abs(w)} exceeds 1")


def _residues(s, p: int) -> list[int]:
    """Sorted residues from a PointSet, WeightedSet, or iterable of ints."""
    if isinstance(s, WeightedSet):
        s = s.base
    if isinstance(s, PointSet):
        if s.dimension != 1:
            raise InvalidArgumentError("expected a dimension-1 set")
        if s.modulus.q != p:
            raise InvalidArgumentError(f"set lives mod {s.modulus.q}, expected {p}")
        return s.sorted_elements()
    out = sorted({int(x) % p for x in s})
    return out


def _weight_map(weights, s, elems) -> dict:
    """Resolve explicit weights, weights carried by the set, or unit weights."""
    if weights is None:
        if isinstance(s, WeightedSet):
            weights = s.weights
        elif isinstance(s, PointSet) and s.weights is not None:
            weights = s.weights
        else:
            return {e: 1.0 + 0j for e in elems}
    out = {}
    for e in elems:
        w = complex(weights.get(e, 1.0))
        if abs(w) > 1.0 + _WEIGHT_TOL:
            raise InvalidArgumentError(f"weight magnitude {abs(w)} exceeds 1")
        out[e] = w
    return out


# ---------------------------------------------------------------------------
# Kloosterman sums and bilinear forms


def kloosterman(chi: Character, n: int, m: int) -> complex:
    """K_chi(n, m) = sum over units x of chi(x) e((n x + m x^-1) / p),
    summed in increasing order of x."""
    p = chi.p
    n %= p
    m %= p
    total = 0j
    for x in range(1, p):
        phase = (n * x + m * pow(x, p - 2, p)) % p
        total += char_eval(chi, x) * cmath.exp(2j * math.pi * phase / p)
    return total


@lru_cache(maxsize=8)
def _kloosterman_table(p: int, generator: int, index: int) -> np.ndarray:
    """K_chi(n, m) for all (n, m), via one vectorized pass over the units."""
    chi = Character(p, generator, index)
    xs = np.arange(1, p, dtype=np.int64)
    xinv = np.array([pow(int(x), p - 2, p) for x in xs], dtype=np.int64)
    chi_vals = chi.values()[1:]
    e_nx = np.exp(2j * np.pi * np.outer(np.arange(p), xs) / p)
    e_minv = np.exp(2j * np.pi * np.outer(np.arange(p), xinv) / p)
    return (e_nx * chi_vals) @ e_minv.T


def bilinear_form(chi: Character, alpha, beta) -> complex:
    """S_chi(alpha, beta) = sum_{n, m} alpha(n) beta(m) K_chi(n, m), via the
    precomputed Kloosterman table."""
    p = chi.p
    a = as_complex_vector(alpha, p)
    b = as_complex_vector(beta, p)
    table = _kloosterman_table(p, chi.generator, chi.index)
    return complex(a @ table @ b)


def bilinear_form_direct(chi: Character, alpha, beta) -> complex:
    """The same bilinear form as one literal triple sum over (n, m, x).

    Kept deliberately naive: it is the independent route the table-based
    evaluation is compared against.
    """
    p = chi.p
    a = as_complex_vector(alpha, p)
    b = as_complex_vector(beta, p)
    total = 0j
    for n in range(p):
        if a[n] == 0:
            continue
        for m in range(p):
            if b[m] == 0:
                continue
            inner = 0j
            for x in range(1, p):
                phase = (n * x + m * pow(x, p - 2, p)) % p
                inner += char_eval(chi, x) * cmath.exp(2j * math.pi * phase / p)
            total += a[n] * b[m] * inner
    return total


# ---------------------------------------------------------------------------
# hyperbola and group-twisted sums


@dataclass(frozen=True)
class HyperbolaSum:
    """Value of a weighted hyperbola character sum plus its trivial bound
    sqrt(|A||B|) |X||Y|."""

    value: complex
    trivial_bound: float


def hyperbola_sum(chi: Character, a_set, b_set, x_set, y_set,
                  c_a=None, c_b=None) -> HyperbolaSum:
    """sum over (a, x, b, y) with (a + x)(b + y) = 1 of c_A(a) c_B(b) chi(a + x).

    Enumerates A x X and solves for b + y; terms with a + x = 0 vanish since
    chi(0) = 0 and the equation has no solution there anyway.
    """
    p = chi.p
    aa = _residues(a_set, p)
    bb = _residues(b_set, p)
    xx = _residues(x_set, p)
    yy = _residues(y_set, p)
    wa = _weight_map(c_a, a_set, aa)
    wb = _weight_map(c_b, b_set, bb)
    y_lookup = set(yy)
    inner_cache: dict[int, complex] = {}
    total = 0j
    for a in aa:
        for x in xx:
            s = (a + x) % p
            if s == 0:
                continue
            t = pow(s, p - 2, p)
            inner = inner_cache.get(t)
            if inner is None:
                inner = sum((wb[b] for b in bb if (t - b) % p in y_lookup), 0j)
                inner_cache[t] = inner
            total += wa[a] * char_eval(chi, s) * inner
    trivial = math.sqrt(len(aa) * len(bb)) * len(xx) * len(yy)
    return HyperbolaSum(total, trivial)


def hyperbola_group(p: int, a_set, b_set) -> MatrixFamily:
    """The matrices x -> 1/(a + x) - b, one per (a, b); all have
    determinant -1 and are pairwise distinct."""
    aa = _residues(a_set, p)
    bb = _residues(b_set, p)
    mats = [((-b) % p, (1 - a * b) % p, 1, a) for a in aa for b in bb]
    return matrix_family(p, mats)


def group_twisted_sum(chi: Character, family: MatrixFamily, a_set, b_set,
                      c_a=None, c_b=None) -> complex:
    """sum over a in A, b in B, g in G with g a = b of
    c_A(a) c_B(b) chi(gamma a + delta), where g acts by
    a -> (alpha a + beta) / (gamma a + delta); poles contribute nothing."""
    p = family.p
    if chi.p != p:
        raise InvalidArgumentError(f"character mod {chi.p} does not match family mod {p}")
    aa = _residues(a_set, p)
    bb = _residues(b_set, p)
    wa = _weight_map(c_a, a_set, aa)
    wb = _weight_map(c_b, b_set, bb)
    b_lookup = set(bb)
    total = 0j
    for g in family.sorted_elements():
        alpha, beta, gamma, delta = g
        for a in aa:
            den = (gamma * a + delta) % p
            if den == 0:
                continue
            b = (alpha * a + beta) * pow(den, p - 2, p) % p
            if b in b_lookup:
                total += wa[a] * wb[b] * char_eval(chi, den)
    return total


@dataclass(frozen=True)
class LiftCheck:
    """Comparison of the projective-plane lift of a group-twisted sum with
    (p - 1) times its affine evaluation."""

    lifted: complex
    affine_scaled: complex
    residual: float
    tolerance: float
    passed: bool


def projective_lift_check(chi: Character, family: MatrixFamily, a_set, b_set,
                          c_a=None, c_b=None, rel_tol: float = 1e-6) -> LiftCheck:
    """Evaluate the twisted sum through its linear lift to (F_p)^2 minus 0.

    A lifts to (lambda a, lambda) -> c_A(a) conj(chi(lambda)), B likewise
    with chi(mu); the group then acts linearly, and the lifted bilinear sum
    must equal (p - 1) times the affine one.  The residual is measured
    against rel_tol * (p - 1) * sqrt(|A||B|) * |G|.
    """
    p = family.p
    if chi.p != p:
        raise InvalidArgumentError(f"character mod {chi.p} does not match family mod {p}")
    aa = _residues(a_set, p)
    bb = _residues(b_set, p)
    wa = _weight_map(c_a, a_set, aa)
    wb = _weight_map(c_b, b_set, bb)

    support_a = []
    for a in aa:
        for lam in range(1, p):
            support_a.append((lam * a % p, lam, wa[a] * char_eval(chi, lam).conjugate()))
    lift_b = np.zeros((p, p), dtype=complex)
    for b in bb:
        for mu in range(1, p):
            lift_b[mu * b % p, mu] = wb[b] * char_eval(chi, mu)

    lifted = 0j
    for g in family.sorted_elements():
        alpha, beta, gamma, delta = g
        for x1, x2, val in support_a:
            y1 = (alpha * x1 + beta * x2) % p
            y2 = (gamma * x1 + delta * x2) % p
            lifted += val * lift_b[y1, y2]

    affine = (p - 1) * group_twisted_sum(chi, family, a_set, b_set, c_a, c_b)
    residual = abs(lifted - affine)
    tolerance = rel_tol * (p - 1) * math.sqrt(len(aa) * len(bb)) * len(family)
    return LiftCheck(lifted, affine, residual, tolerance, residual < tolerance)


# ---------------------------------------------------------------------------
# multiplicative energy of matrix families


def energy_t2k(family: MatrixFamily, k: int = 2, balanced: bool = False,
               cap: int = DEFAULT_CONVOLUTION_CAP):
    """2k-fold multiplicative energy of the family inside GL_2(F_p).

    Builds c(x) = sum_{g, h} w(g) w(h) [g h^-1 = x] and convolves it with
    itself k - 1 times; the result is sum_x c_k(x)^2.  Raw mode uses weight
    1 on the family (an exact integer); balanced mode subtracts the density
    |G| / |GL_2| on all of GL_2.  Work is capped at ``cap`` products.
    """
    if k not in (2, 3):
        raise InvalidArgumentError(f"supported energies are k = 2 or 3, got {k}")
    p = family.p
    if balanced:
        ambient = enumerate_gl2(p)
        share = len(family) / len(ambient)
        weights = {g: (1.0 - share if g in family.elements else -share)
                   for g in ambient}
    else:
        weights = {g: 1 for g in family.sorted_elements()}

    budget = len(weights) ** 2
    if budget > cap:
        raise TooLargeError(f"{budget} products exceed the convolution cap {cap}")
    inverses = {g: mat2_inv(g, p) for g in weights}
    base: dict = {}
    for g in sorted(weights):
        wg = weights[g]
        for h in sorted(weights):
            x = mat2_mul(g, inverses[h], p)
            base[x] = base.get(x, 0) + wg * weights[h]

    acc = base
    for _ in range(k - 1):
        budget += len(acc) * len(base)
        if budget > cap:
            raise TooLargeError(f"{budget} products exceed the convolution cap {cap}")
        nxt: dict = {}
        for x in sorted(acc):
            vx = acc[x]
            for y in sorted(base):
                key = mat2_mul(x, y, p)
                nxt[key] = nxt.get(key, 0) + vx * base[y]
        acc = nxt
    return sum(acc[x] * acc[x] for x in sorted(acc))


def twisted_bound_rhs(k: int, size_a: int, size_b: int, size_g: int, t2k) -> float:
    """Right-hand side of the twisted-sum estimate:
    sqrt(|A||B||G|) T^(1/8k) + sqrt(|A||B|) |G| max(|A|, |B|)^(-1/2k)."""
    if min(size_a, size_b, size_g) < 0:
        raise InvalidArgumentError("sizes must be nonnegative")
    t = float(t2k)
    if t < 0:
        raise InvalidArgumentError(f"energy must be nonnegative, got {t}")
    if size_a * size_b == 0:
        return 0.0
    first = math.sqrt(size_a * size_b * size_g) * t ** (1.0 / (8 * k))
    second = math.sqrt(size_a * size_b) * size_g * max(size_a, size_b) ** (-1.0 / (2 * k))
    return first + second


# ---------------------------------------------------------------------------
# intersection character sums


@dataclass(frozen=True)
class IntersectionSum:
    """Character sum over a structured intersection, with the trivial
    comparison quantity |A|^2 / p and the count of dropped non-units."""

    value: complex
    intersection_size: int
    comparison: float
    dropped: int


def intersection_char_sum(chi: Character, a_set,
                          variant: str = "multiplicative") -> IntersectionSum:
    """Sum chi over A cap A^-1 ("multiplicative") or over
    A^-1 cap (A^-1 + 1) ("shifted").  Non-units of A are dropped and
    counted, never silently ignored."""
    p = chi.p
    aa = _residues(a_set, p)
    units = [a for a in aa if a % p != 0]
    dropped = len(aa) - len(units)
    inv = {pow(a, p - 2, p) for a in units}
    if variant == "multiplicative":
        target = set(units) & inv
    elif variant == "shifted":
        target = inv & {(x + 1) % p for x in inv}
    else:
        raise InvalidArgumentError(f"unknown variant {variant!r}")
    value = sum((char_eval(chi, x) for x in sorted(target)), 0j)
    return IntersectionSum(value, len(target), len(aa) ** 2 / p, dropped)
