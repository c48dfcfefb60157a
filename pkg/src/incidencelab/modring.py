"""Exact arithmetic over Z_q.

Factorization, Jordan totients, modular inverses, discrete logarithms,
multiplicative characters, a naive discrete Fourier transform, and small
helpers for 2x2 matrices mod q.  Integer quantities (totients, counts,
tables) are exact; only character values and transforms are floating point.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product as _cartesian

import numpy as np

from .errors import InvalidArgumentError, InvalidModulusError


@dataclass(frozen=True)
class Modulus:
    """A modulus q >= 2 together with its prime factorization.

    ``factors`` holds (prime, exponent) pairs with primes increasing, so the
    smallest prime divisor is always ``factors[0][0]``.
    """

    q: int
    factors: tuple[tuple[int, int], ...]

    @property
    def least_prime(self) -> int:
        return self.factors[0][0]

    @property
    def omega(self) -> int:
        """Number of distinct prime divisors."""
        return len(self.factors)

    @property
    def tau(self) -> int:
        """Number of positive divisors."""
        t = 1
        for _, e in self.factors:
            t *= e + 1
        return t

    @property
    def is_prime(self) -> bool:
        return len(self.factors) == 1 and self.factors[0][1] == 1

    def __int__(self) -> int:
        return self.q

    def __str__(self) -> str:
        return str(self.q)


@lru_cache(maxsize=None)
def factorize(q: int) -> Modulus:
    """Factor q >= 2 by trial division and return it as a Modulus."""
    if not isinstance(q, int) or q < 2:
        raise InvalidModulusError(f"modulus must be an integer >= 2, got {q!r}")
    n = q
    factors = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            factors.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        factors.append((n, 1))
    return Modulus(q, tuple(factors))


def as_modulus(q) -> Modulus:
    """Coerce an int (or Modulus) to a Modulus."""
    if isinstance(q, Modulus):
        return q
    return factorize(q)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    p = 2
    while p * p <= n:
        if n % p == 0:
            return False
        p += 1 if p == 2 else 2
    return True


def jordan_totient(k: int, q) -> int:
    """J_k(q): the number of k-tuples from [1, q] forming with q a coprime set.

    Computed exactly from the factorization as the product over p | q of
    p^(k(e-1)) * (p^k - 1).  J_k(1) = 1 by the empty product.
    """
    if k < 1:
        raise InvalidArgumentError(f"totient order must be >= 1, got {k}")
    if isinstance(q, int) and q == 1:
        return 1
    mod = as_modulus(q)
    total = 1
    for p, e in mod.factors:
        total *= p ** (k * (e - 1)) * (p ** k - 1)
    return total


def inv_mod(a: int, q) -> int | None:
    """Inverse of a mod q, or None when gcd(a, q) != 1."""
    n = int(q)
    try:
        return pow(a % n, -1, n)
    except ValueError:
        return None


def units(q) -> tuple[int, ...]:
    """The units of Z_q in increasing order."""
    n = int(q)
    return tuple(x for x in range(n) if math.gcd(x, n) == 1)


def coprime_tuples(q, n: int):
    """All tuples in [0, q)^n jointly coprime with q, lexicographically.

    For n = 1 the result is a list of ints, matching the dimension-1
    point-set convention used throughout the package.
    """
    qq = int(q)
    if n < 1:
        raise InvalidArgumentError(f"tuple length must be >= 1, got {n}")
    if n == 1:
        return [x for x in range(qq) if math.gcd(x, qq) == 1]
    return [t for t in _cartesian(range(qq), repeat=n) if math.gcd(*t, qq) == 1]


@lru_cache(maxsize=None)
def primitive_root(p: int) -> int:
    """Smallest primitive root of the prime p >= 3."""
    if p < 3 or not is_prime(p):
        raise InvalidArgumentError(f"primitive roots need a prime p >= 3, got {p}")
    phi = p - 1
    prime_divs = [pr for pr, _ in factorize(phi).factors]
    for g in range(2, p):
        if all(pow(g, phi // d, p) != 1 for d in prime_divs):
            return g
    raise ArithmeticError(f"no primitive root found for {p}")  # unreachable


@lru_cache(maxsize=None)
def dlog_table(p: int, g: int | None = None) -> tuple[int, ...]:
    """Full discrete-log table base g mod the prime p.

    table[x] is the exponent e with g^e = x; table[0] = -1 as a sentinel.
    Building the table walks the powers of g once, which also verifies that
    g generates the unit group.
    """
    if g is None:
        g = primitive_root(p)
    if p < 3 or not is_prime(p):
        raise InvalidArgumentError(f"discrete logs need a prime p >= 3, got {p}")
    g %= p
    table = [-1] * p
    acc = 1
    for e in range(p - 1):
        if table[acc] != -1:
            raise InvalidArgumentError(f"{g} does not generate the units mod {p}")
        table[acc] = e
        acc = acc * g % p
    if acc != 1:
        raise InvalidArgumentError(f"{g} does not generate the units mod {p}")
    return tuple(table)


@dataclass(frozen=True)
class Character:
    """Multiplicative character mod a prime p.

    chi(g^e) = exp(2 pi i * index * e / (p - 1)) for the fixed primitive root
    g, and chi(0) = 0.  index = 0 is the principal character.
    """

    p: int
    generator: int
    index: int

    @property
    def order(self) -> int:
        return (self.p - 1) // math.gcd(self.index, self.p - 1)

    @property
    def is_principal(self) -> bool:
        return self.index % (self.p - 1) == 0

    def __call__(self, x: int) -> complex:
        return char_eval(self, x)

    def values(self) -> np.ndarray:
        """chi(x) for x = 0..p-1 as a complex vector."""
        return _char_values(self.p, self.generator, self.index).copy()


def make_character(p: int, index: int) -> Character:
    """Build the character of the given index (0 <= index <= p - 2) mod p."""
    g = primitive_root(p)
    if not 0 <= index <= p - 2:
        raise InvalidArgumentError(f"character index must lie in [0, {p - 2}], got {index}")
    return Character(p, g, index)


def characters(p: int) -> list[Character]:
    """All p - 1 characters mod p, principal first."""
    return [make_character(p, k) for k in range(p - 1)]


def char_eval(chi: Character, x: int) -> complex:
    x %= chi.p
    if x == 0:
        return 0j
    e = dlog_table(chi.p, chi.generator)[x]
    m = chi.p - 1
    return cmath.exp(2j * math.pi * ((chi.index * e) % m) / m)


@lru_cache(maxsize=None)
def _char_values(p: int, g: int, k: int) -> np.ndarray:
    dl = np.array(dlog_table(p, g), dtype=np.int64)
    m = p - 1
    vals = np.exp(2j * np.pi * ((k * dl) % m) / m)
    vals[0] = 0.0
    return vals


def as_complex_vector(values, length: int | None = None) -> np.ndarray:
    """Validate and coerce to a finite 1-D complex vector."""
    vec = np.asarray(values, dtype=complex)
    if vec.ndim != 1 or vec.size == 0:
        raise InvalidArgumentError("expected a nonempty 1-D vector")
    if length is not None and vec.size != length:
        raise InvalidArgumentError(f"expected length {length}, got {vec.size}")
    if not np.all(np.isfinite(vec)):
        raise InvalidArgumentError("vector entries must be finite")
    return vec


def dft(f) -> np.ndarray:
    """Transform f on Z_q against the additive characters x -> e(t x / q).

    fhat[t] = sum_x f(x) exp(2 pi i t x / q).  Direct O(q^2) evaluation;
    at desk scale there is no need for anything faster.
    """
    vec = as_complex_vector(f)
    q = vec.size
    grid = np.outer(np.arange(q), np.arange(q))
    return np.exp(2j * np.pi * grid / q) @ vec


def idft(fhat) -> np.ndarray:
    """Inverse of dft: f(x) = q^(-1) sum_t fhat(t) exp(-2 pi i t x / q)."""
    vec = as_complex_vector(fhat)
    q = vec.size
    grid = np.outer(np.arange(q), np.arange(q))
    return (np.exp(-2j * np.pi * grid / q) @ vec) / q


def balanced(f, group_size: int) -> np.ndarray:
    """Subtract the mean so the result sums to zero over the group."""
    vec = as_complex_vector(f)
    if group_size < 1:
        raise InvalidArgumentError(f"group size must be >= 1, got {group_size}")
    if vec.size != group_size:
        raise InvalidArgumentError(
            f"vector length {vec.size} does not match group size {group_size}"
        )
    return vec - vec.sum() / group_size


# 2x2 matrices mod q are passed around as flat tuples (a, b, c, d) meaning
# the matrix [[a, b], [c, d]].

IDENTITY2 = (1, 0, 0, 1)


def mat2_det(g, q) -> int:
    a, b, c, d = g
    return (a * d - b * c) % int(q)


def mat2_mul(g, h, q):
    n = int(q)
    a, b, c, d = g
    e, f, i, j = h
    return ((a * e + b * i) % n, (a * f + b * j) % n,
            (c * e + d * i) % n, (c * f + d * j) % n)


def mat2_inv(g, q):
    n = int(q)
    det_inv = inv_mod(mat2_det(g, n), n)
    if det_inv is None:
        raise InvalidArgumentError(f"matrix {g} is not invertible mod {n}")
    a, b, c, d = g
    return (d * det_inv % n, -b * det_inv % n, -c * det_inv % n, a * det_inv % n)


def mobius(g, x: int, q) -> int | None:
    """Evaluate (a x + b) / (c x + d) mod q, or None when the denominator
    is not a unit (the image escapes to infinity)."""
    n = int(q)
    a, b, c, d = g
    den = (c * x + d) % n
    den_inv = inv_mod(den, n)
    if den_inv is None:
        return None
    return (a * x + b) * den_inv % n
