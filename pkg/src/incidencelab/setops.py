"""Finite point sets over Z_q and their additive/multiplicative algebra.

A PointSet holds distinct, reduced residue tuples (plain ints in dimension 1)
plus optional complex weights of magnitude at most 1.  All derived sets are
exact images; nothing is ever dropped silently.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .errors import InvalidArgumentError, StructureError
from .modring import Modulus, as_modulus, inv_mod

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PointSet:
    """A finite subset of Z_q^n, optionally weighted.

    Dimension-1 elements are ints; higher dimensions use tuples of ints.
    Construct through :func:`point_set`, which reduces and validates.
    """

    modulus: Modulus
    dimension: int
    elements: frozenset
    weights: dict | None = None

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.sorted_elements())

    def __contains__(self, el) -> bool:
        return el in self.elements

    def sorted_elements(self) -> list:
        return sorted(self.elements)

    def weight(self, el) -> complex:
        if self.weights is None:
            return 1.0 + 0j
        return self.weights[el]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointSet):
            return NotImplemented
        return (self.modulus.q == other.modulus.q
                and self.dimension == other.dimension
                and self.elements == other.elements
                and self.weights == other.weights)

    def __repr__(self) -> str:
        return (f"PointSet(q={self.modulus.q}, dim={self.dimension}, "
                f"size={len(self.elements)}, weighted={self.weights is not None})")


def _reduce_element(el, q: int, dimension: int):
    if dimension == 1:
        if isinstance(el, tuple):
            if len(el) != 1:
                raise InvalidArgumentError(f"expected a scalar element, got {el!r}")
            el = el[0]
        return int(el) % q
    if not isinstance(el, tuple) or len(el) != dimension:
        raise InvalidArgumentError(f"expected a {dimension}-tuple, got {el!r}")
    return tuple(int(c) % q for c in el)


def point_set(q, elements, dimension: int | None = None, weights=None) -> PointSet:
    """Build a PointSet, reducing componentwise into [0, q).

    ``weights`` maps elements to complex numbers of magnitude <= 1; it must
    cover exactly the given elements.  Reduction collisions (two inputs that
    reduce to the same residue) are rejected rather than merged.
    """
    mod = as_modulus(q)
    raw = list(elements)
    if dimension is None:
        if not raw:
            raise InvalidArgumentError("dimension is required for an empty point set")
        dimension = len(raw[0]) if isinstance(raw[0], tuple) else 1
    if dimension < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {dimension}")

    reduced = [_reduce_element(el, mod.q, dimension) for el in raw]
    elems = frozenset(reduced)
    if len(elems) != len(reduced):
        raise InvalidArgumentError("elements collide after reduction mod q")

    wmap = None
    if weights is not None:
        wmap = {}
        for key, val in dict(weights).items():
            rkey = _reduce_element(key, mod.q, dimension)
            if rkey in wmap:
                raise InvalidArgumentError("weight keys collide after reduction mod q")
            w = complex(val)
            if abs(w) > 1.0 + _WEIGHT_TOL:
                raise InvalidArgumentError(f"weight magnitude {abs(w)} exceeds 1")
            wmap[rkey] = w
        if set(wmap) != set(elems):
            raise InvalidArgumentError("weights must cover exactly the elements")
    return PointSet(mod, dimension, elems, wmap)


def _check_pair(a: PointSet, b: PointSet, same_dimension: bool = True) -> None:
    if a.modulus.q != b.modulus.q:
        raise InvalidArgumentError(
            f"moduli differ: {a.modulus.q} vs {b.modulus.q}")
    if same_dimension and a.dimension != b.dimension:
        raise InvalidArgumentError(
            f"dimensions differ: {a.dimension} vs {b.dimension}")


def sumset(a: PointSet, b: PointSet) -> PointSet:
    """A + B, componentwise mod q.  Weights do not propagate."""
    _check_pair(a, b)
    q = a.modulus.q
    if a.dimension == 1:
        out = {(x + y) % q for x in a.elements for y in b.elements}
    else:
        out = {tuple((xc + yc) % q for xc, yc in zip(x, y))
               for x in a.elements for y in b.elements}
    return PointSet(a.modulus, a.dimension, frozenset(out))


def productset(a: PointSet, b: PointSet) -> PointSet:
    """A * B mod q for dimension-1 sets."""
    _check_pair(a, b)
    if a.dimension != 1:
        raise InvalidArgumentError("product sets are defined in dimension 1 only")
    q = a.modulus.q
    out = {x * y % q for x in a.elements for y in b.elements}
    return PointSet(a.modulus, 1, frozenset(out))


def is_direct_sum(i: PointSet, lam: PointSet) -> bool:
    """True when every element of I + Lambda has a unique representation,
    i.e. |I + Lambda| = |I| * |Lambda|."""
    _check_pair(i, lam)
    if i.dimension != 1:
        raise InvalidArgumentError("direct-sum checks are defined in dimension 1 only")
    return len(sumset(i, lam)) == len(i) * len(lam)


def rep_function(a: PointSet, b: PointSet, op: str,
                 on_noninvertible: str = "error") -> dict[int, int]:
    """Representation counts r(x) = #{(a, b): a op b = x} for dimension-1 sets.

    op is "sum", "product", or "quotient".  In quotient mode, pairs whose b
    is not a unit either raise (default) or are skipped when
    on_noninvertible="skip"; the caller always sees which policy applied.
    """
    _check_pair(a, b)
    if a.dimension != 1:
        raise InvalidArgumentError("representation functions are defined in dimension 1 only")
    if op not in ("sum", "product", "quotient"):
        raise InvalidArgumentError(f"unknown operation {op!r}")
    if on_noninvertible not in ("error", "skip"):
        raise InvalidArgumentError(f"unknown policy {on_noninvertible!r}")
    q = a.modulus.q
    counts: Counter[int] = Counter()
    for x in a.sorted_elements():
        for y in b.sorted_elements():
            if op == "sum":
                counts[(x + y) % q] += 1
            elif op == "product":
                counts[x * y % q] += 1
            else:
                y_inv = inv_mod(y, q)
                if y_inv is None:
                    if on_noninvertible == "error":
                        raise InvalidArgumentError(
                            f"{y} is not invertible mod {q} in quotient mode")
                    continue
                counts[x * y_inv % q] += 1
    return dict(counts)


@dataclass(frozen=True)
class TransformResult:
    """A transformed point set plus the count of elements that had no image."""

    points: PointSet
    dropped: int


def transform_set(a: PointSet, kind: str, amount: int | None = None) -> TransformResult:
    """Pointwise invert / shift / dilate a dimension-1 set.

    invert keeps the units of A and reports how many elements were dropped;
    shift and dilate take the extra ``amount`` argument.  Weights do not
    propagate (dilation by a non-unit can merge elements).
    """
    if a.dimension != 1:
        raise InvalidArgumentError("set transforms are defined in dimension 1 only")
    q = a.modulus.q
    dropped = 0
    if kind == "invert":
        out = []
        for x in a.sorted_elements():
            x_inv = inv_mod(x, q)
            if x_inv is None:
                dropped += 1
            else:
                out.append(x_inv)
    elif kind == "shift":
        if amount is None:
            raise InvalidArgumentError("shift needs an amount")
        out = [(x + amount) % q for x in a.sorted_elements()]
    elif kind == "dilate":
        if amount is None:
            raise InvalidArgumentError("dilate needs an amount")
        out = [x * amount % q for x in a.sorted_elements()]
    else:
        raise InvalidArgumentError(f"unknown transform {kind!r}")
    return TransformResult(PointSet(a.modulus, 1, frozenset(out)), dropped)


def interval(q, n: int) -> PointSet:
    """The initial interval {1, ..., N} as a dimension-1 set mod q."""
    mod = as_modulus(q)
    if not 1 <= n < mod.q:
        raise StructureError(f"interval length must lie in [1, q), got {n}")
    return PointSet(mod, 1, frozenset(range(1, n + 1)))


def residues(a: PointSet) -> list[int]:
    """Sorted residues of a dimension-1 set."""
    if a.dimension != 1:
        raise InvalidArgumentError("expected a dimension-1 set")
    return a.sorted_elements()


def gcd_with_modulus(el, q: int) -> int:
    """gcd of all components of an element together with q."""
    if isinstance(el, tuple):
        return math.gcd(*el, q)
    return math.gcd(el, q)
