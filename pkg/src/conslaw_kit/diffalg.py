"""Differential polynomials on a jet space.

A differential polynomial is a finite sum of terms ``c * m`` where ``c`` is an
exact rational and ``m`` is a monomial in three kinds of symbols:

* ``Coord(i)``        -- the i-th independent variable (t, x, y by default),
* ``Func(name, k)``   -- the k-th derivative of an arbitrary function of the
  first independent variable (``f``, ``f'``, ``f''`` ...),
* ``Jet(dep, multi)`` -- the derivative of the dependent variable ``dep``
  given by the multi-index ``multi`` (derivative counts per independent
  variable, so mixed partials are stored order-free).

Values are immutable; every operation returns a new canonical polynomial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product as cartesian
from numbers import Rational
from typing import Callable, Iterable, Mapping, NamedTuple, Optional, Sequence

DEFAULT_MAX_ORDER = 8
DEFAULT_INDEPENDENT = ("t", "x", "y")
DEFAULT_DEPENDENT = ("u", "w", "v", "z")

# Preferred ordering of dependent names in printed output; anything else
# sorts after these, alphabetically.
_DEP_PREFERENCE = ("u", "w", "phi", "v", "z")


class DiffAlgError(Exception):
    pass


class OrderOverflowError(DiffAlgError):
    pass


class MissingSymbolError(DiffAlgError, KeyError):
    def __init__(self, symbol):
        super().__init__(symbol)
        self.symbol = symbol

    def __str__(self):
        return f"no value supplied for symbol {self.symbol!r}"


class Coord(NamedTuple):
    index: int


class Func(NamedTuple):
    name: str
    k: int


class Jet(NamedTuple):
    dep: str
    multi: tuple

    @property
    def order(self) -> int:
        return sum(self.multi)


def _dep_rank(name: str):
    try:
        return (_DEP_PREFERENCE.index(name), name)
    except ValueError:
        return (len(_DEP_PREFERENCE), name)


@lru_cache(maxsize=None)
def sym_key(s):
    """Total order on symbols: coordinates, then functions, then jets."""
    if isinstance(s, Jet):
        return (2, _dep_rank(s.dep), -s.multi[0] if s.multi else 0, sum(s.multi), tuple(-m for m in s.multi))
    if isinstance(s, Func):
        return (1, (0, s.name), 0, s.k, ())
    return (0, (0, ""), 0, s.index, ())


def _mono(items: Iterable) -> tuple:
    d: dict = {}
    for s, e in items:
        if e:
            d[s] = d.get(s, 0) + e
    return tuple(sorted(((s, e) for s, e in d.items() if e), key=lambda it: sym_key(it[0])))


@lru_cache(maxsize=200_000)
def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    return _mono(a + b)


def _term_key(mono: tuple):
    jets = []
    coeff = []
    for s, e in mono:
        if isinstance(s, Jet):
            jets.extend([sym_key(s)] * e)
        else:
            coeff.append((sym_key(s), e))
    jets.sort(reverse=True)
    return (0 if jets else 1, tuple(jets), tuple(coeff))


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    raise TypeError(f"coefficients must be exact rationals, got {type(c).__name__}")


class DiffPoly:
    """Canonical differential polynomial with exact rational coefficients."""

    __slots__ = ("_d", "_sorted", "_hash")

    def __init__(self, terms: Optional[Mapping] = None):
        d = {}
        if terms:
            for m, c in terms.items():
                c = _as_fraction(c)
                if c:
                    d[m] = c
        self._d = d
        self._sorted = None
        self._hash = None

    @classmethod
    def _raw(cls, d: dict) -> "DiffPoly":
        p = cls.__new__(cls)
        p._d = d
        p._sorted = None
        p._hash = None
        return p

    # construction helpers

    @classmethod
    def const(cls, c) -> "DiffPoly":
        return cls({(): c})

    @classmethod
    def symbol(cls, s) -> "DiffPoly":
        return cls._raw({((s, 1),): Fraction(1)})

    @classmethod
    def jet(cls, dep: str, multi: Sequence[int] = (0, 0, 0)) -> "DiffPoly":
        return cls.symbol(Jet(dep, tuple(multi)))

    @classmethod
    def coord(cls, index: int) -> "DiffPoly":
        return cls.symbol(Coord(index))

    @classmethod
    def func(cls, name: str, k: int = 0) -> "DiffPoly":
        return cls.symbol(Func(name, k))

    # inspection

    @property
    def terms(self) -> tuple:
        """``(monomial, coefficient)`` pairs in canonical order."""
        if self._sorted is None:
            self._sorted = tuple(sorted(self._d.items(), key=lambda it: _term_key(it[0])))
        return self._sorted

    def coefficient(self, mono: tuple) -> Fraction:
        return self._d.get(mono, Fraction(0))

    def is_zero(self) -> bool:
        return not self._d

    def is_constant(self) -> bool:
        return all(m == () for m in self._d)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise DiffAlgError("polynomial is not a constant")
        return self._d.get((), Fraction(0))

    def symbols(self) -> frozenset:
        return frozenset(s for m in self._d for s, _ in m)

    def jets(self) -> frozenset:
        return frozenset(s for s in self.symbols() if isinstance(s, Jet))

    def jet_order(self) -> int:
        return max((j.order for j in self.jets()), default=0)

    def deps(self) -> frozenset:
        return frozenset(j.dep for j in self.jets())

    def __len__(self):
        return len(self._d)

    def __iter__(self):
        return iter(self.terms)

    # arithmetic

    @staticmethod
    def _coerce(other) -> "DiffPoly":
        if isinstance(other, DiffPoly):
            return other
        if isinstance(other, (int, Rational)):
            return DiffPoly.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        d = dict(self._d)
        for m, c in other._d.items():
            v = d.get(m, 0) + c
            if v:
                d[m] = v
            else:
                d.pop(m, None)
        return DiffPoly._raw(d)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly._raw({m: -c for m, c in self._d.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Rational)):
            c = _as_fraction(other)
            if not c:
                return DiffPoly()
            return DiffPoly._raw({m: v * c for m, v in self._d.items()})
        if not isinstance(other, DiffPoly):
            return NotImplemented
        d: dict = {}
        for m1, c1 in self._d.items():
            for m2, c2 in other._d.items():
                m = _mono_mul(m1, m2)
                v = d.get(m, 0) + c1 * c2
                if v:
                    d[m] = v
                else:
                    d.pop(m, None)
        return DiffPoly._raw(d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, DiffPoly):
            other = other.constant_value()
        c = _as_fraction(other)
        if not c:
            raise ZeroDivisionError("division of a differential polynomial by zero")
        return self * (1 / c)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = DiffPoly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Rational)):
            other = DiffPoly.const(other)
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self._d == other._d

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._d.items()))
        return self._hash

    def __bool__(self):
        return bool(self._d)

    def __repr__(self):
        return f"DiffPoly({str(self)!r})"

    def __str__(self):
        from .parser import render_plain

        return render_plain(self)


ZERO = DiffPoly()
ONE = DiffPoly.const(1)


@dataclass(frozen=True)
class IndexConvention:
    """Names of the independent and dependent variables."""

    independent: tuple = DEFAULT_INDEPENDENT
    dependent: tuple = ("u", "w")

    def __post_init__(self):
        object.__setattr__(self, "independent", tuple(self.independent))
        object.__setattr__(self, "dependent", tuple(self.dependent))
        names = self.independent + self.dependent
        if len(set(names)) != len(names):
            raise DiffAlgError(f"duplicate variable names in {names}")

    @property
    def dim(self) -> int:
        return len(self.independent)

    def index(self, name: str) -> int:
        return self.independent.index(name)

    def unit(self, i: int) -> tuple:
        return tuple(1 if j == i else 0 for j in range(self.dim))

    def zero(self) -> tuple:
        return (0,) * self.dim

    def with_dependent(self, extra: Iterable[str]) -> "IndexConvention":
        return IndexConvention(self.independent, self.dependent + tuple(extra))


def canonicalize(terms: Iterable, max_order: int = DEFAULT_MAX_ORDER) -> DiffPoly:
    """Build a canonical polynomial from ``(coefficient, [(symbol, exp), ...])`` pairs.

    Duplicate monomials are merged and zero terms dropped.
    """
    d: dict = {}
    for c, items in terms:
        m = _mono(items)
        for s, _ in m:
            if isinstance(s, Jet):
                _check_order(s, max_order)
        v = d.get(m, 0) + _as_fraction(c)
        if v:
            d[m] = v
        else:
            d.pop(m, None)
    return DiffPoly._raw(d)


def _check_order(jet: Jet, max_order: int):
    if jet.order > max_order:
        raise OrderOverflowError(
            f"derivative order {jet.order} of {jet.dep}{jet.multi} exceeds the maximum {max_order}"
        )


def _shift(multi: tuple, i: int, by: int = 1) -> tuple:
    return multi[:i] + (multi[i] + by,) + multi[i + 1 :]


def _symbol_derivative(s, i: int, max_order: int) -> Optional[DiffPoly]:
    if isinstance(s, Jet):
        j = Jet(s.dep, _shift(s.multi, i))
        _check_order(j, max_order)
        return DiffPoly.symbol(j)
    if isinstance(s, Func):
        return DiffPoly.symbol(Func(s.name, s.k + 1)) if i == 0 else None
    return ONE if s.index == i else None


def derive(p: DiffPoly, dsym: Callable) -> DiffPoly:
    """Apply the derivation determined by its values ``dsym(symbol)`` on symbols.

    ``dsym`` returns a DiffPoly or None (meaning zero).
    """
    d: dict = {}
    cache: dict = {}
    for mono, c in p._d.items():
        for idx, (s, e) in enumerate(mono):
            if s not in cache:
                cache[s] = dsym(s)
            ds = cache[s]
            if ds is None or ds.is_zero():
                continue
            rest = mono[:idx] + (((s, e - 1),) if e > 1 else ()) + mono[idx + 1 :]
            coef = c * e
            for m2, c2 in ds._d.items():
                m = _mono_mul(rest, m2)
                v = d.get(m, 0) + coef * c2
                if v:
                    d[m] = v
                else:
                    d.pop(m, None)
    return DiffPoly._raw(d)


def total_derivative(p: DiffPoly, i: int, max_order: int = DEFAULT_MAX_ORDER) -> DiffPoly:
    """Total derivative D_i: shifts jets, differentiates coordinates and, for
    i == 0, raises the derivative order of function symbols."""
    return derive(p, lambda s: _symbol_derivative(s, i, max_order))


def total_derivative_multi(p: DiffPoly, multi: Sequence[int], max_order: int = DEFAULT_MAX_ORDER) -> DiffPoly:
    """D_J p for a multi-index of derivative counts."""
    for i, n in enumerate(multi):
        for _ in range(n):
            if p.is_zero():
                return p
            p = total_derivative(p, i, max_order)
    return p


def partial(p: DiffPoly, s) -> DiffPoly:
    """Ordinary partial derivative with respect to one symbol."""
    return derive(p, lambda q: ONE if q == s else None)


def orderings(multi: Sequence[int]) -> int:
    """Number of distinct index sequences that sort to ``multi``."""
    n = math.factorial(sum(multi))
    for m in multi:
        n //= math.factorial(m)
    return n


def partial_jet(p: DiffPoly, dep: str, multi: Sequence[int], symmetrized: bool = True) -> DiffPoly:
    """Partial derivative with respect to the stored jet ``dep_multi``.

    With ``symmetrized`` the result is divided by the number of orderings of
    the multi-index, so that a sum over ordered index tuples (i, j, k, ...)
    counts each stored jet exactly once.
    """
    q = partial(p, Jet(dep, tuple(multi)))
    if symmetrized and not q.is_zero():
        n = orderings(multi)
        if n != 1:
            q = q / n
    return q


def euler(p: DiffPoly, dep: str, max_order: int = DEFAULT_MAX_ORDER) -> DiffPoly:
    """Variational derivative: sum over J of (-D)_J applied to dp/d(dep_J)."""
    if p.jet_order() > max_order:
        raise OrderOverflowError(f"jet order {p.jet_order()} exceeds the maximum {max_order}")
    result = DiffPoly()
    for j in sorted((j for j in p.jets() if j.dep == dep), key=sym_key):
        term = total_derivative_multi(partial(p, j), j.multi, max_order)
        result = result - term if j.order % 2 else result + term
    return result


def replace(p: DiffPoly, fn: Callable) -> DiffPoly:
    """Replace every symbol ``s`` for which ``fn(s)`` is not None by that polynomial."""
    cache: dict = {}
    powers: dict = {}
    d: dict = {}

    for mono, c in p._d.items():
        acc = DiffPoly._raw({(): c})
        kept = []
        for s, e in mono:
            if s not in cache:
                cache[s] = fn(s)
            r = cache[s]
            if r is None:
                kept.append((s, e))
                continue
            key = (s, e)
            if key not in powers:
                powers[key] = r**e
            acc = acc * powers[key]
            if acc.is_zero():
                break
        if acc.is_zero():
            continue
        kept_m = tuple(kept)
        for m2, c2 in acc._d.items():
            m = _mono_mul(kept_m, m2)
            v = d.get(m, 0) + c2
            if v:
                d[m] = v
            else:
                d.pop(m, None)
    return DiffPoly._raw(d)


@dataclass(frozen=True)
class SubstitutionRule:
    """Map from dependent-variable names to jet-order-0 target polynomials."""

    mapping: Mapping = field(default_factory=dict)

    def __post_init__(self):
        mapping = dict(self.mapping)
        for dep, target in mapping.items():
            if not isinstance(target, DiffPoly):
                target = DiffPoly._coerce(target)
                mapping[dep] = target
            if target.jet_order() != 0:
                raise DiffAlgError(f"substitution target for {dep} must have jet order 0")
            bad = target.deps() & set(mapping)
            if bad:
                raise DiffAlgError(f"cyclic substitution: {dep} -> ... uses {sorted(bad)}")
        object.__setattr__(self, "mapping", mapping)

    def __contains__(self, dep):
        return dep in self.mapping

    def keys(self):
        return self.mapping.keys()


def substitute(p: DiffPoly, rule: SubstitutionRule, max_order: int = DEFAULT_MAX_ORDER) -> DiffPoly:
    """Replace every jet of a substituted variable, v_J -> D_J(target)."""
    if not rule.mapping:
        return p

    def fn(s):
        if isinstance(s, Jet) and s.dep in rule.mapping:
            return total_derivative_multi(rule.mapping[s.dep], s.multi, max_order)
        return None

    return replace(p, fn)


def evaluate(p: DiffPoly, point: Mapping):
    """Evaluate at a point given as ``{symbol: value}``.

    Exact (a Fraction) when every supplied value used is rational; otherwise
    coefficients are converted to float, which also lets numpy arrays through.
    """
    values = {}
    exact = True
    for s in p.symbols():
        if s not in point:
            raise MissingSymbolError(s)
        v = point[s]
        if not isinstance(v, (int, Rational)):
            exact = False
        values[s] = v
    total = Fraction(0) if exact else 0.0
    for mono, c in p._d.items():
        t = c if exact else float(c)
        for s, e in mono:
            t = t * values[s] ** e
        total = total + t
    return total


def jet_multis(order: int, dim: int = 3):
    """All multi-indices of total order exactly ``order``."""
    for multi in cartesian(range(order + 1), repeat=dim):
        if sum(multi) == order:
            yield multi
