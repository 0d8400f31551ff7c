"""PDE systems in solved form and reduction modulo a system."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .diffalg import (
    DEFAULT_MAX_ORDER,
    DiffAlgError,
    DiffPoly,
    IndexConvention,
    Jet,
    partial,
    replace,
    sym_key,
    total_derivative_multi,
)


class SystemSpecError(DiffAlgError):
    pass


class ReductionError(DiffAlgError):
    pass


@dataclass(frozen=True)
class SystemSpec:
    """Equations ``F_a = 0`` plus, per equation, the jet it is solved for."""

    convention: IndexConvention
    equations: tuple
    solved: tuple = ()
    functions: tuple = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(self.equations))
        solved = tuple(self.solved) or (None,) * len(self.equations)
        if len(solved) != len(self.equations):
            raise SystemSpecError("one solved-derivative hint (or None) is required per equation")
        object.__setattr__(self, "solved", solved)
        object.__setattr__(self, "functions", tuple(self.functions))
        for eq, jet in zip(self.equations, solved):
            if jet is not None:
                solved_coefficient(eq, jet)

    def __len__(self):
        return len(self.equations)

    @property
    def dependent(self) -> tuple:
        return self.convention.dependent

    def reoriented(self, solved) -> "SystemSpec":
        """Same equations, different solved derivatives."""
        return SystemSpec(self.convention, self.equations, tuple(solved), self.functions, self.name)


def solved_coefficient(eq: DiffPoly, jet: Jet) -> int:
    """Return +-1, the coefficient of ``jet`` in ``eq``, or raise if ``eq`` is
    not of the form ``c*jet + rest`` with ``rest`` free of ``jet`` and of its
    derivatives."""
    c = partial(eq, jet)
    if c.is_zero():
        raise SystemSpecError(f"solved derivative {_name(jet)} does not occur in its equation")
    if not c.is_constant() or c.constant_value() not in (1, -1):
        raise SystemSpecError(f"solved derivative {_name(jet)} must appear linearly with coefficient +1 or -1")
    rest = eq - c * DiffPoly.symbol(jet)
    for j in rest.jets():
        if j.dep == jet.dep and all(a >= b for a, b in zip(j.multi, jet.multi)):
            raise SystemSpecError(f"solved derivative {_name(jet)} also occurs in the rest of its equation as {_name(j)}")
    return int(c.constant_value())


def _name(jet: Jet) -> str:
    return f"{jet.dep}{list(jet.multi)}"


@dataclass
class Reduction:
    """Normal form plus the cofactors ``M[(a, L)]`` such that
    ``original == normal + sum M[(a, L)] * D_L(F_a)``."""

    normal: DiffPoly
    multipliers: dict = field(default_factory=dict)

    def rebuild(self, system: SystemSpec, max_order: int = DEFAULT_MAX_ORDER) -> DiffPoly:
        total = self.normal
        for (a, multi), m in self.multipliers.items():
            total = total + m * total_derivative_multi(system.equations[a], multi, max_order)
        return total


class _Rules:
    def __init__(self, system: SystemSpec, max_order: int):
        self.max_order = max_order
        self.system = system
        self.rules = []
        for a, (eq, jet) in enumerate(zip(system.equations, system.solved)):
            if jet is None:
                continue
            c = solved_coefficient(eq, jet)
            rhs = -(eq - c * DiffPoly.symbol(jet)) * c
            self.rules.append((a, jet, c, rhs))
        self._cache: dict = {}

    def match(self, s) -> Optional[tuple]:
        if not isinstance(s, Jet):
            return None
        for a, jet, c, rhs in self.rules:
            if s.dep == jet.dep and all(x >= y for x, y in zip(s.multi, jet.multi)):
                return a, tuple(x - y for x, y in zip(s.multi, jet.multi)), c, rhs
        return None

    def replacement(self, a: int, multi: tuple, rhs: DiffPoly) -> DiffPoly:
        key = (a, multi)
        if key not in self._cache:
            self._cache[key] = total_derivative_multi(rhs, multi, self.max_order)
        return self._cache[key]


def _split(p: DiffPoly, s) -> dict:
    """Write p as sum_k a_k * s**k; returns {k: a_k}."""
    parts: dict = {}
    for mono, c in p._d.items():
        k = 0
        rest = []
        for q, e in mono:
            if q == s:
                k = e
            else:
                rest.append((q, e))
        parts.setdefault(k, {})[tuple(rest)] = c
    return {k: DiffPoly._raw(d) for k, d in parts.items()}


def reduce_modulo(
    p: DiffPoly,
    system: SystemSpec,
    track: bool = False,
    max_order: int = DEFAULT_MAX_ORDER,
    max_steps: int = 5000,
):
    """Eliminate every solved derivative and all of its derivatives.

    Returns the normal form, or a :class:`Reduction` carrying the multiplier
    trace when ``track`` is set.
    """
    rules = _Rules(system, max_order)
    multipliers: dict = {}
    steps = 0
    while True:
        principal = [(s, rules.match(s)) for s in p.symbols()]
        principal = [(s, m) for s, m in principal if m is not None]
        if not principal:
            break
        steps += 1
        if steps > max_steps:
            raise ReductionError("reduction did not terminate; the solved set is not triangular")
        s, (a, multi, c, rhs) = max(principal, key=lambda it: (it[0].order, sym_key(it[0])))
        r = rules.replacement(a, multi, rhs)
        if track:
            sigma = DiffPoly.symbol(s)
            cof = DiffPoly()
            for k, ak in _split(p, s).items():
                if k == 0:
                    continue
                # s^k - r^k = (s - r) * sum_m s^m r^(k-1-m)
                h = DiffPoly()
                for m in range(k):
                    h = h + sigma**m * r ** (k - 1 - m)
                cof = cof + ak * h
            cof = cof * Fraction(1, c)
            key = (a, multi)
            multipliers[key] = multipliers.get(key, DiffPoly()) + cof
        p = replace(p, lambda q, s=s, r=r: r if q == s else None)
    if track:
        return Reduction(p, {k: v for k, v in multipliers.items() if not v.is_zero()})
    return p


def is_principal(jet: Jet, system: SystemSpec) -> bool:
    return _Rules(system, DEFAULT_MAX_ORDER).match(jet) is not None
