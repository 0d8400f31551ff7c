"""Formal Lagrangians, adjoint systems and nonlinear self-adjointness."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .diffalg import DiffAlgError, DiffPoly, Jet, SubstitutionRule, euler, partial, substitute
from .system import SystemSpec, reduce_modulo

DEFAULT_ADJOINT_NAMES = ("v", "z")


class AdjointError(DiffAlgError):
    pass


@dataclass(frozen=True)
class FormalLagrangian:
    system: SystemSpec
    adjoint_names: tuple
    lagrangian: DiffPoly

    @property
    def convention(self):
        return self.system.convention.with_dependent(self.adjoint_names)

    @property
    def original(self) -> tuple:
        return self.system.convention.dependent


def default_adjoint_names(n: int, taken=()) -> tuple:
    """``v, z`` for up to two equations, then ``v1, v2, ...``; names in
    ``taken`` are skipped."""
    taken = set(taken)
    names = [c for c in DEFAULT_ADJOINT_NAMES if c not in taken][:n]
    k = 1
    while len(names) < n:
        if f"v{k}" not in taken:
            names.append(f"v{k}")
        k += 1
    return tuple(names)


def formal_lagrangian(system: SystemSpec, adjoint_names: Optional[Sequence[str]] = None) -> FormalLagrangian:
    """L = sum_a v_a * F_a with one fresh dependent variable per equation."""
    taken = set(system.convention.independent) | set(system.convention.dependent) | set(system.functions)
    names = tuple(adjoint_names) if adjoint_names else default_adjoint_names(len(system), taken)
    if len(names) != len(system):
        raise AdjointError(f"need {len(system)} adjoint names, got {len(names)}")
    clash = sorted(set(names) & taken)
    if clash or len(set(names)) != len(names):
        raise AdjointError(f"adjoint variable names collide with existing names: {clash or names}")
    zero = system.convention.zero()
    lag = DiffPoly()
    for name, eq in zip(names, system.equations):
        lag = lag + DiffPoly.jet(name, zero) * eq
    return FormalLagrangian(system, names, lag)


def _orient(eq: DiffPoly, lead: Optional[Jet]) -> DiffPoly:
    """Fix the sign so ``lead`` has coefficient +1 (or, failing that, so the
    first term in canonical order is positive)."""
    if eq.is_zero():
        return eq
    if lead is not None:
        c = partial(eq, lead)
        if c.is_constant() and c.constant_value() < 0:
            return -eq
        if c.is_constant() and c.constant_value() > 0:
            return eq
    return -eq if eq.terms[0][1] < 0 else eq


@dataclass(frozen=True)
class AdjointSystem:
    lagrangian: FormalLagrangian
    raw: tuple            # delta L / delta u^a, one per original dependent variable
    oriented: tuple       # sign-normalised copies of ``raw``
    leads: tuple          # the adjoint jet each oriented equation is normalised on

    def as_system(self) -> SystemSpec:
        conv = self.lagrangian.convention
        solved = []
        for eq, lead in zip(self.oriented, self.leads):
            ok = lead is not None and partial(eq, lead) == 1
            solved.append(lead if ok else None)
        return SystemSpec(conv, self.oriented, tuple(solved), self.lagrangian.system.functions, "adjoint")


def adjoint_system(lag: FormalLagrangian) -> AdjointSystem:
    """Variational derivatives of L with respect to the original variables.

    The equation for u^b is oriented on the adjoint counterpart of the jet
    some equation is solved for in u^b: KP solves u_t in its first equation,
    so delta L / delta u is normalised so that v_t has coefficient +1.
    """
    system = lag.system
    raw, oriented, leads = [], [], []
    for dep in system.convention.dependent:
        e = euler(lag.lagrangian, dep)
        lead = None
        for name, jet in zip(lag.adjoint_names, system.solved):
            if jet is not None and jet.dep == dep:
                lead = Jet(name, jet.multi)
                break
        raw.append(e)
        oriented.append(_orient(e, lead))
        leads.append(lead)
    return AdjointSystem(lag, tuple(raw), tuple(oriented), tuple(leads))


@dataclass(frozen=True)
class SelfAdjointnessReport:
    substitution: SubstitutionRule
    adjoint: AdjointSystem
    substituted: tuple
    residuals: tuple

    @property
    def verdict(self) -> bool:
        return all(r.is_zero() for r in self.residuals)

    def identical_to_system(self) -> bool:
        """True when each substituted adjoint equation equals the matching
        original equation up to sign, term for term."""
        system = self.adjoint.lagrangian.system
        return len(self.substituted) == len(system) and all(
            s == e or s == -e for s, e in zip(self.substituted, system.equations)
        )


def check_selfadjointness(system: SystemSpec, rule: SubstitutionRule, lag: Optional[FormalLagrangian] = None):
    """Substitute ``rule`` into the adjoint system and reduce modulo ``system``."""
    lag = lag or formal_lagrangian(system)
    missing = [n for n in lag.adjoint_names if n not in rule]
    if missing:
        raise AdjointError(f"substitution does not assign the adjoint variables {missing}")
    adj = adjoint_system(lag)
    substituted = tuple(substitute(eq, rule) for eq in adj.oriented)
    residuals = tuple(reduce_modulo(eq, system) for eq in substituted)
    return SelfAdjointnessReport(rule, adj, substituted, residuals)
