"""Conserved vectors from a formal Lagrangian and a symmetry, their
simplification, and verification of the divergence identity."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .diffalg import (
    DEFAULT_MAX_ORDER,
    DiffAlgError,
    DiffPoly,
    Jet,
    SubstitutionRule,
    partial_jet,
    substitute,
    total_derivative,
)
from .selfadjoint import FormalLagrangian
from .symmetry import Characteristic, Generator, characteristic
from .system import Reduction, SystemSpec, reduce_modulo, solved_coefficient

__all__ = [
    "ConservedVector",
    "GaugeTriple",
    "VerificationReport",
    "UnsupportedOrderError",
    "conserved_vector",
    "kp_closed_form",
    "reduce_modulo",
    "gauge_transform",
    "simplify_density",
    "verify_divergence",
    "divergence",
]

LABELS = ("C1", "C2", "C3")


class UnsupportedOrderError(DiffAlgError):
    pass


@dataclass(frozen=True)
class ConservedVector:
    components: tuple
    provenance: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "provenance", tuple(self.provenance))

    def __getitem__(self, i):
        return self.components[i]

    def __len__(self):
        return len(self.components)

    def labelled(self):
        return [(f"C{i + 1}", c) for i, c in enumerate(self.components)]

    def with_note(self, note: str) -> "ConservedVector":
        return ConservedVector(self.components, self.provenance + (note,))

    def map(self, fn, note: Optional[str] = None) -> "ConservedVector":
        cv = ConservedVector(tuple(fn(c) for c in self.components), self.provenance)
        return cv.with_note(note) if note else cv

    def __neg__(self):
        return self.map(lambda c: -c)

    def same_components(self, other: "ConservedVector") -> bool:
        return self.components == other.components

    def to_json(self, indep=("t", "x", "y")):
        from .parser import render_plain

        prov = "; ".join(self.provenance)
        return [
            {"component": label, "expr": render_plain(c, indep), "provenance": prov}
            for label, c in self.labelled()
        ]


@dataclass(frozen=True)
class GaugeTriple:
    P: DiffPoly = field(default_factory=DiffPoly)
    Q: DiffPoly = field(default_factory=DiffPoly)
    R: DiffPoly = field(default_factory=DiffPoly)

    def __add__(self, other: "GaugeTriple") -> "GaugeTriple":
        return GaugeTriple(self.P + other.P, self.Q + other.Q, self.R + other.R)

    def scale(self, c) -> "GaugeTriple":
        return GaugeTriple(self.P * c, self.Q * c, self.R * c)

    def is_zero(self) -> bool:
        return self.P.is_zero() and self.Q.is_zero() and self.R.is_zero()


# --------------------------------------------------------------------------
# construction


def conserved_vector(
    lag: FormalLagrangian,
    gen: Generator,
    rule: SubstitutionRule,
    keep_xiL: bool = False,
    max_order: int = DEFAULT_MAX_ORDER,
) -> ConservedVector:
    """Conserved vector of a symmetry for a Lagrangian of jet order <= 3.

    C^i = W^a [L_{u_i} - D_j L_{u_ij} + D_j D_k L_{u_ijk}]
        + D_j(W^a) [L_{u_ij} - D_k L_{u_ijk}] + D_j D_k(W^a) L_{u_ijk}

    with sums over ordered index tuples and symmetrised jet partials, the
    adjoint variables then eliminated by ``rule``. The xi^i L term vanishes on
    solutions and is left out unless ``keep_xiL`` is set.
    """
    L = lag.lagrangian
    if L.jet_order() > 3:
        raise UnsupportedOrderError(
            f"the conserved-vector formula covers Lagrangians up to third order; got order {L.jet_order()}"
        )
    conv = gen.convention
    n = conv.dim
    ch = characteristic(gen)

    def e(*idx):
        m = [0] * n
        for i in idx:
            m[i] += 1
        return tuple(m)

    def D(p, *idx):
        for i in idx:
            if p.is_zero():
                return p
            p = total_derivative(p, i, max_order)
        return p

    components = []
    for i in range(n):
        C = DiffPoly()
        for dep, W in zip(conv.dependent, ch.W):
            if W.is_zero():
                continue
            L1 = partial_jet(L, dep, e(i))
            L2 = {j: partial_jet(L, dep, e(i, j)) for j in range(n)}
            L3 = {(j, k): partial_jet(L, dep, e(i, j, k)) for j in range(n) for k in range(n)}
            bracket = L1
            for j in range(n):
                bracket = bracket - D(L2[j], j)
                for k in range(n):
                    bracket = bracket + D(L3[j, k], j, k)
            C = C + W * bracket
            for j in range(n):
                inner = L2[j]
                for k in range(n):
                    inner = inner - D(L3[j, k], k)
                if not inner.is_zero():
                    C = C + D(W, j) * inner
                for k in range(n):
                    if not L3[j, k].is_zero():
                        C = C + D(W, j, k) * L3[j, k]
        if keep_xiL:
            C = C + gen.xi[i] * L
        components.append(substitute(C, rule, max_order))
    notes = [f"generator {gen.name}", "substitution " + _rule_text(rule, conv.independent)]
    if keep_xiL:
        notes.append("xi*L kept")
    return ConservedVector(tuple(components), tuple(notes))


def _rule_text(rule: SubstitutionRule, indep) -> str:
    from .parser import render_plain

    return ",".join(f"{k}={render_plain(v, indep)}" for k, v in sorted(rule.mapping.items()))


def kp_closed_form(W: Characteristic) -> ConservedVector:
    """Closed form of the construction for the KP formal Lagrangian with
    v = u, z = w substituted."""
    u = DiffPoly.jet("u", (0, 0, 0))
    w = DiffPoly.jet("w", (0, 0, 0))
    ux = DiffPoly.jet("u", (0, 1, 0))
    uxx = DiffPoly.jet("u", (0, 2, 0))
    W1, W2 = W["u"], W["w"]
    DxW1 = total_derivative(W1, 1)
    C1 = u * W1
    C2 = -(u**2 + uxx) * W1 + w * W2 + ux * DxW1 - u * total_derivative(DxW1, 1)
    C3 = -w * W1 - u * W2
    return ConservedVector((C1, C2, C3), ("KP closed form",))


# --------------------------------------------------------------------------
# divergence and gauge


def divergence(cv: ConservedVector, max_order: int = DEFAULT_MAX_ORDER) -> DiffPoly:
    total = DiffPoly()
    for i, c in enumerate(cv.components):
        total = total + total_derivative(c, i, max_order)
    return total


def gauge_transform(cv: ConservedVector, g: GaugeTriple) -> ConservedVector:
    """Add the trivial conserved vector built from P, Q, R:

    C1 - D_x P - D_y Q,  C2 + D_t P - D_y R,  C3 + D_t Q + D_x R.
    """
    if len(cv) != 3:
        raise DiffAlgError("gauge triples apply to three-component vectors")
    C1, C2, C3 = cv.components
    Dt = lambda p: total_derivative(p, 0)
    Dx = lambda p: total_derivative(p, 1)
    Dy = lambda p: total_derivative(p, 2)
    out = ConservedVector(
        (C1 - Dx(g.P) - Dy(g.Q), C2 + Dt(g.P) - Dy(g.R), C3 + Dt(g.Q) + Dx(g.R)),
        cv.provenance,
    )
    return out if g.is_zero() else out.with_note("gauge (P, Q, R) applied")


def reduce_vector(cv: ConservedVector, system: SystemSpec) -> ConservedVector:
    return cv.map(lambda c: reduce_modulo(c, system))


# --------------------------------------------------------------------------
# density simplification by integration by parts


def _measure(mono: tuple) -> tuple:
    orders = []
    for s, e in mono:
        if isinstance(s, Jet):
            orders.extend([s.order] * e)
    return (max(orders, default=-1), len(orders), sum(orders))


def _poly_measure(p: DiffPoly) -> list:
    return sorted((_measure(m) for m in p._d), reverse=True)


def _term(mono: tuple, c) -> DiffPoly:
    return DiffPoly._raw({mono: Fraction(c)})


def _without(mono: tuple, s, n: int) -> tuple:
    out = []
    for q, e in mono:
        if q == s:
            if e > n:
                out.append((q, e - n))
        else:
            out.append((q, e))
    return tuple(out)


def _shift(multi: tuple, i: int, by: int) -> tuple:
    return multi[:i] + (multi[i] + by,) + multi[i + 1 :]


def _equivalences(system: SystemSpec) -> list:
    """Solved equations of the form ``sigma = c * tau`` with tau a single jet,
    usable in reverse: tau_L -> sigma_L / c."""
    out = []
    for eq, jet in zip(system.equations, system.solved):
        if jet is None:
            continue
        c = solved_coefficient(eq, jet)
        rest = -(eq - c * DiffPoly.symbol(jet)) * c
        if len(rest) == 1:
            ((mono, k),) = rest.terms
            if len(mono) == 1 and isinstance(mono[0][0], Jet) and mono[0][1] == 1:
                out.append((mono[0][0], jet, Fraction(1) / k))
    return out


def _moves(mono: tuple, c: Fraction, dirs, equivalences):
    """Ways to rewrite the term c*mono as sum_e D_e(potential_e) + remainder,
    or (for reverse equivalences) as an equal-on-solutions remainder."""
    jets = [(s, e) for s, e in mono if isinstance(s, Jet)]
    top = max((s.order for s, _ in jets), default=0)
    out = []
    for s, e in jets:
        if e != 1 or s.order != top or s.order == 0:
            continue
        for d in dirs:
            if s.multi[d] == 0:
                continue
            base = Jet(s.dep, _shift(s.multi, d, -1))
            A = _without(mono, s, 1)
            n = dict(A).get(base, 0)
            B = _term(_without(A, base, n), c)
            bpow = DiffPoly.symbol(base) ** (n + 1) / (n + 1)
            pot = B * bpow
            rem = -total_derivative(B, d) * bpow
            out.append(({d: pot}, rem))
    for tau, sigma, k in equivalences:
        for s, e in jets:
            if s.dep == tau.dep and all(a >= b for a, b in zip(s.multi, tau.multi)):
                extra = tuple(a - b for a, b in zip(s.multi, tau.multi))
                target = Jet(sigma.dep, tuple(a + b for a, b in zip(sigma.multi, extra)))
                new = _term(_without(mono, s, e), c) * (DiffPoly.symbol(target) * k) ** e
                out.append(({}, new))
    return out


def _integrate(p: DiffPoly, dirs, equivalences, depth: int = 3, max_rounds: int = 500):
    """Greedily move total-derivative parts of ``p`` into potentials.

    A compound move (up to ``depth`` steps) is accepted only when the multiset
    of term measures (max jet order, jet degree, order sum) strictly
    decreases, which guarantees termination.
    """
    potentials = {d: DiffPoly() for d in dirs}
    stuck: set = set()
    for _ in range(max_rounds):
        candidates = sorted(
            ((m, c) for m, c in p._d.items() if m not in stuck),
            key=lambda it: _measure(it[0]),
            reverse=True,
        )
        progressed = False
        for mono, c in candidates:
            found = _search(p, mono, c, dirs, equivalences, depth, _poly_measure(p))
            if found is None:
                stuck.add(mono)
                continue
            p, pots = found
            for d, q in pots.items():
                potentials[d] = potentials[d] + q
            progressed = True
            stuck = {m for m in stuck if m in p._d}
            break
        if not progressed:
            break
    return p, potentials


def _search(p, mono, c, dirs, equivalences, depth, target):
    frontier = [(p, mono, c, {})]
    for _ in range(depth):
        nxt = []
        for cur, m, k, pots in frontier:
            term = _term(m, k)
            for mv_pots, rem in _moves(m, k, dirs, equivalences):
                new = cur - term + rem
                acc = dict(pots)
                for d, q in mv_pots.items():
                    acc[d] = acc.get(d, DiffPoly()) + q
                if _poly_measure(new) < target:
                    return new, acc
                for m2, k2 in rem._d.items():
                    if m2 in new._d:
                        nxt.append((new, m2, new._d[m2], acc))
        frontier = nxt
    return None


def simplify_density(cv: ConservedVector, system: SystemSpec):
    """Reduce the density modulo the system and strip its x- and y-divergence
    parts into the gauge; then strip y-divergence parts of the x-flux into R.

    Returns ``(vector, gauge, sign)``: ``vector`` equals ``sign`` times the
    gauge-transformed input, reduced modulo the system, with the sign chosen
    so the first density term is positive.
    """
    if len(cv) != 3:
        raise DiffAlgError("density simplification is implemented for three independent variables")
    eqv = _equivalences(system)
    C1 = reduce_modulo(cv[0], system)
    density, pots = _integrate(C1, (1, 2), eqv)
    P, Q = pots[1], pots[2]
    C2 = reduce_modulo(cv[1] + total_derivative(P, 0), system)
    C2, rpots = _integrate(C2, (2,), eqv)
    R = rpots[2]
    C3 = reduce_modulo(cv[2] + total_derivative(Q, 0) + total_derivative(R, 1), system)
    sign = 1
    lead = density if not density.is_zero() else C2
    if not lead.is_zero() and lead.terms[0][1] < 0:
        sign = -1
    out = ConservedVector((density * sign, C2 * sign, C3 * sign), cv.provenance)
    out = out.with_note(f"density simplified, sign {'+' if sign > 0 else '-'}1")
    return out, GaugeTriple(P, Q, R), sign


# --------------------------------------------------------------------------
# verification


@dataclass
class VerificationReport:
    divergence: DiffPoly
    residual: DiffPoly
    multipliers: dict
    reduction: Reduction

    @property
    def passed(self) -> bool:
        return self.residual.is_zero()

    def plain_multipliers(self) -> dict:
        """Multipliers of the undifferentiated equations, by equation index."""
        out = {}
        for (a, multi), m in self.multipliers.items():
            if not any(multi):
                out[a] = m
        return out

    def differential_multipliers(self) -> dict:
        return {k: m for k, m in self.multipliers.items() if any(k[1])}

    def rebuild(self, system: SystemSpec) -> DiffPoly:
        return self.reduction.rebuild(system)


def verify_divergence(cv: ConservedVector, system: SystemSpec) -> VerificationReport:
    """Expand D_t C1 + D_x C2 + D_y C3 and reduce it modulo the system,
    recording the cofactor of every (differentiated) equation used."""
    div = divergence(cv)
    red = reduce_modulo(div, system, track=True)
    return VerificationReport(div, red.normal, red.multipliers, red)
