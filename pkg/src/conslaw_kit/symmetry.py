"""Point-symmetry generators, characteristics and prolongation."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .diffalg import (
    DEFAULT_MAX_ORDER,
    DiffAlgError,
    DiffPoly,
    IndexConvention,
    partial,
    total_derivative,
    total_derivative_multi,
)
from .system import SystemSpec, reduce_modulo


class GeneratorError(DiffAlgError):
    pass


@dataclass(frozen=True)
class Generator:
    """X = xi^i d/dx^i + eta^a d/du^a with jet-order-0 coefficients."""

    convention: IndexConvention
    xi: tuple
    eta: tuple
    name: str = "X"

    def __post_init__(self):
        xi = tuple(DiffPoly._coerce(c) for c in self.xi)
        eta = tuple(DiffPoly._coerce(c) for c in self.eta)
        if len(xi) != self.convention.dim or len(eta) != len(self.convention.dependent):
            raise GeneratorError("one xi per independent and one eta per dependent variable required")
        for c in xi + eta:
            if c.jet_order() > 0:
                raise GeneratorError(f"{self.name}: coefficients of a point symmetry must have jet order 0")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "eta", eta)

    @classmethod
    def from_dicts(cls, convention: IndexConvention, xi: dict, eta: dict, name: str = "X") -> "Generator":
        unknown = (set(xi) - set(convention.independent)) | (set(eta) - set(convention.dependent))
        if unknown:
            raise GeneratorError(f"unknown variables in generator: {sorted(unknown)}")
        return cls(
            convention,
            tuple(xi.get(n, DiffPoly()) for n in convention.independent),
            tuple(eta.get(n, DiffPoly()) for n in convention.dependent),
            name,
        )

    def __add__(self, other: "Generator") -> "Generator":
        return Generator(
            self.convention,
            tuple(a + b for a, b in zip(self.xi, other.xi)),
            tuple(a + b for a, b in zip(self.eta, other.eta)),
            f"{self.name}+{other.name}",
        )

    def scale(self, c) -> "Generator":
        return Generator(self.convention, tuple(a * c for a in self.xi), tuple(a * c for a in self.eta), self.name)


@dataclass(frozen=True)
class Characteristic:
    convention: IndexConvention
    W: tuple

    def __getitem__(self, dep):
        if isinstance(dep, str):
            dep = self.convention.dependent.index(dep)
        return self.W[dep]


def characteristic(gen: Generator) -> Characteristic:
    """W^a = eta^a - xi^j u^a_j."""
    conv = gen.convention
    W = []
    for dep, eta in zip(conv.dependent, gen.eta):
        w = eta
        for j, xi in enumerate(gen.xi):
            if not xi.is_zero():
                w = w - xi * DiffPoly.jet(dep, conv.unit(j))
        W.append(w)
    return Characteristic(conv, tuple(W))


def apply_prolonged(gen: Generator, p: DiffPoly, max_order: int = DEFAULT_MAX_ORDER) -> DiffPoly:
    """Prolonged action in characteristic form:
    X(p) = xi^i D_i(p) + sum_{a,J} D_J(W^a) dp/du^a_J.

    The sum runs over stored (symmetric) jets with the ordinary partial, which
    equals the sum over ordered index tuples with the symmetrised partial.
    """
    ch = characteristic(gen)
    result = DiffPoly()
    for i, xi in enumerate(gen.xi):
        if not xi.is_zero():
            result = result + xi * total_derivative(p, i, max_order)
    deps = gen.convention.dependent
    for jet in p.jets():
        if jet.dep not in deps:
            continue
        W = ch[jet.dep]
        if W.is_zero():
            continue
        result = result + total_derivative_multi(W, jet.multi, max_order) * partial(p, jet)
    return result


@dataclass
class SymmetryReport:
    generator: Generator
    raw: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.is_zero() for r in self.residuals)


def check_symmetry(gen: Generator, system: SystemSpec) -> SymmetryReport:
    """X(F_a) reduced modulo the system must vanish for every equation."""
    report = SymmetryReport(gen)
    for eq in system.equations:
        x = apply_prolonged(gen, eq)
        report.raw.append(x)
        report.residuals.append(reduce_modulo(x, system))
    return report


# --------------------------------------------------------------------------
# built-in KP generators

KP_CONVENTION = IndexConvention(("t", "x", "y"), ("u", "w"))


def _kp_symbols(name: str):
    t = DiffPoly.coord(0)
    x = DiffPoly.coord(1)
    y = DiffPoly.coord(2)
    F = [DiffPoly.func(name, k) for k in range(5)]
    u = DiffPoly.jet("u", (0, 0, 0))
    w = DiffPoly.jet("w", (0, 0, 0))
    return t, x, y, F, u, w


def builtin_kp_generator(kind: str) -> Generator:
    """The three infinite families admitted by the KP system, with an
    arbitrary function of t named after ``kind``."""
    half, sixth = Fraction(1, 2), Fraction(1, 6)
    _, x, y, F, u, w = _kp_symbols(kind)
    if kind == "f":
        xi = (3 * F[0], F[1] * x + half * F[2] * y**2, 2 * F[1] * y)
        eta = (
            -(2 * F[1] * u + F[2] * x + half * F[3] * y**2),
            -(3 * F[1] * w + F[2] * y * u + F[3] * x * y + sixth * F[4] * y**3),
        )
    elif kind == "g":
        xi = (DiffPoly(), F[1] * y, 2 * F[0])
        eta = (-F[2] * y, -(F[1] * u + F[2] * x + half * F[3] * y**2))
    elif kind == "h":
        xi = (DiffPoly(), F[0], DiffPoly())
        eta = (-F[1], -F[2] * y)
    else:
        raise GeneratorError(f"unknown built-in generator {kind!r}; expected f, g or h")
    return Generator(KP_CONVENTION, xi, eta, f"X_{kind}")
