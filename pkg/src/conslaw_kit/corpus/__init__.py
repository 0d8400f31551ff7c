"""Shipped systems, generators and golden expectations, and the golden-case runner."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..conslaw import (
    ConservedVector,
    GaugeTriple,
    conserved_vector,
    gauge_transform,
    simplify_density,
    verify_divergence,
    divergence,
)
from ..diffalg import DiffPoly, SubstitutionRule, euler
from ..numeric import random_point_check
from ..parser import (
    Context,
    parse_expression,
    parse_generator,
    parse_labelled,
    parse_system,
    render_plain,
    system_context,
)
from ..selfadjoint import adjoint_system, check_selfadjointness, formal_lagrangian
from ..symmetry import Generator, builtin_kp_generator, check_symmetry
from ..system import SystemSpec, reduce_modulo

CORPUS_DIR = Path(__file__).resolve().parent
MODES = ("exact", "up-to-sign", "up-to-sign-and-gauge")


def load_system(path) -> SystemSpec:
    path = Path(path)
    return parse_system(path.read_text(), source=str(path))


def load_generator(ref: str, system: SystemSpec) -> Generator:
    """``builtin:f|g|h`` or a path to a ``.gen`` file."""
    if ref.startswith("builtin:"):
        return builtin_kp_generator(ref.split(":", 1)[1])
    path = Path(ref)
    spec = parse_generator(path.read_text(), system_context(system), source=str(path))
    return Generator.from_dicts(system.convention, spec.xi, spec.eta, spec.name)


def parse_substitution(text: str, ctx: Context) -> SubstitutionRule:
    """``"v=u,z=w"`` -> SubstitutionRule."""
    mapping = {}
    for part in filter(None, (s.strip() for s in text.split(","))):
        name, _, expr = part.partition("=")
        if not expr:
            raise ValueError(f"malformed substitution entry {part!r}; expected name=expr")
        mapping[name.strip()] = parse_expression(expr, ctx)
    return SubstitutionRule(mapping)


def load_vector(path, ctx: Context) -> ConservedVector:
    """Read a vector from a ``C1 = ...;`` text file or the JSON report format."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        import json

        entries = json.loads(text)
        comps = {e["component"]: parse_expression(e["expr"], ctx, source=str(path)) for e in entries}
        prov = tuple(sorted({e.get("provenance", "") for e in entries} - {""}))
    else:
        comps = parse_labelled(text, ctx, source=str(path))
        prov = ()
    missing = [c for c in ("C1", "C2", "C3") if c not in comps]
    if missing:
        raise ValueError(f"{path}: missing components {missing}")
    return ConservedVector((comps["C1"], comps["C2"], comps["C3"]), prov + (f"read from {path.name}",))


@dataclass
class GoldenCase:
    name: str
    kind: str
    system: str
    mode: str = "exact"
    why: str = ""
    generator: Optional[str] = None
    substitution: Optional[str] = None
    expected: Optional[str] = None
    gauge: Optional[str] = None
    vector: Optional[str] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"case {self.name}: unknown comparison mode {self.mode!r}")
        if not self.why:
            raise ValueError(f"case {self.name}: every comparison mode needs a justification")


@dataclass
class GoldenResult:
    case: GoldenCase
    passed: bool
    detail: list = field(default_factory=list)
    sign: int = 1

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" (sign {self.sign:+d})" if self.sign != 1 else ""
        return f"{status} {self.case.name} [{self.case.mode}]{extra}"


def load_cases(path=None) -> list:
    path = Path(path) if path else CORPUS_DIR / "golden" / "cases.toml"
    data = tomllib.loads(path.read_text())
    return [GoldenCase(**entry) for entry in data.get("case", [])]


def _diff(label: str, got: DiffPoly, want: DiffPoly) -> list:
    if got == want:
        return []
    return [
        f"{label}: got      {render_plain(got)}",
        f"{label}: expected {render_plain(want)}",
        f"{label}: got - expected = {render_plain(got - want)}",
    ]


def _compare_vectors(got: ConservedVector, want: ConservedVector, mode: str, system: SystemSpec):
    """Return (passed, detail lines, sign)."""
    labels = ("C1", "C2", "C3")
    direct = [d for l, g, w in zip(labels, got, want) for d in _diff(l, g, w)]
    if not direct:
        return True, [], 1
    if mode == "exact":
        return False, direct, 1
    neg = [d for l, g, w in zip(labels, got, want) for d in _diff(l, -g, w)]
    if not neg:
        return True, [], -1
    if mode == "up-to-sign":
        return False, direct, 1
    for sign in (1, -1):
        if reduce_modulo(got[0] * sign, system) == reduce_modulo(want[0], system):
            diff = ConservedVector(tuple(g * sign - w for g, w in zip(got, want)))
            rep = verify_divergence(diff, system)
            if rep.passed:
                return True, [], sign
            return False, ["difference of the vectors is not conserved: residual "
                           + render_plain(rep.residual)], sign
    return False, direct, 1


def run_golden(case: GoldenCase, root=None) -> GoldenResult:
    root = Path(root) if root else CORPUS_DIR
    system = load_system(root / case.system)
    lag = formal_lagrangian(system)
    ctx = system_context(system, lag.adjoint_names)

    def expected():
        return parse_labelled((root / case.expected).read_text(), ctx, source=case.expected)

    def rule():
        return parse_substitution(case.substitution or "", ctx)

    def generator():
        ref = case.generator
        if not ref.startswith("builtin:"):
            ref = str(root / ref)
        return load_generator(ref, system)

    detail: list = []
    sign = 1
    kind = case.kind
    if kind == "adjoint":
        adj = adjoint_system(lag)
        want = expected()
        for i, eq in enumerate(adj.oriented):
            detail += _diff(f"E{i + 1}", eq, want[f"E{i + 1}"])
    elif kind == "selfadjoint":
        rep = check_selfadjointness(system, rule(), lag)
        if not rep.verdict:
            detail.append("residuals: " + ", ".join(render_plain(r) for r in rep.residuals))
        for i, (got, eq) in enumerate(zip(rep.substituted, system.equations)):
            detail += _diff(f"E{i + 1}", got, eq)
    elif kind == "symmetry":
        rep = check_symmetry(generator(), system)
        for i, r in enumerate(rep.residuals):
            detail += _diff(f"residual {i + 1}", r, DiffPoly())
    elif kind == "reduced_density":
        cv = conserved_vector(lag, generator(), rule())
        detail += _diff("C1", reduce_modulo(cv[0], system), expected()["C1"])
    elif kind == "conserve_gauge":
        cv = conserved_vector(lag, generator(), rule())
        g = parse_labelled((root / case.gauge).read_text(), ctx, source=case.gauge)
        gauged = gauge_transform(cv, GaugeTriple(g.get("P", DiffPoly()), g.get("Q", DiffPoly()), g.get("R", DiffPoly())))
        got = gauged.map(lambda c: reduce_modulo(c, system))
        ok, detail, sign = _compare_vectors(got, load_vector(root / case.expected, ctx), case.mode, system)
    elif kind == "conserve_simplify":
        cv = conserved_vector(lag, generator(), rule())
        got, _, applied = simplify_density(cv, system)
        ok, detail, sign = _compare_vectors(got, load_vector(root / case.expected, ctx), case.mode, system)
        sign *= applied
    elif kind == "divergence":
        rep = verify_divergence(load_vector(root / case.vector, ctx), system)
        if not rep.passed:
            detail.append("residual: " + render_plain(rep.residual))
        if rep.passed and rep.rebuild(system) != rep.divergence:
            detail.append("multiplier trace does not rebuild the divergence")
        if case.expected:
            want = expected()
            got = rep.plain_multipliers()
            for i in range(len(system)):
                detail += _diff(f"L{i + 1}", got.get(i, DiffPoly()), want.get(f"L{i + 1}", DiffPoly()))
            if rep.differential_multipliers():
                detail.append("unexpected multipliers of differentiated equations")
    elif kind == "identity":
        div = divergence(load_vector(root / case.vector, ctx))
        rhs = expected()["RHS"]
        detail += _diff("divergence - RHS", div - rhs, DiffPoly())
        check = random_point_check(div, rhs)
        if not check.exact:
            detail.append(f"random rational points disagree by {check.rational_max}")
    elif kind == "euler":
        want = expected()
        dep = system.convention.dependent[0]
        detail += _diff("E", euler(want["L"], dep), want["E"])
        detail += _diff("E vs system", want["E"], system.equations[0])
    else:
        raise ValueError(f"case {case.name}: unknown kind {kind!r}")
    return GoldenResult(case, not detail, detail, sign)


def run_all(root=None, cases=None) -> list:
    root = Path(root) if root else CORPUS_DIR
    cases = cases if cases is not None else load_cases(root / "golden" / "cases.toml")
    return [run_golden(c, root) for c in cases]
