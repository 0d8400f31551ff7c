"""Text DSL for differential expressions, PDE systems and symmetry generators,
and plain / LaTeX / JSON rendering.

Expression syntax::

    u_txx        jet: u differentiated once in t and twice in x (any order)
    f''  f'''    derivatives of an arbitrary function of t
    D(f,t,5)     the same, for any order
    ^            integer powers; binds tighter than unary minus
    * /          division only by constants

System files (``.pde``)::

    indep t, x, y;
    dep u, w;
    func f(t);
    eq u_t - u*u_x - u_xxx - w_y = 0 solve u_t;

Generator files (``.gen``)::

    name X_h;
    xi x = h;
    eta u = -h';
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .diffalg import (
    DEFAULT_DEPENDENT,
    DEFAULT_INDEPENDENT,
    DEFAULT_MAX_ORDER,
    DiffPoly,
    Func,
    IndexConvention,
    Jet,
    OrderOverflowError,
)
from .system import SystemSpec, SystemSpecError


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0, source: str = ""):
        self.message = message
        self.line = line
        self.col = col
        self.source = source
        where = f"{source}:" if source else ""
        super().__init__(f"{where}{line}:{col}: {message}")


class UndeclaredSymbolError(ParseError):
    pass


@dataclass(frozen=True)
class Context:
    """Declared names an expression may use."""

    independent: tuple = DEFAULT_INDEPENDENT
    dependent: tuple = DEFAULT_DEPENDENT
    functions: tuple = ("f", "g", "h")
    max_order: int = DEFAULT_MAX_ORDER

    @property
    def convention(self) -> IndexConvention:
        return IndexConvention(self.independent, self.dependent)


DEFAULT_CONTEXT = Context()


# --------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z][A-Za-z0-9]*(?:_[A-Za-z]+)?'*)
  | (?P<op>[-+*/^(),=;])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, source: str = "") -> list:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1, source)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# --------------------------------------------------------------------------
# recursive-descent parser


class _Parser:
    def __init__(self, text: str, ctx: Context, source: str = ""):
        self.tokens = tokenize(text, source)
        self.i = 0
        self.ctx = ctx
        self.source = source

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Optional[Token] = None, cls=ParseError):
        tok = tok or self.tok
        return cls(message, tok.line, tok.col, self.source)

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> Optional[Token]:
        if self.tok.kind in ("op", "ident") and self.tok.text == text:
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")
        return t

    def expect_ident(self) -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected a name, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def expect_int(self) -> int:
        if self.tok.kind != "num":
            raise self.error(f"expected an integer, found {self.tok.text or 'end of input'!r}")
        return int(self.advance().text)

    # expr := term (('+' | '-') term)*
    def expr(self) -> DiffPoly:
        p = self.term()
        while True:
            if self.accept("+"):
                p = p + self.term()
            elif self.accept("-"):
                p = p - self.term()
            else:
                return p

    # term := unary (('*' | '/') unary)*
    def term(self) -> DiffPoly:
        p = self.unary()
        while True:
            if self.accept("*"):
                p = p * self.unary()
            elif self.tok.text == "/" and self.tok.kind == "op":
                tok = self.advance()
                d = self.unary()
                if not d.is_constant():
                    raise self.error("division is only allowed by constants", tok)
                if d.constant_value() == 0:
                    raise self.error("division by zero", tok)
                p = p / d.constant_value()
            else:
                return p

    # unary := ('-' | '+') unary | power
    def unary(self) -> DiffPoly:
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.power()

    # power := atom ['^' integer]
    def power(self) -> DiffPoly:
        base = self.atom()
        if self.accept("^"):
            return base ** self.expect_int()
        return base

    def atom(self) -> DiffPoly:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return DiffPoly.const(int(tok.text))
        if self.accept("("):
            p = self.expr()
            self.expect(")")
            return p
        if tok.kind == "ident":
            self.advance()
            if tok.text == "D" and self.tok.text == "(" and "D" not in self._all_names():
                return self.function_call(tok)
            return self.resolve(tok)
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")

    def _all_names(self):
        return set(self.ctx.independent) | set(self.ctx.dependent) | set(self.ctx.functions)

    def function_call(self, head: Token) -> DiffPoly:
        self.expect("(")
        name = self.expect_ident()
        if name.text not in self.ctx.functions:
            raise self.error(f"undeclared function {name.text!r}", name, UndeclaredSymbolError)
        self.expect(",")
        var = self.expect_ident()
        if var.text != self.ctx.independent[0]:
            raise self.error(f"functions depend only on {self.ctx.independent[0]!r}", var)
        self.expect(",")
        k = self.expect_int()
        self.expect(")")
        return DiffPoly.func(name.text, k)

    def resolve(self, tok: Token) -> DiffPoly:
        text = tok.text
        primes = len(text) - len(text.rstrip("'"))
        base = text.rstrip("'")
        if primes:
            if base not in self.ctx.functions:
                raise self.error(f"undeclared function {base!r}", tok, UndeclaredSymbolError)
            return DiffPoly.func(base, primes)
        if "_" in base:
            dep, suffix = base.split("_", 1)
            if dep not in self.ctx.dependent:
                raise self.error(f"undeclared dependent variable {dep!r}", tok, UndeclaredSymbolError)
            multi = self.suffix_multi(suffix, tok)
            jet = Jet(dep, multi)
            if jet.order > self.ctx.max_order:
                raise self.error(
                    f"derivative order {jet.order} exceeds the maximum {self.ctx.max_order}", tok, ParseError
                )
            return DiffPoly.symbol(jet)
        if base in self.ctx.independent:
            return DiffPoly.coord(self.ctx.independent.index(base))
        if base in self.ctx.dependent:
            return DiffPoly.jet(base, (0,) * len(self.ctx.independent))
        if base in self.ctx.functions:
            return DiffPoly.func(base, 0)
        raise self.error(f"undeclared symbol {base!r}", tok, UndeclaredSymbolError)

    def suffix_multi(self, suffix: str, tok: Token) -> tuple:
        names = sorted(self.ctx.independent, key=len, reverse=True)
        counts = [0] * len(self.ctx.independent)
        pos = 0
        while pos < len(suffix):
            for n in names:
                if suffix.startswith(n, pos):
                    counts[self.ctx.independent.index(n)] += 1
                    pos += len(n)
                    break
            else:
                raise self.error(f"{suffix[pos]!r} is not an independent variable", tok, UndeclaredSymbolError)
        return tuple(counts)

    def finish(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")


def parse_expression(text: str, ctx: Context = DEFAULT_CONTEXT, source: str = "") -> DiffPoly:
    """Parse a single differential expression into a canonical DiffPoly."""
    p = _Parser(text, ctx, source)
    try:
        result = p.expr()
    except OrderOverflowError as exc:
        raise p.error(str(exc)) from exc
    p.finish()
    return result


def parse_jet(text: str, ctx: Context = DEFAULT_CONTEXT) -> Jet:
    p = parse_expression(text, ctx)
    (sym,) = p.symbols() or (None,)
    if not isinstance(sym, Jet) or p != DiffPoly.symbol(sym):
        raise ParseError(f"{text!r} is not a jet variable")
    return sym


# --------------------------------------------------------------------------
# files


def _parse_names(p: _Parser, known: tuple = ()) -> list:
    names = [p.expect_ident().text]
    while p.accept(","):
        names.append(p.expect_ident().text)
    return [n for n in names if n not in known]


def _check_unique(p: _Parser, ctx: Context, tok: Token):
    names = list(ctx.independent) + list(ctx.dependent) + list(ctx.functions)
    if len(set(names)) != len(names):
        raise p.error("a name is declared twice", tok)


def _declaration(p: _Parser, ctx: Context, seen: dict, merge: bool = False) -> Optional[Context]:
    """Handle one indep/dep/func declaration; return the updated context or
    None when the current token does not start a declaration."""
    tok = p.tok
    if tok.kind != "ident" or tok.text not in ("indep", "dep", "func"):
        return None
    p.advance()
    if tok.text == "indep":
        names = _parse_names(p, ctx.independent if merge else ())
        if not seen.get("indep"):
            ctx = Context(tuple(names), () if not seen.get("dep") else ctx.dependent, ctx.functions, ctx.max_order)
        else:
            ctx = Context(ctx.independent + tuple(names), ctx.dependent, ctx.functions, ctx.max_order)
        seen["indep"] = True
    elif tok.text == "dep":
        names = _parse_names(p, ctx.dependent if merge else ())
        base = ctx.dependent if seen.get("dep") else ()
        ctx = Context(ctx.independent, base + tuple(names), ctx.functions, ctx.max_order)
        seen["dep"] = True
    else:
        name = p.expect_ident().text
        p.expect("(")
        arg = p.expect_ident()
        p.expect(")")
        if arg.text != ctx.independent[0]:
            raise p.error(f"arbitrary functions must depend on {ctx.independent[0]!r}", arg)
        base = ctx.functions if seen.get("func") else ()
        if not (merge and name in base):
            base = base + (name,)
        ctx = Context(ctx.independent, ctx.dependent, base, ctx.max_order)
        seen["func"] = True
    p.expect(";")
    _check_unique(p, ctx, tok)
    return ctx


def parse_system(text: str, source: str = "", ctx: Optional[Context] = None) -> SystemSpec:
    """Parse a ``.pde`` file into a SystemSpec."""
    ctx = ctx or Context(dependent=(), functions=())
    p = _Parser(text, ctx, source)
    seen: dict = {}
    equations, solved = [], []
    while p.tok.kind != "eof":
        new = _declaration(p, p.ctx, seen)
        if new is not None:
            p.ctx = new
            continue
        start = p.tok
        if not p.accept("eq"):
            raise p.error(f"expected a declaration or 'eq', found {start.text!r}")
        lhs = p.expr()
        p.expect("=")
        rhs = p.expr()
        eq = lhs - rhs
        jet = None
        if p.accept("solve"):
            jtok = p.expect_ident()
            jet_poly = p.resolve(jtok)
            (jet,) = jet_poly.symbols()
            if not isinstance(jet, Jet):
                raise p.error("solve expects a jet variable", jtok)
            try:
                from .system import solved_coefficient

                solved_coefficient(eq, jet)
            except SystemSpecError as exc:
                raise p.error(str(exc), jtok) from exc
        p.expect(";")
        equations.append(eq)
        solved.append(jet)
    if not equations:
        raise p.error("a system needs at least one equation")
    if not p.ctx.dependent:
        raise p.error("no dependent variables declared")
    return SystemSpec(
        IndexConvention(p.ctx.independent, p.ctx.dependent),
        tuple(equations),
        tuple(solved),
        p.ctx.functions,
        name=source,
    )


def system_context(system: SystemSpec, extra_dependent=(), extra_functions=()) -> Context:
    funcs = tuple(system.functions) + tuple(f for f in extra_functions if f not in system.functions)
    return Context(system.convention.independent, system.convention.dependent + tuple(extra_dependent), funcs)


@dataclass
class GeneratorSpec:
    name: str
    xi: dict = field(default_factory=dict)
    eta: dict = field(default_factory=dict)
    functions: tuple = ()


def parse_generator(text: str, ctx: Context, source: str = "") -> GeneratorSpec:
    """Parse a ``.gen`` file. Coefficients must have jet order 0."""
    p = _Parser(text, ctx, source)
    spec = GeneratorSpec(name=source or "X")
    seen = {"indep": True, "dep": True, "func": True}
    while p.tok.kind != "eof":
        new = _declaration(p, p.ctx, seen, merge=True)
        if new is not None:
            p.ctx = new
            continue
        head = p.expect_ident()
        if head.text == "name":
            spec.name = p.expect_ident().text
            p.expect(";")
            continue
        if head.text not in ("xi", "eta"):
            raise p.error(f"expected 'xi', 'eta', 'name' or a declaration, found {head.text!r}", head)
        var = p.expect_ident()
        names = p.ctx.independent if head.text == "xi" else p.ctx.dependent
        if var.text not in names:
            raise p.error(f"{var.text!r} is not a declared variable for {head.text}", var, UndeclaredSymbolError)
        p.expect("=")
        etok = p.tok
        value = p.expr()
        if value.jet_order() > 0:
            raise p.error("generator coefficients must not contain derivatives (point symmetries only)", etok)
        p.expect(";")
        (spec.xi if head.text == "xi" else spec.eta)[var.text] = value
    spec.functions = p.ctx.functions
    return spec


# --------------------------------------------------------------------------
# rendering


def _jet_plain(jet: Jet, indep: tuple) -> str:
    if not any(jet.multi):
        return jet.dep
    return jet.dep + "_" + "".join(n * c for n, c in zip(indep, jet.multi))


def _func_plain(s: Func, indep: tuple) -> str:
    if s.k <= 4:
        return s.name + "'" * s.k
    return f"D({s.name},{indep[0]},{s.k})"


def _symbol_plain(s, indep: tuple) -> str:
    if isinstance(s, Jet):
        return _jet_plain(s, indep)
    if isinstance(s, Func):
        return _func_plain(s, indep)
    return indep[s.index]


def _coeff_plain(c: Fraction, has_factors: bool) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    if has_factors:
        return f"({c.numerator}/{c.denominator})"
    return f"{c.numerator}/{c.denominator}"


def render_plain(p: DiffPoly, indep: tuple = DEFAULT_INDEPENDENT) -> str:
    if p.is_zero():
        return "0"
    out = []
    for k, (mono, c) in enumerate(p.terms):
        factors = [_symbol_plain(s, indep) + (f"^{e}" if e > 1 else "") for s, e in mono]
        mag = abs(c)
        if mag != 1 or not factors:
            factors.insert(0, _coeff_plain(mag, bool(factors)))
        body = "*".join(factors)
        if k == 0:
            out.append(("-" if c < 0 else "") + body)
        else:
            out.append((" - " if c < 0 else " + ") + body)
    return "".join(out)


_LATEX_NAMES = {"w": r"\omega", "phi": r"\phi"}


def _symbol_latex(s, indep: tuple) -> str:
    if isinstance(s, Jet):
        base = _LATEX_NAMES.get(s.dep, s.dep)
        if not any(s.multi):
            return base
        return base + "_{" + "".join(n * c for n, c in zip(indep, s.multi)) + "}"
    if isinstance(s, Func):
        if s.k <= 3:
            return s.name + "'" * s.k
        return f"{s.name}^{{({s.k})}}"
    return indep[s.index]


def render_latex(p: DiffPoly, indep: tuple = DEFAULT_INDEPENDENT) -> str:
    if p.is_zero():
        return "0"
    out = []
    for k, (mono, c) in enumerate(p.terms):
        factors = []
        for s, e in mono:
            f = _symbol_latex(s, indep)
            if e > 1:
                f = f"{{{f}}}^{{{e}}}" if isinstance(s, Func) or "_" in f else f"{f}^{{{e}}}"
            factors.append(f)
        mag = abs(c)
        if mag.denominator != 1:
            coeff = rf"\frac{{{mag.numerator}}}{{{mag.denominator}}}"
        elif mag != 1 or not factors:
            coeff = str(mag.numerator)
        else:
            coeff = ""
        body = " ".join(([coeff] if coeff else []) + factors)
        sign = "-" if c < 0 else "+"
        out.append((("-" if c < 0 else "") if k == 0 else f" {sign} ") + body)
    return "".join(out)


def render(obj, fmt: str = "plain", indep: tuple = DEFAULT_INDEPENDENT) -> str:
    """Render a DiffPoly, ConservedVector or report object.

    Objects other than DiffPoly provide ``components(fmt, indep)`` returning
    ``(label, text)`` pairs, plus optional ``provenance`` and ``to_json``.
    """
    if fmt not in ("plain", "latex", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(obj, DiffPoly):
        if fmt == "plain":
            return render_plain(obj, indep)
        if fmt == "latex":
            return render_latex(obj, indep)
        return json.dumps({"expr": render_plain(obj, indep)})
    if fmt == "json":
        return json.dumps(obj.to_json(indep), indent=2)
    fn = render_latex if fmt == "latex" else render_plain
    sep = " = "
    return "\n".join(f"{label}{sep}{fn(p, indep)}" for label, p in obj.labelled())


def parse_labelled(text: str, ctx: Context, source: str = "") -> dict:
    """Parse ``label = expr;`` entries. Declarations extend the context, and
    names the context already knows are accepted silently."""
    p = _Parser(text, ctx, source)
    seen = {"indep": True, "dep": True, "func": True}
    out: dict = {}
    while p.tok.kind != "eof":
        new = _declaration(p, p.ctx, seen, merge=True)
        if new is not None:
            p.ctx = new
            continue
        label = p.expect_ident()
        if label.text in out:
            raise p.error(f"duplicate entry {label.text!r}", label)
        p.expect("=")
        out[label.text] = p.expr()
        p.expect(";")
    return out
