import pytest
from hypothesis import given, settings

from conslaw_kit.diffalg import DiffPoly, Jet
from conslaw_kit.parser import (
    Context,
    ParseError,
    UndeclaredSymbolError,
    parse_expression,
    parse_generator,
    parse_jet,
    parse_system,
    render,
    render_latex,
    render_plain,
)
from conslaw_kit.corpus import CORPUS_DIR

from helpers import polys

KP = (CORPUS_DIR / "kp.pde").read_text()


def test_kp_first_equation():
    u = DiffPoly.jet("u")
    expected = (
        DiffPoly.jet("u", (1, 0, 0))
        - u * DiffPoly.jet("u", (0, 1, 0))
        - DiffPoly.jet("u", (0, 3, 0))
        - DiffPoly.jet("w", (0, 0, 1))
    )
    assert parse_expression("u_t - u*u_x - u_xxx - w_y") == expected


def test_zero():
    assert parse_expression("0").is_zero()
    for fmt in ("plain", "latex"):
        assert render(DiffPoly(), fmt) == "0"


def test_density_with_function_derivatives():
    p = parse_expression("-(1/2)*f'*u^2 - (x*f'' + (1/2)*y^2*f''')*u")
    assert render_plain(p) == "-x*f''*u - (1/2)*y^2*f'''*u - (1/2)*f'*u^2"


def test_suffix_order_is_irrelevant():
    assert parse_jet("u_txx") == parse_jet("u_xtx") == Jet("u", (1, 2, 0))


def test_high_order_function_spelling():
    assert parse_expression("D(f,t,4)") == parse_expression("f''''")
    assert render_plain(parse_expression("D(f,t,5)")) == "D(f,t,5)"


def test_render_adjoint_equation():
    assert render_plain(parse_expression("v_t - u*v_x - v_xxx - z_y")) == "v_t - u*v_x - v_xxx - z_y"


def test_latex_restores_omega():
    assert "\\omega_{y}" in render_latex(parse_expression("w_y"))


def test_kp_system():
    s = parse_system(KP)
    assert len(s.equations) == 2
    assert s.solved == (Jet("u", (1, 0, 0)), Jet("w", (0, 1, 0)))


def test_potential_kp_system():
    s = parse_system("indep t, x, y;\ndep phi;\neq phi_xt - phi_x*phi_xx - phi_xxxx - phi_yy = 0 solve phi_xt;\n")
    assert s.convention.dependent == ("phi",)
    assert len(s.equations) == 1


def test_nonlinear_solved_derivative_rejected():
    with pytest.raises(ParseError) as err:
        parse_system("indep t, x;\ndep u;\neq u*u_t - u_xx = 0 solve u_t;\n")
    assert err.value.line == 3


def test_error_location():
    with pytest.raises(ParseError) as err:
        parse_expression("u_t +\n  * u", source="inline")
    assert (err.value.line, err.value.col) == (2, 3)
    assert str(err.value).startswith("inline:2:3:")


def test_undeclared_name():
    with pytest.raises(UndeclaredSymbolError):
        parse_expression("q_x")


def test_no_implicit_multiplication():
    with pytest.raises(ParseError):
        parse_expression("f'y")


def test_division_by_symbol_rejected():
    with pytest.raises(ParseError):
        parse_expression("u/u_x")


def test_precedence():
    assert parse_expression("-u^2") == -(DiffPoly.jet("u") ** 2)
    assert parse_expression("1 - 2*u + 3") == parse_expression("4 - 2*u")


def test_generator_file_rejects_derivatives():
    ctx = Context()
    with pytest.raises(ParseError):
        parse_generator("xi x = u_x;", ctx)
    spec = parse_generator((CORPUS_DIR / "generators" / "h.gen").read_text(), ctx)
    assert spec.name == "X_h"
    assert set(spec.eta) == {"u", "w"}


def test_duplicate_declaration():
    with pytest.raises(ParseError):
        parse_system("indep t, x;\ndep u, x;\neq u_t = 0;\n")


@settings(max_examples=200, deadline=None)
@given(polys(deps=("u", "w", "v", "z"), funcs=("f", "g", "h")))
def test_round_trip(p):
    text = render_plain(p)
    assert parse_expression(text) == p
    assert render_plain(parse_expression(text)) == text
