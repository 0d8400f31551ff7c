"""Hypothesis strategies for random differential polynomials."""

from fractions import Fraction

from hypothesis import strategies as st

from conslaw_kit.diffalg import DiffPoly, jet_multis

MULTIS = [m for k in range(3) for m in jet_multis(k)]


def symbols(deps=("u", "w"), funcs=("f",), coords=True):
    options = [st.builds(DiffPoly.jet, st.sampled_from(deps), st.sampled_from(MULTIS))]
    if funcs:
        options.append(st.builds(DiffPoly.func, st.sampled_from(funcs), st.integers(0, 2)))
    if coords:
        options.append(st.builds(DiffPoly.coord, st.integers(0, 2)))
    return st.one_of(options)


coefficients = st.builds(Fraction, st.integers(-9, 9).filter(bool), st.integers(1, 4))


@st.composite
def monomials(draw, **kw):
    factors = draw(st.lists(symbols(**kw), max_size=3))
    out = DiffPoly.const(draw(coefficients))
    for s in factors:
        out = out * s
    return out


@st.composite
def polys(draw, max_terms=4, **kw):
    out = DiffPoly()
    for m in draw(st.lists(monomials(**kw), max_size=max_terms)):
        out = out + m
    return out


def point_for(*ps, seed_values):
    """Assign a value from ``seed_values`` (cycled) to every symbol of ``ps``."""
    syms = sorted(set().union(*(p.symbols() for p in ps)), key=repr)
    return {s: seed_values[i % len(seed_values)] for i, s in enumerate(syms)}


def random_poly(rng, deps=("u", "w"), funcs=("f",), max_terms=4, max_degree=3, max_jet=2, min_terms=1):
    """Deterministic counterpart of ``polys`` driven by a ``random.Random``."""
    multis = [m for k in range(max_jet + 1) for m in jet_multis(k)]
    out = DiffPoly()
    for _ in range(rng.randint(min_terms, max_terms)):
        term = DiffPoly.const(Fraction(rng.choice([-3, -2, -1, 1, 2, 3, 5]), rng.randint(1, 4)))
        for _ in range(rng.randint(1, max_degree)):
            kind = rng.random()
            if kind < 0.6:
                term = term * DiffPoly.jet(rng.choice(deps), rng.choice(multis))
            elif kind < 0.8 and funcs:
                term = term * DiffPoly.func(rng.choice(funcs), rng.randint(0, 2))
            else:
                term = term * DiffPoly.coord(rng.randint(0, 2))
        out = out + term
    return out
