import numpy as np
import pytest

from conslaw_kit.conslaw import ConservedVector, divergence
from conslaw_kit.corpus import CORPUS_DIR, load_system, load_vector
from conslaw_kit.numeric import (
    BlowUpError,
    Field,
    Grid,
    NumericError,
    PeriodicityError,
    SolverConfig,
    conservation_drift,
    density_integral,
    linear_symbol,
    pointwise_residual,
    polynomial_function,
    random_initial_field,
    random_point_check,
    solve_kp,
)
from conslaw_kit.diffalg import DiffPoly
from conslaw_kit.parser import parse_expression as P
from conslaw_kit.parser import parse_labelled, system_context

KP = load_system(CORPUS_DIR / "kp.pde")
CTX = system_context(KP)
MASS = ConservedVector((P("u"), P("-(1/2)*u^2 - u_xx"), P("-w")))


def test_zero_initial_data_stays_zero():
    g = Grid(16, 16)
    traj = solve_kp(SolverConfig(dt=1e-2, t_end=0.1, snapshot_every=5), Field(g, np.zeros((16, 16))))
    assert all(np.all(f.u == 0) for f in traj.fields())


def test_linear_mode_advances_by_exact_phase():
    g = Grid(32, 32)
    X, Y = g.mesh()
    kx, ky = 2 * 2 * np.pi / g.lx, 3 * 2 * np.pi / g.ly
    u0 = np.cos(kx * X + ky * Y)
    t_end = 0.7
    traj = solve_kp(SolverConfig(dt=0.1, t_end=t_end, nonlinear=False), Field(g, u0))
    # u_t = u_xxx + d_x^{-1} u_yy on cos(kx x + ky y + theta): theta' = -kx^3 + ky^2/kx
    theta = (-(kx**3) + ky**2 / kx) * t_end
    assert np.abs(traj[-1].u - np.cos(kx * X + ky * Y + theta)).max() < 1e-12


def test_linear_symbol_vanishes_on_zero_x_wavenumber():
    assert np.all(linear_symbol(Grid(16, 16))[:, 0] == 0)


def test_zero_mean_is_required_and_preserved():
    g = Grid(16, 16)
    with pytest.raises(NumericError):
        solve_kp(SolverConfig(dt=1e-2, t_end=0.1), Field(g, np.ones((16, 16))))
    traj = solve_kp(SolverConfig(dt=1e-2, t_end=0.2, snapshot_every=1), random_initial_field(g, seed=3))
    for f in traj.fields():
        assert np.abs(f.x_mean()).max() < 1e-14


def test_temporal_order_four():
    g = Grid(32, 32)
    init = random_initial_field(g, seed=1, amplitude=1.0)
    T = 0.5

    def final(n):
        return solve_kp(SolverConfig(dt=T / n, t_end=T, snapshot_every=10**9), init)[-1].u

    ref = final(1024)
    errs = [np.abs(final(n) - ref).max() for n in (16, 32, 64)]
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) > 3.9


def test_spatial_resolution_is_spectral():
    # the same smooth data on a finer grid changes the mass integral only at round-off
    coarse = Grid(32, 32)
    fine = Grid(64, 64)
    u = random_initial_field(coarse, seed=4, modes=3)
    X, Y = fine.mesh()
    uh = coarse.fft(u.u)
    up = np.zeros((64, 33), dtype=complex)
    up[:16, :17] = uh[:16, :17]
    up[-16:, :17] = uh[-16:, :17]
    fine_u = fine.ifft(up) * (64 * 64) / (32 * 32)
    l2 = P("u^2")
    assert density_integral(Field(fine, fine_u), l2) == pytest.approx(density_integral(u, l2), rel=1e-12)


def test_blow_up_is_reported():
    g = Grid(16, 16)
    init = random_initial_field(g, seed=0, amplitude=1e200)
    with pytest.raises(BlowUpError) as err:
        solve_kp(SolverConfig(dt=1e-2, t_end=0.1), init)
    assert err.value.t_last == 0.0


def test_density_integral_matches_grid_sum():
    g = Grid(64, 64)
    f = random_initial_field(g, seed=2)
    expected = float((-0.5 * f.u**2).sum() * (g.lx / g.nx) * (g.ly / g.ny))
    assert density_integral(f, P("-(1/2)*u^2")) == pytest.approx(expected, rel=1e-14)
    assert abs(density_integral(f, P("u"))) < 1e-12


def test_density_with_function_values():
    g = Grid(16, 16)
    f = random_initial_field(g, seed=2)
    h = polynomial_function([0.0, 1.0])
    a = density_integral(f, P("h'*u^2"), {"h": h})
    assert a == pytest.approx(density_integral(f, P("u^2")))


def test_adjoint_variables_are_rejected():
    f = random_initial_field(Grid(16, 16))
    with pytest.raises(NumericError):
        density_integral(f, P("v*u"))


def test_explicit_coordinates_rejected():
    g2 = load_vector(CORPUS_DIR / "golden" / "prop2.txt", CTX)
    traj = solve_kp(SolverConfig(dt=1e-2, t_end=0.02), random_initial_field(Grid(16, 16)))
    with pytest.raises(PeriodicityError):
        conservation_drift(traj, g2, {"g": polynomial_function([0, 0, 1])})


def test_mass_and_l2_drift_small():
    traj = solve_kp(SolverConfig(dt=1e-3, t_end=0.2), random_initial_field(Grid(64, 64), seed=0))
    assert conservation_drift(traj, MASS).drift < 1e-10
    assert conservation_drift(traj, P("-(1/2)*u^2")).drift < 1e-10


def test_pointwise_residual_converges():
    init = random_initial_field(Grid(64, 64), seed=0)
    res = []
    for every in (40, 20, 10):
        traj = solve_kp(SolverConfig(dt=1e-3, t_end=0.2, snapshot_every=every), init)
        res.append(pointwise_residual(traj, MASS, index=1))
    assert res[0] / res[1] > 3.5 and res[1] / res[2] > 3.5


def test_pointwise_residual_with_explicit_coordinates():
    # the f-law with f = t has no coordinates; with f = t^2 it does, and the
    # pointwise check still applies even though the integral check does not
    law = load_vector(CORPUS_DIR / "golden" / "prop1.txt", CTX)
    init = random_initial_field(Grid(64, 64), seed=5, amplitude=0.3)
    params = {"f": polynomial_function([0, 0, 1])}
    res = []
    for every in (40, 20):
        traj = solve_kp(SolverConfig(dt=1e-3, t_end=0.2, snapshot_every=every), init)
        res.append(pointwise_residual(traj, law, params, index=1))
    assert res[1] < res[0] / 3


def test_random_point_check_identity_and_mutation():
    lhs = divergence(load_vector(CORPUS_DIR / "golden" / "prop1.txt", CTX))
    rhs = parse_labelled((CORPUS_DIR / "golden" / "prop1_identity.txt").read_text(), CTX)["RHS"]
    assert random_point_check(lhs, rhs).exact
    assert random_point_check(lhs, lhs).exact
    for mono, _ in rhs.terms:
        check = random_point_check(lhs, rhs + DiffPoly({mono: 1}))
        assert not check.exact and check.float_max > 0
