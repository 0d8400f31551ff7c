"""Periodic pseudospectral solver for the KP system and numerical checks of
symbolic conservation laws.

The evolution form integrated is

    u_t = u u_x + u_xxx + w_y,   w_x = u_y,

with w recovered spectrally from u (w = d_x^{-1} u_y, zero x-mean), so only
u is time-stepped. Arrays are indexed ``[iy, ix]``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .diffalg import Coord, DiffPoly, Func, Jet, evaluate, replace, total_derivative


class NumericError(Exception):
    pass


class BlowUpError(NumericError):
    def __init__(self, t_last: float):
        super().__init__(f"non-finite values in the solution; last good time t = {t_last:g}")
        self.t_last = t_last


class PeriodicityError(NumericError):
    pass


@dataclass(frozen=True)
class Grid:
    nx: int = 64
    ny: int = 64
    lx: float = 8 * math.pi
    ly: float = 8 * math.pi

    def __post_init__(self):
        for n in (self.nx, self.ny):
            if n < 16 or n & (n - 1):
                raise NumericError(f"grid sizes must be powers of two >= 16, got {n}")

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * (self.lx / self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * (self.ly / self.ny)

    def mesh(self):
        return np.meshgrid(self.x, self.y)

    @property
    def kx(self) -> np.ndarray:
        """x-wavenumbers of the half spectrum, shape (1, nx//2+1)."""
        return (2 * np.pi * np.fft.rfftfreq(self.nx, d=self.lx / self.nx))[None, :]

    @property
    def ky(self) -> np.ndarray:
        return (2 * np.pi * np.fft.fftfreq(self.ny, d=self.ly / self.ny))[:, None]

    @property
    def cell(self) -> float:
        return (self.lx / self.nx) * (self.ly / self.ny)

    def dealias_mask(self, fraction: float = 2 / 3) -> np.ndarray:
        ix = np.arange(self.nx // 2 + 1)[None, :]
        iy = np.abs(np.fft.fftfreq(self.ny, d=1.0 / self.ny))[:, None]
        return (ix < fraction * self.nx / 2) & (iy < fraction * self.ny / 2)

    def fft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.rfft2(a)

    def ifft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.irfft2(a, s=(self.ny, self.nx))


def _inverse_kx(grid: Grid) -> np.ndarray:
    kx = np.broadcast_to(grid.kx, (grid.ny, grid.nx // 2 + 1))
    inv = np.zeros(kx.shape)
    nz = kx != 0
    inv[nz] = 1.0 / kx[nz]
    return inv


@dataclass
class Field:
    grid: Grid
    u: np.ndarray
    t: float = 0.0

    @classmethod
    def from_spectrum(cls, grid: Grid, uh: np.ndarray, t: float = 0.0) -> "Field":
        return cls(grid, grid.ifft(uh), t)

    @property
    def uh(self) -> np.ndarray:
        return self.grid.fft(self.u)

    @property
    def w(self) -> np.ndarray:
        # w_x = u_y  =>  w^ = (ky / kx) u^, k_x = 0 modes removed
        return self.grid.ifft(self.grid.ky * _inverse_kx(self.grid) * self.uh)

    def x_mean(self) -> np.ndarray:
        return self.u.mean(axis=1)

    def jet(self, dep: str, multi: Sequence[int]) -> np.ndarray:
        """Spatial derivative of u or w computed spectrally."""
        if multi[0]:
            raise NumericError("time derivatives are not available pointwise from a single field")
        g = self.grid
        base = self.uh
        if dep == "w":
            base = g.ky * _inverse_kx(g) * base
        elif dep != "u":
            raise NumericError(f"dependent variable {dep!r} is not part of the KP solution (adjoint variable?)")
        factor = (1j * g.kx) ** multi[1] * (1j * g.ky) ** multi[2]
        return g.ifft(factor * base)


def project_zero_mean(grid: Grid, uh: np.ndarray) -> np.ndarray:
    uh = uh.copy()
    uh[:, 0] = 0
    return uh


def random_initial_field(grid: Grid, seed: int = 0, amplitude: float = 0.5, modes: int = 4) -> Field:
    """Smooth random field with zero x-mean built from the lowest ``modes``
    Fourier modes in each direction."""
    rng = np.random.default_rng(seed)
    uh = np.zeros((grid.ny, grid.nx // 2 + 1), dtype=complex)
    for iy in range(-modes, modes + 1):
        for ix in range(1, modes + 1):
            decay = math.exp(-0.5 * (ix**2 + iy**2) / modes)
            uh[iy % grid.ny, ix] = decay * (rng.standard_normal() + 1j * rng.standard_normal())
    u = grid.ifft(uh)
    u *= amplitude / np.abs(u).max()
    uh = project_zero_mean(grid, grid.fft(u)) * grid.dealias_mask()
    return Field(grid, grid.ifft(uh), 0.0)


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    dealias: float = 2 / 3
    integrator: str = "etdrk4"
    nonlinear: bool = True
    snapshot_every: int = 100

    def __post_init__(self):
        if not self.dt > 0:
            raise NumericError("dt must be positive")
        if self.t_end < self.dt:
            raise NumericError("t_end must be at least dt")
        if self.integrator not in ("etdrk4",):
            raise NumericError(f"unknown integrator {self.integrator!r}")

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))


def linear_symbol(grid: Grid) -> np.ndarray:
    """Fourier symbol of u -> u_xxx + d_x^{-1} u_yy (zero on k_x = 0)."""
    kx = np.broadcast_to(grid.kx, (grid.ny, grid.nx // 2 + 1))
    ky = np.broadcast_to(grid.ky, kx.shape)
    L = -1j * kx**3 + 1j * ky**2 * _inverse_kx(grid)
    L[:, 0] = 0
    return L


def _etd_coefficients(L: np.ndarray, h: float, contour_points: int = 32):
    # contour-integral evaluation of the phi-functions avoids cancellation near z = 0
    # full circle: the KP symbol is imaginary, so no conjugate symmetry to exploit
    r = np.exp(2j * np.pi * (np.arange(1, contour_points + 1) - 0.5) / contour_points)
    z = h * L[..., None] + r
    ez = np.exp(z)
    Q = h * ((np.exp(z / 2) - 1) / z).mean(axis=-1)
    f1 = h * ((-4 - z + ez * (4 - 3 * z + z**2)) / z**3).mean(axis=-1)
    f2 = h * ((2 + z + ez * (z - 2)) / z**3).mean(axis=-1)
    f3 = h * ((-4 - 3 * z - z**2 + ez * (4 - z)) / z**3).mean(axis=-1)
    if np.isrealobj(L):
        Q, f1, f2, f3 = (a.real for a in (Q, f1, f2, f3))
    return np.exp(h * L), np.exp(h * L / 2), Q, f1, f2, f3


@dataclass
class Trajectory:
    grid: Grid
    config: SolverConfig
    times: list = field(default_factory=list)
    spectra: list = field(default_factory=list)

    def __len__(self):
        return len(self.times)

    def __getitem__(self, i) -> Field:
        return Field.from_spectrum(self.grid, self.spectra[i], self.times[i])

    def fields(self):
        return [self[i] for i in range(len(self))]


def solve_kp(config: SolverConfig, initial: Field) -> Trajectory:
    """Integrate the KP system by fourth-order exponential time differencing
    Runge-Kutta; snapshots every ``config.snapshot_every`` steps plus the
    final state."""
    grid = initial.grid
    if np.abs(initial.x_mean()).max() > 1e-10 * max(1.0, np.abs(initial.u).max()):
        raise NumericError("initial field must have zero mean along x for every y")
    mask = grid.dealias_mask(config.dealias)
    L = linear_symbol(grid)
    E, E2, Q, f1, f2, f3 = _etd_coefficients(L, config.dt)
    ikx_half = 0.5j * grid.kx * mask

    if config.nonlinear:
        def N(vh):
            u = grid.ifft(vh)
            return ikx_half * grid.fft(u * u)
    else:
        def N(vh):
            return np.zeros_like(vh)

    vh = project_zero_mean(grid, initial.uh) * mask
    t = initial.t
    traj = Trajectory(grid, config, [t], [vh.copy()])
    # overflow is caught below as a non-finite state, so numpy need not warn
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, config.steps + 1):
            Nv = N(vh)
            a = E2 * vh + Q * Nv
            Na = N(a)
            b = E2 * vh + Q * Na
            Nb = N(b)
            c = E2 * a + Q * (2 * Nb - Nv)
            Nc = N(c)
            new = E * vh + f1 * Nv + 2 * f2 * (Na + Nb) + f3 * Nc
            new[:, 0] = 0
            if not np.all(np.isfinite(new)):
                raise BlowUpError(t)
            vh = new
            t = initial.t + step * config.dt
            if step % config.snapshot_every == 0 or step == config.steps:
                if traj.times[-1] != t:
                    traj.times.append(t)
                    traj.spectra.append(vh.copy())
    return traj


# --------------------------------------------------------------------------
# arbitrary functions of t


def polynomial_function(coeffs: Sequence[float]) -> Callable:
    """Return ``t -> [F(t), F'(t), ...]`` for F(t) = sum c_k t^k."""
    poly = np.polynomial.Polynomial(coeffs)

    def values(t, n: int = 8):
        out, p = [], poly
        for _ in range(n):
            out.append(float(p(t)))
            p = p.deriv()
        return out

    return values


def specialize(p, name: str, coeffs: Sequence):
    """Replace the arbitrary function ``name`` by the polynomial sum c_k t^k,
    exactly. Works on a DiffPoly or anything with a ``map`` method."""
    if hasattr(p, "map"):
        return p.map(lambda c: specialize(c, name, coeffs), f"{name}(t) = polynomial {list(coeffs)}")
    t = DiffPoly.coord(0)
    derivs = [[Fraction(c) for c in coeffs]]
    while len(derivs[-1]) > 1:
        d = derivs[-1]
        derivs.append([k * d[k] for k in range(1, len(d))])

    def as_poly(k: int) -> DiffPoly:
        if k >= len(derivs):
            return DiffPoly()
        out = DiffPoly()
        for j, c in enumerate(derivs[k]):
            out = out + c * t**j
        return out

    return replace(p, lambda s: as_poly(s.k) if isinstance(s, Func) and s.name == name else None)


def _function_values(params: Mapping, t: float) -> dict:
    out = {}
    for name, spec in params.items():
        vals = spec(t) if callable(spec) else spec
        for k, v in enumerate(vals):
            out[Func(name, k)] = v
    return out


def _point(field_: Field, p: DiffPoly, params: Mapping) -> dict:
    X, Y = field_.grid.mesh()
    fvals = _function_values(params, field_.t)
    point = {}
    for s in p.symbols():
        if isinstance(s, Jet):
            point[s] = field_.jet(s.dep, s.multi)
        elif isinstance(s, Coord):
            point[s] = (field_.t, X, Y)[s.index]
        elif s in fvals:
            point[s] = fvals[s]
        else:
            raise NumericError(f"no value supplied for {s.name} with {s.k} derivatives")
    return point


def pointwise(field_: Field, p: DiffPoly, params: Mapping = {}) -> np.ndarray:
    val = evaluate(p, _point(field_, p, params))
    return np.broadcast_to(np.asarray(val, dtype=float), field_.u.shape)


def density_integral(field_: Field, density: DiffPoly, params: Mapping = {}) -> float:
    """Integral of the density over the periodic domain (trapezoid rule,
    spectrally accurate for periodic integrands)."""
    return float(pointwise(field_, density, params).sum() * field_.grid.cell)


@dataclass
class DiagnosticSeries:
    times: list
    values: list
    drift: float


def _check_coordinate_free(polys, what: str = "conservation law"):
    for p in polys:
        if any(isinstance(s, Coord) and s.index != 0 for s in p.symbols()):
            raise PeriodicityError(
                f"{what} depends explicitly on x or y; its fluxes are not periodic, so the "
                "domain integral of the density is not conserved on a periodic grid"
            )


def conservation_drift(
    trajectory: Trajectory,
    law,
    params: Mapping = {},
    floor: Optional[float] = None,
) -> DiagnosticSeries:
    """Time series of the integrated density and its maximal relative drift.

    ``law`` is a density or a ConservedVector; all of its components must be
    free of explicit x and y. The drift is max |I(t) - I(0)| / max(|I(0)|, floor)
    where ``floor`` defaults to the integral of |density| at the first snapshot.
    """
    comps = list(law.components) if hasattr(law, "components") else [law]
    _check_coordinate_free(comps)
    density = comps[0]
    fields = trajectory.fields()
    values = [density_integral(f, density, params) for f in fields]
    if floor is None:
        floor = float(np.abs(pointwise(fields[0], density, params)).sum() * trajectory.grid.cell)
    scale = max(abs(values[0]), floor, np.finfo(float).tiny)
    drift = max(abs(v - values[0]) for v in values) / scale
    return DiagnosticSeries(list(trajectory.times), values, drift)


def pointwise_residual(trajectory: Trajectory, law, params: Mapping = {}, index: int = 1) -> float:
    """Max |D_t C1 + D_x C2 + D_y C3| at snapshot ``index`` using a centered
    time difference of C1 between neighbouring snapshots and exact symbolic
    x- and y-derivatives evaluated on spectral jets."""
    if not 0 < index < len(trajectory) - 1:
        raise NumericError("need a snapshot with neighbours on both sides")
    prev, cur, nxt = trajectory[index - 1], trajectory[index], trajectory[index + 1]
    C1, C2, C3 = law.components
    dt = nxt.t - prev.t
    dC1 = (pointwise(nxt, C1, params) - pointwise(prev, C1, params)) / dt
    flux = pointwise(cur, total_derivative(C2, 1), params) + pointwise(cur, total_derivative(C3, 2), params)
    return float(np.abs(dC1 + flux).max())


# --------------------------------------------------------------------------
# random-point identity checks


@dataclass
class PointCheck:
    rational_max: Fraction
    float_max: float
    trials: int

    @property
    def exact(self) -> bool:
        return self.rational_max == 0


def random_point_check(lhs: DiffPoly, rhs: DiffPoly, trials: int = 100, seed: int = 0) -> PointCheck:
    """Evaluate both sides at random rational points (exactly) and random
    float points; report the largest discrepancy of each kind."""
    rng = random.Random(seed)
    symbols = sorted(lhs.symbols() | rhs.symbols(), key=repr)
    worst_q = Fraction(0)
    worst_f = 0.0
    for _ in range(trials):
        pt = {s: Fraction(rng.randint(-30, 30), rng.randint(1, 9)) for s in symbols}
        worst_q = max(worst_q, abs(evaluate(lhs, pt) - evaluate(rhs, pt)))
        ptf = {s: rng.uniform(-2.0, 2.0) for s in symbols}
        a, b = evaluate(lhs, ptf), evaluate(rhs, ptf)
        worst_f = max(worst_f, abs(float(a) - float(b)))
    return PointCheck(worst_q, worst_f, trials)
