"""Scaled compressible Navier-Stokes on a thin periodic slab with slip walls.

Unknowns are the density and the momentum ``m = rho u``.  Horizontally the
discretisation is Fourier pseudo-spectral; vertically, density and the
horizontal momentum expand in cosines and the vertical momentum in sines,
so ``u3 = 0`` and ``d3 u_h = 0`` hold on both walls by construction.
Products are formed on the nodes and the fluxes are filtered with the 2/3
rule before differentiation.  Time stepping is classical RK4.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import CFLError, GridMismatchError, VacuumError
from .field import SlabGrid, Torus2, vertical_average
from .thermo import GasLaw, pressure, pressure_derivative, rel_entropy

log = logging.getLogger(__name__)

VACUUM_FLOOR = 1e-6
PARITY = ("cos", "cos", "sin")


@dataclass(frozen=True)
class Params:
    """Mach number, slab thickness, shear viscosity and gas law (bulk viscosity is zero)."""

    eps: float
    delta: float = 1.0
    mu: float = 0.0
    law: GasLaw = field(default_factory=GasLaw)

    def __post_init__(self):
        if not 0 < self.eps <= 1:
            raise ValueError("Mach number must lie in (0, 1]")
        if not 0 < self.delta <= 1:
            raise ValueError("thickness must lie in (0, 1]")
        if self.mu < 0:
            raise ValueError("viscosity must be nonnegative")


@dataclass(frozen=True, eq=False)
class FluidState3:
    """Density and momentum samples on a slab at time ``t``."""

    grid: SlabGrid
    rho: np.ndarray
    m: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.grid.check(self.rho)
        self.grid.check(self.m, 3)

    @cached_property
    def u(self):
        return self.m / self.rho[None]

    @classmethod
    def from_velocity(cls, grid, rho, u, t=0.0):
        rho = np.asarray(rho, dtype=float)
        return cls(grid, rho, rho[None] * np.asarray(u, dtype=float), t)


def _tparity(i, j):
    return "cos" if (i == 2) == (j == 2) else "sin"


def _check_vacuum(rho, floor=VACUUM_FLOOR):
    rmin = float(rho.min())
    if not rmin > floor:
        raise VacuumError(f"density minimum {rmin:.3e} below vacuum floor {floor:g}")


class SlabOps:
    """Transform helpers bound to one slab grid."""

    def __init__(self, grid: SlabGrid):
        self.grid = grid
        tor = grid.horizontal
        self.kd = tor.kd[..., None]
        self.kd2 = tor.kd2[..., None]
        self.mask = {p: grid.dealias_mask(p) for p in ("cos", "sin")}

    def fwd(self, f, parity):
        g = self.grid
        return g.vcoef(sfft.rfft2(f, axes=(-3, -2)), parity)

    def inv(self, F, parity):
        g = self.grid
        return sfft.irfft2(g.vval(F, parity), s=g.horizontal.shape, axes=(-3, -2))

    def d(self, F, j, parity):
        """Derivative along axis ``j``; returns (coefficients, parity)."""
        if j < 2:
            return 1j * self.kd[j] * F, parity
        return self.grid.d3_spectral(F, parity)

    def k3max(self):
        g = self.grid
        ks = [g.kz[g.dealias_cos].max(initial=0.0)]
        if g.dealias_sin.any():
            ks.append(g.kz_sin[g.dealias_sin].max())
        return float(max(ks))


_OPS_CACHE: dict = {}


def ops_for(grid: SlabGrid) -> SlabOps:
    key = (grid.horizontal.L, grid.horizontal.N, grid.delta, grid.M)
    ops = _OPS_CACHE.get(key)
    if ops is None:
        ops = _OPS_CACHE[key] = SlabOps(grid)
    return ops


def rhs(state: FluidState3, params: Params, floor=VACUUM_FLOOR):
    """Tendencies ``(d_t rho, d_t m)`` of the scaled compressible system."""
    grid = state.grid
    if abs(grid.delta - params.delta) > 1e-14 * params.delta:
        raise GridMismatchError("slab thickness differs from params.delta")
    rho, m = state.rho, state.m
    _check_vacuum(rho, floor)
    ops = ops_for(grid)
    u = m / rho[None]
    p = pressure(rho, params.law) / params.eps**2

    drho_hat = 0
    for j in range(3):
        Mh = ops.fwd(m[j], PARITY[j]) * ops.mask[PARITY[j]]
        dM, _ = ops.d(Mh, j, PARITY[j])
        drho_hat = drho_hat - dM
    drho = ops.inv(drho_hat, "cos")

    visc_hat = None
    if params.mu > 0:
        uh = [ops.fwd(u[c], PARITY[c]) * ops.mask[PARITY[c]] for c in range(3)]
        div_hat = 0
        for j in range(3):
            dj, _ = ops.d(uh[j], j, PARITY[j])
            div_hat = div_hat + dj
        visc_hat = []
        for i in range(3):
            lap = 0
            for j in range(2):
                lap = lap - ops.kd[j] ** 2 * uh[i]
            d1, par = ops.d(uh[i], 2, PARITY[i])
            d2, _ = ops.d(d1, 2, par)
            lap = lap + d2
            gd, _ = ops.d(div_hat, i, "cos")
            visc_hat.append(params.mu * (lap + gd / 3.0))

    dm = np.empty_like(m)
    for i in range(3):
        acc = 0
        for j in range(3):
            par = _tparity(i, j)
            T = m[i] * u[j]
            if i == j:
                T = T + p
            That = ops.fwd(T, par) * ops.mask[par]
            dT, _ = ops.d(That, j, par)
            acc = acc - dT
        if visc_hat is not None:
            acc = acc + visc_hat[i]
        dm[i] = ops.inv(acc, PARITY[i])
    return drho, dm


def max_sound_speed(rho, law: GasLaw):
    return float(np.sqrt(pressure_derivative(rho, law).max()))


def stable_dt(state: FluidState3, params: Params, cfl=0.4, visc_safety=1.0):
    """Largest admissible RK4 step.

    Acoustic bound ``cfl * eps * h_eff / (a + max|u|)`` with ``a`` the largest
    local sound speed and ``h_eff = pi / k_max`` built from the largest
    retained horizontal and vertical wavenumbers (``h_eff ~ h`` for a
    vertically trivial slab).  Viscous bound ``visc_safety / ((4/3) mu k_max^2)``.
    """
    ops = ops_for(state.grid)
    kh = state.grid.horizontal.k_max
    k3 = ops.k3max()
    ktot = np.hypot(kh, k3)
    h_eff = np.pi / ktot
    umax = float(np.sqrt(np.sum(state.u**2, axis=0)).max())
    a = max_sound_speed(state.rho, params.law)
    dt = cfl * params.eps * h_eff / (a + umax)
    if params.mu > 0:
        dt = min(dt, visc_safety / (4.0 / 3.0 * params.mu * ktot**2))
    return dt


def step(state: FluidState3, dt, params: Params, cfl=0.4, check=True):
    """One classical RK4 step."""
    if check:
        lim = stable_dt(state, params, cfl)
        if dt > lim * (1 + 1e-12):
            raise CFLError(f"dt={dt:.3e} exceeds stability bound {lim:.3e}")
    g = state.grid

    def f(rho, m):
        return rhs(FluidState3(g, rho, m, state.t), params)

    r0, m0 = state.rho, state.m
    k1r, k1m = f(r0, m0)
    k2r, k2m = f(r0 + 0.5 * dt * k1r, m0 + 0.5 * dt * k1m)
    k3r, k3m = f(r0 + 0.5 * dt * k2r, m0 + 0.5 * dt * k2m)
    k4r, k4m = f(r0 + dt * k3r, m0 + dt * k3m)
    rho = r0 + dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
    m = m0 + dt / 6.0 * (k1m + 2 * k2m + 2 * k3m + k4m)
    _check_vacuum(rho)
    return FluidState3(g, rho, m, state.t + dt)


def velocity_gradient(state: FluidState3):
    """``G[i, j] = d_j u_i`` on the nodes."""
    ops = ops_for(state.grid)
    u = state.u
    G = np.empty((3, 3) + state.grid.shape)
    for i in range(3):
        U = ops.fwd(u[i], PARITY[i])
        for j in range(3):
            D, par = ops.d(U, j, PARITY[i])
            G[i, j] = ops.inv(D, par)
    return G


def stress(G):
    """``S = G + G^T - (2/3) tr(G) I`` for a 3x3 gradient field."""
    S = G + np.swapaxes(G, 0, 1)
    tr = G[0, 0] + G[1, 1] + G[2, 2]
    for i in range(3):
        S[i, i] -= 2.0 / 3.0 * tr
    return S


def energy_total(state: FluidState3, params: Params):
    """``(1/delta) int [rho |u|^2 / 2 + E(rho, 1)/eps^2] dx``."""
    dens = 0.5 * np.sum(state.m * state.u, axis=0) + rel_entropy(state.rho, 1.0, params.law) / params.eps**2
    return float(state.grid.integrate_mean(dens))


def dissipation(state: FluidState3, params: Params):
    """``mu (1/delta) int S(grad u) : grad u dx``."""
    if params.mu == 0:
        return 0.0
    G = velocity_gradient(state)
    S = stress(G)
    return float(params.mu * state.grid.integrate_mean(np.einsum("ij...,ij...->...", S, G)))


def total_mass(state: FluidState3):
    """``(1/delta) int (rho - 1) dx``."""
    return float(state.grid.integrate_mean(state.rho - 1.0))


@dataclass(frozen=True, eq=False)
class IllPreparedData:
    """Density perturbation ``rho1`` (so ``rho0 = 1 + eps rho1``) and initial velocity."""

    rho1: np.ndarray
    u0: np.ndarray


def data_norms(data: IllPreparedData, grid: SlabGrid, eps=None):
    """Averaged initial-data norms used to document the run."""
    tor = grid.horizontal
    u2 = vertical_average(np.sum(data.u0**2, axis=0), grid)
    r2 = vertical_average(data.rho1**2, grid)
    out = {
        "u0_sq_avg_L1": float(tor.integrate(u2)),
        "rho1_sq_avg_L1": float(tor.integrate(r2)),
        "rho1_sq_avg_Linf": float(r2.max()),
    }
    if eps is not None:
        rho0 = 1.0 + eps * data.rho1
        mbar = vertical_average(rho0[None] * data.u0, grid)
        out["m0_avg_L2"] = float(np.sqrt(tor.integrate(np.sum(mbar[:2] ** 2, axis=0))))
    return out


def init_illprepared(data: IllPreparedData, params: Params, grid: SlabGrid):
    """Build ``rho0 = 1 + eps rho1``, ``m0 = rho0 u0``; returns ``(state, norms)``."""
    grid.check(data.rho1)
    grid.check(data.u0, 3)
    rho0 = 1.0 + params.eps * np.asarray(data.rho1, dtype=float)
    if not rho0.min() > 0:
        raise ValueError(f"initial density not positive (min {rho0.min():.3e})")
    state = FluidState3.from_velocity(grid, rho0, data.u0, 0.0)
    return state, data_norms(data, grid, params.eps)


@dataclass
class Trajectory:
    """Sampled solver output: ``states[k]`` at ``times[k]`` plus per-step energy records."""

    times: list
    states: list
    steps: int = 0
    energy_times: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)


def integrate(state: FluidState3, params: Params, t_final, n_samples=16, cfl=0.4,
              record_energy=False, on_sample=None, keep_states=True):
    """Advance to ``t_final`` landing exactly on ``n_samples`` uniform sample times.

    ``on_sample(k, state)`` is called at every sample including ``t = 0``.
    With ``record_energy`` the total energy and dissipation are logged after
    every step for the discrete balance audit.
    """
    traj = Trajectory([state.t], [state] if keep_states else [])
    if on_sample:
        on_sample(0, state)
    if record_energy:
        traj.energy_times.append(state.t)
        traj.energy.append(energy_total(state, params))
        traj.dissipation.append(dissipation(state, params))
    t0 = state.t
    interval = (t_final - t0) / n_samples
    for k in range(1, n_samples + 1):
        target = t0 + k * interval
        nsub = max(1, int(np.ceil((target - state.t) / stable_dt(state, params, cfl) - 1e-9)))
        dt = (target - state.t) / nsub
        for _ in range(nsub):
            state = step(state, dt, params, cfl, check=False)
            traj.steps += 1
            if record_energy:
                traj.energy_times.append(state.t)
                traj.energy.append(energy_total(state, params))
                traj.dissipation.append(dissipation(state, params))
        state = FluidState3(state.grid, state.rho, state.m, target)
        traj.times.append(target)
        if keep_states:
            traj.states.append(state)
        if on_sample:
            on_sample(k, state)
    traj.final = state
    return traj


# pure 2D compressible reference (x3-independent motion with u3 = 0)


@dataclass(frozen=True, eq=False)
class FluidState2:
    grid: Torus2
    rho: np.ndarray
    m: np.ndarray
    t: float = 0.0

    @property
    def u(self):
        return self.m / self.rho[None]


def rhs_2d(state: FluidState2, params: Params):
    """Planar compressible tendencies with the 3D stress restricted to ``u3 = 0, d3 = 0``."""
    g = state.grid
    rho, m = state.rho, state.m
    _check_vacuum(rho)
    kd, mask = g.kd, g.dealias
    u = m / rho[None]
    p = pressure(rho, params.law) / params.eps**2
    Mh = g.fft(m) * mask
    drho = g.ifft(-1j * (kd[0] * Mh[0] + kd[1] * Mh[1]))
    Uh = g.fft(u) * mask
    divU = 1j * (kd[0] * Uh[0] + kd[1] * Uh[1])
    dm = np.empty_like(m)
    for i in range(2):
        flux = [g.fft(m[i] * u[j] + (p if i == j else 0.0)) * mask for j in range(2)]
        acc = -1j * (kd[0] * flux[0] + kd[1] * flux[1])
        if params.mu > 0:
            acc = acc + params.mu * (-(kd[0] ** 2 + kd[1] ** 2) * Uh[i] + 1j * kd[i] * divU / 3.0)
        dm[i] = g.ifft(acc)
    return drho, dm


def step_2d(state: FluidState2, dt, params: Params):
    g = state.grid

    def f(rho, m):
        return rhs_2d(FluidState2(g, rho, m), params)

    r0, m0 = state.rho, state.m
    k1r, k1m = f(r0, m0)
    k2r, k2m = f(r0 + 0.5 * dt * k1r, m0 + 0.5 * dt * k1m)
    k3r, k3m = f(r0 + 0.5 * dt * k2r, m0 + 0.5 * dt * k2m)
    k4r, k4m = f(r0 + dt * k3r, m0 + dt * k3m)
    return FluidState2(g, r0 + dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r),
                       m0 + dt / 6.0 * (k1m + 2 * k2m + 2 * k3m + k4m), state.t + dt)
