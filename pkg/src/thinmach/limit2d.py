"""Planar incompressible reference solvers: Navier-Stokes and Euler."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import CFLError, ResolutionError
from .field import Torus2, helmholtz_split

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LimitState2:
    """Divergence-free velocity ``v`` and zero-mean pressure ``pi`` at time ``t``."""

    grid: Torus2
    v: np.ndarray
    pi: np.ndarray | None = None
    t: float = 0.0

    def __post_init__(self):
        self.grid.check(self.v, 2)
        if self.pi is None:
            object.__setattr__(self, "pi", np.zeros(self.grid.shape))


def project_initial(u0h, grid: Torus2):
    """Return ``(LimitState2 with v0 = H[u0h], H_perp[u0h])``."""
    u0h = np.asarray(grid.check(u0h, 2), dtype=float)
    sol, grad_part = helmholtz_split(u0h, grid)
    return LimitState2(grid, sol), grad_part


def advective_dt(v, grid: Torus2, cfl=0.5):
    vmax = float(np.sqrt(np.sum(v**2, axis=0)).max())
    return np.inf if vmax == 0 else cfl * grid.h / vmax


def _check_cfl(v, grid, dt, cfl):
    lim = advective_dt(v, grid, cfl)
    if dt > lim * (1 + 1e-12):
        raise CFLError(f"dt={dt:.3e} exceeds advective bound {lim:.3e}")


def _project_hat(Vh, grid):
    kd, kd2 = grid.kd, grid.kd2
    safe = np.where(kd2 > 0, kd2, 1.0)
    dot = (kd[0] * Vh[0] + kd[1] * Vh[1]) / safe
    return Vh - kd * dot


def _advection_hat(Vh, grid):
    """Dealiased ``-P[(v . grad) v]`` in spectral space."""
    kd, mask = grid.kd, grid.dealias
    Vh = Vh * mask
    v = grid.ifft(Vh)
    G = grid.ifft(1j * kd[None, :] * Vh[:, None])  # G[i, j] = d_j v_i
    adv = np.einsum("j...,ij...->i...", v, G)
    return -_project_hat(grid.fft(adv) * mask, grid)


def ns2d_step(state: LimitState2, dt, mu, cfl=0.5, check=True):
    """Integrating-factor RK4 for ``v_t + P[(v.grad)v] = mu Lap v``."""
    g = state.grid
    if check:
        _check_cfl(state.v, g, dt, cfl)
    L = -mu * g.kd2
    E_half = np.exp(0.5 * dt * L)
    E_full = E_half * E_half
    V = g.fft(state.v)
    k1 = _advection_hat(V, g)
    k2 = _advection_hat(E_half * (V + 0.5 * dt * k1), g)
    k3 = _advection_hat(E_half * V + 0.5 * dt * k2, g)
    k4 = _advection_hat(E_full * V + dt * E_half * k3, g)
    Vn = E_full * V + dt / 6.0 * (E_full * k1 + 2 * E_half * (k2 + k3) + k4)
    Vn = _project_hat(Vn, g)
    v = g.ifft(Vn)
    out = LimitState2(g, v, None, state.t + dt)
    return LimitState2(g, v, euler_pressure(out), state.t + dt)


# Euler in vorticity form


def biot_savart(omega, grid: Torus2):
    """Velocity ``v = grad_perp psi`` with ``Lap psi = omega``; zero mean flow."""
    W = grid.fft(omega)
    safe = np.where(grid.kd2 > 0, grid.kd2, 1.0)
    Psi = np.where(grid.kd2 > 0, -W / safe, 0.0)
    return grid.ifft(np.stack([-1j * grid.kd[1] * Psi, 1j * grid.kd[0] * Psi]))


def vorticity(v, grid: Torus2):
    V = grid.fft(v)
    return grid.ifft(1j * (grid.kd[0] * V[1] - grid.kd[1] * V[0]))


def _vort_rhs(W, grid):
    kd, mask = grid.kd, grid.dealias
    W = W * mask
    safe = np.where(grid.kd2 > 0, grid.kd2, 1.0)
    Psi = np.where(grid.kd2 > 0, -W / safe, 0.0)
    u = grid.ifft(-1j * kd[1] * Psi)
    v = grid.ifft(1j * kd[0] * Psi)
    wx = grid.ifft(1j * kd[0] * W)
    wy = grid.ifft(1j * kd[1] * W)
    return -grid.fft(u * wx + v * wy) * mask


def spectral_tail_fraction(f, grid: Torus2):
    """Share of ``|f_hat|^2`` sitting in the outer third of the retained band."""
    F = np.abs(grid.fft(f)) ** 2
    kmax = grid.N / 3 * 2 * np.pi / grid.L
    kabs = grid.kabs
    tot = F[grid.dealias].sum()
    if tot == 0:
        return 0.0
    tail = F[grid.dealias & (kabs > 2.0 / 3.0 * kmax)].sum()
    return float(tail / tot)


def euler2d_step(state: LimitState2, dt, cfl=0.5, tail_warn=1e-4, check=True):
    """RK4 on ``omega_t + v . grad omega = 0``; ``v`` recovered by Biot-Savart."""
    g = state.grid
    if check:
        _check_cfl(state.v, g, dt, cfl)
    mean = state.v.mean(axis=(-2, -1))
    W = g.fft(vorticity(state.v, g))
    k1 = _vort_rhs(W, g)
    k2 = _vort_rhs(W + 0.5 * dt * k1, g)
    k3 = _vort_rhs(W + 0.5 * dt * k2, g)
    k4 = _vort_rhs(W + dt * k3, g)
    omega = g.ifft(W + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
    tail = spectral_tail_fraction(omega, g)
    if tail > tail_warn:
        warnings.warn(f"Euler run losing resolution: spectral tail fraction {tail:.2e}", RuntimeWarning)
    v = biot_savart(omega, g) + mean[:, None, None]
    out = LimitState2(g, v, None, state.t + dt)
    return LimitState2(g, v, euler_pressure(out), state.t + dt)


def check_euler_data(v, grid: Torus2, tol=1e-6):
    """Refuse initial data whose vorticity spectrum reaches the dealiasing edge."""
    tail = spectral_tail_fraction(vorticity(v, grid), grid)
    if tail > tol:
        raise ResolutionError(f"initial vorticity tail fraction {tail:.2e} exceeds {tol:g}")
    return tail


def euler_pressure(state: LimitState2):
    """Zero-mean ``pi`` with ``-Lap pi = div((v . grad) v)``."""
    g = state.grid
    kd = g.kd
    V = g.fft(state.v)
    G = g.ifft(1j * kd[None, :] * V[:, None])
    adv = np.einsum("j...,ij...->i...", state.v, G)
    A = g.fft(adv)
    div = 1j * (kd[0] * A[0] + kd[1] * A[1])
    safe = np.where(g.kd2 > 0, g.kd2, 1.0)
    return g.ifft(np.where(g.kd2 > 0, div / safe, 0.0))


def kinetic_energy(v, grid: Torus2):
    return 0.5 * grid.integrate(np.sum(v**2, axis=0))


def enstrophy(v, grid: Torus2):
    return 0.5 * grid.integrate(vorticity(v, grid) ** 2)


def grad_sq(v, grid: Torus2):
    """``||grad v||_2^2``."""
    V = grid.fft(v)
    G = grid.ifft(1j * grid.kd[None, :] * V[:, None])
    return grid.integrate(np.sum(G**2, axis=(0, 1)))


@dataclass
class LimitTrajectory:
    times: list
    states: list
    energy: list
    steps: int = 0


def run_limit(state0: LimitState2, T, n_samples, mu=None, cfl=0.5, dt_max=None):
    """Advance NS (``mu`` given) or Euler (``mu`` None) landing on uniform samples."""
    g = state0.grid
    if mu is None:
        check_euler_data(state0.v, g)
    st = LimitState2(g, state0.v, euler_pressure(state0), state0.t)
    traj = LimitTrajectory([st.t], [st], [kinetic_energy(st.v, g)])
    interval = (T - state0.t) / n_samples
    for k in range(1, n_samples + 1):
        target = state0.t + k * interval
        lim = advective_dt(st.v, g, cfl)
        if dt_max is not None:
            lim = min(lim, dt_max)
        nsub = max(1, int(np.ceil((target - st.t) / lim - 1e-9)))
        dt = (target - st.t) / nsub
        for _ in range(nsub):
            if mu is None:
                st = euler2d_step(st, dt, cfl, check=False)
            else:
                st = ns2d_step(st, dt, mu, cfl, check=False)
            traj.steps += 1
        st = LimitState2(g, st.v, st.pi, target)
        traj.times.append(target)
        traj.states.append(st)
        traj.energy.append(kinetic_energy(st.v, g))
    return traj


def ns_energy_audit(v_samples, times, mu, grid: Torus2):
    """``1/2 ||v||^2(t) + mu int_0^t ||grad v||^2`` minus its initial value, relative.

    The dissipation integral uses composite Simpson over the samples (odd count
    required).
    """
    E = np.array([kinetic_energy(v, grid) for v in v_samples])
    D = np.array([grad_sq(v, grid) for v in v_samples])
    times = np.asarray(times)
    if len(times) % 2 == 0:
        raise ValueError("Simpson audit needs an odd sample count")
    total = E[-1] + mu * simpson(D, x=times)
    return abs(total - E[0]) / E[0]
