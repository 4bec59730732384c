"""Linear acoustic system on the torus.

    eps d_t psi + Lap Psi = eps f1,    eps d_t grad Psi + a^2 grad psi = eps f2

Each Fourier mode is a 2x2 rotation in ``(psi_hat, w)`` with
``w = khat . G_hat`` the longitudinal part of ``G = grad Psi``, at frequency
``a |k| / eps``.  Derivatives use the Nyquist-free wavevector so the
discrete system is exactly skew and the discrete energy is conserved mode
by mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .field import Torus2, helmholtz_split, norm_lp


@dataclass(frozen=True, eq=False)
class AcousticState:
    """Acoustic potential ``psi`` and the gradient ``G = grad Psi`` at time ``t``."""

    grid: Torus2
    psi: np.ndarray
    G: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.grid.check(self.psi)
        self.grid.check(self.G, 2)

    @classmethod
    def from_potentials(cls, grid, psi, Psi, t=0.0):
        from .field import grad_h
        return cls(grid, np.asarray(psi, dtype=float), grad_h(Psi, grid), t)


@dataclass(frozen=True, eq=False)
class AcousticForcing:
    """Forcing samples ``f1[n]``, ``f2[n]`` at ``t = t0 + n dt``."""

    f1: np.ndarray
    f2: np.ndarray

    def __post_init__(self):
        if self.f1.ndim != 3 or self.f2.ndim != 4 or self.f2.shape[1] != 2:
            raise ValueError("forcing must be (n, N, N) and (n, 2, N, N) sample stacks")
        if len(self.f1) != len(self.f2):
            raise ValueError("f1 and f2 sample counts differ")


@dataclass
class AcousticTrajectory:
    times: np.ndarray
    psi: np.ndarray
    G: np.ndarray

    def state(self, grid, n):
        return AcousticState(grid, self.psi[n], self.G[n], float(self.times[n]))


def _symbols(grid: Torus2):
    kd = grid.kd
    kabs = np.sqrt(grid.kd2)
    safe = np.where(kabs > 0, kabs, 1.0)
    khat = np.where(kabs > 0, kd / safe, 0.0)
    return kabs, khat


def _rotate(P, Gh, t, eps, a, grid):
    """Apply the exact propagator over time ``t`` to spectral data."""
    kabs, khat = _symbols(grid)
    w = khat[0] * Gh[0] + khat[1] * Gh[1]
    transverse = Gh - khat * w
    c = np.cos(a * kabs * t / eps)
    s = np.sin(a * kabs * t / eps)
    Pn = P * c - 1j * (w / a) * s
    wn = w * c - 1j * a * P * s
    return Pn, khat * wn + transverse


def propagate_exact(state0: AcousticState, t, eps, a):
    """Closed-form solution of the unforced system after time ``t``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    g = state0.grid
    P, Gh = _rotate(g.fft(state0.psi), g.fft(state0.G), t, eps, a, g)
    return AcousticState(g, g.ifft(P), g.ifft(Gh), state0.t + t)


def acoustic_energy(state: AcousticState, a):
    """``(1/2) int (a^2 psi^2 + |grad Psi|^2)``."""
    g = state.grid
    return 0.5 * g.integrate(a**2 * state.psi**2 + np.sum(state.G**2, axis=0))


def weighted_sobolev_energy(state: AcousticState, a, k):
    """``sum_k (1 + |k|^2)^k (a^2 |psi_hat|^2 + |G_hat|^2)``, invariant under the exact flow."""
    g = state.grid
    P, Gh = g.fft(state.psi), g.fft(state.G)
    w = np.full(P.shape, 2.0)
    w[:, 0] = 1.0
    if g.N % 2 == 0:
        w[:, -1] = 1.0
    dens = a**2 * np.abs(P) ** 2 + np.sum(np.abs(Gh) ** 2, axis=0)
    return float(np.sum(w * (1 + g.kd2) ** k * dens) * g.cell_area / g.N**2)


def max_frequency(grid: Torus2, eps, a):
    return a * float(np.sqrt(grid.kd2.max())) / eps


def propagate_duhamel(state0: AcousticState, forcing: AcousticForcing, eps, a, T, dt, c=1.0):
    """Forced trajectory at ``t = 0, dt, ..., T``.

    Exact propagation of the homogeneous part plus the midpoint rule for the
    Duhamel integral on each step, the midpoint forcing being the mean of
    the two bracketing samples (second order in ``dt``).
    """
    g = state0.grid
    nsteps = int(round(T / dt))
    if nsteps < 1 or abs(nsteps * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T must be a positive multiple of dt")
    if len(forcing.f1) != nsteps + 1:
        raise ValueError(f"forcing needs {nsteps + 1} samples, got {len(forcing.f1)}")
    if dt * max_frequency(g, eps, a) > c:
        raise ValueError(
            f"dt={dt:.3e} under-resolves the fastest mode; need dt <= {c / max_frequency(g, eps, a):.3e}"
        )
    P, Gh = g.fft(state0.psi), g.fft(state0.G)
    F1 = g.fft(forcing.f1)
    F2 = g.fft(forcing.f2)
    psis = [state0.psi]
    Gs = [state0.G]
    for n in range(nsteps):
        P, Gh = _rotate(P, Gh, dt, eps, a, g)
        mid1 = 0.5 * (F1[n] + F1[n + 1])
        mid2 = 0.5 * (F2[n] + F2[n + 1])
        q1, q2 = _rotate(mid1, mid2, 0.5 * dt, eps, a, g)
        P = P + dt * q1
        Gh = Gh + dt * q2
        psis.append(g.ifft(P))
        Gs.append(g.ifft(Gh))
    times = state0.t + dt * np.arange(nsteps + 1)
    return AcousticTrajectory(times, np.array(psis), np.array(Gs))


def acoustic_data_from_velocity(grid: Torus2, rho1, u0h):
    """Acoustic initial data ``psi0 = rho1``, ``G0 = H_perp[u0h]``."""
    _, grad_part = helmholtz_split(u0h, grid)
    return AcousticState(grid, np.asarray(rho1, dtype=float), grad_part, 0.0)


# Strichartz exponents and the rescaling study


def strichartz_exponents(p):
    """``(q, sigma)`` with ``2/q = 1/2 - 1/p`` and ``sigma = 3/q``."""
    p = float(p)
    if not (2 < p < np.inf):
        raise ValueError("p must lie in (2, inf)")
    q = 2.0 / (0.5 - 1.0 / p)
    return q, 3.0 / q


def _norm_series(state0, eps, a, p, t):
    g = state0.grid
    P0, G0 = g.fft(state0.psi), g.fft(state0.G)
    out = np.empty(len(t))
    for j, tj in enumerate(t):
        P, _ = _rotate(P0, G0, tj, eps, a, g)
        out[j] = norm_lp(g.ifft(P), p, g)
    return out


def time_mixed_norm(state0, eps, a, p, q, T, samples_per_period=24, min_samples=65):
    """``||psi_eps||_{L^q((0,T); L^p)}`` by composite Simpson over exact samples."""
    g = state0.grid
    omega = max_frequency(g, eps, a)
    n = max(min_samples, int(np.ceil(samples_per_period * omega * T / (2 * np.pi))))
    n += (n + 1) % 2  # odd point count for Simpson
    t = np.linspace(0.0, T, n)
    vals = _norm_series(state0, eps, a, p, t)
    return float(simpson(vals**q, x=t) ** (1.0 / q))


@dataclass
class ScalingRow:
    eps: float
    norm: float
    ratio: float
    rescaled: float
    identity_err: float


def strichartz_scaling_check(state0: AcousticState, p, T, eps_list, a, samples_per_period=24):
    """Mixed norm per ``eps`` together with the time-rescaling identity.

    The left side is integrated over ``(0, T)`` at Mach number ``eps``; the
    right side ``eps^(1/q) ||psi_1||_{L^q((0, T/eps); L^p)}`` is integrated
    separately at unit Mach number on its own, finer time grid.
    """
    q, _ = strichartz_exponents(p)
    rhs_samples = int(1.5 * samples_per_period) + 1
    rows = []
    for eps in eps_list:
        lhs = time_mixed_norm(state0, eps, a, p, q, T, samples_per_period)
        rhs = eps ** (1.0 / q) * time_mixed_norm(state0, 1.0, a, p, q, T / eps, rhs_samples)
        rows.append(ScalingRow(float(eps), lhs, lhs / eps ** (1.0 / q), rhs, abs(lhs - rhs) / abs(rhs)))
    return rows


def gaussian_pulse(grid: Torus2, sigma=2.0, amplitude=1.0, center=None):
    X, Y = grid.mesh
    cx, cy = center if center is not None else (grid.L / 2, grid.L / 2)
    return amplitude * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * sigma**2))
