"""Barotropic gas law, pressure potential and the essential/residual split."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError
from .field import smooth_cutoff


@dataclass(frozen=True)
class GasLaw:
    """``p(rho) = A rho^gamma`` with ``gamma > 3/2``."""

    A: float = 1.0
    gamma: float = 2.0

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError("pressure scale A must be positive")
        if not self.gamma > 1.5:
            raise ValueError("adiabatic exponent must satisfy gamma > 3/2")

    @property
    def a2(self):
        """Squared sound speed ``p'(1)``."""
        return self.A * self.gamma

    @property
    def a(self):
        return float(np.sqrt(self.a2))


def _nonneg(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("density must be nonnegative")
    return rho


def _positive(rho, name="density"):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError(f"{name} must be positive")
    return rho


def pressure(rho, law: GasLaw):
    rho = _nonneg(rho)
    return law.A * rho**law.gamma


def pressure_derivative(rho, law: GasLaw):
    rho = _nonneg(rho)
    return law.A * law.gamma * rho ** (law.gamma - 1)


def pressure_potential(rho, law: GasLaw):
    """``H(rho) = rho * int_1^rho p(z)/z^2 dz = A (rho^gamma - rho)/(gamma - 1)``."""
    rho = _positive(rho)
    return law.A * (rho**law.gamma - rho) / (law.gamma - 1)


def pressure_potential_d1(rho, law: GasLaw):
    """``H'(rho) = A (gamma rho^(gamma-1) - 1)/(gamma - 1)``."""
    rho = _positive(rho)
    return law.A * (law.gamma * rho ** (law.gamma - 1) - 1) / (law.gamma - 1)


def pressure_potential_d2(rho, law: GasLaw):
    """``H''(rho) = p'(rho)/rho``."""
    rho = _positive(rho)
    return law.A * law.gamma * rho ** (law.gamma - 2)


def rel_entropy(rho, r, law: GasLaw):
    """``E(rho, r) = H(rho) - H'(r)(rho - r) - H(r)``, nonnegative by convexity.

    Written without ``H(rho)`` at ``rho = 0`` singularities: ``H(0) = 0``.
    """
    rho = _nonneg(rho)
    r = _positive(r, "reference density")
    g, A = law.gamma, law.A
    H_rho = A * (rho**g - rho) / (g - 1)
    return H_rho - pressure_potential_d1(r, law) * (rho - r) - pressure_potential(r, law)


@dataclass(frozen=True)
class CutoffKappa:
    """Smooth cutoff equal to 1 on ``|rho - 1| <= 1/2`` and 0 on ``|rho - 1| >= w_out``."""

    w_out: float = 0.75
    inner: float = 0.5

    def __post_init__(self):
        if not self.inner < self.w_out < 1:
            raise ValueError("outer half-width must lie in (1/2, 1)")

    def __call__(self, rho):
        z = (np.abs(np.asarray(rho, dtype=float) - 1.0) - self.inner) / (self.w_out - self.inner)
        return smooth_cutoff(z)


def ess_res_split(f, rho, kappa: CutoffKappa | None = None):
    """Return ``(kappa(rho) f, f - kappa(rho) f)``; the sum reproduces ``f`` exactly.

    ``rho`` broadcasts against trailing axes of ``f`` (vector fields carry a
    leading component axis).
    """
    kappa = kappa or CutoffKappa()
    f = np.asarray(f, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if f.shape[-rho.ndim:] != rho.shape:
        raise GridMismatchError(f"field shape {f.shape} incompatible with density shape {rho.shape}")
    ess = kappa(rho) * f
    return ess, f - ess
