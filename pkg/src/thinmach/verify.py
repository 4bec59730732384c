"""Headless self-checks grouped by module, reported as JSON-ready dicts."""

from __future__ import annotations

import time
import traceback

import numpy as np

SUITES = ("field", "thermo", "acoustics", "limit2d", "cns3d", "diagnostics")
_REGISTRY = {s: [] for s in SUITES}


def check(suite):
    def deco(fn):
        _REGISTRY[suite].append(fn)
        return fn
    return deco


def _random_band_field(grid, rng, ncomp=2, kcut=None):
    kcut = kcut if kcut is not None else 0.5 * grid.k_max / np.sqrt(2)
    shape = (ncomp,) + grid.fft(np.zeros(grid.shape)).shape
    F = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (grid.kabs < kcut)
    return grid.ifft(F)


@check("field")
def projector_idempotence():
    from .field import Torus2, div_h, helmholtz_split
    g = Torus2(2 * np.pi, 32)
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(10):
        v = _random_band_field(g, rng)
        sol, grad = helmholtz_split(v, g)
        sol2, _ = helmholtz_split(sol, g)
        scale = np.abs(v).max()
        worst = max(worst, np.abs(sol2 - sol).max() / scale, np.abs(sol + grad - v).max() / scale,
                    np.abs(div_h(sol, g)).max() / scale)
    return worst <= 1e-10, worst


@check("field")
def vertical_average_of_sine():
    from .field import SlabGrid, Torus2, vertical_average
    g = SlabGrid(Torus2(2 * np.pi, 8), 0.5, 8)
    f = np.ones((8, 8, 1)) * np.sin(np.pi * g.x3 / g.delta)
    err = abs(vertical_average(f, g, "sin").mean() - 2 / np.pi)
    return err <= 1e-12, err


@check("thermo")
def potential_values():
    from .thermo import GasLaw, pressure_potential, pressure_potential_d2, rel_entropy
    law = GasLaw(1.0, 2.0)
    err = max(abs(pressure_potential(2.0, law) - 2.0), abs(pressure_potential_d2(1.0, law) - law.a2),
              abs(rel_entropy(0.0, 1.0, law) - 1.0))
    return err <= 1e-14, err


@check("acoustics")
def acoustic_energy_conservation():
    from .acoustics import AcousticState, acoustic_energy, gaussian_pulse, propagate_exact
    from .field import Torus2
    g = Torus2(N=128)
    a = np.sqrt(2.0)
    s0 = AcousticState(g, gaussian_pulse(g, 2.0), np.zeros((2,) + g.shape))
    e0 = acoustic_energy(s0, a)
    e1 = acoustic_energy(propagate_exact(s0, 1.0, 1 / 16, a), a)
    drift = abs(e1 - e0) / e0
    return drift <= 1e-12, drift


@check("acoustics")
def rescaling_identity():
    from .acoustics import AcousticState, gaussian_pulse, strichartz_scaling_check
    from .field import Torus2
    g = Torus2(N=64)
    s0 = AcousticState(g, gaussian_pulse(g, 2.0), np.zeros((2,) + g.shape))
    rows = strichartz_scaling_check(s0, 4, 2.0, [1.0, 0.25], np.sqrt(2.0), samples_per_period=12)
    worst = max(r.identity_err for r in rows)
    return worst <= 1e-3, worst


@check("limit2d")
def taylor_green_golden():
    from .field import Torus2
    from .limit2d import LimitState2, run_limit
    g = Torus2(2 * np.pi, 64)
    X, Y = g.mesh
    mu = 0.05
    v0 = np.stack([-np.cos(X) * np.sin(Y), np.sin(X) * np.cos(Y)])
    tr = run_limit(LimitState2(g, v0), 1.0, 16, mu=mu)
    err = float(np.abs(tr.states[-1].v - v0 * np.exp(-2 * mu)).max())
    return err <= 1e-6, err


@check("limit2d")
def eigen_vortex_stationary():
    from .field import Torus2
    from .limit2d import LimitState2, run_limit
    g = Torus2(2 * np.pi, 64)
    X, Y = g.mesh
    v0 = np.stack([-np.sin(X) * np.cos(Y), np.cos(X) * np.sin(Y)])
    tr = run_limit(LimitState2(g, v0), 1.0, 8)
    err = float(np.abs(tr.states[-1].v - v0).max())
    return err <= 1e-8, err


@check("cns3d")
def rest_state_and_mass():
    from .cns3d import FluidState3, Params, integrate, total_mass
    from .field import SlabGrid, Torus2
    g = SlabGrid(Torus2(2 * np.pi, 16), 0.5, 4)
    X, Y = g.horizontal.mesh
    rho = (1 + 0.1 * np.sin(X) * np.cos(Y))[..., None] * np.ones(g.M)
    u = np.zeros((3,) + g.shape)
    u[0] = np.cos(Y)[..., None]
    s0 = FluidState3.from_velocity(g, rho, u)
    p = Params(0.25, 0.5, 0.05)
    tr = integrate(s0, p, 0.1, 2)
    drift = abs(total_mass(tr.final) - total_mass(s0))
    return drift <= 1e-12, drift


@check("diagnostics")
def poincare_ratio():
    from .diagnostics import vertical_poincare
    from .field import SlabGrid, Torus2
    g = SlabGrid(Torus2(2 * np.pi, 8), 0.25, 8)
    u = np.zeros((3,) + g.shape)
    u[0] = np.cos(np.pi * g.x3 / g.delta)
    dev, bnd = vertical_poincare(u, g)
    err = abs(dev / bnd - 1 / np.pi**2)
    return err <= 1e-10, err


@check("diagnostics")
def planted_rate():
    from .diagnostics import fit_rate
    eps = [0.25, 0.125, 0.0625]
    err = abs(fit_rate([(e, 3.0 * e**0.125) for e in eps]).slope - 0.125)
    return err <= 1e-12, err


def run_suite(name):
    """Run one suite (or ``all``); returns a JSON-serialisable report."""
    suites = SUITES if name == "all" else (name,)
    if any(s not in _REGISTRY for s in suites):
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    results = []
    for s in suites:
        for fn in _REGISTRY[s]:
            t0 = time.perf_counter()
            try:
                ok, val = fn()
                err = None
            except Exception:  # noqa: BLE001 - failures are report content
                ok, val, err = False, None, traceback.format_exc(limit=3)
            results.append({
                "suite": s,
                "check": fn.__name__,
                "passed": bool(ok),
                "value": None if val is None else float(val),
                "seconds": round(time.perf_counter() - t0, 3),
                "error": err,
            })
    return {"suite": name, "passed": all(r["passed"] for r in results), "results": results}
