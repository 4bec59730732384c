"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The sweep criteria run the shipped sweep configurations end to end, so this
module takes a few minutes.
"""

import time
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid

from rel_energy_oracle import library_inputs, oracle, random_case
from thinmach.acoustics import AcousticState, acoustic_energy, gaussian_pulse, propagate_exact, strichartz_scaling_check
from thinmach.cns3d import (
    FluidState2,
    FluidState3,
    Params,
    init_illprepared,
    integrate,
    stable_dt,
    step,
    step_2d,
    total_mass,
)
from thinmach.config import load_config
from thinmach.diagnostics import fit_rate, relative_energy, remainder, vertical_poincare
from thinmach.experiments import build_data, run_sweep
from thinmach.field import SlabGrid, Torus2, div_h, grad_h, helmholtz_split
from thinmach.limit2d import LimitState2, enstrophy, kinetic_energy, run_limit
from thinmach.thermo import GasLaw

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RESULTS = {}


@pytest.fixture
def report(capsys):
    def _report(num, title, ok, detail):
        RESULTS[num] = ok
        with capsys.disabled():
            print(f"\n[criterion {num:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, detail

    return _report


def benchmark_setup(z_amp=None, M=None):
    cfg = load_config(CONFIGS / "benchmark_3d.cfg")
    over = {}
    if z_amp is not None:
        over["z_amp"] = z_amp
    if M is not None:
        over["M"] = M
    if over:
        cfg = cfg.with_overrides(**over)
    eps = cfg.eps[0]
    grid = SlabGrid(Torus2(cfg.L, cfg.N), cfg.delta(eps), cfg.M)
    params = Params(eps, cfg.delta(eps), cfg.viscosity(eps), GasLaw(cfg.A, cfg.gamma))
    state0, _ = init_illprepared(build_data(cfg, eps, grid), params, grid)
    return cfg, grid, params, state0


@pytest.fixture(scope="module")
def benchmark_run():
    cfg, grid, params, s0 = benchmark_setup()
    t0 = time.perf_counter()
    tr = integrate(s0, params, cfg.T, cfg.samples, cfg.cfl, record_energy=True)
    return cfg, grid, params, s0, tr, time.perf_counter() - t0


@pytest.fixture(scope="module")
def fixed_mu_sweep(tmp_path_factory):
    cfg = load_config(CONFIGS / "fixed_mu_sweep.cfg")
    t0 = time.perf_counter()
    summary, done = run_sweep(cfg, str(tmp_path_factory.mktemp("fixed_mu")))
    return summary, done, time.perf_counter() - t0


@pytest.fixture(scope="module")
def vanishing_mu_sweep(tmp_path_factory):
    cfg = load_config(CONFIGS / "vanishing_mu_sweep.cfg")
    t0 = time.perf_counter()
    summary, done = run_sweep(cfg, str(tmp_path_factory.mktemp("vanishing_mu")))
    return summary, done, time.perf_counter() - t0


def test_c01_acoustic_energy(report):
    g = Torus2(N=256)
    a = GasLaw().a
    t0 = time.perf_counter()
    s0 = AcousticState(g, gaussian_pulse(g, 2.0), grad_h(gaussian_pulse(g, 3.0, 0.5), g))
    e0 = acoustic_energy(s0, a)
    e1 = acoustic_energy(propagate_exact(s0, 1.0, 1 / 16, a), a)
    wall = time.perf_counter() - t0
    drift = abs(e1 - e0) / e0
    report(1, "acoustic energy conservation", drift <= 1e-12 and wall < 1.0, f"drift={drift:.2e}, {wall:.2f}s")


def test_c02_strichartz_scaling(report):
    g = Torus2(N=64)
    s0 = AcousticState(g, gaussian_pulse(g, 2.0), np.zeros((2,) + g.shape))
    eps = [1.0, 0.5, 0.25, 0.125]
    t0 = time.perf_counter()
    rows = strichartz_scaling_check(s0, 4, 8.0, eps, GasLaw().a, samples_per_period=12)
    wall = time.perf_counter() - t0
    ident = max(r.identity_err for r in rows)
    slope = fit_rate([(r.eps, r.norm) for r in rows]).slope
    ok = ident <= 1e-3 and abs(slope - 0.125) <= 0.03 and wall < 60
    report(2, "Strichartz rescaling", ok, f"identity_err={ident:.2e}, slope={slope:.4f}, {wall:.1f}s")


def test_c03_helmholtz_projector(report):
    g = Torus2(2 * np.pi, 64)
    rng = np.random.default_rng(2024)
    kcut = g.k_max / np.sqrt(2)
    shape = (2,) + g.fft(np.zeros(g.shape)).shape
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(100):
        F = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (g.kabs < kcut)
        v = g.ifft(F)
        sol, grad = helmholtz_split(v, g)
        scale = np.abs(v).max()
        worst = max(
            worst,
            np.abs(helmholtz_split(sol, g)[0] - sol).max() / scale,
            np.abs(sol + grad - v).max() / scale,
            np.abs(div_h(sol, g)).max() / scale,
        )
    wall = time.perf_counter() - t0
    report(3, "Helmholtz projector", worst <= 1e-10 and wall < 5, f"worst={worst:.2e}, {wall:.2f}s")


def test_c04_planar_references(report):
    g = Torus2(2 * np.pi, 64)
    X, Y = g.mesh
    t0 = time.perf_counter()
    mu = 0.05
    tg = np.stack([-np.cos(X) * np.sin(Y), np.sin(X) * np.cos(Y)])
    tg_err = np.abs(run_limit(LimitState2(g, tg), 1.0, 16, mu=mu).states[-1].v - tg * np.exp(-2 * mu)).max()

    ev = np.stack([-np.sin(X) * np.cos(Y), np.cos(X) * np.sin(Y)])
    ev_err = max(np.abs(s.v - ev).max() for s in run_limit(LimitState2(g, ev), 1.0, 8).states)

    rng = np.random.default_rng(3)
    spec = np.exp(-(g.kabs / 2.0) ** 2) * (rng.standard_normal(g.kabs.shape) + 1j * rng.standard_normal(g.kabs.shape))
    spec[0, 0] = 0
    psi = g.ifft(spec)
    d = grad_h(psi / np.abs(psi).max(), g)
    v0 = np.stack([-d[1], d[0]])
    tr = run_limit(LimitState2(g, v0), 1.0, 8)
    e0, z0 = kinetic_energy(v0, g), enstrophy(v0, g)
    drift = max(max(abs(kinetic_energy(s.v, g) - e0) / e0, abs(enstrophy(s.v, g) - z0) / z0) for s in tr.states)
    wall = time.perf_counter() - t0
    ok = tg_err <= 1e-6 and ev_err <= 1e-8 and drift <= 1e-8 and wall < 30
    report(4, "planar NS/Euler references", ok,
           f"taylor_green={tg_err:.2e}, eigen_vortex={ev_err:.2e}, energy/enstrophy drift={drift:.2e}, {wall:.1f}s")


def test_c05_benchmark_conservation(report, benchmark_run):
    cfg, grid, params, s0, tr, wall_run = benchmark_run
    t0 = time.perf_counter()
    mass = max(abs(total_mass(s) - total_mass(s0)) for s in tr.states)
    mass_rel = mass / max(1.0, abs(total_mass(s0)))
    E = np.array(tr.energy)
    balance = np.abs(E + cumulative_trapezoid(tr.dissipation, tr.energy_times, initial=0.0) - E[0]).max() / E[0]
    # Richardson self-convergence with steps dt, dt/2, dt/4 at the stability limit
    T = 4 * stable_dt(s0, params)
    finals = []
    for n in (4, 8, 16):
        s = s0
        for _ in range(n):
            s = step(s, T / n, params, check=False)
        finals.append(np.concatenate([s.rho.ravel(), s.m.ravel()]))
    order = np.log2(np.abs(finals[0] - finals[1]).max() / np.abs(finals[1] - finals[2]).max())
    wall = wall_run + time.perf_counter() - t0
    ok = mass_rel <= 1e-12 and balance <= 1e-4 and abs(order - 4) <= 0.3 and wall < 600
    report(5, "3D conservation and dissipation", ok,
           f"mass_drift={mass_rel:.2e}, energy_balance={balance:.2e}, rk4_order={order:.3f}, {wall:.0f}s")


def test_c06_dimension_reduction(report):
    cfg, grid, params, s3 = benchmark_setup(z_amp=0.0, M=4)
    tor = grid.horizontal
    s2 = FluidState2(tor, s3.rho[..., 0].copy(), s3.m[:2, ..., 0].copy())
    dt = stable_dt(s3, params, cfg.cfl)
    t0 = time.perf_counter()
    for _ in range(int(np.ceil(0.5 / dt))):
        s3 = step(s3, dt, params, check=False)
        s2 = step_2d(s2, dt, params)
    wall = time.perf_counter() - t0
    d3 = max(np.abs(grid.to_spectral(s3.rho, "cos")[..., 1:]).max(),
             np.abs(grid.to_spectral(s3.m[0], "cos")[..., 1:]).max(),
             np.abs(grid.to_spectral(s3.m[1], "cos")[..., 1:]).max(),
             np.abs(s3.m[2]).max())
    match = max(np.abs(s3.rho[..., 0] - s2.rho).max(), np.abs(s3.m[:2, ..., 0] - s2.m).max())
    ok = d3 <= 1e-8 and match <= 1e-8 and wall < 300
    report(6, "dimension reduction", ok, f"x3_content={d3:.2e}, match_2d={match:.2e}, t={s3.t:.3f}, {wall:.1f}s")


@pytest.mark.slow
def test_c07_fixed_viscosity_sweep(report, fixed_mu_sweep):
    summary, done, wall = fixed_mu_sweep
    sol = [r.summary["sol_metric"] for r in done]
    grad = [r.summary["grad_part"] for r in done]
    ok = (not summary["partial"] and len(done) == 4 and summary["flags"]["sol_metric_monotone"]
          and summary["flags"]["grad_part_monotone"] and wall < 3600)
    report(7, "fixed-viscosity limit sweep", ok,
           f"sol_metric={[round(v, 3) for v in sol]}, grad_part={[round(v, 3) for v in grad]}, {wall:.0f}s")


@pytest.mark.slow
def test_c08_vanishing_viscosity_sweep(report, vanishing_mu_sweep):
    summary, done, wall = vanishing_mu_sweep
    sup = [r.summary["sup_rel_energy"] for r in done]
    rel0 = max(abs(r.summary["rel_energy_0"]) for r in done)
    slope = summary["fits"]["sup_rel_energy"]["slope"]
    ok = (not summary["partial"] and summary["flags"]["rel_energy_monotone"]
          and slope >= summary["alpha"] - 0.05 and wall < 3600)
    report(8, "vanishing-viscosity relative energy", ok,
           f"sup_rel_energy={[round(v, 4) for v in sup]}, slope={slope:.3f} (alpha={summary['alpha']}), "
           f"rel_energy(0)<={rel0:.1e}, {wall:.0f}s")


@pytest.mark.slow
def test_c09_residual_scaling(report, fixed_mu_sweep):
    summary, done, _ = fixed_mu_sweep
    res = [r.summary["sup_rho_res"] for r in done]
    slope = summary["fits"]["sup_rho_res"]["slope"]
    report(9, "residual density mass scaling", slope >= 1.7, f"sup_rho_res={[f'{v:.3g}' for v in res]}, slope={slope:.3f}")


@pytest.mark.slow
def test_c10_vertical_poincare(report, benchmark_run, fixed_mu_sweep, vanishing_mu_sweep):
    g = SlabGrid(Torus2(2 * np.pi, 8), 0.25, 8)
    u = np.zeros((3,) + g.shape)
    u[0] = np.cos(np.pi * g.x3 / g.delta)
    dev, bnd = vertical_poincare(u, g)
    ratio_err = abs(dev / bnd - 1 / np.pi**2)
    _, grid, _, _, tr, _ = benchmark_run
    bench_ok = all(d <= b for d, b in (vertical_poincare(s.u, grid) for s in tr.states))
    sweep_ok = all(row["poincare_dev"] <= row["poincare_bound"]
                   for sweep in (fixed_mu_sweep, vanishing_mu_sweep) for r in sweep[1] for row in r.rows)
    ok = ratio_err <= 1e-10 and bench_ok and sweep_ok
    report(10, "vertical Poincare", ok, f"ratio_err={ratio_err:.2e}, benchmark_ok={bench_ok}, sweeps_ok={sweep_ok}")


def test_c11_relative_energy_oracle(report):
    rng = np.random.default_rng(11)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(20):
        case = random_case(rng)
        rel, terms, _ = oracle(case)
        st, r, U, dtU, dtHr, p = library_inputs(case)
        worst = max(worst, abs(relative_energy(st, r, U, p) - rel) / abs(rel))
        got = remainder(st, r, U, dtU, dtHr, p, split=True)
        scale = sum(abs(t) for t in terms)
        worst = max(worst, max(abs(a - b) for a, b in zip(got, terms)) / scale)
        worst = max(worst, abs(sum(got) - sum(terms)) / scale)
    wall = time.perf_counter() - t0
    report(11, "relative energy oracle", worst <= 1e-8 and wall < 60, f"worst_rel_err={worst:.2e}, {wall:.1f}s")


def test_summary(capsys):
    """Closing tally of the criteria that ran in this session."""
    with capsys.disabled():
        print("\nacceptance: " + ", ".join(f"{k}:{'PASS' if v else 'FAIL'}" for k, v in sorted(RESULTS.items())))
    assert all(RESULTS.values())
