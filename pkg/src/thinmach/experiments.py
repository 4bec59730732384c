"""Single runs and eps-sweeps: data construction, solver, reference and diagnostics."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import __version__
from .acoustics import AcousticState, propagate_exact
from .cns3d import (
    IllPreparedData,
    Params,
    dissipation,
    energy_total,
    init_illprepared,
    integrate,
    total_mass,
    velocity_gradient,
)
from .checkpoint import save_planar, save_state
from .config import ExperimentConfig
from .diagnostics import (
    acoustic_test_pair,
    bounds_at,
    convergence_metrics,
    fit_rate,
    metrics_at,
    relative_energy,
    relative_viscous,
    remainder,
    theoretical_alpha,
    vertical_poincare,
)
from .field import SlabGrid, Torus2, helmholtz_split, mollify, vertical_average
from .limit2d import LimitState2, _advection_hat, run_limit
from .thermo import CutoffKappa, GasLaw

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "run_id", "eps", "delta", "mu", "t", "energy_total", "dissipation", "rel_energy",
    "bound_mom", "bound_r_ess", "bound_rho_res", "bound_res_measure", "bound_grad",
    "bound_u_W12", "grad_part_L2K", "sol_metric_L2K", "sqrho_metric_L2K",
    "poincare_dev", "poincare_bound",
)
AUDIT_COLUMNS = ("t", "rel_energy", "rel_viscous", "remainder", "mass", "rho_dev", "u2_res_scaled")


def _gauss(X, Y, cx, cy, sigma):
    return np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2.0 * sigma**2))


def _band_noise(tor: Torus2, rng, kcut=1.0):
    """Random smooth 2-vector field with spectrum confined to ``|k| < kcut``."""
    shape = (2,) + tor.fft(np.zeros(tor.shape)).shape
    F = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    F *= tor.kabs < kcut
    f = tor.ifft(F)
    return f / max(np.abs(f).max(), 1e-300)


def build_data(cfg: ExperimentConfig, eps, grid: SlabGrid):
    """Initial data ``(rho1, u0)`` for the configured family at Mach number ``eps``."""
    tor = grid.horizontal
    X, Y = tor.mesh
    c = tor.L / 2
    M = grid.M
    if cfg.family == "rest":
        return IllPreparedData(np.zeros(grid.shape), np.zeros((3,) + grid.shape))
    if cfg.family == "acoustic":
        phi = cfg.pulse_amp * _gauss(X, Y, c, c, cfg.pulse_sigma)
        uh = np.stack([_grad(phi, tor, 0), _grad(phi, tor, 1)])
        vort = np.zeros_like(uh)
        rho1 = cfg.rho_amp * _gauss(X, Y, c, c, cfg.rho_sigma)
    else:
        s, d = cfg.vortex_sigma, cfg.vortex_sep / 2
        sf = cfg.vortex_amp * (_gauss(X, Y, c - d, c, s) - _gauss(X, Y, c + d, c, s))
        vort = np.stack([-_grad(sf, tor, 1), _grad(sf, tor, 0)])
        phi = cfg.pulse_amp * _gauss(X, Y, c, c, cfg.pulse_sigma)
        uh = vort + np.stack([_grad(phi, tor, 0), _grad(phi, tor, 1)])
        if cfg.noise_amp > 0:
            uh = uh + cfg.noise_amp * _band_noise(tor, np.random.default_rng(cfg.seed))
        rho1 = cfg.rho_amp * _gauss(X, Y, c, c, cfg.rho_sigma)
    if cfg.spike_amp > 0:
        # O(1) density excess on an O(eps) disc: bounded energy, residual set of measure ~ eps^2
        sx = c + cfg.spike_shift * tor.L
        rho1 = rho1 + cfg.spike_amp / eps * _gauss(X, Y, sx, c, eps * cfg.spike_width)
    u0 = np.zeros((3,) + grid.shape)
    u0[:2] = uh[..., None]
    if cfg.z_amp > 0:
        if M < 2:
            raise ValueError("an x3-dependent perturbation needs grid.M >= 2")
        prof = np.cos(np.pi * grid.x3 / grid.delta)
        u0[:2] += cfg.z_amp * vort[..., None] * prof
    return IllPreparedData(np.repeat(rho1[..., None], M, axis=-1), u0)


def _grad(f, tor, j):
    return tor.ifft(1j * tor.kd[j] * tor.fft(f))


@dataclass
class RunResult:
    run_id: str
    eps: float
    delta: float
    mu: float
    directory: str
    rows: list
    summary: dict


def run_id_for(eps):
    return f"eps{eps:.6g}"


def _fmt(v):
    if isinstance(v, str):
        return v
    return repr(float(v))


def _write_csv(path, columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _json_dump(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_single(cfg: ExperimentConfig, eps, out_dir=None, progress=None):
    """Run the compressible solver, its limit reference and all diagnostics for one ``eps``.

    Writes ``manifest.json`` (first), ``samples.csv``, ``audit.csv``,
    ``summary.json`` and optional checkpoints into ``out_dir/run_id``.
    """
    t_wall = time.perf_counter()
    eps = float(eps)
    delta, mu = cfg.delta(eps), cfg.viscosity(eps)
    law = GasLaw(cfg.A, cfg.gamma)
    params = Params(eps, delta, mu, law)
    tor = Torus2(cfg.L, cfg.N)
    grid = SlabGrid(tor, delta, cfg.M)
    rid = run_id_for(eps)
    out_dir = out_dir or cfg.out
    rdir = os.path.join(out_dir, rid)
    os.makedirs(rdir, exist_ok=True)

    data = build_data(cfg, eps, grid)
    state0, norms = init_illprepared(data, params, grid)
    manifest = {
        "run_id": rid,
        "config": cfg.as_dict(),
        "eps": eps,
        "delta": delta,
        "mu": mu,
        "initial_data_norms": norms,
        "files": {
            "manifest": "manifest.json",
            "samples": "samples.csv",
            "audit": "audit.csv",
            "summary": "summary.json",
            "checkpoint": "final_state.npz" if cfg.checkpoints else None,
            "reference": "reference_final.npz" if cfg.checkpoints else None,
        },
        "version": __version__,
    }
    _json_dump(os.path.join(rdir, "manifest.json"), manifest)

    # limit reference from the projected averaged data
    u0h_bar = vertical_average(data.u0[:2], grid, ("cos", "cos"))
    v0, grad0 = helmholtz_split(u0h_bar, tor)
    ref_mu = mu if cfg.mode == "fixed_mu" else None
    ref = run_limit(LimitState2(tor, v0), cfg.T, cfg.samples, mu=ref_mu)

    # acoustic part of the test pair, optionally mollified
    rho1_bar = vertical_average(data.rho1, grid)
    if cfg.eta > 0:
        psi0, G0 = mollify(rho1_bar, cfg.eta, tor), mollify(grad0, cfg.eta, tor)
    else:
        psi0, G0 = rho1_bar, grad0
    ac0 = AcousticState(tor, psi0, G0)
    kappa = CutoffKappa(cfg.kappa_out)
    window = (cfg.window_lo, cfg.window_hi)

    rows, audit = [], []
    sample_states = []

    def on_sample(k, st):
        ref_st = ref.states[k]
        G = velocity_gradient(st) if mu > 0 else None
        row = {"run_id": rid, "eps": eps, "delta": delta, "mu": mu, "t": st.t}
        row["energy_total"] = energy_total(st, params)
        row["dissipation"] = dissipation(st, params)
        b = bounds_at(st, params, kappa, G)
        met = metrics_at(st, ref_st.v, eps, law, window, kappa)
        dev, bnd = vertical_poincare(st.u, grid)
        rel = rem = rvisc = float("nan")
        if cfg.rel_energy:
            ac = propagate_exact(ac0, st.t, eps, law.a)
            Vh = tor.fft(ref_st.v)
            dtv_hat = _advection_hat(Vh, tor)
            if ref_mu is not None:
                dtv_hat = dtv_hat - ref_mu * tor.kd2 * Vh
            pair = acoustic_test_pair(ref_st.v, tor.ifft(dtv_hat), ac.psi, ac.G, eps, law, tor)
            rel = relative_energy(st, pair.r, pair.U, params)
            rem = remainder(st, pair.r, pair.U, pair.dtU, pair.dtHr, params, G=G)
            rvisc = relative_viscous(st, pair.U, params, G=G)
        row.update({k2: b[k2] for k2 in ("bound_mom", "bound_r_ess", "bound_rho_res", "bound_res_measure",
                                          "bound_grad", "bound_u_W12")})
        row.update({k2: met[k2] for k2 in ("grad_part_L2K", "sol_metric_L2K", "sqrho_metric_L2K")})
        row.update(rel_energy=rel, poincare_dev=dev, poincare_bound=bnd)
        rows.append(row)
        audit.append({"t": st.t, "rel_energy": rel, "rel_viscous": rvisc, "remainder": rem,
                      "mass": total_mass(st), "rho_dev": met["rho_dev"], "u2_res_scaled": b["u2_res_scaled"]})
        sample_states.append(st)
        if progress:
            progress(rid, k, st.t)

    traj = integrate(state0, params, cfg.T, cfg.samples, cfg.cfl, on_sample=on_sample, keep_states=False)

    _write_csv(os.path.join(rdir, "samples.csv"), CSV_COLUMNS, rows)
    _write_csv(os.path.join(rdir, "audit.csv"), AUDIT_COLUMNS, audit)
    if cfg.checkpoints:
        save_state(os.path.join(rdir, "final_state.npz"), traj.final, params)
        save_planar(os.path.join(rdir, "reference_final.npz"), tor, ref.states[-1].t,
                    v=ref.states[-1].v, pi=ref.states[-1].pi)

    conv = convergence_metrics(sample_states, ref.states, eps, law, window, kappa)
    times = np.array([r["t"] for r in rows])
    summary = {
        "run_id": rid,
        "eps": eps,
        "delta": delta,
        "mu": mu,
        "steps": traj.steps,
        "reference_steps": ref.steps,
        "wall_seconds": time.perf_counter() - t_wall,
        "sol_metric": conv["sol_metric_L2K"],
        "sqrho_metric": conv["sqrho_metric_L2K"],
        "grad_part": conv["grad_part_L2K"],
        "rho_dev": conv["rho_dev"],
        "sup_rho_res": max(r["bound_rho_res"] for r in rows),
        "sup_res_measure": max(r["bound_res_measure"] for r in rows),
        "sup_bound_mom": max(r["bound_mom"] for r in rows),
        "sup_bound_r_ess": max(r["bound_r_ess"] for r in rows),
        "sup_bound_u_W12": max(r["bound_u_W12"] for r in rows),
        "sup_u2_res_scaled": max(a["u2_res_scaled"] for a in audit),
        "int_bound_grad": float(simpson([r["bound_grad"] for r in rows], x=times)),
        "mass_drift": max(abs(a["mass"] - audit[0]["mass"]) for a in audit),
        "poincare_ok": all(r["poincare_dev"] <= r["poincare_bound"] * (1 + 1e-12) + 1e-300 for r in rows),
        "energy_monotone": all(b["energy_total"] <= a["energy_total"] * (1 + 1e-10) for a, b in zip(rows, rows[1:])),
    }
    if cfg.rel_energy:
        rel = np.array([a["rel_energy"] for a in audit])
        summary["rel_energy_0"] = float(rel[0])
        summary["sup_rel_energy"] = float(rel.max())
        lhs = rel[-1] + simpson([a["rel_viscous"] for a in audit], x=times)
        rhs = rel[0] + simpson([a["remainder"] for a in audit], x=times)
        summary["rel_energy_audit"] = {"lhs": float(lhs), "rhs": float(rhs)}
    _json_dump(os.path.join(rdir, "summary.json"), summary)
    return RunResult(rid, eps, delta, mu, rdir, rows, summary)


def _run_one(args):
    cfg, eps, out_dir = args
    return run_single(cfg, eps, out_dir)


def monotone_decreasing(values_by_eps):
    """True when values drop strictly as eps decreases (input ordered by decreasing eps)."""
    v = list(values_by_eps)
    return all(b < a for a, b in zip(v, v[1:]))


def summarize_sweep(cfg: ExperimentConfig, summaries):
    """Aggregate run summaries (ordered by decreasing eps) into fits and pass flags."""
    eps = [s["eps"] for s in summaries]
    out = {"eps": eps, "alpha": theoretical_alpha(cfg.gamma), "mode": cfg.mode, "runs": [s["run_id"] for s in summaries]}
    fits = {}
    for key in ("sol_metric", "sqrho_metric", "grad_part", "sup_rel_energy", "sup_rho_res", "sup_res_measure"):
        vals = [s.get(key) for s in summaries]
        if any(v is None or not np.isfinite(v) or v <= 0 for v in vals) or len(vals) < 3:
            fits[key] = None
            continue
        f = fit_rate(list(zip(eps, vals)))
        fits[key] = {"slope": f.slope, "intercept": f.intercept, "residual": f.residual}
    out["fits"] = fits
    flags = {
        "sol_metric_monotone": monotone_decreasing(s["sol_metric"] for s in summaries),
        "grad_part_monotone": monotone_decreasing(s["grad_part"] for s in summaries),
        "poincare_ok": all(s["poincare_ok"] for s in summaries),
    }
    if "sup_rel_energy" in summaries[0]:
        flags["rel_energy_monotone"] = monotone_decreasing(s["sup_rel_energy"] for s in summaries)
        fr = fits.get("sup_rel_energy")
        flags["rel_energy_rate_ok"] = bool(fr and fr["slope"] >= out["alpha"] - 0.05)
    fr = fits.get("sup_rho_res")
    flags["residual_rate_ok"] = bool(fr and fr["slope"] >= 1.7)
    out["flags"] = flags
    out["uniform"] = {
        key: max(s[key] for s in summaries)
        for key in ("sup_bound_mom", "sup_bound_r_ess", "sup_bound_u_W12", "int_bound_grad", "sup_u2_res_scaled")
    }
    return out


def run_sweep(cfg: ExperimentConfig, out_dir=None, threads=1):
    """Run every eps independently and write ``sweep_summary.json`` and ``sweep.csv``.

    A failing run marks the sweep partial; completed runs are kept.
    """
    out_dir = out_dir or cfg.out
    os.makedirs(out_dir, exist_ok=True)
    if len(cfg.eps) < 3:
        raise ValueError("a sweep needs at least three eps values")
    jobs = [(cfg, e, out_dir) for e in cfg.eps]
    results, errors = {}, {}
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            futs = {job[1]: ex.submit(_run_one, job) for job in jobs}
            for e, fut in futs.items():
                try:
                    results[e] = fut.result()
                except Exception as exc:  # noqa: BLE001 - recorded in the summary
                    log.error("run eps=%g failed: %s", e, exc)
                    errors[e] = repr(exc)
    else:
        for job in jobs:
            try:
                results[job[1]] = _run_one(job)
            except Exception as exc:  # noqa: BLE001
                log.error("run eps=%g failed: %s", job[1], exc)
                errors[job[1]] = repr(exc)
    done = [results[e] for e in cfg.eps if e in results]
    summaries = [r.summary for r in done]
    summary = summarize_sweep(cfg, summaries) if len(summaries) >= 1 else {}
    summary["partial"] = bool(errors)
    summary["errors"] = {run_id_for(e): msg for e, msg in errors.items()}
    _json_dump(os.path.join(out_dir, "sweep_summary.json"), summary)
    keys = ("run_id", "eps", "delta", "mu", "sol_metric", "sqrho_metric", "grad_part", "rho_dev",
            "sup_rel_energy", "sup_rho_res", "sup_res_measure", "steps")
    rows = [{k: s.get(k, float("nan")) for k in keys} for s in summaries]
    _write_csv(os.path.join(out_dir, "sweep.csv"), keys, rows)
    return summary, done


def read_samples(path):
    with open(path, encoding="utf-8") as fh:
        rdr = csv.DictReader(fh)
        return [{k: (v if k == "run_id" else float(v)) for k, v in row.items()} for row in rdr]
