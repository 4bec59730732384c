"""Figures for runs and sweeps, rendered to PNG with the Agg backend."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_run(rows, path):
    """Energy, relative energy and the limit metrics against time for one run."""
    t = np.array([r["t"] for r in rows])
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.4))
    ax = axes[0]
    ax.plot(t, [r["energy_total"] for r in rows], "k-", label="energy")
    rel = np.array([r["rel_energy"] for r in rows], dtype=float)
    if np.all(np.isfinite(rel)):
        ax.plot(t, rel, "C3--", label="relative energy")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    ax = axes[1]
    for key, lab in (("sol_metric_L2K", r"$\|\bar u-v\|_{L^2(K)}$"), ("grad_part_L2K", r"$\|H^\perp \bar m\|_{L^2(K)}$")):
        ax.plot(t, [r[key] for r in rows], label=lab)
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    ax = axes[2]
    ax.plot(t, [r["poincare_dev"] for r in rows], label="Poincare deviation")
    ax.plot(t, [r["poincare_bound"] for r in rows], "--", label="bound")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    fig.suptitle(f"{rows[0]['run_id']}  (delta={rows[0]['delta']:.4g}, mu={rows[0]['mu']:.4g})", fontsize=9)
    return _save(fig, path)


def plot_sweep(summary, run_summaries, path):
    """Log-log view of the sweep quantities with their fitted slopes."""
    eps = np.array([s["eps"] for s in run_summaries])
    keys = [k for k in ("sol_metric", "grad_part", "sup_rel_energy", "sup_rho_res") if k in run_summaries[0]]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for i, key in enumerate(keys):
        vals = np.array([s[key] for s in run_summaries], dtype=float)
        ok = np.isfinite(vals) & (vals > 0)
        if not ok.any():
            continue
        fit = summary.get("fits", {}).get(key)
        lab = key if fit is None else f"{key} (slope {fit['slope']:.2f})"
        ax.loglog(eps[ok], vals[ok], "o-", color=f"C{i}", label=lab)
    ax.set_xlabel(r"$\varepsilon$")
    ax.legend(fontsize=7)
    ax.set_title(f"mode {summary.get('mode')}, alpha={summary.get('alpha', float('nan')):.3f}", fontsize=9)
    return _save(fig, path)


def plot_scaling(rows, slope, path):
    eps = np.array([r.eps for r in rows])
    vals = np.array([r.norm for r in rows])
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.loglog(eps, vals, "o-", label=f"mixed norm (slope {slope:.3f})")
    ax.loglog(eps, vals[0] * (eps / eps[0]) ** 0.125, "k:", label=r"$\varepsilon^{1/8}$")
    ax.set_xlabel(r"$\varepsilon$")
    ax.legend(fontsize=8)
    return _save(fig, path)


def figure_paths(directory, *names):
    os.makedirs(directory, exist_ok=True)
    return [os.path.join(directory, n) for n in names]
