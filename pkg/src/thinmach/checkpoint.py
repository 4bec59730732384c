"""Self-describing ``.npz`` checkpoints for slab and planar states.

Physical samples are stored alongside their spectral coefficients; reload
uses the physical samples so the round trip is bit-exact.
"""

from __future__ import annotations

import json

import numpy as np

from .cns3d import FluidState3, Params
from .field import SlabGrid, Torus2
from .thermo import GasLaw

FORMAT_VERSION = 1


def save_state(path, state: FluidState3, params: Params):
    g = state.grid
    meta = {
        "format": "thinmach-slab",
        "version": FORMAT_VERSION,
        "L": g.horizontal.L,
        "N": g.horizontal.N,
        "delta": g.delta,
        "M": g.M,
        "t": state.t,
        "eps": params.eps,
        "mu": params.mu,
        "A": params.law.A,
        "gamma": params.law.gamma,
    }
    np.savez(
        path,
        meta=np.array(json.dumps(meta)),
        rho=state.rho,
        m=state.m,
        rho_hat=g.to_spectral(state.rho, "cos"),
        m_hat_h=g.to_spectral(state.m[:2], "cos"),
        m_hat_3=g.to_spectral(state.m[2], "sin"),
    )


def load_state(path):
    """Return ``(state, params)`` from a checkpoint written by :func:`save_state`."""
    with np.load(path) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("format") != "thinmach-slab":
            raise ValueError(f"{path}: not a slab checkpoint")
        grid = SlabGrid(Torus2(meta["L"], meta["N"]), meta["delta"], meta["M"])
        params = Params(meta["eps"], meta["delta"], meta["mu"], GasLaw(meta["A"], meta["gamma"]))
        state = FluidState3(grid, z["rho"].copy(), z["m"].copy(), meta["t"])
    return state, params


def save_planar(path, grid: Torus2, t, **fields):
    meta = {"format": "thinmach-planar", "version": FORMAT_VERSION, "L": grid.L, "N": grid.N, "t": t}
    np.savez(path, meta=np.array(json.dumps(meta)), **fields)


def load_planar(path):
    with np.load(path) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("format") != "thinmach-planar":
            raise ValueError(f"{path}: not a planar checkpoint")
        fields = {k: z[k].copy() for k in z.files if k != "meta"}
    return Torus2(meta["L"], meta["N"]), meta["t"], fields
