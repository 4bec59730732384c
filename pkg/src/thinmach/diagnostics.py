"""Measurements over solver output: averaged system, uniform bounds,
relative energy and its remainder, convergence metrics and rate fits."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson, trapezoid

from .cns3d import FluidState3, Params, velocity_gradient
from .errors import AdmissibilityError, GridMismatchError
from .field import SlabGrid, Torus2, grad_h, helmholtz_split, lift, vertical_average
from .thermo import (
    CutoffKappa,
    GasLaw,
    ess_res_split,
    pressure,
    pressure_potential_d1,
    pressure_potential_d2,
    rel_entropy,
)


@dataclass(frozen=True, eq=False)
class AveragedMomentum:
    mbar: np.ndarray
    r: np.ndarray


def averaged_fields(state: FluidState3, eps):
    """``mbar = avg(rho u_h)`` and ``r = (avg(rho) - 1)/eps``."""
    g = state.grid
    mbar = vertical_average(state.m[:2], g, ("cos", "cos"))
    r = (vertical_average(state.rho, g) - 1.0) / eps
    return AveragedMomentum(mbar, r)


# weak form of the averaged system


@dataclass
class WeakTest:
    """Space-time test pair evaluated on demand.

    Each callable takes ``t`` and returns samples on the torus: ``phi`` and
    ``dphi`` scalars, ``vec`` and ``dvec`` 2-vectors.
    """

    phi: callable
    dphi: callable
    vec: callable
    dvec: callable


def _seam_check(f, tol=1e-10):
    edge = max(np.abs(f[..., 0, :]).max(), np.abs(f[..., :, 0]).max())
    if edge > tol * max(np.abs(f).max(), 1e-300):
        warnings.warn("test function support touches the torus seam", RuntimeWarning)


def averaged_flux(state: FluidState3, params: Params):
    """``f = avg(rho u_h (x) u_h) - mu S2(grad ubar_h) + eps^-2 (pbar - a^2 (rhobar - 1) - p(1)) I``."""
    g = state.grid
    tor = g.horizontal
    law = params.law
    u = state.u
    conv = np.empty((2, 2) + tor.shape)
    for i in range(2):
        for j in range(2):
            conv[i, j] = vertical_average(state.m[i] * u[j], g)
    ubar = vertical_average(u[:2], g, ("cos", "cos"))
    G = np.stack([grad_h(ubar[i], tor) for i in range(2)])
    S = G + np.swapaxes(G, 0, 1)
    div = G[0, 0] + G[1, 1]
    pbar = vertical_average(pressure(state.rho, law), g)
    rbar = vertical_average(state.rho, g)
    press = (pbar - law.a2 * (rbar - 1.0) - law.A) / params.eps**2
    f = conv - params.mu * S
    for i in range(2):
        f[i, i] += params.mu * 2.0 / 3.0 * div + press
    return f


def averaged_system_residual(states, times, params: Params, test: WeakTest):
    """Residuals of the weak averaged continuity and momentum equations.

    Continuity: ``int int (eps r phi_t + mbar . grad phi) + eps int r phi |_0 - eps int r phi |_T``.
    Momentum: ``int int (eps mbar . phi_t + a^2 r div phi + eps f : grad phi) + boundary terms``.
    Time integrals use composite Simpson, so ``times`` must be uniform with an odd count.
    """
    if len(states) != len(times):
        raise GridMismatchError("states and times differ in length")
    eps, a2 = params.eps, params.law.a2
    tor = states[0].grid.horizontal
    c_rows, m_rows = [], []
    for st, t in zip(states, times):
        phi, dphi, vec, dvec = test.phi(t), test.dphi(t), test.vec(t), test.dvec(t)
        _seam_check(phi)
        _seam_check(vec)
        av = averaged_fields(st, eps)
        gphi = grad_h(phi, tor)
        c_rows.append(tor.integrate(eps * av.r * dphi + np.sum(av.mbar * gphi, axis=0)))
        gvec = np.stack([grad_h(vec[i], tor) for i in range(2)])
        f = averaged_flux(st, params)
        div = gvec[0, 0] + gvec[1, 1]
        integrand = eps * np.sum(av.mbar * dvec, axis=0) + a2 * av.r * div + eps * np.einsum("ij...,ij...->...", f, gvec)
        m_rows.append(tor.integrate(integrand))
    times = np.asarray(times, dtype=float)
    if len(times) > 2 and len(times) % 2 == 1:
        quad = lambda y: simpson(y, x=times)  # noqa: E731
    else:
        quad = lambda y: trapezoid(y, x=times)  # noqa: E731
    a0, aT = averaged_fields(states[0], eps), averaged_fields(states[-1], eps)
    t0, tT = times[0], times[-1]
    cont = quad(np.array(c_rows)) + eps * tor.integrate(a0.r * test.phi(t0)) - eps * tor.integrate(aT.r * test.phi(tT))
    mom = (
        quad(np.array(m_rows))
        + eps * tor.integrate(np.sum(a0.mbar * test.vec(t0), axis=0))
        - eps * tor.integrate(np.sum(aT.mbar * test.vec(tT), axis=0))
    )
    return abs(float(cont)), abs(float(mom))


# uniform bounds


BOUND_KEYS = (
    "bound_mom",
    "bound_r_ess",
    "bound_rho_res",
    "bound_res_measure",
    "bound_grad",
    "bound_u_W12",
    "u2_res_scaled",
)


@dataclass
class BoundsReport:
    times: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def column(self, key):
        return np.array([row[key] for row in self.rows])


def bounds_at(state: FluidState3, params: Params, kappa: CutoffKappa | None = None, G=None):
    """Per-sample values of the quantities controlled by the energy inequality."""
    kappa = kappa or CutoffKappa()
    g = state.grid
    tor = g.horizontal
    eps, law = params.eps, params.law
    rho, u = state.rho, state.u
    rho_u2 = np.sum(state.m * u, axis=0)
    ess_r, _ = ess_res_split((rho - 1.0) / eps, rho, kappa)
    _, res_rho = ess_res_split(rho, rho, kappa)
    _, res_one = ess_res_split(np.ones_like(rho), rho, kappa)
    _, res_u2 = ess_res_split(rho_u2, rho, kappa)
    if params.mu > 0:
        if G is None:
            G = velocity_gradient(state)
        S = G + np.swapaxes(G, 0, 1)
        tr = G[0, 0] + G[1, 1] + G[2, 2]
        for i in range(3):
            S[i, i] -= 2.0 / 3.0 * tr
        grad = params.mu * g.integrate_mean(np.einsum("ij...,ij...->...", S, G))
    else:
        grad = 0.0
    ubar = vertical_average(u[:2], g, ("cos", "cos"))
    Gu = np.stack([grad_h(ubar[i], tor) for i in range(2)])
    w12 = np.sqrt(tor.integrate(np.sum(ubar**2, axis=0) + np.sum(Gu**2, axis=(0, 1))))
    return {
        "bound_mom": float(g.integrate_mean(rho_u2)),
        "bound_r_ess": float(np.sqrt(g.integrate_mean(ess_r**2))),
        "bound_rho_res": float(g.integrate_mean(res_rho)),
        "bound_res_measure": float(g.integrate_mean(res_one)),
        "bound_grad": float(grad),
        "bound_u_W12": float(w12),
        "u2_res_scaled": float(g.integrate_mean(res_u2) * eps ** (-min(1.0, 2.0 / law.gamma))),
    }


def uniform_bounds(states, params: Params, kappa=None):
    rep = BoundsReport()
    for st in states:
        rep.times.append(st.t)
        rep.rows.append(bounds_at(st, params, kappa))
    return rep


# vertical Poincare


def _vertical_energy(a, parity):
    """Per-column ``(1/delta) int f^2 dx3`` from vertical amplitudes, excluding the mean."""
    if parity == "cos":
        return 0.5 * np.sum(a[..., 1:] ** 2, axis=-1)
    return 0.5 * np.sum(a**2, axis=-1)


def vertical_poincare(u, grid: SlabGrid):
    """``(deviation, bound)`` for the horizontal velocity.

    deviation = (1/delta) int |u_h - ubar_h|^2,  bound = delta^2 (1/delta) int |d3 u_h|^2.
    Computed exactly from the cosine amplitudes; ``deviation <= bound / pi^2``.
    """
    grid.check(u, 3)
    tor = grid.horizontal
    dev = 0.0
    d3e = 0.0
    for i in range(2):
        a = grid.vcoef(u[i], "cos")
        dev += tor.integrate(_vertical_energy(a, "cos"))
        d3e += tor.integrate(0.5 * np.sum((grid.kz[1:] * a[..., 1:]) ** 2, axis=-1))
    return float(dev), float(grid.delta**2 * d3e)


# relative energy


def _slab_broadcast(f, grid: SlabGrid, ncomp=None):
    f = np.asarray(f, dtype=float)
    hshape = grid.horizontal.shape
    if ncomp is None:
        if f.shape == hshape:
            return f[..., None]
        grid.check(f)
        return f
    if f.shape == (ncomp,) + hshape:
        return f[..., None]
    grid.check(f, ncomp)
    return f


def _admissible(r, U):
    if np.any(np.asarray(r) <= 0):
        raise ValueError(f"test density must be positive (min {np.min(r):.3e})")
    if U.shape[0] != 3:
        raise AdmissibilityError("test velocity must have three components")
    if np.any(U[2] != 0):
        raise AdmissibilityError("test velocity must have zero vertical component")


def relative_energy(state: FluidState3, r, U, params: Params):
    """``(1/delta) int [rho |u - U|^2 / 2 + E(rho, r) / eps^2]``.

    ``r`` and ``U`` may be horizontal fields (extended constantly in ``x3``)
    or slab fields.
    """
    g = state.grid
    r = _slab_broadcast(r, g)
    U = _slab_broadcast(U, g, 3)
    _admissible(r, U)
    w = state.u - U
    dens = 0.5 * state.rho * np.sum(w**2, axis=0) + rel_entropy(state.rho, r, params.law) / params.eps**2
    return float(g.integrate_mean(dens))


def _planar(U, grid: SlabGrid, ncomp=None):
    """Horizontal representative of an ``x3``-independent field."""
    U = np.asarray(U, dtype=float)
    hshape = grid.horizontal.shape
    want = hshape if ncomp is None else (ncomp,) + hshape
    if U.shape == want:
        return U
    grid.check(U, ncomp)
    if np.abs(U - U[..., :1]).max() > 1e-12 * max(np.abs(U).max(), 1.0):
        raise AdmissibilityError("test functions must be independent of x3")
    return U[..., 0]


def remainder(state: FluidState3, r, U, dtU, dtHr, params: Params, G=None, split=False):
    """Remainder of the relative energy inequality, scaled by ``1/delta``.

        int rho (d_t U + u . grad U) . (U - u)
      + mu int S(grad U) : (grad U - grad u)
      + eps^-2 int [(r - rho) d_t H'(r) - rho u . grad H'(r) - p(rho) div U]

    The test pair is ``x3``-independent with ``U3 = 0``; ``dtU`` and
    ``dtHr = d_t H'(r)`` are supplied by the caller.  ``G`` optionally passes a
    precomputed velocity gradient of the state.  With ``split`` the three
    integrals are returned separately.
    """
    g = state.grid
    tor = g.horizontal
    law, eps, mu = params.law, params.eps, params.mu
    r2 = _planar(r, g)
    U2 = _planar(U, g, 3)
    _admissible(r2, U2)
    dtU2 = _planar(dtU, g, 3)
    dtHr2 = _planar(dtHr, g)
    rho, u = state.rho, state.u

    GU = np.zeros((3, 3) + tor.shape)
    for i in range(2):
        GU[i, :2] = grad_h(U2[i], tor)
    GU3 = GU[..., None]

    adv = dtU2[..., None] + u[0][None] * GU3[:, 0] + u[1][None] * GU3[:, 1]
    I1 = g.integrate_mean(rho * np.sum(adv * (U2[..., None] - u), axis=0))

    if mu > 0:
        if G is None:
            G = velocity_gradient(state)
        divU = GU[0, 0] + GU[1, 1]
        SU = GU + np.swapaxes(GU, 0, 1)
        for i in range(3):
            SU[i, i] -= 2.0 / 3.0 * divU
        I2 = mu * g.integrate_mean(np.einsum("ij...,ij...->...", SU[..., None], GU3 - G))
    else:
        I2 = 0.0

    Hr = pressure_potential_d1(r2, law)
    gH = grad_h(Hr, tor)
    divU = GU[0, 0] + GU[1, 1]
    press = (
        (r2[..., None] - rho) * dtHr2[..., None]
        - rho * (u[0] * gH[0][..., None] + u[1] * gH[1][..., None])
        - pressure(rho, law) * divU[..., None]
    )
    I3 = g.integrate_mean(press) / eps**2
    if split:
        return float(I1), float(I2), float(I3)
    return float(I1 + I2 + I3)


def relative_viscous(state: FluidState3, U, params: Params, G=None):
    """``mu (1/delta) int S(grad u - grad U) : (grad u - grad U)``."""
    if params.mu == 0:
        return 0.0
    g = state.grid
    tor = g.horizontal
    U2 = _planar(U, g, 3)
    if G is None:
        G = velocity_gradient(state)
    D = G.copy()
    for i in range(2):
        D[i, :2] -= grad_h(U2[i], tor)[..., None]
    tr = D[0, 0] + D[1, 1] + D[2, 2]
    S = D + np.swapaxes(D, 0, 1)
    for i in range(3):
        S[i, i] -= 2.0 / 3.0 * tr
    return float(params.mu * g.integrate_mean(np.einsum("ij...,ij...->...", S, D)))


@dataclass(frozen=True, eq=False)
class AdmissiblePair:
    """Test density ``r``, velocity ``U = (U_h, 0)`` and their time derivatives."""

    r: np.ndarray
    U: np.ndarray
    dtU: np.ndarray
    dtHr: np.ndarray


def build_test_functions(v, psi, G, eps, slab: SlabGrid | None = None):
    """``r = 1 + eps psi`` and ``U = (v + G, 0)`` from (mollified) acoustic data.

    Returned horizontally unless ``slab`` is given, in which case both are
    extended constantly in ``x3``.
    """
    psi = np.asarray(psi, dtype=float)
    r = 1.0 + eps * psi
    rmin = float(r.min())
    if not rmin > 0:
        raise AdmissibilityError(f"test density 1 + eps psi not positive (min {rmin:.3e})")
    U = np.zeros((3,) + psi.shape)
    U[:2] = np.asarray(v) + np.asarray(G)
    if slab is not None:
        return lift(r, slab), np.stack([lift(U[i], slab) for i in range(3)])
    return r, U


def acoustic_test_pair(v, dtv, psi, G, eps, law: GasLaw, grid: Torus2):
    """Test pair with analytic time derivatives from the acoustic equations.

    ``d_t G = -(a^2/eps) grad psi`` and ``d_t H'(r) = H''(r) eps d_t psi = -H''(r) div G``.
    ``dtv`` is the limit-solution tendency supplied by the caller.
    """
    r, U = build_test_functions(v, psi, G, eps)
    dtU = np.zeros_like(U)
    dtU[:2] = np.asarray(dtv) - (law.a2 / eps) * grad_h(psi, grid)
    divG = grad_h(G[0], grid)[0] + grad_h(G[1], grid)[1]
    dtHr = -pressure_potential_d2(r, law) * divG
    return AdmissiblePair(r, U, dtU, dtHr)


# convergence metrics


def window_mask(grid: Torus2, window=(0.25, 0.75)):
    lo, hi = window[0] * grid.L, window[1] * grid.L
    X, Y = grid.mesh
    return (X >= lo) & (X < hi) & (Y >= lo) & (Y < hi)


METRIC_KEYS = ("grad_part_L2K", "sol_metric_L2K", "sqrho_metric_L2K", "rho_dev")


def metrics_at(state: FluidState3, v, eps, law: GasLaw, window=(0.25, 0.75), kappa=None):
    """Instantaneous ``L^2(K)`` distances to the limit and the density deviation."""
    g = state.grid
    tor = g.horizontal
    tor.check(v, 2)
    K = window_mask(tor, window)
    u = state.u
    ubar = vertical_average(u, g)
    diff = np.sum((ubar[:2] - v) ** 2, axis=0) + ubar[2] ** 2
    sq = vertical_average(np.sqrt(state.rho)[None] * u[:2], g, ("cos", "cos"))
    av = averaged_fields(state, eps)
    _, grad_part = helmholtz_split(av.mbar, tor)
    rbar = vertical_average(state.rho, g)
    ess, res = ess_res_split(rbar - 1.0, rbar, kappa)
    rho_dev = np.sqrt(tor.integrate(ess**2)) + tor.integrate(np.abs(res) ** law.gamma) ** (1.0 / law.gamma)
    return {
        "grad_part_L2K": float(np.sqrt(tor.integrate(np.where(K, np.sum(grad_part**2, axis=0), 0.0)))),
        "sol_metric_L2K": float(np.sqrt(tor.integrate(np.where(K, diff, 0.0)))),
        "sqrho_metric_L2K": float(np.sqrt(tor.integrate(np.where(K, np.sum((sq - v) ** 2, axis=0), 0.0)))),
        "rho_dev": float(rho_dev),
    }


def convergence_metrics(states, refs, eps, law: GasLaw, window=(0.25, 0.75), kappa=None):
    """Space-time metrics over a run against reference velocities at the same times.

    The three velocity metrics are ``L^2(0,T; L^2(K))`` (trapezoid in time);
    the density deviation is its supremum in time.  Per-sample rows are
    returned under ``"samples"``.
    """
    if len(states) != len(refs):
        raise GridMismatchError("run and reference have different sample counts")
    times = np.array([s.t for s in states])
    ref_times = [getattr(r, "t", None) for r in refs]
    if all(t is not None for t in ref_times) and np.max(np.abs(times - np.array(ref_times))) > 1e-9:
        raise GridMismatchError("run and reference sample times differ")
    rows = [metrics_at(s, getattr(r, "v", r), eps, law, window, kappa) for s, r in zip(states, refs)]
    out = {"samples": rows}
    for key in METRIC_KEYS[:3]:
        vals = np.array([row[key] for row in rows])
        out[key] = float(np.sqrt(trapezoid(vals**2, x=times))) if len(times) > 1 else float(vals[0])
    out["rho_dev"] = float(max(row["rho_dev"] for row in rows))
    return out


# rate fitting


@dataclass(frozen=True)
class RateFit:
    samples: tuple
    slope: float
    intercept: float
    residual: float


def fit_rate(samples):
    """Least-squares slope of ``log value`` against ``log eps``."""
    samples = tuple((float(e), float(v)) for e, v in samples)
    if len(samples) < 3:
        raise ValueError("need at least three samples")
    e = np.array([s[0] for s in samples])
    v = np.array([s[1] for s in samples])
    if np.any(e <= 0) or np.any(v <= 0):
        raise ValueError("eps and values must be positive")
    x, y = np.log(e), np.log(v)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return RateFit(samples, float(coef[0]), float(coef[1]), resid)


def theoretical_alpha(gamma):
    return min(1.0 / 8.0, 1.0 / (4.0 * gamma))
