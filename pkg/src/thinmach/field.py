"""Periodic geometry, spectral operators and norms.

Horizontal directions live on a periodic square torus of side ``L`` with
``N`` collocation points per axis.  A slab adds a vertical layer
``(0, delta)`` resolved by ``M`` cell-centred points; scalars and the
horizontal velocity expand in cosines, the vertical velocity in sines,
which encodes the complete-slip walls.

Arrays use a leading component axis for vector fields:
``(2, N, N)`` on the torus and ``(3, N, N, M)`` on the slab.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft
from scipy.integrate import trapezoid

from .errors import GridMismatchError

DEFAULT_SIDE = 2 * np.pi * 8


def smooth_cutoff(z):
    """Smooth step from 1 (z <= 0) to 0 (z >= 1), ``exp(1 - 1/(1 - z^2))`` between."""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    out[z <= 0] = 1.0
    inside = (z > 0) & (z < 1)
    zi = z[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - zi * zi))
    return out


@dataclass(frozen=True)
class Torus2:
    """Periodic square ``[0, L)^2`` with ``N`` points per axis."""

    L: float = DEFAULT_SIDE
    N: int = 64

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("side length must be positive")
        if self.N < 4 or self.N % 2:
            raise ValueError("N must be an even integer >= 4")

    @property
    def h(self):
        return self.L / self.N

    @property
    def cell_area(self):
        return self.h * self.h

    @property
    def shape(self):
        return (self.N, self.N)

    @cached_property
    def x(self):
        return np.arange(self.N) * self.h

    @cached_property
    def mesh(self):
        """Coordinate arrays ``(X1, X2)`` with ``indexing='ij'``."""
        return np.meshgrid(self.x, self.x, indexing="ij")

    @cached_property
    def _ints(self):
        n1 = np.fft.fftfreq(self.N, 1.0 / self.N)
        n2 = np.fft.rfftfreq(self.N, 1.0 / self.N)
        return n1[:, None], n2[None, :]

    @cached_property
    def k(self):
        """Wavevector components on the rfft2 layout, shape ``(2, N, N//2+1)``."""
        n1, n2 = self._ints
        k0 = 2 * np.pi / self.L
        return np.stack(np.broadcast_arrays(k0 * n1, k0 * n2)).astype(float)

    @cached_property
    def kd(self):
        """Wavevector used for first derivatives (Nyquist entries zeroed)."""
        kd = self.k.copy()
        n1, n2 = self._ints
        nyq = self.N // 2
        kd[0][np.broadcast_to(np.abs(n1) == nyq, kd[0].shape)] = 0.0
        kd[1][np.broadcast_to(np.abs(n2) == nyq, kd[1].shape)] = 0.0
        return kd

    @cached_property
    def k2(self):
        return self.k[0] ** 2 + self.k[1] ** 2

    @cached_property
    def kabs(self):
        return np.sqrt(self.k2)

    @cached_property
    def kd2(self):
        return self.kd[0] ** 2 + self.kd[1] ** 2

    @cached_property
    def dealias(self):
        """2/3-rule mask on the rfft2 layout."""
        n1, n2 = self._ints
        keep = (np.abs(n1) < self.N / 3) & (np.abs(n2) < self.N / 3)
        return keep

    @property
    def k_max(self):
        """Largest retained wavenumber magnitude (corner of the 2/3 box)."""
        k0 = 2 * np.pi / self.L
        nmax = int(np.ceil(self.N / 3)) - 1
        return k0 * nmax * np.sqrt(2.0)

    def fft(self, f):
        return sfft.rfft2(f, axes=(-2, -1))

    def ifft(self, F):
        return sfft.irfft2(F, s=self.shape, axes=(-2, -1))

    def check(self, f, ncomp=None):
        """Raise unless ``f`` has the sample layout of this torus."""
        f = np.asarray(f)
        if f.shape[-2:] != self.shape:
            raise GridMismatchError(f"field shape {f.shape} does not match torus {self.shape}")
        if ncomp is not None and (f.ndim != 3 or f.shape[0] != ncomp):
            raise GridMismatchError(f"expected {ncomp}-component field, got shape {f.shape}")
        return f

    def integrate(self, f):
        """Collocation quadrature over the torus (exact for resolved trigonometric data)."""
        return np.sum(f, axis=(-2, -1)) * self.cell_area


@dataclass(frozen=True)
class SlabGrid:
    """Torus extruded by a layer of thickness ``delta`` with ``M`` vertical points."""

    horizontal: Torus2
    delta: float = 1.0
    M: int = 8

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError("thickness must lie in (0, 1]")
        if self.M < 1:
            raise ValueError("need at least one vertical mode")

    @property
    def shape(self):
        return self.horizontal.shape + (self.M,)

    @cached_property
    def x3(self):
        return (np.arange(self.M) + 0.5) * self.delta / self.M

    @cached_property
    def kz(self):
        """Vertical wavenumbers ``m*pi/delta`` for cosine modes ``m = 0..M-1``."""
        return np.arange(self.M) * np.pi / self.delta

    @cached_property
    def kz_sin(self):
        """Vertical wavenumbers for sine modes ``m = 1..M`` (stored at index ``m-1``)."""
        return np.arange(1, self.M + 1) * np.pi / self.delta

    @cached_property
    def dealias_cos(self):
        return 3 * np.arange(self.M) < 2 * self.M

    @cached_property
    def dealias_sin(self):
        return 3 * np.arange(1, self.M + 1) < 2 * self.M

    def check(self, f, ncomp=None):
        f = np.asarray(f)
        if f.shape[-3:] != self.shape:
            raise GridMismatchError(f"field shape {f.shape} does not match slab {self.shape}")
        if ncomp is not None and (f.ndim != 4 or f.shape[0] != ncomp):
            raise GridMismatchError(f"expected {ncomp}-component slab field, got shape {f.shape}")
        return f

    # vertical transforms: physical values <-> mode amplitudes

    def vcoef(self, f, parity="cos"):
        M = self.M
        if parity == "cos":
            a = sfft.dct(f, type=2, axis=-1) / M
            a[..., 0] *= 0.5
        else:
            a = sfft.dst(f, type=2, axis=-1) / M
            a[..., -1] *= 0.5
        return a

    def vval(self, a, parity="cos"):
        M = self.M
        y = a * M
        if parity == "cos":
            y[..., 0] *= 2.0
            return sfft.idct(y, type=2, axis=-1)
        y[..., -1] *= 2.0
        return sfft.idst(y, type=2, axis=-1)

    def to_spectral(self, f, parity="cos"):
        """Horizontal rfft2 plus vertical cosine/sine amplitudes."""
        return self.vcoef(sfft.rfft2(f, axes=(-3, -2)), parity)

    def from_spectral(self, F, parity="cos"):
        g = self.vval(F, parity)
        return sfft.irfft2(g, s=self.horizontal.shape, axes=(-3, -2))

    def d3_spectral(self, F, parity="cos"):
        """Vertical derivative in mode space; returns (coefficients, new parity)."""
        out = np.zeros_like(F)
        if parity == "cos":
            # cos(m pi z/d)' = -(m pi/d) sin(m pi z/d); sine mode m sits at index m-1
            out[..., :-1] = -self.kz[1:] * F[..., 1:]
            return out, "sin"
        # sin(m pi z/d)' = (m pi/d) cos(m pi z/d); cosine mode M is invisible on the nodes
        out[..., 1:] = self.kz_sin[:-1] * F[..., :-1]
        return out, "cos"

    def dealias_mask(self, parity="cos"):
        v = self.dealias_cos if parity == "cos" else self.dealias_sin
        return self.horizontal.dealias[..., None] & v

    def average(self, f):
        """Vertical mean of a cosine-type field on the nodes."""
        return np.mean(f, axis=-1)

    def integrate_mean(self, f):
        """``(1/delta) * integral`` over the slab for cosine-compatible integrands."""
        return self.horizontal.integrate(np.mean(f, axis=-1))


# horizontal differential operators


def grad_h(f, grid: Torus2):
    """Spectral gradient of a scalar field, shape ``(2, N, N)``."""
    grid.check(f)
    F = grid.fft(f)
    return grid.ifft(1j * grid.kd * F[None])


def div_h(v, grid: Torus2):
    grid.check(v, 2)
    V = grid.fft(v)
    return grid.ifft(1j * (grid.kd[0] * V[0] + grid.kd[1] * V[1]))


def curl_h(v, grid: Torus2):
    """Scalar vorticity ``d1 v2 - d2 v1``."""
    grid.check(v, 2)
    V = grid.fft(v)
    return grid.ifft(1j * (grid.kd[0] * V[1] - grid.kd[1] * V[0]))


def laplace_h(f, grid: Torus2):
    grid.check(f)
    return grid.ifft(-grid.k2 * grid.fft(f))


def grad_tensor(v, grid: Torus2):
    """``G[i, j] = d_j v_i`` for a 2-vector field."""
    grid.check(v, 2)
    V = grid.fft(v)
    return grid.ifft(1j * grid.kd[None, :] * V[:, None])


def helmholtz_split(v, grid: Torus2):
    """Split ``v`` into solenoidal and gradient parts; the mean stays solenoidal."""
    grid.check(v, 2)
    V = grid.fft(v)
    kd, kd2 = grid.kd, grid.kd2
    with np.errstate(invalid="ignore", divide="ignore"):
        proj = np.where(kd2 > 0, (kd[0] * V[0] + kd[1] * V[1]) / np.where(kd2 > 0, kd2, 1.0), 0.0)
    G = kd * proj[None]
    grad_part = grid.ifft(G)
    sol = grid.ifft(V - G)
    return sol, grad_part


def potential_of_gradient(g, grid: Torus2):
    """Mean-zero potential ``Phi`` with ``grad Phi`` equal to the gradient part of ``g``."""
    grid.check(g, 2)
    G = grid.fft(g)
    kd, kd2 = grid.kd, grid.kd2
    safe = np.where(kd2 > 0, kd2, 1.0)
    P = np.where(kd2 > 0, -1j * (kd[0] * G[0] + kd[1] * G[1]) / safe, 0.0)
    return grid.ifft(P)


def inverse_laplace(f, grid: Torus2):
    """Mean-zero solution of ``Lap u = f - mean(f)``."""
    grid.check(f)
    F = grid.fft(f)
    safe = np.where(grid.k2 > 0, grid.k2, 1.0)
    return grid.ifft(np.where(grid.k2 > 0, -F / safe, 0.0))


def mollifier_symbol(eta, grid: Torus2):
    return smooth_cutoff(eta * grid.kabs - 1.0)


def mollify(f, eta, grid: Torus2):
    """Fourier multiplier ``chi(eta |k|)``: modes with ``eta|k| <= 1`` pass, ``>= 2`` vanish."""
    if not 0 < eta < 1:
        raise ValueError("mollifier scale eta must lie in (0, 1)")
    grid.check(f)
    return grid.ifft(mollifier_symbol(eta, grid) * grid.fft(f))


def vertical_average(f, grid: SlabGrid, parity=None):
    """Exact ``(1/delta) int_0^delta f dx3``.

    Cosine fields average to their zeroth coefficient.  Sine fields use the
    exact integral of each mode, ``(1 - (-1)^m) / (m pi)``.  For a 3-vector
    the default parities are ``(cos, cos, sin)``.
    """
    f = grid.check(f)
    if parity is None:
        parity = ("cos", "cos", "sin") if f.ndim == 4 and f.shape[0] == 3 else "cos"
    if isinstance(parity, (tuple, list)):
        return np.stack([vertical_average(fi, grid, p) for fi, p in zip(f, parity)])
    if parity == "cos":
        return np.mean(f, axis=-1)
    b = grid.vcoef(f, "sin")
    m = np.arange(1, grid.M + 1)
    w = (1.0 - (-1.0) ** m) / (m * np.pi)
    return b @ w


def slab_gradient(f, grid: SlabGrid, parity="cos"):
    """Full gradient ``(d1 f, d2 f, d3 f)`` of a slab scalar; ``d3 f`` has the opposite parity."""
    grid.check(f)
    tor = grid.horizontal
    F = sfft.rfft2(f, axes=(-3, -2))
    kd = tor.kd[..., None]
    d1 = sfft.irfft2(1j * kd[0] * F, s=tor.shape, axes=(-3, -2))
    d2 = sfft.irfft2(1j * kd[1] * F, s=tor.shape, axes=(-3, -2))
    a = grid.vcoef(f, parity)
    da, new = grid.d3_spectral(a, parity)
    d3 = grid.vval(da, new)
    return np.stack([d1, d2, d3])


def lift(f2, grid: SlabGrid):
    """Extend a horizontal field constantly in ``x3``."""
    grid.horizontal.check(f2)
    return np.repeat(np.asarray(f2)[..., None], grid.M, axis=-1)


# norms


@dataclass(frozen=True)
class MixedNormSpec:
    """Exponents of ``L^q_t(W^{k,p}_x)``."""

    p: float = 2.0
    q: float = 2.0
    k: int = 0

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1):
            raise ValueError("exponents must be >= 1")
        if self.k < 0:
            raise ValueError("Sobolev order must be nonnegative")


def _magnitude(f):
    f = np.asarray(f)
    return np.abs(f) if f.ndim == 2 else np.sqrt(np.sum(f * f, axis=tuple(range(f.ndim - 2))))


def norm_lp(f, p, grid: Torus2):
    """Collocation ``L^p`` norm on the torus; vector fields use the Euclidean magnitude."""
    grid.check(f)
    a = _magnitude(f)
    if np.isinf(p):
        return float(a.max())
    return float(grid.integrate(a**p) ** (1.0 / p))


def norm_sobolev(f, k, grid: Torus2, p=2.0):
    """``W^{k,p}`` norm.  For ``p = 2`` the weight ``(1 + |k|^2)^{k/2}`` is applied in Fourier space."""
    grid.check(f)
    f = np.asarray(f)
    if p == 2:
        F = grid.fft(f)
        w = (1.0 + grid.k2) ** k
        # rfft layout: interior columns stand for two conjugate modes
        mult = np.full(grid.k2.shape, 2.0)
        mult[:, 0] = 1.0
        mult[:, -1] = 1.0
        s = np.sum(mult * w * np.abs(F) ** 2, axis=(-2, -1))
        s = np.sum(s) if np.ndim(s) else s
        return float(np.sqrt(s * grid.cell_area / grid.N**2))
    total = norm_lp(f, p, grid)
    deriv = f
    for _ in range(int(k)):
        comps = deriv.reshape((-1,) + grid.shape)
        deriv = np.stack([grad_h(c, grid) for c in comps]).reshape((-1,) + grid.shape)
        total += norm_lp(deriv, p, grid)
    return float(total)


def time_lq(values, q, times):
    """``L^q`` norm in time of sampled nonnegative values (composite trapezoid)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty trajectory")
    if np.isinf(q):
        return float(values.max())
    times = np.asarray(times, dtype=float)
    if values.size == 1:
        return 0.0
    return float(trapezoid(values**q, times) ** (1.0 / q))


def mixed_norm(traj, spec: MixedNormSpec, grid: Torus2, times=None, dt=None):
    """``L^q((t0, tn); W^{k,p})`` norm of a uniformly sampled trajectory."""
    traj = list(traj)
    if not traj:
        raise ValueError("empty trajectory")
    if times is None:
        if dt is None:
            raise ValueError("need sample times or a time step")
        times = np.arange(len(traj)) * dt
    if spec.k == 0:
        vals = [norm_lp(f, spec.p, grid) for f in traj]
    else:
        vals = [norm_sobolev(f, spec.k, grid, spec.p) for f in traj]
    return time_lq(vals, spec.q, times)
