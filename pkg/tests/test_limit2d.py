import warnings

import numpy as np
import pytest
import sympy as sp

from conftest import band_limited
from thinmach.errors import CFLError, ResolutionError
from thinmach.field import Torus2, div_h, grad_h
from thinmach.limit2d import (
    LimitState2,
    advective_dt,
    biot_savart,
    check_euler_data,
    enstrophy,
    euler2d_step,
    euler_pressure,
    kinetic_energy,
    ns2d_step,
    ns_energy_audit,
    project_initial,
    run_limit,
    vorticity,
)


def tg(g):
    X, Y = g.mesh
    return np.stack([-np.cos(X) * np.sin(Y), np.sin(X) * np.cos(Y)])


def eigen_vortex(g):
    X, Y = g.mesh
    # v = grad_perp psi with psi = sin x sin y
    return np.stack([-np.sin(X) * np.cos(Y), np.cos(X) * np.sin(Y)])


def smooth_solenoidal(g, seed, kcut=2.0):
    rng = np.random.default_rng(seed)
    shape = g.fft(np.zeros(g.shape)).shape
    spec = np.exp(-(g.kabs / kcut) ** 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    spec[0, 0] = 0
    psi = g.ifft(spec)
    psi /= np.abs(psi).max()
    d = grad_h(psi, g)
    return np.stack([-d[1], d[0]])


class TestProjection:
    def test_solenoidal_data_unchanged(self, torus):
        v = tg(torus)
        st, grad = project_initial(v, torus)
        np.testing.assert_allclose(st.v, v, atol=1e-13)
        assert np.abs(grad).max() < 1e-13

    def test_gradient_data_removed(self, torus):
        X, Y = torus.mesh
        u = grad_h(np.sin(X) * np.cos(2 * Y), torus)
        st, grad = project_initial(u, torus)
        assert np.abs(st.v).max() < 1e-13

    def test_components_sum_back(self, torus):
        u = band_limited(torus, np.random.default_rng(0), 2, frac=1.5)
        st, grad = project_initial(u, torus)
        assert np.abs(st.v + grad - u).max() < 1e-12 * np.abs(u).max()


class TestNavierStokes:
    def test_rest(self, torus):
        st = ns2d_step(LimitState2(torus, np.zeros((2,) + torus.shape)), 0.1, 0.05)
        assert np.abs(st.v).max() == 0.0

    def test_taylor_green(self):
        g = Torus2(2 * np.pi, 64)
        mu = 0.05
        tr = run_limit(LimitState2(g, tg(g)), 1.0, 16, mu=mu)
        assert np.abs(tr.states[-1].v - tg(g) * np.exp(-2 * mu)).max() <= 1e-6

    def test_energy_balance_and_divergence(self):
        g = Torus2(2 * np.pi, 64)
        mu = 0.02
        tr = run_limit(LimitState2(g, smooth_solenoidal(g, 1)), 1.0, 32, mu=mu)
        assert ns_energy_audit([s.v for s in tr.states], tr.times, mu, g) <= 1e-6
        for s in tr.states:
            assert np.abs(div_h(s.v, g)).max() <= 1e-10 * np.abs(s.v).max()

    def test_cfl_refusal(self, torus):
        v = 10 * tg(torus)
        with pytest.raises(CFLError):
            ns2d_step(LimitState2(torus, v), 2 * advective_dt(v, torus), 0.01)

    def test_refinement_agreement(self):
        g = Torus2(2 * np.pi, 32)
        s0 = LimitState2(g, smooth_solenoidal(g, 2))
        a = run_limit(s0, 0.5, 4, mu=0.01, dt_max=0.02).states[-1].v
        b = run_limit(s0, 0.5, 4, mu=0.01, dt_max=0.01).states[-1].v
        c = run_limit(s0, 0.5, 4, mu=0.01, dt_max=0.005).states[-1].v
        assert np.abs(b - c).max() < np.abs(a - b).max() < 1e-6


class TestEuler:
    def test_rest(self, torus):
        st = euler2d_step(LimitState2(torus, np.zeros((2,) + torus.shape)), 0.1)
        assert np.abs(st.v).max() == 0.0

    def test_eigen_vortex_is_stationary(self):
        g = Torus2(2 * np.pi, 64)
        v0 = eigen_vortex(g)
        tr = run_limit(LimitState2(g, v0), 1.0, 8)
        assert max(np.abs(s.v - v0).max() for s in tr.states) <= 1e-8

    def test_conservation(self):
        g = Torus2(2 * np.pi, 64)
        s0 = LimitState2(g, smooth_solenoidal(g, 3))
        tr = run_limit(s0, 1.0, 8)
        e0, z0 = kinetic_energy(s0.v, g), enstrophy(s0.v, g)
        for s in tr.states:
            assert abs(kinetic_energy(s.v, g) - e0) <= 1e-8 * e0
            assert abs(enstrophy(s.v, g) - z0) <= 1e-8 * z0

    def test_rough_data_refused(self, torus):
        v = band_limited(torus, np.random.default_rng(4), 2, frac=1.5)
        v, _ = project_initial(v, torus)
        with pytest.raises(ResolutionError):
            check_euler_data(v.v, torus)

    def test_tail_warning(self, torus):
        v, _ = project_initial(band_limited(torus, np.random.default_rng(5), 2, frac=1.5), torus)
        with warnings.catch_warnings(record=True) as rec:
            warnings.simplefilter("always")
            euler2d_step(v, 1e-4, check=False)
        assert any(issubclass(w.category, RuntimeWarning) for w in rec)

    def test_biot_savart_inverts_curl(self, torus):
        v = smooth_solenoidal(torus, 6)
        assert np.abs(biot_savart(vorticity(v, torus), torus) - v).max() < 1e-12


class TestPressure:
    def test_rest(self, torus):
        assert np.abs(euler_pressure(LimitState2(torus, np.zeros((2,) + torus.shape)))).max() == 0.0

    def test_eigen_vortex_closed_form(self):
        x, y = sp.symbols("x y")
        v = (-sp.sin(x) * sp.cos(y), sp.cos(x) * sp.sin(y))
        X = (x, y)
        conv = [sum(v[j] * sp.diff(v[i], X[j]) for j in range(2)) for i in range(2)]
        src = sp.diff(conv[0], x) + sp.diff(conv[1], y)
        pi = (sp.cos(2 * x) + sp.cos(2 * y)) / 4
        assert sp.simplify(-sp.diff(pi, x, 2) - sp.diff(pi, y, 2) - src) == 0
        g = Torus2(2 * np.pi, 32)
        Xn, Yn = g.mesh
        got = euler_pressure(LimitState2(g, eigen_vortex(g)))
        assert np.abs(got - sp.lambdify(X, pi, "numpy")(Xn, Yn)).max() <= 1e-8

    def test_defining_identity(self, torus):
        v = smooth_solenoidal(torus, 7)
        pi = euler_pressure(LimitState2(torus, v))
        G = np.stack([grad_h(c, torus) for c in v])  # G[i, j] = d_j v_i
        conv = np.einsum("j...,ij...->i...", v, G)
        lap = div_h(grad_h(pi, torus), torus)
        assert np.abs(lap + div_h(conv, torus)).max() <= 1e-10 * np.abs(div_h(conv, torus)).max()
        assert abs(pi.mean()) < 1e-14
