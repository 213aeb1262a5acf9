import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdymred.catalog import kdv_soliton, ds_plane_wave
from sdymred.errors import BlowUp, NonUnitSpin, NonZeroMean, UnknownName
from sdymred.fieldio import load_field
from sdymred.fields import Grid2, deriv, inv_deriv_x
from sdymred.frames1p1 import akns_nls_pair, heisenberg_pair, m0_residual_1p1, zero_curvature_residual_1p1
from sdymred.reductions import (DSFields, SpinField2p1, ds_residual, exp_wavefunction,
                                ishimori_residual, kp_lax_residual, kp_residual, miura_u,
                                mkp_residual)
from sdymred.solvers import (SolutionStack, SolveConfig, etdrk4_coefficients, exact_catalog,
                             solve_ds, solve_heisenberg1d, solve_kp, solve_mkp)

SOLITON_GRID = Grid2(256, 8, Lx=40.0)


def kp_stack_residual(stack, alpha):
    g = stack.grid
    m3 = inv_deriv_x(g, deriv(g, stack.values, "y"))
    return kp_residual(stack.values, m3, alpha, g, stack.dt)


def smooth_kp_data(grid, amp, seed=0, modes=3):
    """Band-limited random data whose x-mean is independent of y."""
    rng = np.random.default_rng(seed)
    X, Y = grid.mesh()
    k = np.zeros(grid.shape)
    for mx in range(1, modes + 1):
        for my in range(-modes, modes + 1):
            a, b = rng.normal(size=2) / (mx**2 + my**2)
            ph = 2 * np.pi * (mx * X / grid.Lx + my * Y / grid.Ly)
            k += a * np.cos(ph) + b * np.sin(ph)
    return amp * k / np.max(np.abs(k))


def oblique(grid, c=1):
    """Zero-mean profile of ``x - c y``; mKP keeps this form exactly."""
    X, Y = grid.mesh()
    xi = X - c * Y
    return 0.3 * np.cos(xi) + 0.2 * np.sin(2 * xi + 0.4)


class TestConfig:
    def test_from_text(self):
        cfg = SolveConfig.from_text("""
            # KdV soliton run
            nx = 256
            ny = 8
            Lx = 40
            t_end = 1.0
            dt = 0.001
            dealias = false
        """)
        assert cfg.grid == SOLITON_GRID
        assert cfg.n_steps == 1000 and not cfg.dealias and cfg.scheme == "etd4"

    def test_overrides(self):
        cfg = SolveConfig.from_text("t_end = 1\ndt = 0.1", nx=32)
        assert cfg.grid.nx == 32

    @pytest.mark.parametrize("text", ["dt = 0\nt_end = 1", "dt = 1\nt_end = 0.5",
                                      "dt = 0.1\nt_end = 1\nscheme = euler",
                                      "dt = 0.1\nt_end = 1\nwidth = 3", "dt 0.1",
                                      "dt = 0.1\nt_end = 0.3"])
    def test_rejects_bad_config(self, text):
        with pytest.raises(ValueError):
            SolveConfig.from_text(text)

    def test_stability_bound(self):
        g = Grid2(64, 8)
        with pytest.raises(ValueError, match="stability"):
            solve_kp(kdv_soliton(g, 3.0, x0=np.pi), 1j, SolveConfig(g, 1.0, 0.1))


class TestStack:
    def test_uniform_spacing_required(self):
        g = Grid2(8, 8)
        with pytest.raises(ValueError):
            SolutionStack([0, 0.1, 0.3], np.zeros((3, 8, 8)), g)

    def test_finite_values_required(self):
        g = Grid2(8, 8)
        with pytest.raises(ValueError):
            SolutionStack([0, 1], np.full((2, 8, 8), np.nan), g)

    def test_save_manifest(self, tmp_path):
        g = Grid2(16, 8)
        st_ = solve_kp(smooth_kp_data(g, 1e-2), 1j, SolveConfig(g, 0.05, 0.01))
        path = st_.save(tmp_path, "k")
        man = json.loads(path.read_text())
        assert [s["t"] for s in man["slices"]] == pytest.approx(list(st_.times))
        f = load_field(tmp_path / man["slices"][-1]["files"][0])
        assert np.array_equal(f.values, st_.final)

    def test_save_vector_stack(self, tmp_path):
        g = Grid2(16, 8)
        S = exact_catalog("constant-spin", g)["S"]
        st_ = solve_heisenberg1d(S, SolveConfig(g, 0.05, 0.01))
        man = json.loads(st_.save(tmp_path, "S").read_text())
        assert len(man["slices"][0]["files"]) == 3


class TestETDRK4:
    def test_coefficients_small_L_limit(self):
        # phi functions at L -> 0: Q = h/2, f1 = h/6, f2 = h/6, f3 = h/6
        E, E2, Q, f1, f2, f3 = etdrk4_coefficients(np.array([0.0, 1e-12j]), 0.1)
        assert np.allclose(Q, 0.05) and np.allclose([f1, f2, f3], 0.1 / 6)

    @given(st.floats(-50, 50))
    @settings(max_examples=30, deadline=None)
    def test_linear_scalar_exact(self, lam):
        # u' = i lam u + 1 has u(h) = e^{i lam h} u0 + (e^{i lam h} - 1)/(i lam)
        h, L = 0.1, np.array([1j * lam])
        coeffs = etdrk4_coefficients(L, h)
        from sdymred.solvers import _etdrk4_step
        u1 = _etdrk4_step(np.array([1.0 + 0j]), lambda v: np.ones_like(v), coeffs)
        z = 1j * lam * h
        phi1 = np.expm1(z) / z if abs(z) > 1e-8 else 1 + z / 2
        expected = np.exp(z) + h * phi1
        assert abs(u1[0] - expected) < 1e-12


class TestKP:
    def test_zero_data(self):
        g = Grid2(32, 16)
        st_ = solve_kp(np.zeros(g.shape), 1j, SolveConfig(g, 0.1, 0.01))
        assert np.all(st_.values == 0) and len(st_.times) == 11

    def test_rejects_y_dependent_mean(self):
        g = Grid2(32, 16)
        _, Y = g.mesh()
        with pytest.raises(NonZeroMean):
            solve_kp(0.1 * np.sin(Y), 1j, SolveConfig(g, 0.1, 0.01))

    def test_soliton_translates(self):
        g = SOLITON_GRID
        st_ = solve_kp(kdv_soliton(g, 1.0, x0=15.0), 1j, SolveConfig(g, 1.0, 0.005))
        exact = kdv_soliton(g, 1.0, x0=15.0, t=1.0)
        assert st_.times[-1] == pytest.approx(1.0)
        assert np.max(np.abs(st_.final - exact)) < 1e-4
        assert st_.info["mass_drift"] < 1e-10

    @pytest.mark.parametrize("scheme", ["etd4", "rk4-if"])
    def test_small_random_residual(self, scheme):
        g = Grid2(32, 32)
        st_ = solve_kp(smooth_kp_data(g, 1e-3), 1j, SolveConfig(g, 0.05, 1e-3, scheme=scheme))
        main, constraint = kp_stack_residual(st_, 1j)
        assert main.linf < 1e-5 and constraint.linf < 1e-8

    def test_two_dimensional_residual(self):
        g = Grid2(64, 64)
        st_ = solve_kp(smooth_kp_data(g, 0.5, seed=3), 1j, SolveConfig(g, 0.2, 1e-3))
        main, constraint = kp_stack_residual(st_.window(9), 1j)
        assert main.linf < 1e-4 and constraint.linf < 1e-8
        assert st_.info["mass_drift"] < 1e-10

    def test_grid_convergence(self):
        res = []
        for nx in (128, 256):
            g = Grid2(nx, 8, Lx=40.0)
            st_ = solve_kp(kdv_soliton(g, 1.0, x0=15.0), 1j, SolveConfig(g, 0.02, 1e-3))
            res.append(kp_stack_residual(st_, 1j)[0].linf)
        assert res[0] / res[1] >= 100

    def test_time_convergence(self):
        g = SOLITON_GRID
        k0 = kdv_soliton(g, 1.0, x0=15.0)
        ref = solve_kp(k0, 1j, SolveConfig(g, 1.0, 0.005 / 4)).final
        errs = [np.max(np.abs(solve_kp(k0, 1j, SolveConfig(g, 1.0, dt)).final - ref))
                for dt in (0.01, 0.005)]
        assert errs[0] / errs[1] >= 8

    def test_blowup_carries_partial_stack(self):
        # alpha^2 = i gives the nonlocal symbol a growing real part 3 ky^2 / kx
        g = Grid2(16, 16)
        X, Y = g.mesh()
        k0 = 1e-3 * np.cos(X) * np.cos(3 * Y)
        with pytest.raises(BlowUp) as exc:
            solve_kp(k0, np.exp(0.25j * np.pi), SolveConfig(g, 5.0, 0.01, save_every=5))
        partial = exc.value.partial
        assert isinstance(partial, SolutionStack) and len(partial.times) > 5
        assert np.max(np.abs(partial.final)) <= 1e6


class TestMKPMiura:
    @pytest.mark.parametrize("alpha", [1.0, 1j])
    def test_mkp_residual(self, alpha):
        g = Grid2(64, 64)
        st_ = solve_mkp(oblique(g), alpha, SolveConfig(g, 0.1, 1e-3))
        w = inv_deriv_x(g, deriv(g, st_.values, "y"))
        main, constraint = mkp_residual(st_.values, w, alpha, g, st_.dt)
        assert main.linf < 1e-5 and constraint.linf < 1e-8
        assert st_.info["projected_mean_forcing"] < 1e-12

    @pytest.mark.parametrize("alpha", [1.0, 1j])
    def test_miura_chain(self, alpha):
        g = Grid2(64, 64)
        st_ = solve_mkp(oblique(g), alpha, SolveConfig(g, 0.1, 1e-3))
        k = st_.values
        m3 = inv_deriv_x(g, deriv(g, k, "y"))
        u = miura_u(k, m3, alpha, g)
        mu = inv_deriv_x(g, deriv(g, u, "y"))
        assert kp_residual(u, mu, alpha, g, st_.dt)[0].linf < 1e-4
        psi = exp_wavefunction(k, g)
        assert kp_lax_residual(psi, u, m3, alpha, g)[0].linf < 1e-6


class TestDS:
    def test_zero(self):
        g = Grid2(16, 16)
        st_ = solve_ds(np.zeros(g.shape), 1j, SolveConfig(g, 0.1, 0.01))
        assert np.all(st_.values == 0)

    def test_rejects_hyperbolic_regime(self):
        g = Grid2(16, 16)
        with pytest.raises(ValueError):
            solve_ds(np.zeros(g.shape), 1.0, SolveConfig(g, 0.1, 0.01))

    def test_plane_wave_dispersion(self):
        g = Grid2(32, 32)
        q0, *_ = ds_plane_wave(g, amplitude=0.5, mode=(2, 1))
        st_ = solve_ds(q0, 1j, SolveConfig(g, 0.5, 0.01))
        q_exact, *_ = ds_plane_wave(g, amplitude=0.5, mode=(2, 1), t=0.5)
        assert np.max(np.abs(np.abs(st_.final) - 0.5)) < 1e-6
        phase = np.angle(st_.final / q_exact)
        assert np.max(np.abs(phase)) < 1e-5

    def test_residual_and_power(self):
        g = Grid2(64, 64)
        X, Y = g.mesh()
        q0 = 0.4 * np.exp(1j * X) + 0.3 * np.cos(Y) + 0.2j * np.sin(X + Y)
        st_ = solve_ds(q0, 1j, SolveConfig(g, 0.2, 1e-3))
        w = st_.window(9)
        res = ds_residual(DSFields(w.values, np.conj(w.values), w.aux["v"], alpha=1j), g, w.dt)
        assert max(r.linf for r in res) < 1e-4
        assert st_.info["power_drift"] < 1e-6 * 0.2

    def test_nls_reduction(self):
        # y-independent DS-II data is defocusing NLS up to the mean-field phase
        g = Grid2(64, 8)
        X, _ = g.mesh()
        q0 = 0.5 * np.exp(1j * X) * (1 + 0.2 * np.cos(X))
        st_ = solve_ds(q0, 1j, SolveConfig(g, 0.05, 1e-3))
        m = np.mean(np.abs(q0) ** 2)
        q = st_.values * np.exp(-2j * m * st_.times)[:, None, None]
        U, V = akns_nls_pair(np.conj(q), q, 0.7, g)
        assert zero_curvature_residual_1p1(U, V, g, dt=st_.dt).linf < 1e-5


class TestHeisenberg:
    def test_constant(self):
        g = Grid2(16, 8)
        S = exact_catalog("constant-spin", g)["S"]
        st_ = solve_heisenberg1d(S, SolveConfig(g, 0.1, 0.01))
        assert np.all(st_.values == S)

    def test_rejects_non_unit(self):
        g = Grid2(16, 8)
        with pytest.raises(NonUnitSpin):
            solve_heisenberg1d(1.1 * exact_catalog("constant-spin", g)["S"],
                               SolveConfig(g, 0.1, 0.01))

    def test_rejects_unstable_step(self):
        g = Grid2(64, 8)
        with pytest.raises(ValueError, match="stability"):
            solve_heisenberg1d(exact_catalog("constant-spin", g)["S"], SolveConfig(g, 0.5, 0.1))

    @staticmethod
    def spin_data(g):
        X, _ = g.mesh()
        th = 0.8 + 0.3 * np.sin(X)
        ph = X + 0.2 * np.cos(2 * X)
        return np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])

    def test_unit_and_m0(self):
        g = Grid2(64, 8)
        st_ = solve_heisenberg1d(self.spin_data(g), SolveConfig(g, 0.05, 5e-4))
        assert np.max(np.abs(np.linalg.norm(st_.values, axis=1) - 1)) < 1e-8
        assert 0 < st_.info["max_drift"] < 1e-6
        S = np.moveaxis(st_.values, 1, 0)
        _, V = heisenberg_pair(S, 1.3, g)
        assert m0_residual_1p1(S, V, 1.3, g, dt=st_.dt).linf < 1e-5

    def test_ishimori_reduction(self):
        g = Grid2(64, 8)
        st_ = solve_heisenberg1d(self.spin_data(g), SolveConfig(g, 0.05, 5e-4))
        sf = SpinField2p1(st_.values, np.zeros((len(st_.times),) + g.shape), alpha=0.7)
        assert max(r.linf for r in ishimori_residual(sf, g, st_.dt)) < 1e-5

    def test_spin_wave_oracle(self):
        g = Grid2(32, 8)
        X, _ = g.mesh()
        th0, kap, t = 0.6, 2.0, 0.2

        def wave(t):
            ph = kap * X - kap**2 * np.cos(th0) * t
            return np.array([np.sin(th0) * np.cos(ph), np.sin(th0) * np.sin(ph),
                             np.cos(th0) * np.ones_like(X)])

        st_ = solve_heisenberg1d(wave(0), SolveConfig(g, t, 1e-3))
        assert np.max(np.abs(st_.final - wave(t))) < 1e-8


class TestCatalog:
    def test_kdv_entry(self):
        g = SOLITON_GRID
        out = exact_catalog("kdv-soliton", g, kappa=1.0, x0=20.0)
        X, _ = g.mesh()
        assert np.allclose(out["k"], 2 / np.cosh(X - 20.0) ** 2)
        assert "sech" in out["note"]

    def test_unknown(self):
        with pytest.raises(UnknownName):
            exact_catalog("dromion")
