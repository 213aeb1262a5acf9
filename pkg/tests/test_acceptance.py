"""Acceptance criteria, one test per criterion.

Each test records a ``CRITERION n: PASS/FAIL`` line, printed in the pytest
terminal summary, and asserts the stated tolerance and runtime budget.
"""

import dataclasses
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, connection_stack, frame_coefficients, \
    rotation_coefficients
from sdymred import catalog
from sdymred.catalog import (ds_plane_wave, frame_generators, kdv_soliton, m0_gauge_field,
                             random_matrix_stack, space_time_mesh, su2_generators)
from sdymred.errors import CurvatureObstruction
from sdymred.fields import Grid2, deriv, inv_deriv_x, x_mean_free
from sdymred.frames1p1 import (akns_nls_pair, chiral_residual, heisenberg_pair,
                               integrate_frame_1p1, m0_residual_1p1, structure_residuals,
                               zero_curvature_residual_1p1, zs_akns, zs_akns_direct)
from sdymred.mmlxii import (CoefficientSet2p1, form_equivalence, linear_problem_residual,
                            mmlxii_residual, mmlxii_residual_fields, plane_case_residual)
from sdymred.reductions import (DSFields, SpinField2p1, ds_construct, ds_residual,
                                exp_wavefunction, extract_spin_structure, ishimori_residual,
                                kp_lax_residual, kp_residual, m0_residual, miura_u,
                                mkp_residual, mx_residual, spin_constraint_check)
from sdymred.sdym import (Connection4, HiggsTriple, NULL, bianchi_residual,
                          bogomolny_residual, bogomolny_residual_fields, embed_mmlxii,
                          embedding_prediction, sdym_residual, sdym_residual_fields)
from sdymred.solvers import SolveConfig, solve_kp, solve_mkp
from sdymred.surface import (PositionField, curvatures, fundamental_forms,
                             gauss_codazzi_residual, gw_residual, integral_curvature,
                             sphere_patches)

MATRIX_DT = 0.01


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def record(n, title, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    line = (f"CRITERION {n:2d}: {'PASS' if ok else 'FAIL'}  {title}: {detail}  "
            f"[{elapsed:.2f} s of {budget:g} s]")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def random_triple(rng, grid, times, n=3):
    return [random_matrix_stack(rng, grid, times, dim=2, complex_entries=True)
            for _ in range(n)]


def zero_mean(rng, grid):
    X, Y = grid.mesh()
    return x_mean_free(grid, catalog.SmoothFunction.random(rng, grid)(X, Y))


def test_criterion_01_bogomolny_collapse():
    grid = Grid2(64, 64)
    times = np.arange(5) * MATRIX_DT
    with Timer() as t:
        A, B, D = random_triple(np.random.default_rng(101), grid, times)
        bog = bogomolny_residual_fields(HiggsTriple(np.zeros_like(A), A, B, D), grid, MATRIX_DT)
        base = mmlxii_residual_fields(A, B, D, grid, MATRIX_DT)
        diff = max(np.max(np.abs(bog[key] - sign * base[key]))
                   for key, sign in (("a", 1), ("b", -1), ("c", 1)))
        scale = max(np.max(np.abs(v)) for v in base.values())
    ok = record(1, "Bogomolny collapse at vanishing Higgs field", diff <= 1e-15 and scale > 1,
                f"max entrywise difference {diff:.1e} (field scale {scale:.1f})", t.elapsed, 5)
    assert ok


def test_criterion_02_sdym_embedding():
    grid = Grid2(64, 64)
    times = np.arange(9) * MATRIX_DT
    with Timer() as t:
        worst = 0.0
        for seed in (201, 202, 203):
            A, B, D = random_triple(np.random.default_rng(seed), grid, times)
            f = sdym_residual_fields(embed_mmlxii(A, B, D, grid, MATRIX_DT))
            p = embedding_prediction(mmlxii_residual_fields(A, B, D, grid, MATRIX_DT))
            worst = max(worst, max(np.max(np.abs(f[k] - p[k])) for k in f))

        # break one equation at a time on a zero background
        T, X, Y = space_time_mesh(grid, times)
        G = su2_generators()[0]
        Z = np.zeros(T.shape + (2, 2), complex)
        only_a = np.sin(Y)[..., None, None] * G
        only_t = np.sin(T)[..., None, None] * G
        cases = {"a": (only_a, Z, Z), "b": (only_t, Z, Z), "c": (Z, only_t, Z)}
        mapped = {"a": {"trace"}, "b": {"alpha-beta", "alphabar-betabar"},
                  "c": {"alpha-beta", "alphabar-betabar"}}
        localised = True
        for eq, (A, B, D) in cases.items():
            res = mmlxii_residual_fields(A, B, D, grid, MATRIX_DT)
            broken = {k for k, v in res.items() if np.max(np.abs(v)) > 1e-3}
            f = sdym_residual_fields(embed_mmlxii(A, B, D, grid, MATRIX_DT))
            hit = {k for k, v in f.items() if np.max(np.abs(v)) > 1e-3}
            localised &= broken == {eq} and hit == mapped[eq]
    ok = record(2, "SDYM embedding", worst <= 1e-10 and localised,
                f"prediction error {worst:.1e}, single-equation corruption localised: "
                f"{localised}", t.elapsed, 10)
    assert ok


def test_criterion_03_miura_lax():
    grid = Grid2(128, 128)
    rng = np.random.default_rng(301)
    alphas = (1.0, 1j, -0.7, 2j)
    with Timer() as t:
        worst = 0.0
        for i in range(20):
            alpha = alphas[i % len(alphas)]
            k = zero_mean(rng, grid)
            m3 = inv_deriv_x(grid, deriv(grid, k, "y"))
            u = miura_u(k, m3, alpha, grid)
            psi = exp_wavefunction(k, grid)
            worst = max(worst, kp_lax_residual(psi, u, m3, alpha, grid)[0].linf)
    ok = record(3, "Miura/Lax identity", worst < 1e-9,
                f"worst linf {worst:.1e} over 20 fields", t.elapsed, 10)
    assert ok


def test_criterion_04_kp_soliton():
    grid = Grid2(256, 8, Lx=40.0)
    with Timer() as t:
        dt = 1e-3
        k = np.stack([kdv_soliton(grid, 1.0, x0=15.0, t=s * dt) for s in range(5)])
        res = kp_residual(k, 0 * k, 1j, grid, dt)[0].linf
        st = solve_kp(kdv_soliton(grid, 1.0, x0=15.0), 1j, SolveConfig(grid, 1.0, 0.005))
        shape = np.max(np.abs(st.final - kdv_soliton(grid, 1.0, x0=15.0, t=1.0)))
        mass = st.info["mass_drift"]
    ok = record(4, "KP soliton", res < 1e-6 and shape < 1e-4 and mass < 1e-10,
                f"closed-form residual {res:.1e}, shape error {shape:.1e}, "
                f"mass drift {mass:.1e}", t.elapsed, 60)
    assert ok


def test_criterion_05_ds_moduli():
    grid = Grid2(32, 32)
    rng = np.random.default_rng(501)
    with Timer() as t:
        elliptic = real = 0.0
        for _ in range(5):
            k, m1, m2, m3 = (zero_mean(rng, grid) for _ in range(4))
            a = rng.uniform(0.3, 2.0)
            ds = ds_construct(k, 0 * k, m1, m2, m3, 1j * a, grid, phase_mean="drop")
            elliptic = max(elliptic, np.max(np.abs(np.abs(ds.q) - np.abs(ds.p))))
            ds = ds_construct(k, 0 * k, m1, m2, m3, 1.0, grid, phase_mean="drop")
            real = max(real, np.max(np.abs(np.abs(ds.q) ** 2 - np.abs(ds.p) ** 2 + k * m3)))
            # for other real alpha the defect scales with alpha
            aR = a * rng.choice([-1, 1])
            ds = ds_construct(k, 0 * k, m1, m2, m3, aR, grid, phase_mean="drop")
            real = max(real, np.max(np.abs(np.abs(ds.q) ** 2 - np.abs(ds.p) ** 2 + aR * k * m3)))
    ok = record(5, "DS modulus identities", elliptic < 1e-12 and real < 1e-12,
                f"imaginary alpha {elliptic:.1e}, real alpha {real:.1e}", t.elapsed, 5)
    assert ok


def test_criterion_06_surface():
    grid = Grid2(128, 128)
    with Timer() as t:
        U1, _ = grid.mesh()
        band = (U1 >= 0.3) & (U1 <= np.pi - 0.3)
        geom = fundamental_forms(PositionField(grid, catalog.sphere_chart(grid, 2.0)), band)
        K, _ = curvatures(geom)
        dK = np.max(np.abs(K - 0.25))
        gc = gauss_codazzi_residual(geom).linf
        chi_s = integral_curvature(sphere_patches(Grid2(64, 64), 2.0))
        tg = Grid2(64, 64)
        tgeom = fundamental_forms(PositionField(tg, catalog.torus_chart(tg)))
        chi_t = integral_curvature([(tgeom, curvatures(tgeom)[0])])
    ok = record(6, "surface pipeline",
                dK < 1e-8 and gc < 1e-7 and abs(chi_s - 2) < 1e-6 and abs(chi_t) < 1e-6,
                f"|K - 1/4| {dK:.1e}, Gauss-Codazzi {gc:.1e}, sphere chi {chi_s:.8f}, "
                f"torus chi {chi_t:.1e}", t.elapsed, 20)
    assert ok


def test_criterion_07_frame_transport():
    g = Grid2(64, 64)
    with Timer() as t:
        drift = 0.0
        for beta in (1, -1):
            c, R = rotation_coefficients(g, beta)
            drift = max(drift, integrate_frame_1p1(c, g, frame0=R[0, 0]).gram_drift())
        c, _ = rotation_coefficients(g, 1)
        c.tau = 1.1 * c.tau
        try:
            integrate_frame_1p1(c, g)
            rejected = False
        except CurvatureObstruction:
            rejected = True
    ok = record(7, "frame transport", drift < 1e-7 and rejected,
                f"Gram drift {drift:.1e}, 10% tau corruption rejected: {rejected}",
                t.elapsed, 20)
    assert ok


def test_criterion_08_zs_akns():
    rng = np.random.default_rng(801)
    with Timer() as t:
        p, q, lam = (rng.normal(size=1000) + 1j * rng.normal(size=1000) for _ in range(3))
        diff = np.max(np.abs(zs_akns(p, q, lam) - zs_akns_direct(p, q, lam)))
    ok = record(8, "ZS-AKNS two-path assembly", diff <= 1e-14,
                f"max difference {diff:.1e}", t.elapsed, 1)
    assert ok


def _kp_stack_residual(stack):
    g = stack.grid
    m3 = inv_deriv_x(g, deriv(g, stack.values, "y"))
    return kp_residual(stack.values, m3, 1j, g, stack.dt)[0].linf


def test_criterion_09_convergence():
    with Timer() as t:
        res = []
        for nx in (128, 256):
            g = Grid2(nx, 8, Lx=40.0)
            st = solve_kp(kdv_soliton(g, 1.0, x0=15.0), 1j, SolveConfig(g, 0.02, 1e-3))
            res.append(_kp_stack_residual(st))
        grid_ratio = res[0] / res[1]

        g = Grid2(256, 8, Lx=40.0)
        k0 = kdv_soliton(g, 1.0, x0=15.0)
        ref = solve_kp(k0, 1j, SolveConfig(g, 1.0, 0.00125)).final
        errs = [np.max(np.abs(solve_kp(k0, 1j, SolveConfig(g, 1.0, dt)).final - ref))
                for dt in (0.01, 0.005)]
        order = np.log2(errs[0] / errs[1])
    ok = record(9, "convergence signatures", grid_ratio >= 100 and order >= 3.5,
                f"residual ratio 128 -> 256: {grid_ratio:.0f}, observed time order {order:.2f}",
                t.elapsed, 120)
    assert ok


# ---- criterion 10: one corrupted fixture per residual operator --------------

def _sphere_geometry():
    grid = Grid2(64, 64)
    U1, _ = grid.mesh()
    band = (U1 >= 0.3) & (U1 <= np.pi - 0.3)
    return fundamental_forms(PositionField(grid, catalog.sphere_chart(grid, 2.0)), band)


def _nls_plane_wave(A=0.5, kappa=1.0):
    omega = kappa**2 - 2 * A**2
    g = Grid2(32, 32, 2 * np.pi, 2 * np.pi / omega)
    X, T = g.mesh()
    q = A * np.exp(1j * (kappa * X - omega * T))
    return g, -np.conj(q), q


def _spin_wave_1p1(theta0=0.7):
    omega = np.cos(theta0)
    g = Grid2(32, 32, 2 * np.pi, 2 * np.pi / omega)
    X, T = g.mesh()
    phi = X - omega * T
    return g, np.array([np.sin(theta0) * np.cos(phi), np.sin(theta0) * np.sin(phi),
                        np.cos(theta0) + 0 * phi])


def _spin_wave_2p1(grid, times, theta0=0.7):
    T, X, _ = space_time_mesh(grid, times)
    phi = X - np.cos(theta0) * T
    return np.stack([np.sin(theta0) * np.cos(phi), np.sin(theta0) * np.sin(phi),
                     np.cos(theta0) + 0 * phi], axis=1)


def _flat_frame_triple(grid, times, factor_b=1.1):
    _, A, B, D = connection_stack(grid, times, frame_generators(1), seed=3)
    return A, factor_b * B, D


def corrupted_fixtures():
    """Yield ``(operator name, corrupted linf)`` for every residual operator."""
    g64 = Grid2(64, 64)
    t9 = np.arange(9) * MATRIX_DT
    t7 = np.arange(7) * MATRIX_DT

    geom = _sphere_geometry()
    yield "gauss_codazzi_residual", gauss_codazzi_residual(
        dataclasses.replace(geom, b=1.1 * geom.b)).linf
    yield "gw_residual", gw_residual(dataclasses.replace(geom, b=geom.b + 0.1)).linf

    g, p, q = _nls_plane_wave()
    yield "zero_curvature_residual_1p1", zero_curvature_residual_1p1(
        *akns_nls_pair(1.1 * p, 1.1 * q, 0.7, g), g).linf
    c, _ = rotation_coefficients(g64, 1)
    c.k = 1.1 * c.k
    yield "structure_residuals", max(r.linf for r in structure_residuals(c, g64))
    X, T = g64.mesh()
    G1, G2 = su2_generators()[:2]
    u = np.sin(X)[..., None, None] * G1
    v = np.cos(T)[..., None, None] * G2
    yield "chiral_residual", max(r.linf for r in chiral_residual(u, v, g64))
    g, S = _spin_wave_1p1()
    _, V = heisenberg_pair(S, 1.0, g)
    yield "m0_residual_1p1", m0_residual_1p1(S, 1.5 * V, 1.0, g).linf

    A, B, D = _flat_frame_triple(g64, t9)
    yield "mmlxii_residual", max(r.linf for r in mmlxii_residual(A, B, D, g64, MATRIX_DT))
    yield "linear_problem_residual", max(
        r.linf for r in linear_problem_residual(A, B, D, g64, MATRIX_DT))
    T3, X3, _ = space_time_mesh(g64, t9)
    k = np.sin(X3 - 0.8 * T3)
    yield "plane_case_residual", max(
        r.linf for r in plane_case_residual(k, 0 * k, -1.5 * 0.8 * k, g64, MATRIX_DT))
    coeffs = frame_coefficients(*_flat_frame_triple(g64, t9, 1.0))
    coeffs["m3"] = 1.1 * coeffs["m3"]
    r3, r2, _ = form_equivalence(CoefficientSet2p1(**coeffs), g64, MATRIX_DT)
    yield "form_equivalence", min(max(r.linf for r in r3), max(r.linf for r in r2))

    S_bad = _spin_wave_2p1(g64, 1.5 * t7)
    yield "ishimori_residual", ishimori_residual(
        SpinField2p1(S_bad, 0 * S_bad[:, 0]), g64, MATRIX_DT)[0].linf
    dt = 1e-3
    slices = [ds_plane_wave(g64, 1.0, (2, 1), -1.0, 0.3, s * dt) for s in range(5)]
    qs, ps, vs = (np.stack([s[i] for s in slices]) for i in range(3))
    yield "ds_residual", ds_residual(DSFields(qs, ps, vs + 0.1, 1j), g64, dt)[0].linf
    T3, X3, _ = space_time_mesh(g64, t7)
    phi = X3 - 3 * 1.2 * T3
    S = np.stack([np.cos(phi), np.sin(phi), 0 * phi], axis=1)
    kc = np.full(T3.shape, 1.2)
    yield "mx_residual", mx_residual(S, 1.1 * kc, 0 * kc, 1.0, g64, MATRIX_DT).linf
    gk = Grid2(256, 8, Lx=40.0)
    ks = np.stack([kdv_soliton(gk, 1.0, x0=15.0, t=s * dt) for s in range(5)])
    yield "kp_residual", kp_residual(1.1 * ks, 0 * ks, 1j, gk, dt)[0].linf
    k0 = zero_mean(np.random.default_rng(1001), g64)
    m3 = inv_deriv_x(g64, deriv(g64, k0, "y"))
    yield "kp_lax_residual", kp_lax_residual(exp_wavefunction(k0, g64),
                                             miura_u(k0, 1.5 * m3, 1.0, g64), m3, 1.0,
                                             g64)[0].linf
    Xg, Yg = g64.mesh()
    st = solve_mkp(0.3 * np.cos(Xg - Yg), 1.0, SolveConfig(g64, 0.02, 1e-3))
    w = inv_deriv_x(g64, deriv(g64, st.values, "y"))
    # time stack read with the wrong spacing
    yield "mkp_residual", mkp_residual(st.values, w, 1.0, g64, 1.5 * st.dt)[0].linf
    psi, d = m0_gauge_field(g64, t7, a=1.0, seed=2)
    pi = np.linalg.inv(psi)
    Ap, Vp, Tp = (d[ax] @ pi for ax in "xyt")
    sstr = extract_spin_structure(Ap)
    yield "m0_residual", m0_residual(Ap / sstr.a, 1.1 * Vp, Tp, sstr.a, g64, MATRIX_DT)[0].linf
    th, ph, n = 0.3 + 0.2 * np.sin(Xg), Yg, 2.0
    yield "spin_constraint_check", spin_constraint_check(
        1.1 * n * np.sin(th) * np.cos(ph), n * np.sin(th) * np.sin(ph), n * np.cos(th), n).linf

    _, A, B, D = connection_stack(g64, t9, su2_generators(), seed=14)
    yield "sdym_residual", max(r.linf for r in sdym_residual(
        embed_mmlxii(A, 1.1 * B, D, g64, MATRIX_DT)))
    # independent random slice amplitudes: no smooth time dependence, so the
    # discrete time derivative loses the product rule the identity relies on
    T4, X4, Y4 = space_time_mesh(g64, t9)
    sgn = np.random.default_rng(1002).normal(size=len(t9))[:, None, None, None, None]
    comps = {nm: sgn * (np.sin(X4 + j)[..., None, None] * su2_generators()[j % 3]
                        + np.cos(Y4)[..., None, None] * su2_generators()[(j + 1) % 3])
             for j, nm in enumerate(NULL)}
    yield "bianchi_residual", bianchi_residual(Connection4(comps, g64, MATRIX_DT))
    t5 = np.arange(5) * MATRIX_DT
    _, A, B, D = connection_stack(g64, t5, su2_generators(), seed=14)
    yield "bogomolny_residual", max(r.linf for r in bogomolny_residual(
        HiggsTriple(np.zeros_like(A), A, 1.1 * B, D), g64, MATRIX_DT))


OPERATORS = ("gauss_codazzi_residual", "gw_residual", "zero_curvature_residual_1p1",
             "structure_residuals", "chiral_residual", "m0_residual_1p1", "mmlxii_residual",
             "linear_problem_residual", "plane_case_residual", "form_equivalence",
             "ishimori_residual", "ds_residual", "mx_residual", "kp_residual",
             "kp_lax_residual", "mkp_residual", "m0_residual", "spin_constraint_check",
             "sdym_residual", "bianchi_residual", "bogomolny_residual")


_CACHE = {}


def test_criterion_10_non_vacuity():
    with Timer() as t:
        results = dict(corrupted_fixtures())
    _CACHE.update(results)
    weak = {k: v for k, v in results.items() if not v > 0.05}
    covered = set(results) == set(OPERATORS)
    lowest = min(results, key=results.get)
    ok = record(10, "non-vacuity", covered and not weak,
                f"{len(results)} operators, smallest corrupted linf {results[lowest]:.2e} "
                f"({lowest})" + (f", below 0.05: {sorted(weak)}" if weak else ""),
                t.elapsed, 30)
    assert ok


@pytest.mark.parametrize("name", OPERATORS)
def test_operator_detects_corruption(name):
    # per-operator view of criterion 10, so a regression names its operator
    results = _fixture_cache()
    assert results[name] > 0.05


def _fixture_cache():
    if not _CACHE:
        _CACHE.update(corrupted_fixtures())
    return _CACHE
