"""Named verification suites: fixtures wired to residual operators.

Each suite returns a list of :class:`Check` records in a fixed order.  A
check passes when its ``linf`` is at most its tolerance.  Every fixture is
seeded, so repeated runs give identical numbers.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import catalog
from .catalog import (flat_triple, frame_generators, kdv_soliton, m0_gauge_field,
                      random_matrix_stack, SmoothFunction, su2_generators)
from .fields import Grid2, deriv, inv_deriv_x, residual_norm, x_mean_free
from .frames1p1 import (akns_nls_pair, coeffs_from_su2, heisenberg_pair, integrate_frame_1p1,
                        m0_residual_1p1, zero_curvature_residual_1p1, zs_akns, zs_akns_direct)
from .mmlxii import linear_problem_residual, mmlxii_residual, mmlxii_residual_fields
from .reductions import (DSFields, SpinField2p1, ds_construct, ds_residual, exp_wavefunction,
                         extract_spin_structure, ishimori_residual, kp_lax_residual,
                         kp_residual, m0_residual, miura_u, mkp_residual)
from .sdym import (HiggsTriple, bianchi_residual, bogomolny_prediction,
                   bogomolny_residual_fields, embed_bogomolny, embed_mmlxii,
                   embedding_prediction, sdym_residual, sdym_residual_fields)
from .solvers import SolveConfig, solve_ds, solve_heisenberg1d, solve_kp, solve_mkp
from .surface import (PositionField, curvatures, fundamental_forms, gauss_codazzi_residual,
                      integral_curvature, sphere_patches)

SUITES = ("surface", "frames-1p1", "mmlxii", "ishimori-ds", "kp", "mkp-miura", "m0-spin",
          "sdym-embed", "bogomolny")
CORRUPTIONS = ("m3",)
STACK_DT = 1e-3
MATRIX_DT = 1e-2


@dataclass
class Check:
    name: str
    anchor: str
    linf: float
    l2: float
    tol: float

    @property
    def passed(self):
        return bool(self.linf <= self.tol)

    def to_dict(self):
        return {"name": self.name, "anchor": self.anchor, "linf": float(self.linf),
                "l2": float(self.l2), "tolerance": float(self.tol), "pass": self.passed}


@dataclass
class SuiteSettings:
    """Run options: grid override, tolerance overrides, literal readings, corruptions."""

    grid: int = None
    tol: dict = field(default_factory=dict)
    paper_literal: bool = False
    corrupt: frozenset = frozenset()
    seed: int = 0

    def __post_init__(self):
        unknown = set(self.corrupt) - set(CORRUPTIONS)
        if unknown:
            raise ValueError(f"unknown corruption {sorted(unknown)}; choose from {CORRUPTIONS}")
        if self.grid is not None and (self.grid < 16 or self.grid % 2):
            raise ValueError(f"grid override must be even and >= 16, got {self.grid}")

    def n(self, default):
        return self.grid or default

    def m3_factor(self):
        return 1.1 if "m3" in self.corrupt else 1.0


class _Collector:
    def __init__(self, settings):
        self.settings = settings
        self.checks = []

    def add(self, name, anchor, value, tol):
        """Record ``value`` (a ResidualReport, array or number) against ``tol``."""
        tol = float(self.settings.tol.get(name, tol))
        if hasattr(value, "linf"):
            linf, l2 = value.linf, value.l2
        else:
            rep = residual_norm(np.atleast_1d(np.asarray(value)), name)
            linf, l2 = rep.linf, rep.l2
        self.checks.append(Check(name, anchor, float(linf), float(l2), tol))


def _zero_mean(rng, grid, **kw):
    X, Y = grid.mesh()
    return x_mean_free(grid, SmoothFunction.random(rng, grid, **kw)(X, Y))


# ---- suites -----------------------------------------------------------------

def suite_surface(s):
    c = _Collector(s)
    n = s.n(128)
    grid = Grid2(n, n)
    U1, _ = grid.mesh()
    band = (U1 >= 0.3) & (U1 <= np.pi - 0.3)
    geom = fundamental_forms(PositionField(grid, catalog.sphere_chart(grid, 2.0)), band)
    K, _ = curvatures(geom)
    c.add("sphere-gaussian-curvature", "Gaussian curvature from the two fundamental forms",
          K - 0.25, 1e-8)
    c.add("sphere-gauss-codazzi", "Gauss and Codazzi compatibility of the Gauss-Weingarten system",
          gauss_codazzi_residual(geom), 1e-7)
    m = s.n(64)
    c.add("sphere-euler-characteristic", "integral curvature of a closed surface",
          integral_curvature(sphere_patches(Grid2(m, m), 2.0)) - 2, 1e-6)
    tg = Grid2(m, m)
    tgeom = fundamental_forms(PositionField(tg, catalog.torus_chart(tg)))
    c.add("torus-euler-characteristic", "integral curvature of a closed surface",
          integral_curvature([(tgeom, curvatures(tgeom)[0])]), 1e-6)
    return c.checks


def _heisenberg_data(grid):
    X, _ = grid.mesh()
    th = 0.8 + 0.3 * np.sin(X)
    ph = X + 0.2 * np.cos(2 * X)
    return np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


def suite_frames(s):
    c = _Collector(s)
    rng = np.random.default_rng(s.seed)
    p, q = rng.normal(size=(2, 64)) + 1j * rng.normal(size=(2, 64))
    lam = rng.normal(size=64) + 1j * rng.normal(size=64)
    c.add("zs-akns-two-path", "ZS-AKNS operator assembled through the 2x2 frame form",
          zs_akns(p, q, lam) - zs_akns_direct(p, q, lam), 1e-14)

    n = s.n(64)
    g = Grid2(n, 8)
    X, _ = g.mesh()
    q0 = 0.5 * np.exp(1j * X) * (1 + 0.2 * np.cos(X))
    st = solve_ds(q0, 1j, SolveConfig(g, 0.05, STACK_DT))
    mean = np.mean(np.abs(q0) ** 2)
    qs = st.values * np.exp(-2j * mean * st.times)[:, None, None]
    c.add("nls-zero-curvature", "zero-curvature form of the ZS-AKNS/NLS pair",
          zero_curvature_residual_1p1(*akns_nls_pair(np.conj(qs), qs, 0.7, g), g, dt=st.dt),
          1e-5)

    A, kappa, lam0 = 0.5, 1.0, 0.7
    omega = kappa**2 - 2 * A**2
    gx = Grid2(32, 32, 2 * np.pi, 2 * np.pi / omega)
    X, T = gx.mesh()
    qw = A * np.exp(1j * (kappa * X - omega * T))
    coeffs = coeffs_from_su2(*akns_nls_pair(-np.conj(qw), qw, lam0, gx))
    c.add("frame-transport-gram", "Gauss-Weingarten transport of the moving frame",
          integrate_frame_1p1(coeffs, gx).gram_drift(), 1e-7)

    hg = Grid2(n, 8)
    hs = solve_heisenberg1d(_heisenberg_data(hg), SolveConfig(hg, 0.05, 5e-4))
    S = np.moveaxis(hs.values, 1, 0)
    _, V = heisenberg_pair(S, 1.3, hg)
    c.add("m0-1p1-heisenberg", "1+1 M-0 spin equation",
          m0_residual_1p1(S, V, 1.3, hg, dt=hs.dt, paper_literal=s.paper_literal), 1e-5)
    c.add("heisenberg-unit-spin", "unit length of the spin vector",
          np.linalg.norm(hs.values, axis=1) - 1, 1e-8)
    return c.checks


def suite_mmlxii(s):
    c = _Collector(s)
    n = s.n(64)
    grid = Grid2(n, n)
    times = np.arange(9) * MATRIX_DT
    _, A, B, D = flat_triple(grid, times, frame_generators(1), seed=s.seed)
    for rep, tol in zip(mmlxii_residual(A, B, D, grid, MATRIX_DT), (1e-8, 1e-6, 1e-6)):
        c.add(rep.name, "2+1 compatibility of the frame equations", rep, tol)
    for rep in linear_problem_residual(A, B, D, grid, MATRIX_DT, paper_literal=s.paper_literal):
        c.add(rep.name, "linear-problem form of the 2+1 system", rep, 1e-6)
    return c.checks


def suite_ishimori_ds(s):
    c = _Collector(s)
    n = s.n(64)
    hg = Grid2(n, 8)
    hs = solve_heisenberg1d(_heisenberg_data(hg), SolveConfig(hg, 0.05, 5e-4))
    sf = SpinField2p1(hs.values, np.zeros((len(hs.times),) + hg.shape), alpha=0.7)
    for rep in ishimori_residual(sf, hg, hs.dt):
        c.add(rep.name + "-heisenberg-reduction", "Ishimori equation, 1-d reduction", rep, 1e-5)

    grid = Grid2(32, 32)
    rng = np.random.default_rng(s.seed)
    k, m1, m2, m3 = (_zero_mean(rng, grid) for _ in range(4))
    ds = ds_construct(k, 0 * k, m1, m2, m3, 1j, grid, phase_mean="drop")
    c.add("ds-modulus-elliptic", "DS moduli, purely imaginary alpha",
          np.abs(ds.q) - np.abs(ds.p), 1e-12)
    ds1 = ds_construct(k, 0 * k, m1, m2, m3, 1.0, grid, phase_mean="drop")
    c.add("ds-modulus-real", "DS moduli, real alpha",
          np.abs(ds1.q) ** 2 - np.abs(ds1.p) ** 2 + k * s.m3_factor() * m3, 1e-12)

    g = Grid2(s.n(64), s.n(64))
    X, Y = g.mesh()
    q0 = 0.4 * np.exp(1j * X) + 0.3 * np.cos(Y) + 0.2j * np.sin(X + Y)
    st = solve_ds(q0, 1j, SolveConfig(g, 0.2, STACK_DT)).window(9)
    for rep in ds_residual(DSFields(st.values, np.conj(st.values), st.aux["v"], alpha=1j),
                           g, st.dt):
        c.add(rep.name + "-solver", "Davey-Stewartson system, elliptic regime", rep, 1e-4)
    return c.checks


def _kp_smooth_data(grid, amp, seed):
    rng = np.random.default_rng(seed)
    X, Y = grid.mesh()
    k = np.zeros(grid.shape)
    for mx in range(1, 4):
        for my in range(-3, 4):
            a, b = rng.normal(size=2) / (mx**2 + my**2)
            ph = 2 * np.pi * (mx * X / grid.Lx + my * Y / grid.Ly)
            k += a * np.cos(ph) + b * np.sin(ph)
    return amp * k / np.max(np.abs(k))


def suite_kp(s):
    c = _Collector(s)
    n = s.n(256)
    grid = Grid2(n, 8, Lx=40.0)
    times = np.arange(5) * STACK_DT
    k = np.stack([kdv_soliton(grid, 1.0, x0=15.0, t=t) for t in times])
    c.add("kdv-soliton-residual", "KP equation on the KdV soliton",
          kp_residual(k, 0 * k, 1j, grid, STACK_DT)[0], 1e-6)

    st = solve_kp(kdv_soliton(grid, 1.0, x0=15.0), 1j, SolveConfig(grid, 1.0, 0.005))
    c.add("kp-solver-soliton-shape", "KP equation, soliton translation at speed 4",
          st.final - kdv_soliton(grid, 1.0, x0=15.0, t=1.0), 1e-4)
    c.add("kp-solver-mass", "conservation of the integral of k", st.info["mass_drift"], 1e-10)

    g2 = Grid2(s.n(64), s.n(64))
    st2 = solve_kp(_kp_smooth_data(g2, 0.5, s.seed + 3), 1j,
                   SolveConfig(g2, 0.2, STACK_DT)).window(9)
    m3 = s.m3_factor() * inv_deriv_x(g2, deriv(g2, st2.values, "y"))
    main, constraint = kp_residual(st2.values, m3, 1j, g2, st2.dt)
    c.add("kp-solver-residual", "KP equation on solver output", main, 1e-4)
    c.add("kp-solver-constraint", "definition of m3 through k_y", constraint, 1e-8)
    return c.checks


def suite_mkp_miura(s):
    c = _Collector(s)
    n = s.n(64)
    grid = Grid2(n, n)
    rng = np.random.default_rng(s.seed)
    worst = 0.0
    for alpha in (1.0, 1j, -0.7):
        for _ in range(4):
            k = _zero_mean(rng, grid)
            m3 = inv_deriv_x(grid, deriv(grid, k, "y"))
            u = miura_u(k, s.m3_factor() * m3, alpha, grid)
            psi = exp_wavefunction(k, grid)
            worst = max(worst, kp_lax_residual(psi, u, m3, alpha, grid)[0].linf)
    c.add("miura-lax-identity", "Lax operator under the Miura map", worst, 1e-9)

    X, Y = grid.mesh()
    xi = X - Y
    k0 = 0.3 * np.cos(xi) + 0.2 * np.sin(2 * xi + 0.4)
    for alpha in (1.0, 1j):
        st = solve_mkp(k0, alpha, SolveConfig(grid, 0.1, STACK_DT)).window(9)
        k = st.values
        w = inv_deriv_x(grid, deriv(grid, k, "y"))
        tag = "real" if alpha == 1.0 else "imag"
        c.add(f"mkp-solver-{tag}", "modified KP equation on solver output",
              mkp_residual(k, w, alpha, grid, st.dt)[0], 1e-5)
        m3 = s.m3_factor() * w
        u = miura_u(k, m3, alpha, grid)
        mu = inv_deriv_x(grid, deriv(grid, u, "y"))
        c.add(f"miura-kp-{tag}", "KP equation for the Miura image of an mKP solution",
              kp_residual(u, mu, alpha, grid, st.dt)[0], 1e-4)
        c.add(f"miura-lax-solver-{tag}", "Lax operator under the Miura map",
              kp_lax_residual(exp_wavefunction(k, grid), u, w, alpha, grid)[0], 1e-6)
    return c.checks


def suite_m0_spin(s):
    c = _Collector(s)
    n = s.n(64)
    grid = Grid2(n, n)
    times = np.arange(7) * MATRIX_DT
    psi, d = m0_gauge_field(grid, times, a=1.0, seed=s.seed + 2)
    pi = np.linalg.inv(psi)
    Ap, Vp, Tp = (d[ax] @ pi for ax in "xyt")
    st = extract_spin_structure(Ap)
    c.add("spin-structure-pattern", "spin pattern of the gauge-changed connection",
          st.pattern_residual, 1e-8)
    for rep, tol in zip(m0_residual(Ap / st.a, Vp, Tp, st.a, grid, MATRIX_DT,
                                    paper_literal=s.paper_literal), (1e-8, 1e-6, 1e-6)):
        c.add(rep.name, "2+1 M-0 spin system", rep, tol)
    return c.checks


def suite_sdym_embed(s):
    c = _Collector(s)
    n = s.n(64)
    grid = Grid2(n, n)
    times = np.arange(9) * MATRIX_DT
    rng = np.random.default_rng(s.seed + 13)
    A, B, D = (random_matrix_stack(rng, grid, times, dim=2, complex_entries=True)
               for _ in range(3))
    f = sdym_residual_fields(embed_mmlxii(A, B, D, grid, MATRIX_DT))
    p = embedding_prediction(mmlxii_residual_fields(A, B, D, grid, MATRIX_DT))
    for key in f:
        c.add(f"embedding-{key}", "self-dual Yang-Mills reduction to the 2+1 system",
              f[key] - p[key], 1e-10)
    _, A, B, D = flat_triple(grid, times, su2_generators(), seed=s.seed + 14)
    conn = embed_mmlxii(A, B, D, grid, MATRIX_DT)
    for rep in sdym_residual(conn):
        c.add(rep.name, "self-duality of the embedded flat connection", rep, 1e-6)
    c.add("bianchi", "Bianchi identity", bianchi_residual(conn), 1e-7)
    return c.checks


def suite_bogomolny(s):
    c = _Collector(s)
    n = s.n(64)
    grid = Grid2(n, n)
    times = np.arange(5) * MATRIX_DT
    rng = np.random.default_rng(s.seed + 21)
    A, B, D = (random_matrix_stack(rng, grid, times, dim=2, complex_entries=True)
               for _ in range(3))
    bog = bogomolny_residual_fields(HiggsTriple(np.zeros_like(A), A, B, D), grid, MATRIX_DT)
    base = mmlxii_residual_fields(A, B, D, grid, MATRIX_DT)
    for key, sign in (("a", 1), ("b", -1), ("c", 1)):
        c.add(f"collapse-{key}", "Bogomolny equations with vanishing Higgs field",
              bog[key] - sign * base[key], 1e-15)
    Psi = random_matrix_stack(rng, grid, times, dim=2, complex_entries=True)
    h = HiggsTriple(Psi, A, B, D)
    f = sdym_residual_fields(embed_bogomolny(h, grid, MATRIX_DT))
    pred = bogomolny_prediction(h, grid, MATRIX_DT)
    for key in f:
        c.add(f"bogomolny-embedding-{key}", "self-dual Yang-Mills reduction to Bogomolny",
              f[key] - pred[key], 1e-10)
    return c.checks


REGISTRY = {
    "surface": suite_surface,
    "frames-1p1": suite_frames,
    "mmlxii": suite_mmlxii,
    "ishimori-ds": suite_ishimori_ds,
    "kp": suite_kp,
    "mkp-miura": suite_mkp_miura,
    "m0-spin": suite_m0_spin,
    "sdym-embed": suite_sdym_embed,
    "bogomolny": suite_bogomolny,
}


def run_suite(name, settings=None):
    """Run one suite (or ``"all"``) and return ``(checks, wall_time)``."""
    settings = settings or SuiteSettings()
    names = SUITES if name == "all" else (name,)
    for nm in names:
        if nm not in REGISTRY:
            raise KeyError(f"unknown suite {nm!r}; choose from {SUITES + ('all',)}")
    start = time.perf_counter()
    checks = []
    for nm in names:
        for chk in REGISTRY[nm](settings):
            if name == "all":
                chk.name = f"{nm}/{chk.name}"
            checks.append(chk)
    return checks, time.perf_counter() - start
