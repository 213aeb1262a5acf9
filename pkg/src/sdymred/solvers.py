"""Desk-scale integrators producing time stacks for the residual checks.

* KP and mKP: pseudo-spectral, stiff dispersive and nonlocal terms treated
  exactly by an exponential integrator (ETDRK4 with contour-integral
  coefficients) or an integrating-factor RK4.
* DS in the elliptic regime: exact linear and nonlinear substeps, Strang
  splitting raised to 4th order by the Yoshida composition.
* 1-d Heisenberg spin flow ``S_t = S x S_xx``: RK4 with projection back to the
  unit sphere after every step.

All solvers return a :class:`SolutionStack` sampled every ``save_every``
steps, including the initial slice.
"""

import json
import shlex
from dataclasses import dataclass, field, fields as dc_fields, replace
from pathlib import Path

import numpy as np

from .catalog import exact_catalog
from .errors import BlowUp, NonUnitSpin, NonZeroMean
from .fieldio import Field, save_field
from .fields import Grid2

__all__ = ["SCHEMES", "SolveConfig", "SolutionStack", "check_stability", "etdrk4_coefficients",
           "exact_catalog", "solve_ds", "solve_heisenberg1d", "solve_kp", "solve_mkp"]

SCHEMES = ("etd4", "rk4-if", "splitstep", "rk4")
BLOWUP = 1e6
MEAN_RTOL = 1e-10


@dataclass(frozen=True)
class SolveConfig:
    grid: Grid2
    t_end: float
    dt: float
    scheme: str = "etd4"
    dealias: bool = True
    save_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= self.dt:
            raise ValueError(f"t_end ({self.t_end}) must be at least dt ({self.dt})")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if int(self.save_every) != self.save_every or self.save_every < 1:
            raise ValueError("save_every must be a positive integer")
        if self.n_steps // self.save_every < 4:
            raise ValueError("configuration yields fewer than 5 saved slices")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    @classmethod
    def from_text(cls, text, **overrides):
        """Parse ``key = value`` lines (``#`` comments allowed).

        Grid keys are ``nx``, ``ny``, ``Lx``, ``Ly``; the others map to fields.
        """
        raw = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"expected 'key = value', got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            raw[key] = shlex.split(value)[0] if value else ""
        raw.update({k: str(v) for k, v in overrides.items()})
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw):
        raw = dict(raw)
        grid = Grid2(int(raw.pop("nx", 64)), int(raw.pop("ny", 64)),
                     float(raw.pop("Lx", 2 * np.pi)), float(raw.pop("Ly", 2 * np.pi)))
        kw = {}
        names = {f.name for f in dc_fields(cls)} - {"grid"}
        for key, value in raw.items():
            if key not in names:
                raise ValueError(f"unknown config key {key!r}")
            if key in ("t_end", "dt"):
                kw[key] = float(value)
            elif key == "save_every":
                kw[key] = int(value)
            elif key == "dealias":
                kw[key] = str(value).lower() in ("1", "true", "yes", "on")
            else:
                kw[key] = value
        return cls(grid, **kw)


@dataclass
class SolutionStack:
    """Snapshots ``values[i]`` at uniformly spaced ``times[i]``.

    ``aux`` holds companion stacks sampled at the same times (e.g. the DS
    mean field ``v``).
    """

    times: np.ndarray
    values: np.ndarray
    grid: Grid2
    info: dict = field(default_factory=dict)
    aux: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        self.values = np.asarray(self.values)
        if len(self.times) != len(self.values):
            raise ValueError("times and values differ in length")
        if len(self.times) > 2:
            steps = np.diff(self.times)
            if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])):
                raise ValueError("snapshot times are not uniformly spaced")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("stack contains non-finite values")

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    @property
    def final(self):
        return self.values[-1]

    def window(self, n=5, end=True):
        """The last (or first) ``n`` slices as a new stack."""
        sl = slice(-n, None) if end else slice(0, n)
        aux = {k: v[sl] for k, v in self.aux.items()}
        return SolutionStack(self.times[sl], self.values[sl], self.grid, dict(self.info), aux)

    def save(self, directory, name="field"):
        """Write each slice in the shared field format plus ``manifest.json``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        entries = []
        for i, (t, v) in enumerate(zip(self.times, self.values)):
            comps = [v] if v.ndim == 2 else list(v)
            files = []
            for c, comp in enumerate(comps):
                base = f"{name}_{i:04d}" + (f"_c{c}" if len(comps) > 1 else "")
                kind = "complex" if np.iscomplexobj(comp) else "real"
                save_field(directory / base, Field(base, self.grid, comp, kind))
                files.append(base)
            entries.append({"t": float(t), "files": files})
        manifest = {"name": name, "grid": self.grid.to_dict(), "slices": entries,
                    "info": _jsonable(self.info)}
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
        return directory / "manifest.json"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# ---- spectral helpers -------------------------------------------------------

def _wavenumbers(grid):
    kx, ky = grid.wavenumbers()
    return kx, ky


def _mask(cfg):
    return cfg.grid.dealias_mask() if cfg.dealias else np.ones(cfg.grid.shape, bool)


def etdrk4_coefficients(L, h, n_contour=64):
    """ETDRK4 coefficients for a diagonal linear operator.

    The phi-functions are averaged over a unit circle around each ``hL``
    (full circle, since ``L`` is complex), which avoids cancellation near 0.
    """
    r = np.exp(2j * np.pi * (np.arange(1, n_contour + 1) - 0.5) / n_contour)
    LR = h * L[..., None] + r
    E, E2 = np.exp(h * L), np.exp(h * L / 2)
    Q = h * np.mean((np.exp(LR / 2) - 1) / LR, axis=-1)
    f1 = h * np.mean((-4 - LR + np.exp(LR) * (4 - 3 * LR + LR**2)) / LR**3, axis=-1)
    f2 = h * np.mean((2 + LR + np.exp(LR) * (-2 + LR)) / LR**3, axis=-1)
    f3 = h * np.mean((-4 - 3 * LR - LR**2 + np.exp(LR) * (4 - LR)) / LR**3, axis=-1)
    if np.isrealobj(L):
        Q, f1, f2, f3 = (c.real for c in (Q, f1, f2, f3))
    return E, E2, Q, f1, f2, f3


def _etdrk4_step(v, N, coeffs):
    E, E2, Q, f1, f2, f3 = coeffs
    Nv = N(v)
    a = E2 * v + Q * Nv
    Na = N(a)
    b = E2 * v + Q * Na
    Nb = N(b)
    c = E2 * a + Q * (2 * Nb - Nv)
    Nc = N(c)
    return E * v + Nv * f1 + 2 * (Na + Nb) * f2 + Nc * f3


def _if_rk4_step(v, N, L, h):
    E2 = np.exp(h * L / 2)
    E = E2 * E2
    k1 = N(v)
    k2 = N(E2 * (v + h / 2 * k1))
    k3 = N(E2 * v + h / 2 * k2)
    k4 = N(E * v + h * E2 * k3)
    return E * v + h / 6 * (E * k1 + 2 * E2 * (k2 + k3) + k4)


def _check_mean_profile(grid, k0):
    """The x-mean of ``k0`` must not depend on y (needed by d_x^{-1} k_y)."""
    mean = np.mean(k0, axis=0)
    spread = np.max(np.abs(mean - mean.mean()))
    if spread > MEAN_RTOL * max(1.0, np.max(np.abs(k0))):
        raise NonZeroMean(f"x-mean of the initial data varies with y by {spread:.3e}")


def _kp_symbol(grid, alpha):
    """``i (kx^3 - 3 alpha^2 ky^2 / kx)`` with the kx = 0 plane set to zero."""
    kx, ky = _wavenumbers(grid)
    safe = np.where(kx == 0, 1.0, kx)
    L = 1j * (kx**3 - 3 * alpha**2 * ky**2 / safe)
    return np.where(kx == 0, 0.0, L)


def _march(v0, step, n_steps, save_every, to_physical, t0=0.0, dt=1.0, monitor=None):
    """Advance ``v`` and collect physical snapshots; raises BlowUp with the partial stack."""
    times, snaps = [t0], [to_physical(v0)]
    v = v0
    for n in range(1, n_steps - n_steps % save_every + 1):
        v = step(v)
        if n % save_every:
            continue
        u = to_physical(v)
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > BLOWUP:
            raise BlowUp(f"solution exceeded {BLOWUP:g} at t = {t0 + n * dt:.4g}",
                         partial=(np.array(times), np.array(snaps)))
        times.append(t0 + n * dt)
        snaps.append(u)
        if monitor is not None:
            monitor(u)
    return np.array(times), np.array(snaps)


def _blowup_stack(exc, grid, info):
    times, snaps = exc.partial
    exc.partial = SolutionStack(times, snaps, grid, info) if len(times) > 1 else None
    return exc


def check_stability(cfg, speed, limit=2.5):
    """Advective bound ``dt * speed * kx_max <= limit`` on the explicit part.

    The dispersive and nonlocal terms are integrated exactly, so only the
    nonlinear transport term restricts the step.
    """
    kx, _ = _wavenumbers(cfg.grid)
    kmax = np.max(np.abs(kx[_mask(cfg)]))
    if cfg.dt * speed * kmax > limit:
        raise ValueError(f"dt = {cfg.dt} violates the stability bound "
                         f"{limit / (speed * kmax):.3e} for transport speed {speed:.3g}")


def _physical(real):
    return (lambda v: np.fft.ifft2(v).real) if real else np.fft.ifft2


def _solve_dispersive(k0, cfg, L, nonlinear, name, info, real=True):
    grid = cfg.grid
    # with dealiasing the state lives on the 2/3 band (Galerkin truncation), so
    # no free high modes are left to oscillate at the stiff linear frequencies
    v0 = _mask(cfg) * np.fft.fft2(k0)
    h = cfg.dt
    if cfg.scheme == "etd4":
        coeffs = etdrk4_coefficients(L, h)
        step = lambda v: _etdrk4_step(v, nonlinear, coeffs)  # noqa: E731
    elif cfg.scheme == "rk4-if":
        step = lambda v: _if_rk4_step(v, nonlinear, L, h)  # noqa: E731
    else:
        raise ValueError(f"{name} supports schemes etd4 and rk4-if, not {cfg.scheme!r}")
    mass0 = np.sum(k0) * grid.dx * grid.dy
    energy0 = np.sum(k0**2) * grid.dx * grid.dy
    try:
        times, snaps = _march(v0, step, cfg.n_steps, cfg.save_every, _physical(real), dt=h)
    except BlowUp as exc:
        raise _blowup_stack(exc, grid, info) from None
    cell = grid.dx * grid.dy
    info = dict(info, scheme=cfg.scheme, dt_step=h,
                mass_drift=float(np.max(np.abs(snaps.sum(axis=(1, 2)) * cell - mass0))),
                l2_drift=float(np.max(np.abs((snaps**2).sum(axis=(1, 2)) * cell - energy0))),
                real=real)
    return SolutionStack(times, snaps, grid, info)


def solve_kp(k0, alpha, cfg):
    """Evolve ``k_t = -6 k k_x - k_xxx - 3 alpha^2 d_x^{-1} k_yy``."""
    grid = cfg.grid
    real = np.isrealobj(k0) and abs(np.imag(complex(alpha) ** 2)) == 0
    k0 = np.asarray(k0, float if real else complex)
    _check_mean_profile(grid, k0)
    check_stability(cfg, 6 * np.max(np.abs(k0)))
    L = _kp_symbol(grid, alpha)
    kx, _ = _wavenumbers(grid)
    M = _mask(cfg)
    ikx = 1j * kx
    phys = _physical(real)

    def N(v):
        k = phys(v)
        return -3 * ikx * M * np.fft.fft2(k * k)

    return _solve_dispersive(k0, cfg, L, N, "KP", {"equation": "kp", "alpha": alpha}, real)


def solve_mkp(k0, alpha, cfg):
    """Evolve ``k_t = 6 k^2 k_x - k_xxx + 3 alpha (2 k_x w - alpha w_y)``, ``w = d_x^{-1} k_y``.

    The linear part coincides with the KP symbol.  The nonlinear term is
    projected off the kx = 0 plane so the x-mean stays y-independent and
    ``w`` remains defined; the projection is exact for data of the form
    ``f(x - c y, t)`` and its size is recorded in ``info``.
    """
    grid = cfg.grid
    real = np.isrealobj(k0) and np.imag(alpha) == 0
    k0 = np.asarray(k0, float if real else complex)
    _check_mean_profile(grid, k0)
    L = _kp_symbol(grid, alpha)
    kx, ky = _wavenumbers(grid)
    M = _mask(cfg)
    safe = np.where(kx == 0, 1.0, kx)
    inv_dx = np.where(kx == 0, 0.0, 1 / (1j * safe))
    phys = _physical(real)
    w0 = phys(inv_dx * 1j * ky * np.fft.fft2(k0))
    check_stability(cfg, 6 * np.max(np.abs(k0) ** 2) + 6 * abs(alpha) * np.max(np.abs(w0)))
    keep = kx != 0
    removed = [0.0]

    def N(v):
        k = phys(v)
        kxf = phys(1j * kx * v)
        w = phys(inv_dx * 1j * ky * v)
        out = M * (2j * kx * np.fft.fft2(k**3) + 6 * alpha * np.fft.fft2(kxf * w))
        removed[0] = max(removed[0], float(np.max(np.abs(out[~keep]))) / out.size)
        return np.where(keep, out, 0.0)

    stack = _solve_dispersive(k0, cfg, L, N, "mKP", {"equation": "mkp", "alpha": alpha}, real)
    stack.info["projected_mean_forcing"] = removed[0]
    return stack


def _yoshida_weights():
    c = 2 ** (1 / 3)
    w1 = 1 / (2 - c)
    return (w1, -c * w1, w1)


def solve_ds(q0, alpha, cfg):
    """Evolve ``i q_t + q_xx + alpha^2 q_yy + v q = 0`` with ``p = conj(q)`` and
    ``v`` from ``v_xx - alpha^2 v_yy = -2 (d_x^2 + alpha^2 d_y^2)|q|^2``.

    Requires real ``alpha^2 < 0`` (the elliptic regime, e.g. ``alpha = i``)
    so the v-solve is a Fourier division.
    """
    a2 = complex(alpha) ** 2
    if abs(a2.imag) > 1e-14 or not a2.real < 0:
        raise ValueError("solve_ds needs real alpha^2 < 0 (elliptic regime)")
    if cfg.scheme != "splitstep":
        cfg = replace(cfg, scheme="splitstep")
    a2 = a2.real
    grid = cfg.grid
    kx, ky = _wavenumbers(grid)
    M = _mask(cfg)
    disp = -(kx**2 + a2 * ky**2)
    denom = kx**2 - a2 * ky**2
    vsym = np.where(denom == 0, 0.0, -2 * (kx**2 + a2 * ky**2) / np.where(denom == 0, 1, denom))

    def mean_field(q):
        return np.fft.ifft2(vsym * M * np.fft.fft2(np.abs(q) ** 2)).real

    def strang(q, h):
        q = q * np.exp(0.5j * h * mean_field(q))
        q = np.fft.ifft2(np.exp(1j * h * disp) * np.fft.fft2(q))
        return q * np.exp(0.5j * h * mean_field(q))

    weights = _yoshida_weights()

    def step(q):
        for w in weights:
            q = strang(q, w * cfg.dt)
        return q

    q0 = np.asarray(q0, complex)
    power0 = float(np.sum(np.abs(q0) ** 2)) * grid.dx * grid.dy
    info = {"equation": "ds", "alpha": alpha, "scheme": "splitstep"}
    try:
        times, snaps = _march(q0, step, cfg.n_steps, cfg.save_every, np.asarray, dt=cfg.dt)
    except BlowUp as exc:
        raise _blowup_stack(exc, grid, info) from None
    cell = grid.dx * grid.dy
    info["power_drift"] = float(np.max(np.abs((np.abs(snaps) ** 2).sum(axis=(1, 2)) * cell
                                              - power0)))
    return SolutionStack(times, snaps, grid, info,
                         aux={"v": np.array([mean_field(q) for q in snaps])})


def solve_heisenberg1d(S0, cfg, unit_tol=1e-8):
    """Evolve ``S_t = S x S_xx`` (x-derivatives only) with RK4 and renormalisation.

    ``info["max_drift"]`` is the largest departure of ``|S|`` from 1 seen
    before each projection.
    """
    S0 = np.asarray(S0, float)
    if S0.shape[0] != 3 or S0.shape[1:] != cfg.grid.shape:
        raise ValueError(f"spin data must have shape (3, nx, ny), got {S0.shape}")
    defect = float(np.max(np.abs(np.linalg.norm(S0, axis=0) - 1)))
    if defect > unit_tol:
        raise NonUnitSpin(f"|S0| deviates from 1 by {defect:.3e}")
    grid = cfg.grid
    kx, _ = _wavenumbers(grid)
    if cfg.dt * np.max(kx**2) > 2.5:
        raise ValueError(f"dt = {cfg.dt} exceeds the explicit stability bound "
                         f"{2.5 / np.max(kx**2):.3e}")
    M = _mask(cfg)
    sym = -(kx**2)

    def rhs(S):
        Sxx = np.fft.ifft2(sym * np.fft.fft2(S, axes=(1, 2)), axes=(1, 2)).real
        return np.cross(S, Sxx, axis=0)

    drift = [0.0]

    def step(S):
        h = cfg.dt
        k1 = rhs(S)
        k2 = rhs(S + h / 2 * k1)
        k3 = rhs(S + h / 2 * k2)
        k4 = rhs(S + h * k3)
        S = S + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if cfg.dealias:
            S = np.fft.ifft2(M * np.fft.fft2(S, axes=(1, 2)), axes=(1, 2)).real
        norm = np.linalg.norm(S, axis=0)
        drift[0] = max(drift[0], float(np.max(np.abs(norm - 1))))
        return S / norm

    info = {"equation": "heisenberg1d", "scheme": "rk4"}
    try:
        times, snaps = _march(S0, step, cfg.n_steps, cfg.save_every, np.asarray, dt=cfg.dt)
    except BlowUp as exc:
        raise _blowup_stack(exc, grid, info) from None
    info["max_drift"] = drift[0]
    return SolutionStack(times, snaps, grid, info)

