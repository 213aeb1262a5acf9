"""Closed-form data used as oracles: smooth trigonometric fields, Lie-group
valued fields with exact derivatives, and the named exact solutions."""

import numpy as np

from .errors import UnknownName
from .fields import Grid2


class SmoothFunction:
    """Finite sum ``sum c * sin(a x + b y + w t + phi)`` periodic on a grid.

    All partial derivatives are available in closed form, which lets tests
    compare numerical derivatives against exact ones.
    """

    def __init__(self, amps, ax, by, wt, phases, const=0.0):
        self.amps = np.asarray(amps, float)
        self.ax = np.asarray(ax, float)
        self.by = np.asarray(by, float)
        self.wt = np.asarray(wt, float)
        self.phases = np.asarray(phases, float)
        self.const = const

    @classmethod
    def random(cls, rng, grid, n_terms=4, max_mode=3, amp=1.0, omega=1.0, const=0.0,
               y_dependent=True):
        mx = rng.integers(-max_mode, max_mode + 1, n_terms)
        my = rng.integers(-max_mode, max_mode + 1, n_terms) if y_dependent else np.zeros(n_terms)
        # avoid accidental constants
        mx = np.where((mx == 0) & (my == 0), 1, mx)
        return cls(amp * rng.uniform(-1, 1, n_terms) / np.sqrt(n_terms),
                   2 * np.pi * mx / grid.Lx, 2 * np.pi * my / grid.Ly,
                   omega * rng.uniform(-1, 1, n_terms), rng.uniform(0, 2 * np.pi, n_terms),
                   const)

    def __call__(self, X, Y, T=0.0, dx=0, dy=0, dt=0):
        X, Y, T = np.broadcast_arrays(*(np.asarray(v, float) for v in (X, Y, T)))
        out = np.zeros(X.shape)
        n = dx + dy + dt
        for c, a, b, w, ph in zip(self.amps, self.ax, self.by, self.wt, self.phases):
            out += c * a**dx * b**dy * w**dt * np.sin(a * X + b * Y + w * T + ph + n * np.pi / 2)
        if n == 0:
            out += self.const
        return out


def space_time_mesh(grid, times):
    """Broadcastable ``(T, X, Y)`` arrays of shape ``(nt, nx, ny)``."""
    X, Y = grid.mesh()
    T = np.asarray(times, float)[:, None, None]
    return np.broadcast_arrays(T, X[None], Y[None])


def random_matrix_stack(rng, grid, times, dim=3, complex_entries=False, **kw):
    """Matrix field stack ``(nt, nx, ny, d, d)`` with smooth random entries."""
    T, X, Y = space_time_mesh(grid, times)
    out = np.zeros(T.shape + (dim, dim), dtype=complex if complex_entries else float)
    for a in range(dim):
        for b in range(dim):
            out[..., a, b] = SmoothFunction.random(rng, grid, **kw)(X, Y, T)
            if complex_entries:
                out[..., a, b] += 1j * SmoothFunction.random(rng, grid, **kw)(X, Y, T)
    return out


def frame_generators(beta=1):
    """Basis matrices multiplying k, sigma, tau in the frame-transport pattern."""
    Ek = np.array([[0, 1, 0], [-beta, 0, 0], [0, 0, 0]], float)
    Es = np.array([[0, 0, -1], [0, 0, 0], [beta, 0, 0]], float)
    Et = np.array([[0, 0, 0], [0, 0, 1], [0, -1, 0]], float)
    return Ek, Es, Et


def su2_generators():
    """``sigma_j / (2i)`` for the Pauli matrices, so ``[t_a, t_b] = eps_abc t_c``."""
    sx = np.array([[0, 1], [1, 0]], complex)
    sy = np.array([[0, -1j], [1j, 0]], complex)
    sz = np.array([[1, 0], [0, -1]], complex)
    return tuple(s / 2j for s in (sx, sy, sz))


class ExpProductField:
    """``g = exp(f_1 G_1) exp(f_2 G_2) ...`` with smooth scalar ``f_i``.

    Each generator is diagonalised once, so both ``g`` and its partial
    derivatives are evaluated in closed form (no numerical differentiation).
    """

    def __init__(self, generators, funcs):
        if len(generators) != len(funcs):
            raise ValueError("one function per generator")
        self.generators = [np.asarray(G) for G in generators]
        self.funcs = list(funcs)
        self._eig = []
        for G in self.generators:
            lam, P = np.linalg.eig(G)
            self._eig.append((lam, P, np.linalg.inv(P)))
        self.real = all(np.isrealobj(G) for G in self.generators)

    @classmethod
    def random(cls, rng, grid, generators, amp=0.8, **kw):
        return cls(generators, [SmoothFunction.random(rng, grid, amp=amp, **kw)
                                for _ in generators])

    def _factor(self, i, f):
        lam, P, Pinv = self._eig[i]
        return np.einsum("ab,...b,bc->...ac", P, np.exp(f[..., None] * lam), Pinv)

    def _cast(self, m):
        return m.real if self.real else m

    def evaluate(self, X, Y, T=0.0):
        """Return ``(g, {"x": g_x, "y": g_y, "t": g_t})``."""
        X, Y, T = np.broadcast_arrays(*(np.asarray(v, float) for v in (X, Y, T)))
        factors = [self._factor(i, f(X, Y, T)) for i, f in enumerate(self.funcs)]
        d = self.generators[0].shape[0]
        eye = np.broadcast_to(np.eye(d), X.shape + (d, d))
        left = [eye]
        for F in factors:
            left.append(left[-1] @ F)
        right = [eye]
        for F in reversed(factors):
            right.append(F @ right[-1])
        right = right[::-1]
        g = left[-1]
        derivs = {}
        for name, kw in (("x", {"dx": 1}), ("y", {"dy": 1}), ("t", {"dt": 1})):
            acc = np.zeros_like(g)
            for i, f in enumerate(self.funcs):
                fp = f(X, Y, T, **kw)[..., None, None]
                acc = acc + left[i] @ (fp * self.generators[i]) @ factors[i] @ right[i + 1]
            derivs[name] = self._cast(acc)
        return self._cast(g), derivs


def random_rotation_field(rng, grid, times, beta=1, amp=0.8, **kw):
    """Frame matrix field (rows e1, e2, e3) with exact derivatives."""
    field = ExpProductField.random(rng, grid, frame_generators(beta), amp=amp, **kw)
    T, X, Y = space_time_mesh(grid, times)
    return field.evaluate(X, Y, T)


# ---- named exact solutions -------------------------------------------------

def kdv_soliton(grid, kappa=1.0, x0=None, t=0.0):
    """``2 kappa^2 sech^2(kappa (x - x0 - 4 kappa^2 t))``, independent of y."""
    x0 = grid.Lx / 2 if x0 is None else x0
    X, _ = grid.mesh()
    return 2 * kappa**2 / np.cosh(kappa * (X - x0 - 4 * kappa**2 * t)) ** 2


def ds_plane_wave(grid, amplitude=0.5, mode=(1, 1), alpha2=-1.0, v0=0.0, t=0.0):
    """Plane wave for the DS system with ``p = conj(q)`` and constant ``v``.

    Returns ``(q, p, v, omega)`` where ``omega = kx^2 + alpha^2 ky^2 - v0``.
    """
    X, Y = grid.mesh()
    kx = 2 * np.pi * mode[0] / grid.Lx
    ky = 2 * np.pi * mode[1] / grid.Ly
    omega = kx**2 + alpha2 * ky**2 - v0
    q = amplitude * np.exp(1j * (kx * X + ky * Y - omega * t))
    return q, np.conj(q), np.full(grid.shape, float(v0)), omega


def sphere_chart(grid, radius=2.0, axis="z"):
    """``R (sin u1 cos u2, sin u1 sin u2, cos u1)`` on the periodic square.

    The chart covers the sphere twice and is singular at ``sin u1 = 0``.
    ``axis="x"`` permutes components so the chart poles lie on the x-axis.
    """
    U1, U2 = grid.mesh()
    r = radius * np.array([np.sin(U1) * np.cos(U2), np.sin(U1) * np.sin(U2), np.cos(U1)])
    if axis == "x":
        r = r[[2, 0, 1]]
    return r


def torus_chart(grid, major=2.0, minor=1.0):
    U1, U2 = grid.mesh()
    rho = major + minor * np.cos(U1)
    return np.array([rho * np.cos(U2), rho * np.sin(U2), minor * np.sin(U1)])


def cylinder_chart(grid, radius=1.0):
    """Returns ``(r_periodic, linear)``; the axial coordinate is the linear part."""
    U1, _ = grid.mesh()
    r = np.array([radius * np.cos(U1), radius * np.sin(U1), np.zeros(grid.shape)])
    linear = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    return r, linear


def flat_triple(grid, times, generators, seed=0, amp=0.5, omega=1.0):
    """``g`` and ``A = g_x g^-1``, ``B = g_y g^-1``, ``D = g_t g^-1`` for a product
    of exponentials; the triple satisfies every zero-curvature equation exactly."""
    field = ExpProductField.random(np.random.default_rng(seed), grid, generators, amp=amp,
                                   omega=omega)
    T, X, Y = space_time_mesh(grid, times)
    g, d = field.evaluate(X, Y, T)
    gi = np.linalg.inv(g)
    return g, d["x"] @ gi, d["y"] @ gi, d["t"] @ gi


class LinearX:
    """``a x`` with the :class:`SmoothFunction` calling convention (not periodic)."""

    def __init__(self, a):
        self.a = a

    def __call__(self, X, Y, T=0.0, dx=0, dy=0, dt=0):
        X = np.asarray(X, float)
        if dx == dy == dt == 0:
            return self.a * X
        if (dx, dy, dt) == (1, 0, 0):
            return self.a * np.ones_like(X)
        return np.zeros_like(X)


def m0_gauge_field(grid, times, a=1.0, seed=0, amp=0.6):
    """``psi = Q(y, t) exp(a x E_k)`` with ``Q`` a random rotation in (y, t).

    Returns ``(psi, d)`` with closed-form derivatives ``d["x" | "y" | "t"]``;
    ``psi_x psi^-1`` is ``a`` times a unit spin matrix everywhere.
    """
    Ek, Es, Et = frame_generators(1)
    rng = np.random.default_rng(seed)
    funcs = []
    for _ in range(3):
        f = SmoothFunction.random(rng, grid, amp=amp, y_dependent=True)
        f.ax = 0 * f.ax
        funcs.append(f)
    field = ExpProductField([Ek, Es, Et, Ek], funcs + [LinearX(a)])
    T, X, Y = space_time_mesh(grid, times)
    return field.evaluate(X, Y, T)


def pure_gauge_connection(grid, times, rng, amp=0.6):
    """Flat connection ``A_mu = -phi^{-1} d_mu phi`` (gauge image of zero)."""
    from .sdym import connection_from_gauge

    phi = ExpProductField.random(rng, grid, su2_generators(), amp=amp)
    T, X, Y = space_time_mesh(grid, times)
    g, d = phi.evaluate(X, Y, T)
    return connection_from_gauge(g, d, grid, float(times[1] - times[0]))


CATALOG = ("kdv-soliton", "ds-plane-wave", "constant-spin", "sphere-chart",
           "cylinder-chart", "torus-chart", "pure-gauge-connection")


def exact_catalog(name, grid=None, **params):
    """Named closed-form data, returned as a dict with a ``note`` entry."""
    grid = grid or Grid2(64, 64)
    if name == "kdv-soliton":
        kappa = params.get("kappa", 1.0)
        return {"k": kdv_soliton(grid, kappa, params.get("x0"), params.get("t", 0.0)),
                "note": f"2 kappa^2 sech^2(kappa(x - x0 - 4 kappa^2 t)), kappa={kappa}"}
    if name == "ds-plane-wave":
        q, p, v, om = ds_plane_wave(grid, **params)
        return {"q": q, "p": p, "v": v, "omega": om,
                "note": "q = A exp(i(kx x + ky y - omega t)), omega = kx^2 + alpha^2 ky^2 - v0"}
    if name == "constant-spin":
        S = np.zeros((3,) + grid.shape)
        S[2] = 1.0
        return {"S": S, "note": "S = (0, 0, 1)"}
    if name == "sphere-chart":
        R = params.get("radius", 2.0)
        return {"r": sphere_chart(grid, R, params.get("axis", "z")),
                "note": f"sphere of radius {R}, doubly covering periodic chart"}
    if name == "torus-chart":
        return {"r": torus_chart(grid, params.get("major", 2.0), params.get("minor", 1.0)),
                "note": "torus of revolution"}
    if name == "cylinder-chart":
        r, lin = cylinder_chart(grid, params.get("radius", 1.0))
        return {"r": r, "linear": lin, "note": "unit cylinder, axial coordinate linear"}
    if name == "pure-gauge-connection":
        rng = np.random.default_rng(params.get("seed", 0))
        times = params.get("times", np.arange(9) * 1e-2)
        return {"connection": pure_gauge_connection(grid, times, rng),
                "note": "A_mu = -phi^{-1} d_mu phi with phi a product of SU(2) exponentials"}
    raise UnknownName(name)
