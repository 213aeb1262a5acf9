"""Frame transport and zero-curvature systems in 1+1 dimensions.

Fields live on a :class:`Grid2` whose second axis is read as time, so
``(x, y)`` below means ``(x, t)``.  Time derivatives are spectral along that
axis unless a time step ``dt`` is passed, in which case arrays carry a
leading stack axis and 4th-order differences are used.

The moving frame is stored as a ``(..., 3, 3)`` matrix whose rows are
``e1, e2, e3``, so transport reads ``E_x = C E`` and ``E_t = G E``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import resample

from .catalog import frame_generators, su2_generators
from .errors import ConstraintViolated, CurvatureObstruction, PoleAtLambda
from .fields import commutator, deriv, residual_norm, t_deriv

COEFFS = ("k", "sigma", "tau", "omega1", "omega2", "omega3")


@dataclass
class CoefficientSet1p1:
    """Normal curvature ``k``, geodesic curvature ``sigma``, geodesic torsion
    ``tau`` and the time-flow coefficients ``omega1..3``."""

    k: object
    sigma: object = 0.0
    tau: object = 0.0
    omega1: object = 0.0
    omega2: object = 0.0
    omega3: object = 0.0
    beta: int = 1

    def __post_init__(self):
        if self.beta not in (1, -1):
            raise ValueError(f"beta must be +1 or -1, got {self.beta}")
        arrays = [np.asarray(getattr(self, n)) for n in COEFFS]
        shape = np.broadcast_shapes(*(a.shape for a in arrays))
        for n, a in zip(COEFFS, arrays):
            setattr(self, n, np.broadcast_to(a, shape))
            if not np.all(np.isfinite(a)):
                raise ValueError(f"coefficient {n} has non-finite values")

    @property
    def shape(self):
        return self.k.shape


def _combine(basis, coeffs):
    out = 0
    for B, c in zip(basis, coeffs):
        out = out + np.asarray(c)[..., None, None] * B
    return out


def frame_matrices(c):
    """3x3 transport matrices ``(C, G)`` with the signature placed as in the
    frame equations (``C[1,0] = -beta k``, ``C[2,0] = beta sigma``)."""
    Ek, Es, Et = frame_generators(c.beta)
    C = _combine((Ek, Es, Et), (c.k, c.sigma, c.tau))
    G = _combine((Ek, Es, Et), (c.omega3, c.omega2, c.omega1))
    return C, G


def to_su2(c, signature=False):
    """2x2 form ``U = (1/2i)[[tau, k - i sigma], [k + i sigma, -tau]]`` and the
    analogous ``V`` built from the omegas.

    The printed 2x2 form represents the 3x3 algebra only for ``beta = 1``.
    With ``signature=True`` and ``beta = -1`` the off-diagonal generators are
    multiplied by ``sqrt(beta) = i``, which gives a representation of the
    ``beta = -1`` algebra instead.
    """
    t1, t2, t3 = su2_generators()
    s = 1j if (signature and c.beta == -1) else 1.0
    U = _combine((s * t1, s * t2, t3), (c.k, c.sigma, c.tau))
    V = _combine((s * t1, s * t2, t3), (c.omega3, c.omega2, c.omega1))
    return U, V


def zero_curvature_residual_1p1(Mx, Mt, grid, dt=None, name="zero-curvature"):
    """Residual ``Mx_t - Mt_x + [Mx, Mt]``."""
    Mx = np.asarray(Mx)
    Mt = np.asarray(Mt)
    dMx, crop = t_deriv(grid, Mx, dt)
    res = dMx - crop(deriv(grid, Mt, "x")) + crop(commutator(Mx, Mt))
    return residual_norm(res, name)


def coeffs_from_su2(U, V, beta=1):
    """Invert :func:`to_su2` (literal form) back to a coefficient set."""
    U, V = np.asarray(U), np.asarray(V)

    def split(M):
        return (1j * (M[..., 0, 1] + M[..., 1, 0]), M[..., 1, 0] - M[..., 0, 1],
                2j * M[..., 0, 0])

    k, sigma, tau = split(U)
    w3, w2, w1 = split(V)
    parts = [k, sigma, tau, w1, w2, w3]
    if all(np.max(np.abs(np.imag(a)), initial=0.0) < 1e-12 * max(1.0, np.max(np.abs(a)))
           for a in parts):
        parts = [np.real(a) for a in parts]
    return CoefficientSet1p1(*parts, beta=beta)


def structure_residuals(c, grid, dt=None, signature=False):
    """Zero-curvature residuals of the 3x3 and 2x2 forms of the same coefficients."""
    C, G = frame_matrices(c)
    U, V = to_su2(c, signature)
    return (zero_curvature_residual_1p1(C, G, grid, dt, "so3-form"),
            zero_curvature_residual_1p1(U, V, grid, dt, "su2-form"))


# ---- frame transport --------------------------------------------------------

@dataclass
class FrameField1p1:
    grid: object
    E: np.ndarray       # (nx, nt, 3, 3), rows e1, e2, e3
    beta: int = 1

    @property
    def eta(self):
        return np.diag([float(self.beta), 1.0, 1.0])

    @property
    def e1(self):
        return self.E[..., 0, :]

    @property
    def e2(self):
        return self.E[..., 1, :]

    @property
    def e3(self):
        return self.E[..., 2, :]

    def gram(self):
        """Pairings of the frame vectors in the ambient metric ``diag(beta, 1, 1)``."""
        return self.E @ self.eta @ np.swapaxes(self.E, -1, -2)

    def gram_drift(self):
        return float(np.max(np.abs(self.gram() - self.eta)))

    def orientation(self):
        return np.sign(np.linalg.det(self.E))


def _fine(M, axis, factor):
    """Trigonometric interpolation onto a grid ``factor`` times finer."""
    n = M.shape[axis]
    return resample(M, n * factor, axis=axis)


def _rk4_line(M_fine, E0, substeps, renormalize, eta):
    """Integrate ``E' = M E`` through the samples of ``M_fine`` (axis 0).

    ``M_fine`` holds ``2*substeps`` samples per grid cell; returns the frame at
    every coarse grid point.
    """
    n_fine = M_fine.shape[0]
    n = n_fine // (2 * substeps)
    out = np.empty((n,) + E0.shape, dtype=np.result_type(M_fine, E0))
    E = E0.astype(out.dtype)
    out[0] = E
    # step length in units of the coarse spacing is folded into M_fine by the caller
    for i in range(n - 1):
        for s in range(substeps):
            j = 2 * (i * substeps + s)
            M0, Mh, M1 = M_fine[j], M_fine[j + 1], M_fine[j + 2]
            k1 = M0 @ E
            k2 = Mh @ (E + 0.5 * k1)
            k3 = Mh @ (E + 0.5 * k2)
            k4 = M1 @ (E + k3)
            E = E + (k1 + 2 * k2 + 2 * k3 + k4) / 6
            if renormalize:
                E = 0.5 * (3 * np.eye(3) - E @ eta @ np.swapaxes(E, -1, -2) @ eta) @ E
        out[i + 1] = E
    return out


def _auto_substeps(M, h, max_step):
    scale = float(np.max(np.abs(M), initial=0.0)) * h
    return max(2, int(np.ceil(scale / max_step)))


def integrate_frame_1p1(c, grid, frame0=None, substeps=None, renormalize=False,
                        check=True, tol=1e-6, max_step=0.02):
    """Transport a frame along x at ``t = 0``, then along t from every x.

    The coefficient matrices are evaluated between grid points by
    trigonometric interpolation and each cell is crossed with several
    classical RK4 steps (by default enough that ``h * max|M| <= max_step``).
    No re-orthonormalisation happens unless asked for, so ``gram_drift`` of
    the result measures the integration error.
    """
    C, G = frame_matrices(c)
    if check:
        rep = zero_curvature_residual_1p1(C, G, grid, name="transport-compatibility")
        if rep.linf > tol:
            raise CurvatureObstruction(
                f"coefficients are not compatible (residual {rep.linf:.3e} > {tol:g})", rep)
    E0 = np.eye(3) if frame0 is None else np.asarray(frame0)
    eta = np.diag([float(c.beta), 1.0, 1.0])
    sx = substeps or _auto_substeps(C[:, 0], grid.dx, max_step)
    Cf = _fine(C[:, 0], 0, 2 * sx) * (grid.dx / sx)
    Cf = np.concatenate([Cf, Cf[:1]])
    col = _rk4_line(Cf, E0, sx, renormalize, eta)
    st = substeps or _auto_substeps(G, grid.dy, max_step)
    Gf = _fine(G, 1, 2 * st) * (grid.dy / st)
    Gf = np.concatenate([Gf, Gf[:, :1]], axis=1)
    E = _rk4_line(np.moveaxis(Gf, 1, 0), col, st, renormalize, eta)
    return FrameField1p1(grid, np.moveaxis(E, 0, 1), c.beta)


# ---- lambda expansions and named spectral problems --------------------------

@dataclass
class LambdaExpansion:
    """Coefficients as finite series in a spectral parameter.

    ``terms[name]`` is either a mapping ``j -> field`` (powers ``lambda**j``)
    or a list of ``(h, field)`` pairs with ``h`` a callable of ``lambda``.
    """

    terms: dict = field(default_factory=dict)
    beta: int = 1

    def coefficient(self, name, lam):
        spec = self.terms.get(name)
        if spec is None:
            return 0.0
        pairs = spec.items() if isinstance(spec, dict) else spec
        total = 0.0
        for key, value in pairs:
            weight = lam ** key if not callable(key) else key(lam)
            total = total + weight * np.asarray(value)
        return total

    def evaluate(self, lam):
        unknown = set(self.terms) - set(COEFFS)
        if unknown:
            raise KeyError(f"unknown coefficient names {sorted(unknown)}")
        return CoefficientSet1p1(*(self.coefficient(n, lam) for n in COEFFS), beta=self.beta)


def _assert_equal(a, b, what, tol=1e-12):
    scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))
    err = float(np.max(np.abs(a - b), initial=0.0))
    if err > tol * scale:
        raise ArithmeticError(f"{what}: assembled forms differ by {err:.3e}")


def zs_akns_direct(p, q, lam):
    p, q = np.broadcast_arrays(np.asarray(p, complex), np.asarray(q, complex))
    out = np.zeros(p.shape + (2, 2), complex)
    out[..., 0, 0] = 1j * lam
    out[..., 0, 1] = q
    out[..., 1, 0] = p
    out[..., 1, 1] = -1j * lam
    return out


def zs_akns(p, q, lam):
    """ZS-AKNS operator: ``k0 = i(p+q)``, ``sigma0 = p-q``, ``tau1 = -2`` through
    the 2x2 form, checked against ``[[i lam, q], [p, -i lam]]``."""
    p, q = np.asarray(p, complex), np.asarray(q, complex)
    ex = LambdaExpansion({"k": {0: 1j * (p + q)}, "sigma": {0: p - q}, "tau": {1: -2.0}})
    U, _ = to_su2(ex.evaluate(lam))
    _assert_equal(U, zs_akns_direct(p, q, lam), "zs-akns")
    return U


def akns_nls_pair(p, q, lam, grid):
    """ZS-AKNS operator with its NLS time partner.

    ``V = [[-2i lam^2 - i q p, -2 lam q + i q_x], [-2 lam p - i p_x, 2i lam^2 + i q p]]``;
    zero curvature is ``q_t = i q_xx - 2i q^2 p``, ``p_t = -i p_xx + 2i p^2 q``.
    With ``p = -conj(q)`` this is the focusing NLS ``i q_t + q_xx + 2|q|^2 q = 0``.
    """
    p, q = np.asarray(p, complex), np.asarray(q, complex)
    U = zs_akns(p, q, lam)
    V = np.zeros_like(U)
    V[..., 0, 0] = -2j * lam**2 - 1j * q * p
    V[..., 0, 1] = -2 * lam * q + 1j * deriv(grid, q, "x")
    V[..., 1, 0] = -2 * lam * p - 1j * deriv(grid, p, "x")
    V[..., 1, 1] = -V[..., 0, 0]
    return U, V


def wki_direct(p, q, lam):
    return lam * zs_akns_direct(p, q, 1.0)


def wki(p, q, lam):
    """WKI operator: every coefficient carried at first order in lambda."""
    p, q = np.asarray(p, complex), np.asarray(q, complex)
    ex = LambdaExpansion({"k": {1: 1j * (p + q)}, "sigma": {1: p - q}, "tau": {1: -2.0}})
    U, _ = to_su2(ex.evaluate(lam))
    _assert_equal(U, wki_direct(p, q, lam), "wki")
    return U


def chiral_pair(u, v, lam):
    """``U = u / (1 - lam)``, ``V = v / (1 + lam)``."""
    if np.isclose(lam, 1.0) or np.isclose(lam, -1.0):
        raise PoleAtLambda(f"chiral pair has a pole at lambda = {lam}")
    return np.asarray(u) / (1 - lam), np.asarray(v) / (1 + lam)


def chiral_residual(u, v, grid, dt=None):
    """Residuals of ``u_t + [u,v]/2`` and ``v_x - [u,v]/2``."""
    u, v = np.asarray(u), np.asarray(v)
    ut, crop = t_deriv(grid, u, dt)
    br = crop(commutator(u, v))
    return (residual_norm(ut + 0.5 * br, "chiral-u"),
            residual_norm(crop(deriv(grid, v, "x")) - 0.5 * br, "chiral-v"))


# ---- spin reduction ---------------------------------------------------------

@dataclass
class SpinField:
    S: np.ndarray            # (3, ...)
    signs: tuple = (1, 1)
    n: object = 1.0

    def constraint(self):
        s1, s2 = self.signs
        return self.S[2] ** 2 + s1 * self.S[0] ** 2 + s2 * self.S[1] ** 2


def spin_from_coeffs(k, sigma, tau, n, signs=(1, 1), tol=1e-8):
    """``S = (k, sigma, tau) / n`` after checking ``tau^2 + s1 k^2 + s2 sigma^2 = n^2``."""
    k, sigma, tau = np.broadcast_arrays(*(np.asarray(a, float) for a in (k, sigma, tau)))
    n = np.asarray(n, float)
    s1, s2 = signs
    gap = np.max(np.abs(tau**2 + s1 * k**2 + s2 * sigma**2 - n**2), initial=0.0)
    if gap > tol:
        raise ConstraintViolated(f"tau^2 + s1 k^2 + s2 sigma^2 misses n^2 by {gap:.3e}")
    return SpinField(np.array([k, sigma, tau]) / n, tuple(signs), n)


def spin_matrix(S):
    """``[[S3, S1 - i S2], [S1 + i S2, -S3]]``."""
    S = S.S if isinstance(S, SpinField) else np.asarray(S)
    out = np.zeros(S.shape[1:] + (2, 2), complex)
    out[..., 0, 0] = S[2]
    out[..., 0, 1] = S[0] - 1j * S[1]
    out[..., 1, 0] = S[0] + 1j * S[1]
    out[..., 1, 1] = -S[2]
    return out


def spin_algebra_element(S):
    """``S1 t1 + S2 t2 + S3 t3`` with ``t_j = sigma_j / 2i``, i.e. ``spin_matrix / 2i``."""
    return spin_matrix(S) / 2j


def heisenberg_pair(S, n, grid):
    """Lax pair ``U = n s``, ``V = -n^2 s + n [s, s_x]`` for ``S_t = S x S_xx``,
    where ``s`` is :func:`spin_algebra_element`."""
    s = spin_algebra_element(S)
    return n * s, -n**2 * s + n * commutator(s, deriv(grid, s, "x"))


def m0_residual_1p1(S, V, n, grid, dt=None, paper_literal=False):
    """Residual ``s_t - V_x / n + [s, V]``.

    By default ``s`` is the algebra element ``spin_matrix / 2i``, which is the
    normalisation in which ``U = n s`` reproduces the zero-curvature equation.
    ``paper_literal=True`` uses the bare spin matrix instead.
    """
    Sm = spin_matrix(S) if paper_literal else spin_algebra_element(S)
    V = np.asarray(V)
    St, crop = t_deriv(grid, Sm, dt)
    res = St - crop(deriv(grid, V, "x")) / n + crop(commutator(Sm, V))
    return residual_norm(res, "m0-1p1")
