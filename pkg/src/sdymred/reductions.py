"""Named reductions of the 2+1 frame system.

Covers the spin/DS pair (Ishimori and Davey-Stewartson), the spin flow
whose plane-case counterpart is KP, the modified KP equation and its Miura
link to KP, and the constrained spin system obtained by a gauge change of
frame.

Shapes follow :mod:`sdymred.fields`: scalar stacks are ``(nt, nx, ny)``,
spin stacks ``(nt, 3, nx, ny)`` (component axis third from the end) and
matrix stacks ``(nt, nx, ny, d, d)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (ConstraintViolated, DivisionBySmallK, MissingTimeStack, NonOrthogonalGauge,
                     NonUnitSpin, StructureMismatch)
from .fields import (commutator, ddt, deriv, interior, inv_deriv_x, residual_norm, x_mean_free)

K_FLOOR = 1e-8
UNIT_TOL = 1e-8


def _need_dt(dt, what):
    if dt is None:
        raise MissingTimeStack(f"{what} needs a time stack and dt")


def _check_k(k):
    small = np.min(np.abs(k)) if np.size(k) else np.inf
    if small <= K_FLOOR:
        raise DivisionBySmallK(f"|k| falls to {small:.3e} (floor {K_FLOOR:g})")


def _cross(a, b):
    return np.cross(a, b, axis=-3)


def _dot(a, b):
    return np.sum(a * b, axis=-3)


# ---- spin model and DS pair -------------------------------------------------

@dataclass
class SpinField2p1:
    """Unit spin stack ``S`` with the auxiliary potential ``u``."""

    S: np.ndarray
    u: np.ndarray
    alpha: complex = 1.0

    def __post_init__(self):
        self.S = np.asarray(self.S, float)
        self.u = np.asarray(self.u)
        if self.S.ndim < 3 or self.S.shape[-3] != 3:
            raise ValueError(f"spin field needs a length-3 component axis, got {self.S.shape}")

    def unit_defect(self):
        return float(np.max(np.abs(np.sqrt(_dot(self.S, self.S)) - 1)))


def ishimori_residual(sf, grid, dt):
    """Residuals of the spin equation and of the potential equation.

    ``S_t - S x (S_xx + a^2 S_yy) - u_x S_y - u_y S_x`` and
    ``u_xx - a^2 u_yy + 2 a^2 S . (S_x x S_y)``; both on interior slices.
    """
    if sf.unit_defect() > UNIT_TOL:
        raise NonUnitSpin(f"|S| deviates from 1 by {sf.unit_defect():.3e}")
    _need_dt(dt, "the spin equation")
    S, u, a2 = sf.S, sf.u, sf.alpha**2
    Sx, Sy = deriv(grid, S, "x"), deriv(grid, S, "y")
    ux, uy = deriv(grid, u, "x"), deriv(grid, u, "y")
    lap = deriv(grid, S, "x", 2) + a2 * deriv(grid, S, "y", 2)
    rhs = _cross(S, lap) + ux[..., None, :, :] * Sy + uy[..., None, :, :] * Sx
    r1 = ddt(S, dt) - interior(rhs)
    r2 = (deriv(grid, u, "x", 2) - a2 * deriv(grid, u, "y", 2)
          + 2 * a2 * _dot(S, _cross(Sx, Sy)))
    return [residual_norm(r1, "ishimori-spin"), residual_norm(interior(r2), "ishimori-potential")]


def ishimori_operator(u, alpha, grid):
    """``u_xx - alpha^2 u_yy``."""
    return deriv(grid, u, "x", 2) - alpha**2 * deriv(grid, u, "y", 2)


def ishimori_coefficients(k, tau, u, alpha, grid, beta=1):
    """y- and t-coefficients of the frame carried by the spin model.

    Returns ``(m1, m2, m3), (omega1, omega2, omega3)``; ``omega2`` is
    evaluated before ``omega1``, which depends on its x-derivative.
    """
    k, tau, u = (np.asarray(f) for f in (k, tau, u))
    _check_k(k)
    a2 = alpha**2
    Mu = ishimori_operator(u, alpha, grid)
    m2 = -Mu / (2 * a2 * k)
    m1 = inv_deriv_x(grid, deriv(grid, tau, "y") - beta / (2 * a2) * Mu)
    m3 = inv_deriv_x(grid, deriv(grid, k, "y") + tau / (2 * a2 * k) * Mu)
    ux, uy = deriv(grid, u, "x"), deriv(grid, u, "y")
    w2 = -deriv(grid, k, "x") - a2 * (deriv(grid, m3, "y") + m2 * m1) + 1j * m2 * ux
    w3 = -k * tau + a2 * (deriv(grid, m2, "y") - m3 * m1) + 1j * k * uy + 1j * m3 * ux
    w1 = (-deriv(grid, w2, "x") + tau * w3) / k
    return (m1, m2, m3), (w1, w2, w3)


@dataclass
class PhaseSources:
    """Extra phase terms entering the DS phases; zero unless supplied."""

    A: object = 0.0
    Abar: object = 0.0
    D: object = 0.0
    Dbar: object = 0.0


@dataclass
class DSFields:
    q: np.ndarray
    p: np.ndarray
    v: np.ndarray = None
    alpha: complex = 1j
    notes: dict = field(default_factory=dict)


def ds_moduli(k, m2, m3, alpha):
    """Squared moduli ``(a1^2, a2^2)`` of ``q`` and ``p``."""
    aR, aI = np.real(alpha), np.imag(alpha)
    base = 0.25 * k**2 + 0.25 * abs(alpha) ** 2 * (m3**2 + m2**2)
    return (base - 0.5 * aR * k * m3 - 0.5 * aI * k * m2,
            base + 0.5 * aR * k * m3 - 0.5 * aI * k * m2)


def ds_gammas(k, tau, m1, m2, m3, alpha, grid):
    aR, aI = np.real(alpha), np.imag(alpha)
    kx, ky = deriv(grid, k, "x"), deriv(grid, k, "y")
    common = 0.5 * k**2 * tau + 0.5 * abs(alpha) ** 2 * (m3 * k * m1 + m2 * ky)
    real_part = 0.5 * aR * (k**2 * m1 + m3 * k * tau + m2 * kx)
    imag_part = 0.5 * aI * (k * (2 * ky - deriv(grid, m3, "x")) - kx * m3)
    return 1j * (common - real_part + imag_part), -1j * (common + real_part + imag_part)


def ds_construct(k, tau, m1, m2, m3, alpha, grid, phases=None, phase_mean="raise",
                 tol=1e-12):
    """Build ``q = a1 exp(i b1)``, ``p = a2 exp(i b2)`` from frame coefficients.

    The moduli use the nonnegative root; a radicand below ``-tol`` (relative)
    raises ConstraintViolated.  The phases are x-antiderivatives, so their
    integrands must have zero x-mean; ``phase_mean="drop"`` removes the mean
    first and records its size in ``notes`` (the moduli are unaffected).
    """
    k, tau, m1, m2, m3 = (np.asarray(f, float) for f in (k, tau, m1, m2, m3))
    ph = phases or PhaseSources()
    a1sq, a2sq = ds_moduli(k, m2, m3, alpha)
    scale = max(1.0, float(np.max(np.abs(a1sq))), float(np.max(np.abs(a2sq))))
    worst = min(float(np.min(a1sq)), float(np.min(a2sq)))
    if worst < -tol * scale:
        raise ConstraintViolated(f"squared modulus is negative ({worst:.3e})")
    a1sq, a2sq = np.maximum(a1sq, 0.0), np.maximum(a2sq, 0.0)
    g1, g2 = ds_gammas(k, tau, m1, m2, m3, alpha, grid)
    A, Ab, D, Db = (np.asarray(v) for v in (ph.A, ph.Abar, ph.D, ph.Dbar))

    def phase_integrand(gamma, asq, extra):
        safe = np.where(asq > 0, asq, 1.0)
        f = np.where(asq > 0, -gamma / (2j * safe), 0.0) - extra
        return np.real_if_close(f, tol=1000)

    f1 = phase_integrand(g1, a1sq, Ab - A + D - Db)
    f2 = phase_integrand(g2, a2sq, A - Ab + Db - D)
    notes = {}
    if phase_mean == "drop":
        notes["dropped_phase_mean"] = float(max(np.max(np.abs(f1 - x_mean_free(grid, f1))),
                                                np.max(np.abs(f2 - x_mean_free(grid, f2)))))
        f1, f2 = x_mean_free(grid, f1), x_mean_free(grid, f2)
    elif phase_mean != "raise":
        raise ValueError("phase_mean must be 'raise' or 'drop'")
    b1, b2 = inv_deriv_x(grid, f1), inv_deriv_x(grid, f2)
    q = np.sqrt(a1sq) * np.exp(1j * b1)
    p = np.sqrt(a2sq) * np.exp(1j * b2)
    return DSFields(q, p, None, alpha, notes)


def ds_residual(ds, grid, dt):
    """Residuals of the two DS evolution equations and the mean-field equation."""
    _need_dt(dt, "the DS system")
    if ds.v is None:
        raise ValueError("DS residual needs the mean field v")
    q, p, v, a2 = ds.q, ds.p, ds.v, ds.alpha**2

    def disp(f):
        return deriv(grid, f, "x", 2) + a2 * deriv(grid, f, "y", 2)

    r1 = 1j * ddt(q, dt) + interior(disp(q) + v * q)
    r2 = -1j * ddt(p, dt) + interior(disp(p) + v * p)
    pq = p * q
    r3 = (deriv(grid, v, "x", 2) - a2 * deriv(grid, v, "y", 2) + 2 * disp(pq))
    return [residual_norm(r1, "ds-q"), residual_norm(r2, "ds-p"),
            residual_norm(interior(r3), "ds-v")]


# ---- plane case: spin flow, KP, mKP, Miura ----------------------------------

def mx_omega3(k, m3, alpha, grid, paper_literal=False):
    """``-k_xx - 3k^2 - 3 alpha^2 d_x^{-1} m3_y`` (``+3 alpha^2`` with ``paper_literal``)."""
    s = 1.0 if paper_literal else -1.0
    return (-deriv(grid, k, "x", 2) - 3 * k**2
            + s * 3 * alpha**2 * inv_deriv_x(grid, deriv(grid, m3, "y")))


def mx_residual(S, k, m3, alpha, grid, dt, paper_literal=False):
    """Residual of ``S_t - (omega3 / k) S_x``."""
    _need_dt(dt, "the spin flow")
    S, k = np.asarray(S), np.asarray(k)
    _check_k(k)
    w3 = mx_omega3(k, m3, alpha, grid, paper_literal)
    speed = (w3 / k)[..., None, :, :]
    return residual_norm(ddt(S, dt) - interior(speed * deriv(grid, S, "x")), "mx")


def kp_residual(k, m3, alpha, grid, dt):
    """Residuals of ``k_t + 6k k_x + k_xxx + 3 alpha^2 m3_y`` and ``m3_x - k_y``."""
    _need_dt(dt, "KP")
    k, m3 = np.asarray(k), np.asarray(m3)
    rest = 6 * k * deriv(grid, k, "x") + deriv(grid, k, "x", 3) + 3 * alpha**2 * deriv(grid, m3, "y")
    return [residual_norm(ddt(k, dt) + interior(rest), "kp"),
            residual_norm(interior(deriv(grid, m3, "x") - deriv(grid, k, "y")), "kp-constraint")]


def kp_lax_residual(psi, u, m3, alpha, grid, dt=None):
    """Residuals of ``alpha psi_y + psi_xx + u psi`` and
    ``psi_t + 4 psi_xxx + 6 u psi_x + 3(u_x - alpha m3) psi``.

    The second needs a time stack; without one only the first is returned.
    """
    psi, u, m3 = (np.asarray(f) for f in (psi, u, m3))
    first = alpha * deriv(grid, psi, "y") + deriv(grid, psi, "x", 2) + u * psi
    if dt is None:
        return [residual_norm(first, "kp-lax-spatial")]
    rest = (4 * deriv(grid, psi, "x", 3) + 6 * u * deriv(grid, psi, "x")
            + 3 * (deriv(grid, u, "x") - alpha * m3) * psi)
    return [residual_norm(interior(first), "kp-lax-spatial"),
            residual_norm(ddt(psi, dt) + interior(rest), "kp-lax-temporal")]


def mkp_residual(k, w, alpha, grid, dt):
    """Residuals of ``k_t - 6k^2 k_x + k_xxx - 3 alpha (2 k_x w - alpha w_y)`` and ``w_x - k_y``."""
    _need_dt(dt, "mKP")
    k, w = np.asarray(k), np.asarray(w)
    kx = deriv(grid, k, "x")
    rest = (-6 * k**2 * kx + deriv(grid, k, "x", 3)
            - 3 * alpha * (2 * kx * w - alpha * deriv(grid, w, "y")))
    return [residual_norm(ddt(k, dt) + interior(rest), "mkp"),
            residual_norm(interior(deriv(grid, w, "x") - deriv(grid, k, "y")), "mkp-constraint")]


def miura_u(k, m3, alpha, grid):
    """KP potential ``u = -alpha m3 - k_x - k^2`` attached to a frame curvature ``k``."""
    k = np.asarray(k)
    return -alpha * np.asarray(m3) - deriv(grid, k, "x") - k**2


def miura_omega3(k, u, v, alpha, grid):
    """``-4k_xx - 12 k k_x - 4k^3 - 6uk - 3u_x + 3 alpha v``."""
    kx = deriv(grid, k, "x")
    return (-4 * deriv(grid, k, "x", 2) - 12 * k * kx - 4 * k**3 - 6 * u * k
            - 3 * deriv(grid, u, "x") + 3 * alpha * v)


def exp_wavefunction(k, grid):
    """``psi = exp(d_x^{-1} k)``, so that ``psi_x / psi = k``."""
    return np.exp(inv_deriv_x(grid, k))


# ---- constrained spin system and gauge change -------------------------------

def spin_constraint_check(k, sigma, tau, n, signs=(1, 1)):
    """Residual of ``tau^2 + s1 k^2 + s2 sigma^2 - n^2``."""
    s1, s2 = signs
    k, sigma, tau = (np.asarray(f) for f in (k, sigma, tau))
    return residual_norm(tau**2 + s1 * k**2 + s2 * sigma**2 - np.asarray(n) ** 2,
                         "spin-constraint")


def _check_gauge(E, beta, tol):
    E = np.asarray(E)
    d = E.shape[-1]
    if d == 3:
        eta = np.diag([float(beta), 1.0, 1.0])
        gram = E @ eta @ np.swapaxes(E, -1, -2)
        dev = np.max(np.abs(gram - eta))
    else:
        dev = np.max(np.abs(E @ np.conj(np.swapaxes(E, -1, -2)) - np.eye(d)))
    if dev > tol:
        raise NonOrthogonalGauge(f"gauge matrix fails orthogonality by {dev:.3e}")


def gauge_conjugate(E, A, B, D, grid, dt=None, dE=None, beta=1, paper_literal=False,
                    tol=1e-10):
    """Frame change ``f = E e``: ``A' = E A E^-1 + E_x E^-1`` and likewise for B, D.

    The inhomogeneous terms use ``E_x, E_y, E_t`` for ``A', B', D'``; with
    ``paper_literal=True`` all three use ``E_x`` as typeset.  Derivatives of E
    come from ``dE`` (mapping ``"x"``, ``"y"``, ``"t"``) when given, otherwise
    spectrally in space and by 4th-order differences in time, in which case
    the results are cropped to the interior slices.
    """
    E, A, B, D = (np.asarray(M) for M in (E, A, B, D))
    _check_gauge(E, beta, tol)
    crop = np.asarray
    if dE is None:
        dE = {"x": deriv(grid, E, "x"), "y": deriv(grid, E, "y")}
        if dt is not None:
            dE["t"] = ddt(E, dt)
            crop = interior
        else:
            dE["t"] = None
    Ei = np.linalg.inv(E)
    Ec, Eic = crop(E), crop(Ei)
    ax = ("x", "x", "x") if paper_literal else ("x", "y", "t")
    out = []
    for M, a in zip((A, B, D), ax):
        d = dE[a]
        if d is None:
            raise MissingTimeStack("E_t needs a time stack and dt (or dE['t'])")
        d = d if d.shape == Ec.shape else crop(d)
        out.append(Ec @ crop(M) @ Eic + d @ Eic)
    return tuple(out)


@dataclass
class SpinStructure:
    """Result of matching a transport matrix to ``a * (spin pattern)``."""

    a: float
    S: np.ndarray
    pattern_residual: float
    a_variation: float

    tol: float = 1e-8

    @property
    def matches(self):
        return self.pattern_residual < self.tol and self.a_variation < self.tol

    @property
    def mismatch(self):
        """A StructureMismatch describing the failure, or None."""
        if self.matches:
            return None
        return StructureMismatch(f"pattern residual {self.pattern_residual:.3e}, "
                                 f"variation of a {self.a_variation:.3e}")


def extract_spin_structure(Ap, beta=1, tol=1e-8):
    """Write ``A'`` as ``a`` times the frame pattern of a unit ``S``.

    The mismatch (departure from the pattern, and variation of ``a``) is
    reported rather than raised.
    """
    Ap = np.asarray(Ap)
    S1, S2, S3 = Ap[..., 0, 1], -Ap[..., 0, 2], Ap[..., 1, 2]
    pattern = np.zeros_like(Ap)
    pattern[..., 0, 1], pattern[..., 0, 2] = S1, -S2
    pattern[..., 1, 0], pattern[..., 1, 2] = -beta * S1, S3
    pattern[..., 2, 0], pattern[..., 2, 1] = beta * S2, -S3
    norm = np.sqrt(np.abs(S3**2 + beta * S1**2 + S2**2))
    a = float(np.mean(norm))
    S = np.stack([S1, S2, S3]) / np.where(norm > 0, norm, 1.0)
    return SpinStructure(a, S, float(np.max(np.abs(Ap - pattern))),
                         float(np.max(norm) - np.min(norm)), tol)


def m0_residual(S, Vp, Tp, a, grid, dt, paper_literal=False):
    """Residuals of the spin form of the gauge-changed system.

    With ``psi_x = a S psi``, ``psi_y = V' psi``, ``psi_t = T' psi`` the
    compatibility conditions are ``S_y - V'_x / a + [S, V']``,
    ``S_t - T'_x / a + [S, T']`` and ``V'_t - T'_y + [V', T']``.
    ``paper_literal=True`` pairs ``S_t`` with ``V'`` and ``S_y`` with ``T'``
    as typeset.
    """
    _need_dt(dt, "the spin system")
    S, Vp, Tp = (np.asarray(M) for M in (S, Vp, Tp))
    St, Sy = ddt(S, dt), interior(deriv(grid, S, "y"))
    first_d, second_d = (St, Sy) if paper_literal else (Sy, St)
    Si = interior(S)
    r1 = first_d - interior(deriv(grid, Vp, "x")) / a + commutator(Si, interior(Vp))
    r2 = second_d - interior(deriv(grid, Tp, "x")) / a + commutator(Si, interior(Tp))
    r3 = ddt(Vp, dt) - interior(deriv(grid, Tp, "y")) + interior(commutator(Vp, Tp))
    return [residual_norm(r1, "m0-xy"), residual_norm(r2, "m0-xt"), residual_norm(r3, "m0-yt")]
