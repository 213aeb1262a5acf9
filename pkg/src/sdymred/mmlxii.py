"""Frame systems in 2+1 dimensions.

Fields are either single slices ``(nx, ny)`` or time stacks ``(nt, nx, ny)``
sampled every ``dt``.  Residuals that involve a time derivative are
evaluated on the interior slices of the stack; the purely spatial ones are
cropped the same way whenever a stack is supplied so that all reports of a
call refer to the same slices.
"""

from dataclasses import dataclass

import numpy as np

from .catalog import frame_generators, su2_generators
from .errors import MissingTimeStack, ShapeMismatch
from .fields import commutator, ddt, deriv, interior, inv_deriv_x, residual_norm

COEFFS = ("k", "sigma", "tau", "m1", "m2", "m3", "omega1", "omega2", "omega3")


@dataclass
class CoefficientSet2p1:
    """Coefficients of the x-, y- and t-transport matrices."""

    k: object
    sigma: object = 0.0
    tau: object = 0.0
    m1: object = 0.0
    m2: object = 0.0
    m3: object = 0.0
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
            if not np.all(np.isfinite(a)):
                raise ValueError(f"coefficient {n} has non-finite values")
            setattr(self, n, np.broadcast_to(a, shape))


def _combine(basis, coeffs):
    out = 0
    for B, c in zip(basis, coeffs):
        out = out + np.asarray(c)[..., None, None] * B
    return out


def matrices_2p1(c, signature=False):
    """``(A, B, D)`` 3x3 and ``(U, V, T)`` 2x2 matrices of a coefficient set.

    ``signature=True`` uses the 2x2 representation adapted to ``beta = -1``
    (see :func:`sdymred.frames1p1.to_su2`).
    """
    Ek, Es, Et = frame_generators(c.beta)
    A = _combine((Ek, Es, Et), (c.k, c.sigma, c.tau))
    B = _combine((Ek, Es, Et), (c.m3, c.m2, c.m1))
    D = _combine((Ek, Es, Et), (c.omega3, c.omega2, c.omega1))
    t1, t2, t3 = su2_generators()
    s = 1j if (signature and c.beta == -1) else 1.0
    basis = (s * t1, s * t2, t3)
    U = _combine(basis, (c.k, c.sigma, c.tau))
    V = _combine(basis, (c.m3, c.m2, c.m1))
    T = _combine(basis, (c.omega3, c.omega2, c.omega1))
    return (A, B, D), (U, V, T)


def _check_same(*arrays):
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise ShapeMismatch(f"fields have different shapes {sorted(shapes)}")


def mmlxii_residual_fields(A, B, D, grid, dt=None, which="abc"):
    """Residual arrays of ``A_y - B_x + [A,B]``, ``A_t - D_x + [A,D]`` and
    ``B_t - D_y + [B,D]``, keyed ``"a"``, ``"b"``, ``"c"``."""
    A, B, D = (np.asarray(M) for M in (A, B, D))
    _check_same(A, B, D)
    if dt is None and set(which) & {"b", "c"}:
        raise MissingTimeStack("the A_t and B_t equations need a time stack and dt")
    crop = interior if dt is not None else np.asarray
    out = {}
    if "a" in which:
        out["a"] = crop(deriv(grid, A, "y") - deriv(grid, B, "x") + commutator(A, B))
    if "b" in which:
        out["b"] = ddt(A, dt) - interior(deriv(grid, D, "x")) + interior(commutator(A, D))
    if "c" in which:
        out["c"] = ddt(B, dt) - interior(deriv(grid, D, "y")) + interior(commutator(B, D))
    return out


def mmlxii_residual(A, B, D, grid, dt=None, which="abc"):
    """ResidualReports for the three compatibility equations (see
    :func:`mmlxii_residual_fields`)."""
    fields = mmlxii_residual_fields(A, B, D, grid, dt, which)
    names = {"a": "xy", "b": "xt", "c": "yt"}
    return [residual_norm(fields[w], f"mmlxii-{names[w]}") for w in which]


def form_equivalence(c, grid, dt=None, signature=False):
    """Residuals of the 3x3 and 2x2 forms of the same data and their ratios.

    The two forms live in different representations of one algebra, so the
    ratio is a fixed representation constant on nonzero residuals rather than 1.
    """
    (A, B, D), (U, V, T) = matrices_2p1(c, signature)
    which = "abc" if dt is not None else "a"
    r3 = mmlxii_residual(A, B, D, grid, dt, which)
    r2 = mmlxii_residual(U, V, T, grid, dt, which)
    ratios = [b.linf / a.linf if a.linf > 0 else float("nan") for a, b in zip(r3, r2)]
    return r3, r2, ratios


# ---- Lax operators ----------------------------------------------------------

@dataclass
class LaxParams:
    """Multipliers of the y-derivative in ``L`` (``a lam``) and ``M`` (``e lam^2``)."""

    a: float = 1.0
    e: float = 1.0
    lam: complex = 1.0


def lax_apply(U, V, T, params, g, grid, dt=None):
    """``Lg = g_x + a lam g_y - (U + a lam V) g`` and
    ``Mg = g_t + e lam^2 g_y - (T + e lam^2 V) g``.

    ``g`` is a matrix field (or stack when ``dt`` is given); ``Mg`` is then
    evaluated on the interior slices.
    """
    U, V, T, g = (np.asarray(M) for M in (U, V, T, g))
    al = params.a * params.lam
    el = params.e * params.lam**2
    gy = deriv(grid, g, "y")
    Lg = deriv(grid, g, "x") + al * gy - (U + al * V) @ g
    if dt is None:
        if np.any(T):
            raise MissingTimeStack("M needs g_t: pass a time stack and dt")
        gt, crop = 0.0, np.asarray
    else:
        gt, crop = ddt(g, dt), interior
    Mg = gt + crop(el * gy - (T + el * V) @ g)
    return Lg, Mg


# ---- plane case -------------------------------------------------------------

def plane_m3(k, grid):
    """``m3 = d_x^{-1} k_y``."""
    return inv_deriv_x(grid, deriv(grid, k, "y"))


def plane_case_residual(k, m3, omega3, grid, dt=None):
    """Residuals of ``k_y - m3_x``, ``k_t - omega3_x`` and ``m3_t - omega3_y``.

    Without a time stack only the first is returned.
    """
    k, m3, omega3 = (np.asarray(f) for f in (k, m3, omega3))
    if dt is None:
        return [residual_norm(deriv(grid, k, "y") - deriv(grid, m3, "x"), "plane-xy")]
    return [
        residual_norm(interior(deriv(grid, k, "y") - deriv(grid, m3, "x")), "plane-xy"),
        residual_norm(ddt(k, dt) - interior(deriv(grid, omega3, "x")), "plane-xt"),
        residual_norm(ddt(m3, dt) - interior(deriv(grid, omega3, "y")), "plane-yt"),
    ]


def plane_coefficients(k, m3, omega3, beta=1):
    """The plane specialisation: only ``k``, ``m3``, ``omega3`` nonzero."""
    return CoefficientSet2p1(k, m3=m3, omega3=omega3, beta=beta)


# ---- linear-problem form ----------------------------------------------------

def linear_problem_residual(A, B, D, grid, dt=None, paper_literal=False):
    """Residuals of ``L A - B_x`` and ``M A - D_x`` with ``L = d_y - ad``, ``M = d_t - ad``.

    The default reads the bracket operator as ``X -> [B, X]`` so that
    ``L A - B_x`` is the xy compatibility expression term for term.  With
    ``paper_literal=True`` it is ``X -> [X, B]`` as typeset, which flips the
    sign of the commutator.
    """
    A, B, D = (np.asarray(M) for M in (A, B, D))
    _check_same(A, B, D)
    s = -1.0 if paper_literal else 1.0
    crop = interior if dt is not None else np.asarray
    first = crop(deriv(grid, A, "y") + s * commutator(A, B) - deriv(grid, B, "x"))
    reports = [residual_norm(first, "linear-L")]
    if dt is not None:
        second = ddt(A, dt) + s * interior(commutator(A, D)) - interior(deriv(grid, D, "x"))
        reports.append(residual_norm(second, "linear-M"))
    return reports
