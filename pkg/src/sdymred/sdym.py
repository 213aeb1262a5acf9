"""Self-dual Yang-Mills fields in null coordinates, their reductions to the
2+1 frame system, and the Bogomolny equation.

Four-dimensional fields are never stored.  A :class:`Connection4` holds the
four null components as matrix stacks over ``(t, x, y)``; dependence on the
remaining coordinate is declared absent, so its derivatives vanish.

Conventions (reported by :func:`convention_header`):

* null derivatives ``d_alpha = -i d_t``, ``d_alphabar = +i d_t``,
  ``d_beta = d_x - i d_y``, ``d_betabar = d_x + i d_y``;
* curvature ``F_mn = d_m A_n - d_n A_m + s [A_m, A_n]`` with bracket sign
  ``s = -1`` by default, the sign that matches covariant derivatives
  ``D = d - A`` and the gauge law ``A -> phi^-1 A phi - phi^-1 d phi``;
  ``s = +1`` is available for comparison.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import MissingTimeStack, ShapeMismatch, SingularGauge
from .fields import commutator, ddt, deriv, interior, residual_norm
from .mmlxii import mmlxii_residual_fields

NULL = ("alpha", "alphabar", "beta", "betabar")
DEFAULT_BRACKET = -1
COND_LIMIT = 1e12


def convention_header(bracket_sign=DEFAULT_BRACKET):
    return {
        "coordinates": "x_alpha = i t, x_alphabar = -i t, x_beta = x + i y, x_betabar = x - i y",
        "null_derivatives": {"alpha": "-i d_t", "alphabar": "+i d_t",
                             "beta": "d_x - i d_y", "betabar": "d_x + i d_y"},
        "curvature": "F_mn = d_m A_n - d_n A_m + s [A_m, A_n]",
        "bracket_sign": int(bracket_sign),
        "covariant_derivative": "D = d - A",
        "gauge_law": "A -> phi^-1 A phi - phi^-1 d phi",
    }


@dataclass
class Connection4:
    """Null components ``A_alpha, A_alphabar, A_beta, A_betabar`` over ``(t, x, y)``.

    ``dt`` is the spacing of the time stack; ``dt=None`` declares the fields
    time independent (single slices or stacks), so ``d_alpha`` vanishes.
    """

    components: dict
    grid: object
    dt: float = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = set(NULL) - set(self.components)
        if missing:
            raise ValueError(f"missing components {sorted(missing)}")
        self.components = {n: np.asarray(self.components[n]) for n in NULL}
        shapes = {c.shape for c in self.components.values()}
        if len(shapes) != 1:
            raise ShapeMismatch(f"components have different shapes {sorted(shapes)}")
        shape = shapes.pop()
        if len(shape) < 4 or shape[-1] != shape[-2] or shape[-4:-2] != self.grid.shape:
            raise ShapeMismatch(f"components of shape {shape} are not matrix fields on the grid")

    def __getitem__(self, name):
        return self.components[name]

    @property
    def dim(self):
        return self.components["alpha"].shape[-1]

    @property
    def stacked(self):
        return self.dt is not None


def null_deriv(conn, f, which):
    """Null-coordinate derivative of a field living on ``conn``'s stack.

    With a time stack the result is restricted to the interior slices.
    """
    grid, dt = conn.grid, conn.dt
    crop = interior if conn.stacked else np.asarray
    if which in ("alpha", "alphabar"):
        if not conn.stacked:
            return np.zeros_like(np.asarray(f, complex))
        s = -1j if which == "alpha" else 1j
        return s * ddt(f, dt)
    if which in ("beta", "betabar"):
        s = -1j if which == "beta" else 1j
        return crop(deriv(grid, f, "x") + s * deriv(grid, f, "y"))
    raise ValueError(f"unknown null direction {which!r}")


def _crop(conn, f):
    return interior(f) if conn.stacked else np.asarray(f)


def field_strength(conn, mu, nu, bracket_sign=DEFAULT_BRACKET):
    """``F_mu nu`` on the (interior) slices of the connection."""
    Am, An = conn[mu], conn[nu]
    return (null_deriv(conn, An, mu) - null_deriv(conn, Am, nu)
            + bracket_sign * _crop(conn, commutator(Am, An)))


def sdym_residual_fields(conn, bracket_sign=DEFAULT_BRACKET):
    """``F_alpha beta``, ``F_alphabar betabar`` and ``F_alpha alphabar - F_beta betabar``."""
    F = lambda m, n: field_strength(conn, m, n, bracket_sign)  # noqa: E731
    return {"alpha-beta": F("alpha", "beta"),
            "alphabar-betabar": F("alphabar", "betabar"),
            "trace": F("alpha", "alphabar") - F("beta", "betabar")}


def sdym_residual(conn, bracket_sign=DEFAULT_BRACKET):
    return [residual_norm(v, f"sdym-{k}")
            for k, v in sdym_residual_fields(conn, bracket_sign).items()]


def _gauge_derivs(conn, phi, dphi):
    """Null derivatives of ``phi``; from physical derivatives when given."""
    if dphi is None:
        return {n: null_deriv(conn, phi, n) for n in NULL}, True
    if conn.stacked and "t" not in dphi:
        raise MissingTimeStack("dphi needs a 't' entry for a time-dependent connection")
    dt_ = dphi.get("t", 0.0) if conn.stacked else 0.0
    return {"alpha": -1j * np.asarray(dt_) + 0 * phi, "alphabar": 1j * np.asarray(dt_) + 0 * phi,
            "beta": dphi["x"] - 1j * dphi["y"], "betabar": dphi["x"] + 1j * dphi["y"]}, False


def _safe_inverse(phi):
    cond = np.linalg.cond(phi)
    worst = float(np.max(cond)) if np.size(cond) else 1.0
    if not np.isfinite(worst) or worst > COND_LIMIT:
        raise SingularGauge(f"gauge matrix condition number {worst:.3e}")
    return np.linalg.inv(phi), worst


def gauge_transform(conn, phi, dphi=None):
    """``A_mu -> phi^-1 A_mu phi - phi^-1 d_mu phi``.

    ``dphi`` maps ``"x"``, ``"y"``, ``"t"`` to exact physical derivatives of
    ``phi``; without it they are computed numerically and a stacked result is
    cropped to the interior slices.  The largest condition number of ``phi``
    is recorded in ``notes["max_cond"]``.
    """
    phi = np.asarray(phi)
    if phi.shape != conn["alpha"].shape:
        raise ShapeMismatch(f"gauge field {phi.shape} vs connection {conn['alpha'].shape}")
    pinv, cond = _safe_inverse(phi)
    d, numeric = _gauge_derivs(conn, phi, dphi)
    crop = (lambda f: _crop(conn, f)) if numeric else np.asarray
    out = {n: crop(pinv @ conn[n] @ phi) - crop(pinv) @ d[n] for n in NULL}
    dt = conn.dt
    return Connection4(out, conn.grid, dt, {"max_cond": cond})


def connection_from_gauge(g, dg, grid, dt=None):
    """Pure-gauge connection ``A_mu = -g^-1 d_mu g`` from exact derivatives ``dg``."""
    zero = {n: np.zeros(np.shape(g), complex) for n in NULL}
    return gauge_transform(Connection4(zero, grid, dt), g, dg)


def sdym_lax_apply(conn, lam, Phi):
    """``L Phi = D_alpha Phi + lam D_betabar Phi`` and
    ``M Phi = D_beta Phi - lam D_alphabar Phi`` with ``D = d - A``."""
    Phi = np.asarray(Phi)

    def D(n):
        return null_deriv(conn, Phi, n) - _crop(conn, conn[n] @ Phi)

    return D("alpha") + lam * D("betabar"), D("beta") - lam * D("alphabar")


def bianchi_residual(conn, bracket_sign=DEFAULT_BRACKET):
    """Largest cyclic sum ``D_m F_nl + D_n F_lm + D_l F_mn`` over index triples.

    ``D_m X = d_m X + s [A_m, X]`` in the adjoint, with ``s`` the bracket sign.
    Needs a stack of at least 9 slices when time dependent.
    """
    F = {(m, n): field_strength(conn, m, n, bracket_sign) for m, n in combinations(NULL, 2)}

    def Fget(m, n):
        return F[(m, n)] if (m, n) in F else -F[(n, m)]

    sub = Connection4({n: _crop(conn, conn[n]) for n in NULL}, conn.grid, conn.dt)

    def Dadj(m, X):
        return null_deriv(sub, X, m) + bracket_sign * _crop(sub, commutator(sub[m], X))

    worst = 0.0
    for m, n, l in combinations(NULL, 3):
        cyc = Dadj(m, Fget(n, l)) + Dadj(n, Fget(l, m)) + Dadj(l, Fget(m, n))
        worst = max(worst, float(np.max(np.abs(cyc))))
    return worst


# ---- reductions to 2+1 ------------------------------------------------------

def _check_same(*arrays):
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise ShapeMismatch(f"fields have different shapes {sorted(shapes)}")


def embed_mmlxii(A, B, D, grid, dt=None):
    """``A_alpha = -iD``, ``A_alphabar = iD``, ``A_beta = A - iB``, ``A_betabar = A + iB``."""
    A, B, D = (np.asarray(M) for M in (A, B, D))
    _check_same(A, B, D)
    return Connection4({"alpha": -1j * D, "alphabar": 1j * D,
                        "beta": A - 1j * B, "betabar": A + 1j * B}, grid, dt)


def embedding_prediction(res):
    """SDYM residual fields implied by 2+1 residual fields ``res`` (keys a, b, c)
    under :func:`embed_mmlxii` with the default bracket sign."""
    return {"alpha-beta": -res["c"] - 1j * res["b"],
            "alphabar-betabar": -res["c"] + 1j * res["b"],
            "trace": 2j * res["a"]}


@dataclass
class HiggsTriple:
    """Higgs field ``Psi`` with the 2+1 connection ``A, B, D`` on a shared grid."""

    Psi: np.ndarray
    A: np.ndarray
    B: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        self.Psi, self.A, self.B, self.D = (np.asarray(M) for M in
                                            (self.Psi, self.A, self.B, self.D))
        _check_same(self.Psi, self.A, self.B, self.D)


def embed_bogomolny(h, grid, dt=None):
    """``A_alpha = Psi - iD``, ``A_alphabar = Psi + iD``, ``A_beta = A - iB``,
    ``A_betabar = A + iB``."""
    return Connection4({"alpha": h.Psi - 1j * h.D, "alphabar": h.Psi + 1j * h.D,
                        "beta": h.A - 1j * h.B, "betabar": h.A + 1j * h.B}, grid, dt)


def bogomolny_residual_fields(h, grid, dt):
    """Residual fields of the three Bogomolny equations as written:

    ``Psi_t + [Psi,D] + A_y - B_x + [A,B]``,
    ``Psi_y + [Psi,B] + D_x - A_t + [D,A]``,
    ``Psi_x + [Psi,A] + B_t - D_y + [B,D]``.

    The gauge parts reuse the 2+1 residual arithmetic, so with ``Psi = 0``
    the fields equal ``a``, ``-b``, ``c`` of the 2+1 system bit for bit.
    """
    if dt is None:
        raise MissingTimeStack("the Bogomolny equations need a time stack and dt")
    Psi, A, B, D = h.Psi, h.A, h.B, h.D
    base = mmlxii_residual_fields(A, B, D, grid, dt)
    Pt = ddt(Psi, dt) + interior(commutator(Psi, D))
    Py = interior(deriv(grid, Psi, "y") + commutator(Psi, B))
    Px = interior(deriv(grid, Psi, "x") + commutator(Psi, A))
    return {"a": Pt + base["a"], "b": Py - base["b"], "c": Px + base["c"]}


def bogomolny_residual(h, grid, dt):
    return [residual_norm(v, f"bogomolny-{k}")
            for k, v in bogomolny_residual_fields(h, grid, dt).items()]


def bogomolny_prediction(h, grid, dt):
    """SDYM residual fields implied by :func:`embed_bogomolny`.

    ``F_alpha beta = -c + i b`` and ``F_alphabar betabar = -c - i b`` in terms
    of the Bogomolny fields; the trace part equals ``-2i`` times
    ``Psi_t + [Psi,D] - (A_y - B_x + [A,B])``, which has the opposite relative
    sign between Higgs and gauge terms from the first Bogomolny equation.
    """
    f = bogomolny_residual_fields(h, grid, dt)
    Pt = ddt(h.Psi, dt) + interior(commutator(h.Psi, h.D))
    X = f["a"] - Pt
    return {"alpha-beta": -f["c"] + 1j * f["b"],
            "alphabar-betabar": -f["c"] - 1j * f["b"],
            "trace": -2j * (Pt - X)}
