"""Classical surface theory on periodic charts.

Spectral derivatives are only ever taken of the immersion ``r`` (or of a
prescribed metric), never of quantities built from ``g^{-1}`` or the unit
normal.  Everything downstream (Christoffel symbols and their derivatives,
derivatives of ``n`` and ``b``) is assembled by the product rule.  That keeps
the pipeline exact on charts whose metric degenerates somewhere outside the
evaluated region, such as the doubly covering sphere chart.

Chart quantities are stored on the points of a boolean ``region`` mask as
flat arrays whose last axis runs over those points.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SingularMetric
from .fields import deriv, residual_norm

DET_FLOOR = 1e-12


@dataclass
class PositionField:
    """Immersion ``r(u1, u2)`` on a Grid2; ``linear`` is an optional non-periodic
    part ``r += linear @ (u1, u2)`` (used for the plane and cylinder)."""

    grid: object
    r: np.ndarray
    linear: np.ndarray = None


@dataclass
class GeometryData:
    grid: object
    region: np.ndarray
    g: np.ndarray           # (2, 2, m)
    dg: np.ndarray          # (2, 2, 2, m) index [mu, a, b] = d_mu g_ab
    ddg: np.ndarray         # (2, 2, 2, 2, m) index [nu, mu, a, b]
    b: np.ndarray           # (2, 2, m)
    db: np.ndarray          # (2, 2, 2, m) index [mu, a, b]
    n: np.ndarray = None    # (3, m)
    dn: np.ndarray = None   # (2, 3, m)
    r1: np.ndarray = None   # (2, 3, m)
    r2: np.ndarray = None   # (2, 2, 3, m)

    @property
    def det_g(self):
        return self.g[0, 0] * self.g[1, 1] - self.g[0, 1] * self.g[1, 0]

    @property
    def ginv(self):
        return _inv2(self.g)


@dataclass
class ChristoffelField:
    geom: GeometryData
    gamma: np.ndarray       # (2, 2, 2, m) index [c, a, b] = Gamma^c_ab
    dgamma: np.ndarray      # (2, 2, 2, 2, m) index [mu, c, a, b]


@dataclass
class RiemannData:
    up: np.ndarray          # R^c_{a b l}
    lowered: np.ndarray     # R_{c a b l}
    R1212: np.ndarray


def _inv2(m):
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det


def _region(grid, region):
    if region is None:
        return np.ones(grid.shape, bool)
    region = np.asarray(region, bool)
    if region.shape != grid.shape:
        raise ValueError("region mask must have the grid shape")
    return region


def _check_det(grid, region, det):
    worst = int(np.argmin(det)) if det.size else 0
    if det.size and det[worst] <= DET_FLOOR:
        idx = np.argwhere(region)[worst]
        u = (idx[0] * grid.dx, idx[1] * grid.dy)
        raise SingularMetric(f"det g = {det[worst]:.3e} at u = ({u[0]:.4f}, {u[1]:.4f})",
                             location=tuple(idx))


def fundamental_forms(P, region=None):
    """First and second fundamental forms, unit normal and their derivatives."""
    grid = P.grid
    mask = _region(grid, region)
    ax = ("x", "y")
    r = np.asarray(P.r, float)
    d1 = [deriv(grid, r, ax[a]) for a in range(2)]
    if P.linear is not None:
        lin = np.asarray(P.linear, float)
        d1 = [d1[a] + lin[:, a, None, None] for a in range(2)]
    d2 = [[deriv(grid, d1[a], ax[b]) for b in range(2)] for a in range(2)]
    d3 = [[[deriv(grid, d2[a][b], ax[c]) for c in range(2)] for b in range(2)]
          for a in range(2)]
    R1 = np.array([v[:, mask] for v in d1])
    R2 = np.array([[v[:, mask] for v in row] for row in d2])
    # third derivatives indexed [mu, a, b] = d_mu r_ab
    R3 = np.array([[[d3[a][b][mu][:, mask] for b in range(2)] for a in range(2)]
                   for mu in range(2)])

    g = np.einsum("aim,bim->abm", R1, R1)
    _check_det(grid, mask, g[0, 0] * g[1, 1] - g[0, 1] ** 2)
    dg = (np.einsum("uaim,bim->uabm", R2, R1) + np.einsum("aim,ubim->uabm", R1, R2))
    ddg = (np.einsum("vuaim,bim->vuabm", R3, R1)
           + np.einsum("uaim,vbim->vuabm", R2, R2)
           + np.einsum("vaim,ubim->vuabm", R2, R2)
           + np.einsum("aim,vubim->vuabm", R1, R3))

    N = np.cross(R1[0], R1[1], axis=0)
    dN = np.array([np.cross(R2[u, 0], R1[1], axis=0) + np.cross(R1[0], R2[u, 1], axis=0)
                   for u in range(2)])
    normN = np.linalg.norm(N, axis=0)
    n = N / normN
    dn = (dN - n[None] * np.einsum("im,uim->um", n, dN)[:, None]) / normN
    b = np.einsum("abim,im->abm", R2, n)
    db = np.einsum("uabim,im->uabm", R3, n) + np.einsum("abim,uim->uabm", R2, dn)
    return GeometryData(grid, mask, g, dg, ddg, b, db, n, dn, R1, R2)


def geometry_from_metric(grid, g, b=None, region=None):
    """GeometryData from a prescribed periodic metric (and optional b) of shape (2, 2, nx, ny)."""
    mask = _region(grid, region)
    ax = ("x", "y")
    g = np.asarray(g, float)
    b = np.zeros_like(g) if b is None else np.asarray(b, float)
    dgf = [deriv(grid, g, ax[u]) for u in range(2)]
    ddg = np.array([[deriv(grid, dgf[u], ax[v])[..., mask] for u in range(2)] for v in range(2)])
    gm = g[..., mask]
    _check_det(grid, mask, gm[0, 0] * gm[1, 1] - gm[0, 1] ** 2)
    return GeometryData(grid, mask, gm, np.array([d[..., mask] for d in dgf]), ddg,
                        b[..., mask], np.array([deriv(grid, b, ax[u])[..., mask]
                                                for u in range(2)]))


def christoffel(geom):
    """Christoffel symbols of the second kind and their first derivatives."""
    _check_det(geom.grid, geom.region, geom.det_g)
    gi = geom.ginv
    dg, ddg = geom.dg, geom.ddg
    # C_{l a b} = d_a g_lb + d_b g_al - d_l g_ab
    C = (np.einsum("albm->labm", dg) + np.einsum("balm->labm", dg) - dg)
    dC = (np.einsum("ualbm->ulabm", ddg) + np.einsum("ubalm->ulabm", ddg) - ddg)
    gamma = 0.5 * np.einsum("clm,labm->cabm", gi, C)
    dgi = -np.einsum("cdm,udem,elm->uclm", gi, dg, gi)
    dgamma = 0.5 * (np.einsum("uclm,labm->ucabm", dgi, C)
                    + np.einsum("clm,ulabm->ucabm", gi, dC))
    return ChristoffelField(geom, gamma, dgamma)


def riemann(chris):
    """``R^c_{abl} = d_b G^c_al - d_l G^c_ab + G^c_mb G^m_al - G^c_ml G^m_ab``."""
    G, dG = chris.gamma, chris.dgamma
    up = (np.einsum("bcalm->cablm", dG) - np.einsum("lcabm->cablm", dG)
          + np.einsum("cmbx,malx->cablx", G, G) - np.einsum("cmlx,mabx->cablx", G, G))
    low = np.einsum("cdm,dablm->cablm", chris.geom.g, up)
    return RiemannData(up, low, low[0, 1, 0, 1])


def covariant_deriv(chris, f, df=None, contravariant=False):
    """``D_mu f_a`` (or ``D_mu f^a``) as a ``(2, 2, m)`` block indexed [mu, a].

    ``f`` is either already restricted, ``(2, m)`` with ``df`` given as
    ``(2, 2, m)`` [mu, a], or a full-grid ``(2, nx, ny)`` field that is
    differentiated spectrally here.
    """
    geom = chris.geom
    f = np.asarray(f)
    if df is None:
        df = np.array([deriv(geom.grid, f, ax)[:, geom.region] for ax in ("x", "y")])
        f = f[:, geom.region]
    G = chris.gamma
    if contravariant:
        return df + np.einsum("alum,lm->uam", G, f)
    return df - np.einsum("caum,cm->uam", G, f)


def covariant_deriv_tensor2(chris, T, dT):
    """``D_mu T_ab = d_mu T_ab - G^c_am T_cb - G^c_bm T_ac`` for a covariant 2-tensor."""
    G = chris.gamma
    return (dT - np.einsum("caum,cbm->uabm", G, T) - np.einsum("cbum,acm->uabm", G, T))


def curvatures(geom):
    """Gaussian curvature ``det(g^-1 b)`` and mean curvature ``tr(g^-1 b) / 2``."""
    _check_det(geom.grid, geom.region, geom.det_g)
    W = np.einsum("acm,cbm->abm", geom.ginv, geom.b)
    K = W[0, 0] * W[1, 1] - W[0, 1] * W[1, 0]
    H = 0.5 * (W[0, 0] + W[1, 1])
    return K, H


def gauss_codazzi_residual(geom, chris=None):
    chris = chris or christoffel(geom)
    R = riemann(chris).lowered
    b = geom.b
    gauss = R - (np.einsum("cbm,alm->cablm", b, b) - np.einsum("clm,abm->cablm", b, b))
    Db = covariant_deriv_tensor2(chris, b, geom.db)
    codazzi = Db - np.einsum("uabm->aubm", Db)
    rep = residual_norm(np.concatenate([gauss.ravel(), codazzi.ravel()]), "gauss-codazzi",
                        {"gauss": gauss, "codazzi": codazzi})
    return rep


def gw_residual(geom, chris=None):
    """Residuals of ``r_ab = G^c_ab r_c + b_ab n`` and ``n_a = -g^{cb} b_ac r_b``."""
    if geom.r1 is None:
        raise ValueError("Gauss-Weingarten residual needs geometry built from a PositionField")
    chris = chris or christoffel(geom)
    res_a = (geom.r2 - np.einsum("cabm,cim->abim", chris.gamma, geom.r1)
             - geom.b[:, :, None] * geom.n[None, None])
    res_b = geom.dn + np.einsum("cbm,acm,bim->aim", geom.ginv, geom.b, geom.r1)
    return residual_norm(np.concatenate([res_a.ravel(), res_b.ravel()]), "gauss-weingarten",
                         {"r_ab": res_a, "n_a": res_b})


def integral_curvature(patches):
    """``(1/2pi) * sum of integral K sqrt(g) d^2u`` by the periodic trapezoid rule.

    Each patch is ``(geom, K)`` or ``(geom, K, weight, multiplicity)``; weights
    form a partition of unity across charts and ``multiplicity`` counts how
    many times a chart covers the surface.
    """
    total = 0.0
    for patch in patches:
        geom, K = patch[0], patch[1]
        w = patch[2] if len(patch) > 2 and patch[2] is not None else 1.0
        mult = patch[3] if len(patch) > 3 else 1
        cell = geom.grid.dx * geom.grid.dy
        total += np.sum(w * K * np.sqrt(geom.det_g)) * cell / mult
    return float(total / (2 * np.pi))


def smooth_step(s, lo, hi):
    """C-infinity transition from 1 (s <= lo) to 0 (s >= hi)."""
    s = np.asarray(s, float)
    t = np.clip((s - lo) / (hi - lo), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1)), 0.0)
        c = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1 - t, 1)), 0.0)
    return c / (a + c)


def sphere_patches(grid, radius=2.0, lo=0.02, hi=0.98):
    """Two doubly covering sphere charts glued by a partition of unity.

    The weight of the z-polar chart vanishes near its poles, the weight of the
    x-polar chart vanishes near its own, so both integrands are smooth and
    periodic and the trapezoid rule converges spectrally.
    """
    from .catalog import sphere_chart

    patches = []
    for axis in ("z", "x"):
        r = sphere_chart(grid, radius, axis)
        zeta2 = (r[2] / radius) ** 2
        w1 = smooth_step(zeta2, lo, hi)
        w = w1 if axis == "z" else 1.0 - w1
        region = w > 0
        geom = fundamental_forms(PositionField(grid, r), region)
        K, _ = curvatures(geom)
        patches.append((geom, K, w[region], 2))
    return patches
