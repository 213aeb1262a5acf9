"""Periodic grids, spectral derivatives and residual summaries.

Array conventions used throughout the package:

* scalar / complex field: shape ``(..., nx, ny)``; vector fields put the
  component axis in front, e.g. ``(3, nx, ny)``.
* matrix field: shape ``(..., nx, ny, d, d)`` with ``d`` in {2, 3}.
* time stacks put the slice index first, ``(nt, ...)``, at uniform spacing
  ``dt``.  Time derivatives are 4th-order centred differences, so they are
  only available on the interior slices ``2 .. nt-3``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import MissingTimeStack, NonZeroMean, ShapeMismatch

# tolerance ladder
TOL_ALGEBRAIC = 1e-12
TOL_SPECTRAL = 1e-8
TOL_NUMERICAL = 1e-5


@dataclass(frozen=True)
class Grid2:
    """Uniform doubly periodic lattice ``x_i = i*Lx/nx``, ``y_j = j*Ly/ny``."""

    nx: int
    ny: int
    Lx: float = 2 * np.pi
    Ly: float = 2 * np.pi

    def __post_init__(self):
        for n in (self.nx, self.ny):
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"grid sizes must be even and >= 8, got {self.nx}x{self.ny}")
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValueError("period lengths must be positive")

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def dx(self):
        return self.Lx / self.nx

    @property
    def dy(self):
        return self.Ly / self.ny

    @property
    def x(self):
        return np.arange(self.nx) * self.dx

    @property
    def y(self):
        return np.arange(self.ny) * self.dy

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def wavenumbers(self):
        """Angular wavenumbers ``(kx, ky)`` broadcast to shape ``(nx, ny)``."""
        kx = 2 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)
        ky = 2 * np.pi * np.fft.fftfreq(self.ny, d=self.dy)
        return np.meshgrid(kx, ky, indexing="ij")

    def dealias_mask(self):
        """2/3-rule mask in Fourier space."""
        mx = np.abs(np.fft.fftfreq(self.nx) * self.nx) < self.nx / 3
        my = np.abs(np.fft.fftfreq(self.ny) * self.ny) < self.ny / 3
        return np.outer(mx, my)

    def to_dict(self):
        return {"nx": self.nx, "ny": self.ny, "Lx": self.Lx, "Ly": self.Ly}


def spatial_axes(grid, f):
    """Return the two array axes holding x and y for ``f``."""
    shp = np.shape(f)
    if shp[-2:] == grid.shape:
        return f.ndim - 2, f.ndim - 1
    if len(shp) >= 4 and shp[-4:-2] == grid.shape and shp[-1] == shp[-2]:
        return f.ndim - 4, f.ndim - 3
    raise ShapeMismatch(f"array of shape {shp} does not live on a {grid.nx}x{grid.ny} grid")


def _symbol(grid, axis):
    if axis == "x":
        k = 2 * np.pi * np.fft.fftfreq(grid.nx, d=grid.dx)
    elif axis == "y":
        k = 2 * np.pi * np.fft.fftfreq(grid.ny, d=grid.dy)
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    return k


def deriv(grid, f, axis="x", order=1):
    """Spectral derivative of a periodic field along ``axis``.

    The Nyquist mode is dropped for odd orders so real input stays real.
    """
    if int(order) != order or order <= 0:
        raise ValueError(f"derivative order must be a positive integer, got {order}")
    f = np.asarray(f)
    ax = spatial_axes(grid, f)[0 if axis == "x" else 1]
    k = _symbol(grid, axis)
    sym = (1j * k) ** order
    if order % 2 and len(k) % 2 == 0:
        sym[len(k) // 2] = 0.0
    shape = [1] * f.ndim
    shape[ax] = len(k)
    out = np.fft.ifft(np.fft.fft(f, axis=ax) * sym.reshape(shape), axis=ax)
    return out.real if np.isrealobj(f) else out


def inv_deriv_x(grid, f, rtol=1e-10):
    """Zero-mean antiderivative along x (Fourier symbol ``1/(i kx)``).

    Raises NonZeroMean unless the x-mean vanishes at every y, relative to
    the field scale (floored at 1 so round-off on near-zero fields passes).
    """
    f = np.asarray(f)
    ax = spatial_axes(grid, f)[0]
    scale = np.max(np.abs(f)) if f.size else 0.0
    mean = np.mean(f, axis=ax)
    if np.max(np.abs(mean), initial=0.0) > rtol * max(scale, 1.0):
        raise NonZeroMean(
            f"x-mean of size {np.max(np.abs(mean)):.3e} (field scale {scale:.3e})")
    k = _symbol(grid, "x")
    sym = np.zeros(len(k), dtype=complex)
    nz = k != 0
    sym[nz] = 1.0 / (1j * k[nz])
    if len(k) % 2 == 0:
        sym[len(k) // 2] = 0.0
    shape = [1] * f.ndim
    shape[ax] = len(k)
    out = np.fft.ifft(np.fft.fft(f, axis=ax) * sym.reshape(shape), axis=ax)
    return out.real if np.isrealobj(f) else out


def x_mean_free(grid, f):
    """Remove the x-mean at each y."""
    ax = spatial_axes(grid, f)[0]
    return f - np.mean(f, axis=ax, keepdims=True)


def commutator(a, b):
    """Pointwise ``AB - BA`` for matrix fields."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-2:] != b.shape[-2:] or a.shape[-1] != a.shape[-2]:
        raise ShapeMismatch(f"commutator of {a.shape} and {b.shape}")
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeMismatch(f"commutator of {a.shape} and {b.shape}") from exc
    return a @ b - b @ a


def ddt(values, dt):
    """4th-order centred time derivative on interior slices of a stack."""
    if dt is None:
        raise MissingTimeStack("time derivative requested without a time step")
    v = np.asarray(values)
    if v.shape[0] < 5:
        raise MissingTimeStack(f"need at least 5 time slices, got {v.shape[0]}")
    return (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * dt)


def interior(values):
    """Slices of a stack on which :func:`ddt` is defined."""
    return np.asarray(values)[2:-2]


def _identity(values):
    return np.asarray(values)


def t_deriv(grid, f, dt=None):
    """Time derivative and the matching crop for the other terms.

    With ``dt=None`` the grid's y axis is read as time and the derivative is
    spectral (the (x, t) plane of the 1+1 systems).  Otherwise ``f`` is a
    stack and the 4th-order difference is used on its interior slices.
    """
    if dt is None:
        return deriv(grid, f, "y"), _identity
    return ddt(f, dt), interior


@dataclass
class ResidualReport:
    name: str
    linf: float
    l2: float
    component_breakdown: list = field(default_factory=list)

    def passed(self, tol):
        return self.linf <= tol

    def to_dict(self):
        return {"name": self.name, "linf": self.linf, "l2": self.l2,
                "components": [list(c) for c in self.component_breakdown]}


def residual_norm(f, name="residual", components=None):
    """Max-abs and root-mean-square summary of a residual field.

    ``components`` optionally maps labels to sub-arrays whose max-abs values
    go into the breakdown.
    """
    f = np.asarray(f)
    if f.size == 0:
        linf = l2 = 0.0
    else:
        linf = float(np.max(np.abs(f)))
        l2 = float(np.sqrt(np.mean(np.abs(f) ** 2)))
    breakdown = []
    for label, sub in (components or {}).items():
        sub = np.asarray(sub)
        breakdown.append((label, float(np.max(np.abs(sub))) if sub.size else 0.0))
    return ResidualReport(name, linf, l2, breakdown)
