"""Shared on-disk field format.

A field is a pair of files: ``<base>.bin`` holding little-endian float64
values and ``<base>.json`` holding ``{name, nx, ny, Lx, Ly, kind, dim}``.
Points are written x-fastest (index ``i + nx*j``).  Complex values are
interleaved ``(re, im)``; matrix fields write the ``dim x dim`` complex
entries of each point in row-major order before moving to the next point.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fields import Grid2

KINDS = ("real", "complex", "matrix")


@dataclass
class Field:
    name: str
    grid: Grid2
    values: np.ndarray
    kind: str = "real"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        v = np.asarray(self.values)
        if self.kind == "matrix":
            ok = v.ndim == 4 and v.shape[:2] == self.grid.shape and v.shape[2] == v.shape[3]
        else:
            ok = v.shape == self.grid.shape
        if not ok:
            raise ValueError(f"{self.kind} field of shape {v.shape} on grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")

    @property
    def dim(self):
        return self.values.shape[-1] if self.kind == "matrix" else 1

    def metadata(self):
        return {"name": self.name, **self.grid.to_dict(), "kind": self.kind, "dim": self.dim}


def _paths(base):
    base = Path(base)
    if base.suffix in (".json", ".bin"):
        base = base.with_suffix("")
    return base.with_suffix(".bin"), base.with_suffix(".json")


def _flatten(field):
    v = np.asarray(field.values)
    if field.kind == "matrix":
        # (nx, ny, d, d) -> (ny, nx, d, d) so that x runs fastest
        v = np.swapaxes(v, 0, 1).astype(complex)
        return np.stack([v.real, v.imag], axis=-1).ravel()
    v = v.T
    if field.kind == "complex":
        v = v.astype(complex)
        return np.stack([v.real, v.imag], axis=-1).ravel()
    return v.astype(float).ravel()


def save_field(base, field):
    bin_path, json_path = _paths(base)
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    _flatten(field).astype("<f8").tofile(bin_path)
    json_path.write_text(json.dumps(field.metadata(), indent=2, sort_keys=True))
    return bin_path, json_path


def read_metadata(base):
    _, json_path = _paths(base)
    meta = json.loads(Path(json_path).read_text())
    missing = {"name", "nx", "ny", "Lx", "Ly", "kind", "dim"} - set(meta)
    if missing:
        raise ValueError(f"metadata missing keys {sorted(missing)}")
    if meta["kind"] not in KINDS:
        raise ValueError(f"unknown field kind {meta['kind']!r}")
    return meta


def load_field(base):
    bin_path, _ = _paths(base)
    meta = read_metadata(base)
    grid = Grid2(int(meta["nx"]), int(meta["ny"]), float(meta["Lx"]), float(meta["Ly"]))
    raw = np.fromfile(bin_path, dtype="<f8")
    nx, ny, d = grid.nx, grid.ny, int(meta["dim"])
    kind = meta["kind"]
    expected = {"real": nx * ny, "complex": 2 * nx * ny, "matrix": 2 * nx * ny * d * d}[kind]
    if raw.size != expected:
        raise ValueError(f"{bin_path}: expected {expected} float64 values, found {raw.size}")
    if kind == "real":
        values = raw.reshape(ny, nx).T.copy()
    elif kind == "complex":
        pairs = raw.reshape(ny, nx, 2)
        values = (pairs[..., 0] + 1j * pairs[..., 1]).T.copy()
    else:
        pairs = raw.reshape(ny, nx, d, d, 2)
        values = np.swapaxes(pairs[..., 0] + 1j * pairs[..., 1], 0, 1).copy()
    return Field(meta["name"], grid, values, kind)


def to_csv(field, path):
    """Write ``x,y,value`` rows (complex: ``x,y,re,im``; matrix: one column pair per entry)."""
    X, Y = field.grid.mesh()
    xs, ys = X.T.ravel(), Y.T.ravel()
    v = np.asarray(field.values)
    if field.kind == "real":
        cols, header = [v.T.ravel()], ["value"]
    elif field.kind == "complex":
        w = v.T.ravel()
        cols, header = [w.real, w.imag], ["re", "im"]
    else:
        d = v.shape[-1]
        w = np.swapaxes(v, 0, 1).reshape(-1, d, d)
        cols, header = [], []
        for a in range(d):
            for b in range(d):
                cols += [w[:, a, b].real, w[:, a, b].imag]
                header += [f"re_{a}{b}", f"im_{a}{b}"]
    data = np.column_stack([xs, ys] + cols)
    np.savetxt(path, data, delimiter=",", header=",".join(["x", "y"] + header),
               comments="", fmt="%.17g")
    return Path(path)
