"""Surface pipeline on a sphere of radius 2 and a torus.

Fundamental forms, curvatures and the Gauss-Codazzi residual on a latitude
band, then the Euler characteristic from integrated Gaussian curvature.
"""

import numpy as np

from sdymred.catalog import sphere_chart, torus_chart
from sdymred.fields import Grid2
from sdymred.surface import (PositionField, curvatures, fundamental_forms,
                             gauss_codazzi_residual, gw_residual, integral_curvature,
                             sphere_patches)


def main():
    grid = Grid2(128, 128)
    U1, _ = grid.mesh()
    band = (U1 >= 0.3) & (U1 <= np.pi - 0.3)
    geom = fundamental_forms(PositionField(grid, sphere_chart(grid, 2.0)), band)
    K, H = curvatures(geom)
    print(f"sphere R=2: K in [{K.min():.12f}, {K.max():.12f}], mean curvature "
          f"|H| = {np.abs(H).mean():.6f}")
    print(f"Gauss-Codazzi residual {gauss_codazzi_residual(geom).linf:.1e}, "
          f"Gauss-Weingarten residual {gw_residual(geom).linf:.1e}")

    chi = integral_curvature(sphere_patches(Grid2(64, 64), 2.0))
    tg = Grid2(64, 64)
    tgeom = fundamental_forms(PositionField(tg, torus_chart(tg)))
    chi_t = integral_curvature([(tgeom, curvatures(tgeom)[0])])
    print(f"Euler characteristic: sphere {chi:.8f}, torus {chi_t:.1e}")


if __name__ == "__main__":
    main()
