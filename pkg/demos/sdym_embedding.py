"""Embed 2+1 frame data into self-dual Yang-Mills and into the Bogomolny system.

For random data the SDYM field strength is a fixed linear image of the 2+1
residuals; for flat data both vanish; with zero Higgs field the Bogomolny
residuals coincide with the 2+1 residuals.
"""

import numpy as np

from sdymred.catalog import flat_triple, random_matrix_stack, su2_generators
from sdymred.fields import Grid2
from sdymred.mmlxii import mmlxii_residual, mmlxii_residual_fields
from sdymred.sdym import (HiggsTriple, bogomolny_residual_fields, embed_mmlxii,
                          embedding_prediction, sdym_residual, sdym_residual_fields)

DT = 0.01


def main():
    grid = Grid2(64, 64)
    times = np.arange(9) * DT
    rng = np.random.default_rng(0)
    A, B, D = (random_matrix_stack(rng, grid, times, dim=2, complex_entries=True)
               for _ in range(3))
    f = sdym_residual_fields(embed_mmlxii(A, B, D, grid, DT))
    p = embedding_prediction(mmlxii_residual_fields(A, B, D, grid, DT))
    for key in f:
        print(f"random data  {key:>17s}: |F| {np.max(np.abs(f[key])):7.3f}  "
              f"|F - prediction| {np.max(np.abs(f[key] - p[key])):.1e}")

    _, A, B, D = flat_triple(grid, times, su2_generators(), seed=1)
    print("flat data    2+1 residuals:",
          ", ".join(f"{r.linf:.1e}" for r in mmlxii_residual(A, B, D, grid, DT)))
    print("flat data    SDYM residuals:",
          ", ".join(f"{r.linf:.1e}" for r in sdym_residual(embed_mmlxii(A, B, D, grid, DT))))

    bog = bogomolny_residual_fields(HiggsTriple(np.zeros_like(A), A, B, D), grid, DT)
    base = mmlxii_residual_fields(A, B, D, grid, DT)
    same = all(np.array_equal(bog[k], s * base[k]) for k, s in (("a", 1), ("b", -1), ("c", 1)))
    print(f"zero Higgs field: Bogomolny residuals equal (a, -b, c) bitwise: {same}")


if __name__ == "__main__":
    main()
