#!/usr/bin/env python3
"""Matrix-level orbit geometry, including nontrivial Jordan structure.

The function-space pipeline handles semisimple spectra, but the matrix
engine itself works for arbitrary Jordan structure: the orbit codimension
from rank computations always matches the closed-form block-size formula,
and candidate directions decompose over tangent + complement with the
independent Theta rows selecting a mini-versal subfamily.
"""

import numpy as np

from equnfold.unfolding import (jordan_codimension, orbit_geometry,
                                theta_extract)

np.set_printoptions(precision=4, suppress=True)
rng = np.random.default_rng(7)

# one eigenvalue with blocks (2, 1), another with a single 2-block
spec = [(0.5, (2, 1)), (-1.0 + 0.3j, (2,))]
B = np.zeros((5, 5), dtype=complex)
B[:2, :2] = 0.5 * np.eye(2) + np.eye(2, k=1)
B[2, 2] = 0.5
B[3:, 3:] = (-1.0 + 0.3j) * np.eye(2) + np.eye(2, k=1)

geo = orbit_geometry(B, spec)
print("matrix B:\n", np.round(B, 3))
print(f"\norbit codimension: rank-based {geo.delta}, "
      f"formula {jordan_codimension(spec)}")
print(f"tangent dim {len(geo.T_basis)} + complement dim {len(geo.W_basis)} "
      f"= {B.shape[0] ** 2}")

# random directions decompose; a spanning set gets selected
dirs = [rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        for _ in range(geo.delta + 3)]
report = theta_extract(geo, dirs)
print(f"\n{len(dirs)} random directions -> Theta rank {report.rank}, "
      f"selected rows {report.selected_rows}")
print("max decomposition residual:", max(report.residuals))
