# Cell picture of a 2-D LQR regulator with a 4-bit A/D and an 8-bit D/A on B*u.
from pathlib import Path

import numpy as np

from cellmap import (CellSpace, DiscreteLTI, QuantizedLoop, QuantizerSpec, VectorQuantizerSpec,
                     build_gcm, build_scm, classify_gcm, gcm_boundary_report, lqr_gain, scm_grid_report,
                     unravel, write_grid, write_pgm)

out = Path("demo_out/regulator")
out.mkdir(parents=True, exist_ok=True)

plant = DiscreteLTI([[0, 1], [-1, 1]], [[0], [1]])
K = lqr_gain(plant.A, plant.B, np.diag([1.0, 0.0]), [[1.0]])
print("u = F x with F =", -K.ravel())
print("closed loop:\n", plant.A - plant.B @ K)

cells = CellSpace.from_bits([(0, 1, 4), (0, 1, 4)])
ad = VectorQuantizerSpec.from_word_lengths([4, 4], [(0, 1), (0, 1)])
da = QuantizerSpec.from_word_length(8, -1, 1)
loop = QuantizedLoop(plant, K, ad, da, da_on="bu")

ur = unravel(build_scm(loop.without_quantizers().step, cells))
grid = scm_grid_report(ur, cells)
print("SCM: sink-bound cells", len(ur.sink_bound()), "of", cells.total)
write_grid(out / "scm.csv", grid)
write_pgm(out / "scm.pgm", grid)

# on the unit box most edge samples leave the region, so every cell ends up transient
cls = classify_gcm(build_gcm(loop.step, cells))
bgrid = gcm_boundary_report(cls, cells)
codes, counts = np.unique(bgrid.astype(str), return_counts=True)
print("GCM classes:", dict(zip(codes, counts.tolist())))
write_grid(out / "gcm.csv", bgrid)
print("grids written to", out)
