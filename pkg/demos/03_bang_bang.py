# Controllable cells of the double integrator with u in {-1, 1}.
import time

import numpy as np

from cellmap import (CellSpace, SampledODE, build_controlled_table, controllable_regions,
                     double_integrator, region_grid_report, resolve_target, write_grid)

cells = CellSpace.from_bits([(-1, 1, 5), (-1, 1, 5)])
U = np.array([[-1.0], [1.0]])

for T in (0.08, 0.05):
    t0 = time.perf_counter()
    table = build_controlled_table(SampledODE(double_integrator(), T, 4), cells, U)
    res = controllable_regions(table, resolve_target("origin", cells))
    dt = time.perf_counter() - t0
    print(f"T={T}: controllable={res.count} uncontrollable={cells.total - res.count} "
          f"layers={res.layers} ({dt:.2f} s)")

# shorter sampling lets more cells reach the target before overshooting it
print(write_grid(None, region_grid_report(res, cells))[:200], "...")
