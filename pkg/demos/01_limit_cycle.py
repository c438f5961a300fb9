# Zero-input limit cycle of x <- 0.625 x stored in a 3-bit register on [0, 1].
import numpy as np

from cellmap import (CellSpace, DiscreteLTI, QuantizedLoop, QuantizerSpec, VectorQuantizerSpec,
                     build_gcm, build_scm, classify_gcm, simulate, unravel)

q = QuantizerSpec.from_word_length(3, 0.0, 1.0)
register = VectorQuantizerSpec([q])
plant = DiscreteLTI([[0.625]], np.zeros((1, 0)))
loop = QuantizedLoop(plant, roundoff=register)

trace = simulate(loop, [0.87], 8)
print("trace:", trace.states[:, 0])
# the ideal system decays to 0, the rounded one parks at 0.125

cells = CellSpace.from_bits([(0.0, 1.0, 3)])
exact = build_scm(loop.without_quantizers().step, cells)
print("exact-map SCM (1-based):", exact + 1)

qcells = CellSpace.from_quantizers(register)
ur = unravel(build_scm(loop.step, qcells))
for g, (period, members) in enumerate(zip(ur.periods, ur.periodic_cells), start=1):
    print(f"group {g}: period {period}, cells {members.tolist()}")
print("steps to group:", ur.steps_to_group)

W = build_gcm(loop.without_quantizers().step, cells)
cls = classify_gcm(W)
print("GCM persistent groups:", [g.tolist() for g in cls.persistent_groups])
for c in range(1, 4):
    print(f"  cell {c} images:", W.column(c))
