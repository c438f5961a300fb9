# Two trajectory-free robustness measures under parameter drift.
import numpy as np

from cellmap import (CellSpace, ControllableCells, DiscreteLTI, ModifiedCells, QuantizedLoop, SweepSpec,
                     control_lattice, run_sweep, write_curve)

# how many cells change image when 0.625 drifts
line = CellSpace.from_bits([(0, 1, 3)])


def scalar(a):
    return QuantizedLoop(DiscreteLTI([[a]], np.zeros((1, 0)))).step


values = [round(0.525 + 0.025 * i, 3) for i in range(9)]
print(write_curve(None, run_sweep(SweepSpec(values, scalar, ModifiedCells(0.625)), line)))

# controllable cells of the regulator as A[0, 1] grows by a
square = CellSpace.from_bits([(-1, 1, 4), (-1, 1, 4)])


def regulator(a):
    return DiscreteLTI([[0, 1 + a], [-1, 1]], [[0], [1]])


metric = ControllableCells(control_lattice(4, -1, 1), target="origin")
curve = run_sweep(SweepSpec([0.0, 0.1, 0.2, 0.3, 0.4, 0.5], regulator, metric), square, threads=4)
print(write_curve(None, curve))
