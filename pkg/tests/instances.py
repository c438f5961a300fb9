"""Random small controlled systems for oracle comparisons."""
import numpy as np

from cellmap.cellspace import SINK, AxisSpec, CellSpace


def random_instance(seed: int, max_cells: int = 64, max_controls: int = 4):
    """A random controlled transition table with a matching 1-D cell space.

    Returns ``(cs, U, table, target)``; images are uniform over the regular
    cells with a ~15% chance of SINK.
    """
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, max_cells + 1))
    nu = int(rng.integers(1, max_controls + 1))
    cs = CellSpace([AxisSpec(-1.0, 1.0, N)])
    U = np.sort(rng.uniform(-1, 1, nu)).reshape(-1, 1)
    table = rng.integers(0, N, size=(N, nu))
    table[rng.random((N, nu)) < 0.15] = SINK
    k = int(rng.integers(1, min(N, 3) + 1))
    target = np.sort(rng.choice(N, size=k, replace=False))
    return cs, U, table.astype(np.int64), target


class ShiftPlant:
    """x <- P x + u on a symmetric grid; P a signed permutation, u a multiple of the cell width.

    Cell centers map exactly onto cell centers, so the cell abstraction is
    exact along whole trajectories.
    """

    def __init__(self, P):
        self.A = np.asarray(P, dtype=float)
        self.n = self.m = len(self.A)

    def step(self, x, u):
        return np.asarray(x, dtype=float) @ self.A.T + np.asarray(u, dtype=float)


def random_shift_system(seed: int):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    per_axis = int(rng.choice([2, 4, 6, 8])) if n == 2 else int(rng.choice([4, 8, 16, 32, 64]))
    width = 0.25
    half = per_axis * width / 2
    cs = CellSpace([AxisSpec(-half, half, per_axis)] * n)
    perm = rng.permutation(n)
    P = np.zeros((n, n))
    P[np.arange(n), perm] = rng.choice([-1.0, 1.0], n)
    k = int(rng.integers(1, 5))
    U = rng.integers(-2, 3, size=(k, n)) * width
    return cs, ShiftPlant(P), U
