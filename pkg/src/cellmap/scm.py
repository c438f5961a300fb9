"""Simple cell mapping: single-image transition maps and the unraveling algorithm.

A transition map is a plain ``int64`` array ``image`` of length
``cs.total`` whose entries are regular flat indices or ``SINK``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._parallel import map_chunks
from .cellspace import SINK, CellSpace
from .errors import CellMapError, DomainError, RangeError

__all__ = [
    "UnravelResult",
    "build_scm",
    "unravel",
    "domain_of_attraction",
    "scm_grid_report",
    "evaluate_step",
    "pointwise",
]


def pointwise(f):
    """Lift a single-state map ``f(x) -> x'`` to the batch form used here."""

    def batch(X):
        return np.array([np.asarray(f(x), dtype=float) for x in X]).reshape(X.shape)

    return batch


def evaluate_step(step, X) -> np.ndarray:
    """``step(X)`` with failures and non-finite rows turned into NaN rows."""
    try:
        Y = np.array(step(X), dtype=float).reshape(X.shape)
    except CellMapError:
        if len(X) == 1:
            return np.full(X.shape, np.nan)
        Y = np.concatenate([evaluate_step(step, X[i:i + 1]) for i in range(len(X))])
    Y[~np.all(np.isfinite(Y), axis=1)] = np.nan
    return Y


def build_scm(step, cs: CellSpace, threads: int | None = None) -> np.ndarray:
    """Image cell of every cell center under the batch map ``step``."""

    def chunk(a, b):
        X = cs.centers(np.arange(a, b))
        return cs.cells_of(evaluate_step(step, X))

    return map_chunks(chunk, cs.total, threads)


@dataclass
class UnravelResult:
    """Classification of every regular cell.

    ``group_id[c]`` is 0 for sink-bound cells and ``g >= 1`` otherwise;
    ``periods[g-1]`` and ``periodic_cells[g-1]`` describe group ``g``.
    ``steps_to_group[c]`` counts transitions until the orbit first lands on
    a periodic cell, or on SINK for sink-bound cells.
    """

    group_id: np.ndarray
    steps_to_group: np.ndarray
    periods: list[int]
    periodic_cells: list[np.ndarray]

    @property
    def n_groups(self) -> int:
        return len(self.periods)

    def is_periodic(self) -> np.ndarray:
        mask = np.zeros(len(self.group_id), dtype=bool)
        for cells in self.periodic_cells:
            mask[cells] = True
        return mask

    def sink_bound(self) -> np.ndarray:
        return np.flatnonzero(self.group_id == 0)


def unravel(image) -> UnravelResult:
    """Find every periodic group and the orbit length of each cell to it.

    Each cell is walked forward until it meets SINK, an already classified
    cell, or a cell on the current walk (a new cycle).  The walk is then
    resolved backwards, so the whole pass is linear in the cell count.
    """
    image = np.asarray(image, dtype=np.int64)
    N = len(image)
    if np.any((image < SINK) | (image >= N)):
        raise DomainError("transition map has entries outside [SINK, total)")
    img = image.tolist()
    state = [0] * N  # 0 unvisited, 1 on current path, 2 resolved
    group = [0] * N
    steps = [0] * N
    periods: list[int] = []
    cycles: list[np.ndarray] = []
    for start in range(N):
        if state[start]:
            continue
        path = []
        c = start
        while c != SINK and state[c] == 0:
            state[c] = 1
            path.append(c)
            c = img[c]
        if c == SINK:
            g, s = 0, 0
        elif state[c] == 2:
            g, s = group[c], steps[c]
        else:
            # c is on the current path: everything from it onwards is a cycle
            i = path.index(c)
            cyc = path[i:]
            periods.append(len(cyc))
            cycles.append(np.array(sorted(cyc), dtype=np.int64))
            g = len(periods)
            for p in cyc:
                group[p], steps[p], state[p] = g, 0, 2
            path = path[:i]
            s = 0
        for p in reversed(path):
            s += 1
            group[p], steps[p], state[p] = g, s, 2
    return UnravelResult(np.array(group, dtype=np.int64), np.array(steps, dtype=np.int64), periods, cycles)


def domain_of_attraction(ur: UnravelResult, group: int, r: int) -> np.ndarray:
    """Cells of periodic group ``group`` reached within ``r`` transitions."""
    if not 1 <= group <= ur.n_groups:
        raise RangeError(f"no periodic group {group}; groups are 1..{ur.n_groups}")
    return np.flatnonzero((ur.group_id == group) & (ur.steps_to_group <= r))


def scm_grid_report(ur: UnravelResult, cs: CellSpace) -> np.ndarray:
    """Per-cell class codes shaped like the cell space.

    ``"P"`` periodic, ``"A<k>"`` attracted after ``k`` steps, ``"S"`` sink-bound.
    """
    periodic = ur.is_periodic()
    codes = np.empty(cs.total, dtype=object)
    for c in range(cs.total):
        if ur.group_id[c] == 0:
            codes[c] = "S"
        elif periodic[c]:
            codes[c] = "P"
        else:
            codes[c] = f"A{ur.steps_to_group[c]}"
    return codes.reshape(cs.shape)
