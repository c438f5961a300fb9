"""Controllable regions over a quantized state/control lattice.

A controlled transition table is an ``int64`` array of shape
``(total, |U|)``: entry ``[c, j]`` is the image of the center of cell ``c``
under control ``U[j]``.  Controllability is found by layered backward
search from the target set.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._parallel import map_chunks
from .cellspace import SINK, CellSpace
from .errors import DomainError, RangeError
from .scm import evaluate_step

__all__ = [
    "control_lattice",
    "as_control_set",
    "ControllabilityResult",
    "build_controlled_table",
    "controllable_regions",
    "region_grid_report",
    "predecessor_index",
    "resolve_target",
]


def control_lattice(bits: int, lo: float, hi: float) -> np.ndarray:
    """D/A output values ``lo + j*(hi-lo)/2**bits``, ``j = 0..2**bits-1``, as ``(2**bits, 1)``."""
    delta = (hi - lo) / 2**bits
    return (lo + np.arange(2**bits) * delta).reshape(-1, 1)


def as_control_set(U) -> np.ndarray:
    """Normalise control values to a ``(|U|, m)`` float array."""
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U.reshape(-1, 1)
    if U.ndim != 2 or len(U) == 0:
        raise DomainError("control set must be a nonempty list of control vectors")
    return U


def build_controlled_table(plant, cs: CellSpace, U, threads: int | None = None) -> np.ndarray:
    """Image of every cell center under every control value.

    ``plant`` is anything with a batch ``step(X, u)`` (a :class:`DiscreteLTI`,
    :class:`SampledODE`, ...) or a plain callable ``step(X, u)``.
    """
    U = as_control_set(U)
    step = plant.step if hasattr(plant, "step") else plant

    def chunk(a, b):
        X = cs.centers(np.arange(a, b))
        cols = [cs.cells_of(evaluate_step(lambda Z, u=u: step(Z, np.broadcast_to(u, (len(Z), len(u)))), X))
                for u in U]
        return np.stack(cols, axis=1)

    return map_chunks(chunk, cs.total, threads)


def resolve_target(target, cs: CellSpace) -> np.ndarray:
    """Target cells as sorted flat indices; ``None`` or ``"origin"`` means the cell nearest the origin."""
    if target is None or (isinstance(target, str) and target == "origin"):
        return np.array([cs.nearest_cell()], dtype=np.int64)
    cells = []
    for t in target:
        c = cs.flat_index(t) if np.ndim(t) else int(t)
        if not 0 <= c < cs.total:
            raise RangeError(f"target cell {c} outside the cell space")
        cells.append(c)
    if not cells:
        raise DomainError("target set is empty")
    return np.unique(np.array(cells, dtype=np.int64))


def predecessor_index(table: np.ndarray):
    """Reverse adjacency of the controlled table in CSR form.

    Returns ``(start, src, ctl)`` such that the predecessors of cell ``c``
    are ``src[start[c]:start[c+1]]`` reached with controls ``ctl[...]``.
    Within each cell, entries are ordered by source then control.
    """
    N, nu = table.shape
    dst = table.ravel()
    keep = dst != SINK
    src = np.repeat(np.arange(N), nu)[keep]
    ctl = np.tile(np.arange(nu), N)[keep]
    dst = dst[keep]
    order = np.argsort(dst, kind="stable")
    src, ctl, dst = src[order], ctl[order], dst[order]
    start = np.searchsorted(dst, np.arange(N + 1))
    return start, src, ctl


def gather_ranges(start, cells) -> np.ndarray:
    """Concatenation of ``arange(start[c], start[c+1])`` over ``cells``."""
    cells = np.asarray(cells, dtype=np.int64)
    lens = start[cells + 1] - start[cells]
    total = int(lens.sum())
    base = np.repeat(start[cells] - (np.cumsum(lens) - lens), lens)
    return base + np.arange(total)


@dataclass
class ControllabilityResult:
    """``min_steps`` is ``inf`` for uncontrollable cells; ``witness`` is -1 on
    targets and uncontrollable cells."""

    controllable: np.ndarray
    min_steps: np.ndarray
    witness: np.ndarray
    target: np.ndarray
    layers: int

    @property
    def count(self) -> int:
        return int(self.controllable.sum())


def controllable_regions(table, target) -> ControllabilityResult:
    """Layered backward search.

    Layer ``k+1`` holds the cells outside all earlier layers having some
    control whose image lies in an earlier layer.  The search stops at the
    first empty layer.  The witness of a cell is the lowest control index
    that moves it into an earlier layer.
    """
    table = np.asarray(table, dtype=np.int64)
    N = table.shape[0]
    target = np.unique(np.asarray(target, dtype=np.int64))
    if len(target) == 0:
        raise DomainError("target set is empty")
    if np.any((target < 0) | (target >= N)):
        raise RangeError("target cells must be regular")
    start, src, _ = predecessor_index(table)
    done = np.zeros(N, dtype=bool)
    done[target] = True
    steps = np.full(N, np.inf)
    steps[target] = 0
    witness = np.full(N, -1, dtype=np.int64)
    frontier = target
    k = 0
    while len(frontier):
        cand = np.unique(src[gather_ranges(start, frontier)])
        cand = cand[~done[cand]]
        if len(cand) == 0:
            break
        k += 1
        imgs = table[cand]
        ok = (imgs != SINK) & done[np.where(imgs == SINK, 0, imgs)]
        witness[cand] = np.argmax(ok, axis=1)
        steps[cand] = k
        done[cand] = True
        frontier = cand
    return ControllabilityResult(done, steps, witness, target, k)


def region_grid_report(result: ControllabilityResult, cs: CellSpace) -> np.ndarray:
    """``T`` target, ``C`` controllable, ``U`` uncontrollable, shaped like the cell space."""
    codes = np.where(result.controllable, "C", "U").astype(object)
    codes[result.target] = "T"
    return codes.reshape(cs.shape)
