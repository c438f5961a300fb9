"""Discrete optimal control (DOC) tables by dynamic programming over cells.

The table stores, for every cell, the index of the control that starts a
cheapest cell trajectory into the target set.  Values are accumulated by
uniform-cost (Dijkstra-style) expansion backwards from the target over the
controlled transition table; moves into SINK are never admissible.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .cellspace import SINK, CellSpace
from .errors import DomainError, PlaybackError
from .models import CostSpec, stage_cost_raw
from .reach import (as_control_set, build_controlled_table, controllable_regions,
                    predecessor_index)

NONE = -1

__all__ = [
    "NONE",
    "DocTable",
    "PlaybackResult",
    "stage_cost",
    "stage_cost_matrix",
    "synthesize_doc",
    "playback",
    "hold_index",
    "bellman_violations",
]


def stage_cost(x, u, spec: CostSpec):
    """One-step cost of applying ``u`` at state ``x`` (a cell center), discretized if requested."""
    raw = stage_cost_raw(x, np.atleast_1d(np.asarray(u, dtype=float)), spec)
    return spec.discretize.apply(raw) if spec.discretize is not None else raw


def stage_cost_matrix(cs: CellSpace, U, spec: CostSpec) -> np.ndarray:
    U = as_control_set(U)
    X = cs.centers()
    return np.asarray(stage_cost(X[:, None, :], U[None, :, :], spec), dtype=float)


def hold_index(U) -> int:
    """Index of the control closest to zero (lowest index on ties)."""
    U = as_control_set(U)
    return int(np.argmin(np.linalg.norm(U, axis=1)))


@dataclass
class DocTable:
    control_index: np.ndarray
    value: np.ndarray
    steps: np.ndarray
    cellspace: CellSpace
    controls: np.ndarray
    cost: CostSpec
    target: np.ndarray

    @property
    def controllable(self) -> np.ndarray:
        return self.steps >= 0

    @property
    def count(self) -> int:
        return int(self.controllable.sum())

    def control_for(self, c: int) -> np.ndarray:
        j = self.control_index[c]
        if j == NONE:
            raise DomainError(f"cell {c} has no control")
        return self.controls[j]

    def value_stats(self) -> dict:
        v = self.value[self.controllable]
        return {"controllable": self.count, "uncontrollable": int(len(self.value) - self.count),
                "value_min": float(v.min()), "value_max": float(v.max()), "value_mean": float(v.mean())}


def synthesize_doc(plant, cs: CellSpace, U, cost: CostSpec, target, table=None,
                   threads: int | None = None) -> DocTable:
    """Optimal control index, value and step count for every cell.

    ``table`` may be passed to reuse a controlled transition table.  Among
    equally cheap controls the lowest index wins.  Target cells get value 0
    and the hold control (the element of ``U`` closest to zero).
    """
    U = as_control_set(U)
    target = np.unique(np.asarray(target, dtype=np.int64))
    if len(target) == 0:
        raise DomainError("target set is empty")
    if table is None:
        table = build_controlled_table(plant, cs, U, threads)
    table = np.asarray(table, dtype=np.int64)
    N = cs.total
    hold = hold_index(U)

    if cost.uniform:
        res = controllable_regions(table, target)
        steps = np.where(res.controllable, res.min_steps, -1).astype(np.int64)
        control = res.witness.copy()
        value = np.where(res.controllable, res.min_steps * cost.period, np.inf)
    else:
        control, value, steps = _dijkstra(table, stage_cost_matrix(cs, U, cost), target)
    control[target] = hold
    return DocTable(control, value, steps, cs, U, cost, target)


def _dijkstra(table, costs, target):
    N, nu = table.shape
    if np.any(costs < 0):
        raise DomainError("stage costs must be nonnegative")
    start, src, ctl = predecessor_index(table)
    src_l, ctl_l = src.tolist(), ctl.tolist()
    start_l = start.tolist()
    cost_l = costs.tolist()
    value = [float("inf")] * N
    control = [NONE] * N
    steps = [-1] * N
    done = [False] * N
    heap = []
    for t in target.tolist():
        value[t] = 0.0
        steps[t] = 0
        heap.append((0.0, t))
    heapq.heapify(heap)
    while heap:
        v, c = heapq.heappop(heap)
        if done[c]:
            continue
        done[c] = True
        sc = steps[c] + 1
        for i in range(start_l[c], start_l[c + 1]):
            p = src_l[i]
            if done[p]:
                continue
            j = ctl_l[i]
            nv = cost_l[p][j] + v
            if nv < value[p] or (nv == value[p] and j < control[p]):
                value[p] = nv
                control[p] = j
                steps[p] = sc
                heapq.heappush(heap, (nv, p))
    return (np.array(control, dtype=np.int64), np.array(value), np.array(steps, dtype=np.int64))


def bellman_violations(doc: DocTable, table, rtol: float = 1e-9) -> np.ndarray:
    """Controllable non-target cells whose stored control breaks Bellman consistency.

    A cell passes when its value equals stage cost plus successor value under
    the stored control, and no other admissible control is strictly cheaper.
    """
    table = np.asarray(table)
    costs = stage_cost_matrix(doc.cellspace, doc.controls, doc.cost)
    succ_val = np.where(table == SINK, np.inf, doc.value[np.where(table == SINK, 0, table)])
    totals = costs + succ_val
    cells = np.flatnonzero(doc.controllable)
    cells = np.setdiff1d(cells, doc.target)
    j = doc.control_index[cells]
    chosen = totals[cells, j]
    best = totals[cells].min(axis=1)
    scale = np.maximum(1.0, np.abs(doc.value[cells]))
    bad = (np.abs(chosen - doc.value[cells]) > rtol * scale) | (best < chosen - rtol * scale)
    bad |= doc.steps[table[cells, j]] != doc.steps[cells] - 1
    return cells[bad]


@dataclass
class PlaybackResult:
    states: np.ndarray
    controls: np.ndarray
    cost: float
    reached: bool
    steps: int


def playback(doc: DocTable, plant, x0, max_steps: int = 10_000, hold_steps: int = 0) -> PlaybackResult:
    """Run the DOC as a state-feedback law on the true plant.

    Each sample the current cell is looked up and its stored control is
    applied to the unabstracted dynamics.  The run stops when the state
    enters the target set (after ``hold_steps`` more samples under the hold
    control) or after ``max_steps``.  ``cost`` is the raw, undiscretized
    cost accumulated before the target was entered.
    """
    cs = doc.cellspace
    x = np.asarray(x0, dtype=float).reshape(-1)
    if cs.cell_of(x) == SINK:
        raise DomainError("initial state outside the cell space")
    targets = set(doc.target.tolist())
    hold = doc.controls[hold_index(doc.controls)]
    raw = CostSpec(doc.cost.kind, doc.cost.period)
    states, controls = [x], []
    total = 0.0
    reached = False
    k = 0
    while True:
        c = cs.cell_of(x)
        if c in targets:
            reached = True
            break
        if c == SINK or doc.control_index[c] == NONE:
            where = "the sink" if c == SINK else f"uncontrollable cell {c}"
            raise PlaybackError(f"playback entered {where} at step {k}",
                                np.array(states), np.array(controls).reshape(-1, doc.controls.shape[1]), total)
        if k >= max_steps:
            break
        u = doc.controls[doc.control_index[c]]
        total += float(stage_cost_raw(x, u, raw))
        x = np.asarray(plant.step(x, u), dtype=float)
        states.append(x)
        controls.append(u)
        k += 1
    n_reach = k
    if reached:
        for _ in range(hold_steps):
            x = np.asarray(plant.step(x, hold), dtype=float)
            states.append(x)
            controls.append(hold)
    return PlaybackResult(np.array(states), np.array(controls).reshape(-1, doc.controls.shape[1]),
                          total, reached, n_reach)
