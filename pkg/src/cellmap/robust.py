"""Cell-map robustness measures under plant parameter sweeps."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._parallel import map_ordered
from .cellspace import CellSpace
from .errors import DomainError
from .reach import build_controlled_table, controllable_regions, resolve_target
from .scm import build_scm

__all__ = [
    "modified_cell_count",
    "ModifiedCells",
    "ControllableCells",
    "SweepSpec",
    "SweepPoint",
    "run_sweep",
    "percent_of",
]


def modified_cell_count(a, b) -> int:
    """Number of cells whose images differ between two transition maps."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DomainError(f"transition maps differ in length: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


@dataclass(frozen=True)
class ModifiedCells:
    """Compare each SCM against the SCM at ``baseline``.

    The factory must return a batch state map ``X -> X'`` for this metric.
    """

    baseline: float


@dataclass(frozen=True)
class ControllableCells:
    """Count controllable cells.

    ``mode="open-loop"``: the factory returns a plant and controllability
    is searched over ``controls``.  ``mode="closed-loop"``: the factory
    returns a closed-loop batch map and a cell counts when its SCM orbit
    reaches the target set.
    """

    controls: np.ndarray | None = None
    target: object = "origin"
    mode: str = "open-loop"

    def __post_init__(self):
        if self.mode not in ("open-loop", "closed-loop"):
            raise DomainError(f"unknown controllability mode {self.mode!r}")
        if self.mode == "open-loop" and self.controls is None:
            raise DomainError("open-loop controllability needs a control set")


@dataclass(frozen=True)
class SweepSpec:
    values: Sequence[float]
    factory: Callable
    metric: object

    def __post_init__(self):
        if len(self.values) == 0:
            raise DomainError("sweep needs at least one parameter value")


@dataclass(frozen=True)
class SweepPoint:
    param: float
    count: int
    percent: float


def percent_of(count: int, total: int) -> float:
    """``100 * count / total`` rounded to one decimal."""
    return round(100.0 * count / total, 1)


def run_sweep(spec: SweepSpec, cs: CellSpace, threads: int | None = None) -> list[SweepPoint]:
    """Evaluate the metric at every parameter value, in input order."""
    metric = spec.metric
    if isinstance(metric, ModifiedCells):
        base = build_scm(spec.factory(metric.baseline), cs)

        def point(p):
            return modified_cell_count(base, build_scm(spec.factory(p), cs))
    elif isinstance(metric, ControllableCells):
        target = resolve_target(metric.target, cs)

        def point(p):
            if metric.mode == "open-loop":
                table = build_controlled_table(spec.factory(p), cs, metric.controls)
            else:
                table = build_scm(spec.factory(p), cs)[:, None]
            return controllable_regions(table, target).count
    else:
        raise DomainError(f"unknown sweep metric {metric!r}")
    counts = map_ordered(point, spec.values, threads)
    return [SweepPoint(float(p), int(n), percent_of(n, cs.total)) for p, n in zip(spec.values, counts)]
