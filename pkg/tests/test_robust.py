import numpy as np
import pytest

from cellmap.cellspace import CellSpace
from cellmap.errors import DomainError
from cellmap.models import DiscreteLTI, QuantizedLoop
from cellmap.reach import control_lattice
from cellmap.robust import (ControllableCells, ModifiedCells, SweepPoint, SweepSpec, modified_cell_count,
                            percent_of, run_sweep)

LINE = CellSpace.from_bits([(0, 1, 3)])
PAPER_A = [1, 2, 2, 3, 3, 4, 5, 5]
PAPER_B = [1, 2, 3, 4, 5, 5, 6, 7]


def scale_map(a):
    return QuantizedLoop(DiscreteLTI([[a]], np.zeros((1, 0)))).step


def test_modified_count_examples():
    assert modified_cell_count(PAPER_A, PAPER_A) == 0
    assert modified_cell_count(PAPER_A, PAPER_B) == 6
    assert modified_cell_count([0, 0, 1, 2, 2, 3, 4, 4], [0, 1, 2, 3, 4, 4, 5, 6]) == 7
    assert modified_cell_count([-1, 2], [-1, 3]) == 1
    with pytest.raises(DomainError):
        modified_cell_count([1, 2], [1])


def test_modified_count_is_hamming_metric():
    rng = np.random.default_rng(4)
    for _ in range(200):
        a, b, c = rng.integers(-1, 5, size=(3, 12))
        assert modified_cell_count(a, b) == modified_cell_count(b, a)
        assert (modified_cell_count(a, b) == 0) == bool(np.all(a == b))
        assert modified_cell_count(a, c) <= modified_cell_count(a, b) + modified_cell_count(b, c)


def test_one_dimensional_sweep():
    values = [round(0.525 + 0.025 * i, 3) for i in range(9)]
    pts = run_sweep(SweepSpec(values, scale_map, ModifiedCells(0.625)), LINE)
    assert [p.param for p in pts] == values
    assert pts[4].param == 0.625 and pts[4].count == 0
    assert all(p.count >= 0 for p in pts)
    from cellmap.scm import build_scm
    base = build_scm(scale_map(0.625), LINE)
    for p in pts:
        assert p.count == int(np.sum(build_scm(scale_map(p.param), LINE) != base))


def regulator(a):
    return DiscreteLTI([[0, 1 + a], [-1, 1]], [[0], [1]])


def test_controllable_sweep_endpoints_and_determinism():
    cs = CellSpace.from_bits([(-1, 1, 4), (-1, 1, 4)])
    spec = SweepSpec([0.0, 0.5], regulator, ControllableCells(control_lattice(4, -1, 1)))
    a = run_sweep(spec, cs)
    b = run_sweep(spec, cs, threads=4)
    assert a == b
    assert a[0].count == 256 and a[1].count == 160


def test_closed_loop_mode():
    cs = CellSpace.from_bits([(-1, 1, 3)])
    loop = lambda a: QuantizedLoop(DiscreteLTI([[a]], np.zeros((1, 0)))).step  # noqa: E731
    pts = run_sweep(SweepSpec([0.5, 2.0], loop, ControllableCells(target=[3, 4], mode="closed-loop")), cs)
    assert pts[0].count == 8
    assert pts[1].count < 8


def test_percent_arithmetic():
    assert percent_of(224, 256) == 87.5
    assert percent_of(159, 256) == 62.1
    assert SweepPoint(0.0, 224, percent_of(224, 256)).percent == 87.5


def test_metric_validation():
    with pytest.raises(DomainError):
        ControllableCells()
    with pytest.raises(DomainError):
        ControllableCells(mode="other", controls=[[0.0]])
    with pytest.raises(DomainError):
        SweepSpec([], regulator, ModifiedCells(0.0))
