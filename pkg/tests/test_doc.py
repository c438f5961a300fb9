import math

import numpy as np
import pytest

from cellmap.cellspace import SINK, AxisSpec, CellSpace
from cellmap.doc import (NONE, bellman_violations, hold_index, playback, stage_cost, stage_cost_matrix,
                         synthesize_doc)
from cellmap.errors import DomainError, PlaybackError
from cellmap.models import CostDiscretization, CostKind, CostSpec
from cellmap.reach import build_controlled_table, controllable_regions
from instances import random_instance, random_shift_system
from oracles import bellman_ford_values, enumerate_values

QUARTER = CellSpace([AxisSpec(0, 1, 4)])
MIN_TIME = CostSpec(CostKind.MINIMUM_TIME, 1.0)


class Shift:
    n = m = 1

    def step(self, x, u):
        return np.asarray(x, dtype=float) + np.asarray(u, dtype=float)


def test_stage_cost_examples():
    q = CostSpec()
    assert stage_cost([0.0, 0.0], [0.0], q) == 0
    assert stage_cost([1.0, 0.4], [1.0], q) == 2
    assert stage_cost([0.3, 0.2], [0.7], CostSpec(CostKind.MINIMUM_TIME, 0.01)) == 0.01


def test_stage_cost_discretized_labels():
    spec = CostSpec(discretize=CostDiscretization(16, 0, 2))
    assert stage_cost([0.0, 0.0], [0.0], spec) == 16
    assert stage_cost([1.0, 0.0], [1.0], spec) == 31


def test_shift_example():
    U = [[-0.25], [0.0], [0.25]]
    doc = synthesize_doc(Shift(), QUARTER, U, MIN_TIME, [0])
    assert doc.value.tolist() == [0, 1, 2, 3]
    assert doc.steps.tolist() == [0, 1, 2, 3]
    assert doc.control_index.tolist() == [1, 0, 0, 0]  # target holds the zero control
    # the same answer from the label-correcting search with a flat cost
    flat = CostSpec(CostKind.MINIMUM_TIME, 1.0, CostDiscretization(1, 0, 2, label_offset=1.0))
    doc2 = synthesize_doc(Shift(), QUARTER, U, flat, [0])
    assert doc2.value.tolist() == [0, 1, 2, 3]
    assert doc2.control_index.tolist() == [1, 0, 0, 0]
    U = np.array(U)
    table = build_controlled_table(Shift(), QUARTER, U)
    costs = [[1.0] * 3 for _ in range(4)]
    assert enumerate_values(table.tolist(), costs, [0], 4) == [0, 1, 2, 3]


def test_empty_target_rejected():
    with pytest.raises(DomainError):
        synthesize_doc(Shift(), QUARTER, [[0.0]], MIN_TIME, [])


def test_hold_index():
    assert hold_index([[-1.0], [-0.125], [0.125], [1.0]]) == 1
    assert hold_index([[-1.0], [0.0], [1.0]]) == 1


def _quadratic_doc(cs, U, table, target):
    return synthesize_doc(None, cs, U, CostSpec(), target, table=table)


@pytest.mark.parametrize("seed", range(120))
def test_oracle_values_quadratic(seed):
    cs, U, table, target = random_instance(seed)
    doc = _quadratic_doc(cs, U, table, target)
    costs = stage_cost_matrix(cs, U, CostSpec()).tolist()
    ref = bellman_ford_values(table.tolist(), costs, target.tolist())
    for v, r in zip(doc.value.tolist(), ref):
        assert (v == math.inf and r == math.inf) or v == pytest.approx(r, rel=1e-12, abs=1e-12)
    assert len(bellman_violations(doc, table)) == 0
    reach = controllable_regions(table, target)
    np.testing.assert_array_equal(doc.controllable, reach.controllable)
    assert np.all(doc.control_index[~doc.controllable] == NONE)


@pytest.mark.parametrize("seed", range(120))
def test_oracle_values_minimum_time(seed):
    cs, U, table, target = random_instance(seed)
    spec = CostSpec(CostKind.MINIMUM_TIME, 0.05)
    doc = synthesize_doc(None, cs, U, spec, target, table=table)
    reach = controllable_regions(table, target)
    np.testing.assert_array_equal(doc.value[doc.controllable], reach.min_steps[doc.controllable] * 0.05)
    assert len(bellman_violations(doc, table)) == 0


@pytest.mark.parametrize("seed", range(30))
def test_literal_enumeration_small(seed):
    cs, U, table, target = random_instance(5000 + seed, max_cells=6, max_controls=3)
    doc = _quadratic_doc(cs, U, table, target)
    costs = stage_cost_matrix(cs, U, CostSpec()).tolist()
    ref = enumerate_values(table.tolist(), costs, target.tolist(), cs.total)
    for v, r in zip(doc.value.tolist(), ref):
        assert (v == math.inf and r == math.inf) or v == pytest.approx(r, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("seed", range(25))
def test_playback_from_centers(seed):
    cs, plant, U = random_shift_system(seed)
    target = [cs.nearest_cell()]
    for spec in (CostSpec(), MIN_TIME):
        doc = synthesize_doc(plant, cs, U, spec, target)
        for c in np.flatnonzero(doc.controllable):
            res = playback(doc, plant, cs.center_of(c), max_steps=int(doc.steps[c]))
            assert res.reached and res.steps <= doc.steps[c]


def test_playback_at_target_is_empty():
    doc = synthesize_doc(Shift(), QUARTER, [[-0.25], [0.0]], MIN_TIME, [0])
    res = playback(doc, Shift(), [0.1])
    assert res.reached and res.steps == 0 and res.cost == 0 and len(res.states) == 1


def test_playback_hold_steps():
    doc = synthesize_doc(Shift(), QUARTER, [[-0.25], [0.0]], MIN_TIME, [0])
    res = playback(doc, Shift(), [0.875], hold_steps=3)
    assert res.steps == 3 and len(res.states) == 7
    np.testing.assert_array_equal(res.controls[-3:].ravel(), [0, 0, 0])


def test_playback_error_carries_partial_trace():
    # right half cannot move, so it is uncontrollable
    class Stuck(Shift):
        def step(self, x, u):
            x = np.asarray(x, dtype=float)
            return np.where(x >= 0.5, x, x + np.asarray(u, dtype=float))

    doc = synthesize_doc(Stuck(), QUARTER, [[-0.25]], MIN_TIME, [0])
    assert doc.control_index.tolist()[2:] == [NONE, NONE]
    with pytest.raises(PlaybackError) as e:
        playback(doc, Stuck(), [0.6])
    assert len(e.value.states) == 1
    with pytest.raises(DomainError):
        playback(doc, Stuck(), [3.0])


def test_sink_moves_inadmissible():
    cs = CellSpace([AxisSpec(0, 1, 2)])
    table = np.array([[0, 0], [SINK, 0]])
    doc = synthesize_doc(None, cs, [[-5.0], [0.5]], CostSpec(), [0], table=table)
    assert doc.control_index[1] == 1
