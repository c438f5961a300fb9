import numpy as np
import pytest
from hypothesis import given, strategies as st

from cellmap.cellspace import SINK, AxisSpec, CellSpace
from cellmap.errors import DomainError, RangeError
from cellmap.quantization import QuantizerSpec, VectorQuantizerSpec

LINE = CellSpace.from_bits([(0, 1, 3)])
SQUARE = CellSpace.from_bits([(-1, 1, 4), (-1, 1, 4)])


def test_cell_of_examples():
    assert LINE.tuple_of(LINE.cell_of([0.87])) == (6,)
    assert LINE.cell_of([1.2]) == SINK
    assert LINE.cell_of([1.0]) == 7
    c = SQUARE.cell_of([-1, -1])
    assert SQUARE.tuple_of(c) == (0, 0) and c == 0


def test_cell_of_rejects_non_finite():
    with pytest.raises(DomainError):
        LINE.cell_of([np.nan])
    assert LINE.cells_of(np.array([[np.nan]]))[0] == SINK


def test_centers():
    assert LINE.center_of(0)[0] == 0.0625
    assert LINE.center_of(7)[0] == 0.9375
    np.testing.assert_allclose(SQUARE.center_of(SQUARE.flat_index((8, 8))), [0.0625, 0.0625])
    with pytest.raises(DomainError):
        LINE.center_of(SINK)


def test_flat_index():
    assert SQUARE.flat_index((1, 8)) == 24
    assert SQUARE.tuple_of(0) == (0, 0)
    with pytest.raises(RangeError):
        SQUARE.flat_index((16, 0))
    with pytest.raises(RangeError):
        SQUARE.tuple_of(256)


def test_total_and_shape():
    cs = CellSpace([AxisSpec(0, 1, 3), AxisSpec(0, 2, 5), AxisSpec(-1, 0, 2)])
    assert cs.total == 30 and cs.shape == (3, 5, 2)
    for c in range(cs.total):
        assert cs.flat_index(cs.tuple_of(c)) == c


def test_bad_axis():
    with pytest.raises(DomainError):
        AxisSpec(1, 1, 4)
    with pytest.raises(DomainError):
        AxisSpec(0, 1, 0)


def test_from_quantizer_cells_match_levels():
    q = QuantizerSpec.from_word_length(3, 0, 1)
    cs = CellSpace.from_quantizers(VectorQuantizerSpec([q]))
    assert cs.total == 8
    np.testing.assert_allclose(cs.centers()[:, 0], q.values())


def test_nearest_cell_ties_low():
    # origin sits on a corner of four cells
    assert SQUARE.tuple_of(SQUARE.nearest_cell()) == (7, 7)
    assert LINE.nearest_cell() == 0


shapes = st.lists(st.integers(1, 6), min_size=1, max_size=3)


@given(shapes)
def test_center_roundtrip(shape):
    cs = CellSpace([AxisSpec(-1.5, 2.0, n) for n in shape])
    cells = np.arange(cs.total)
    np.testing.assert_array_equal(cs.cells_of(cs.centers()), cells)


@given(shapes, st.data())
def test_disjoint_cover(shape, data):
    cs = CellSpace([AxisSpec(-1.0, 1.0, n) for n in shape])
    x = np.array([data.draw(st.floats(-2, 2)) for _ in shape])
    c = cs.cell_of(x)
    inside = np.all((x >= -1) & (x <= 1))
    assert (c != SINK) == inside
    if inside:
        z = np.array(cs.tuple_of(c))
        left = cs.lo + z * cs.widths
        assert np.all(x >= left - 1e-12) and np.all(x <= left + cs.widths + 1e-12)
