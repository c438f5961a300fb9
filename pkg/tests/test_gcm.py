from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from cellmap.cellspace import SINK, AxisSpec, CellSpace
from cellmap.errors import DomainError
from cellmap.gcm import (MonteCarlo, Subdivision, TransitionMatrix, build_gcm, classify_gcm,
                         default_sampling, gcm_boundary_report)
from cellmap.models import DiscreteLTI, QuantizedLoop, discretize_zoh, harmonic_oscillator, lqr_gain
from cellmap.quantization import QuantizerSpec, VectorQuantizerSpec
from oracles import interval_overlap_1d

LINE = CellSpace.from_bits([(0, 1, 3)])


def scale(a):
    return lambda X: a * X


def column_sums(W):
    return np.asarray(W.matrix.sum(axis=0)).ravel()


def test_identity_matrix():
    W = build_gcm(lambda X: X, LINE, Subdivision(4))
    assert (W.matrix != sp.identity(9, format="csc")).nnz == 0
    cls = classify_gcm(W)
    assert [g.tolist() for g in cls.persistent_groups] == [[c] for c in range(8)]
    assert len(cls.transient_cells) == 0
    assert set(gcm_boundary_report(cls, LINE)) == {"P"}


def test_scale_map_cell_two():
    W = build_gcm(scale(0.625), LINE, Subdivision(16))
    assert W.column(2) == {1: 1.0}


def test_shift_map_half_split():
    W = build_gcm(lambda X: X + 0.0625, LINE, Subdivision(16))
    assert W.column(0) == {0: 0.5, 1: 0.5}


def test_subdivision_matches_interval_oracle():
    # with k samples per cell the counts converge to exact overlap fractions
    W = build_gcm(scale(0.625), LINE, Subdivision(400))
    for src in range(8):
        exact = interval_overlap_1d(0, 1, 8, Fraction(5, 8), src)
        got = W.column(src)
        assert set(got) == set(exact)
        for k, p in exact.items():
            assert got[k] == pytest.approx(float(p), abs=1 / 400)


def test_sink_column_absorbing_and_sums():
    W = build_gcm(lambda X: 1.7 * X - 0.2, LINE, MonteCarlo(50, 3))
    assert W.column(SINK) == {SINK: 1.0}
    np.testing.assert_allclose(column_sums(W), 1.0, atol=1e-12)


def test_classify_exact_scale_map():
    cls = classify_gcm(build_gcm(scale(0.625), LINE, Subdivision(8)))
    assert [g.tolist() for g in cls.persistent_groups] == [[0]]
    assert cls.transient_cells.tolist() == list(range(1, 8))
    np.testing.assert_allclose(cls.absorption[:, 0], 1.0, atol=1e-9)


def two_cell_example():
    cs = CellSpace([AxisSpec(0, 2, 2)])
    counts = sp.csc_matrix(np.array([[10, 3, 0], [0, 0, 0], [0, 7, 10]]))
    return TransitionMatrix(counts, 10, None, cs), cs


def test_classify_two_cell_example():
    W, cs = two_cell_example()
    cls = classify_gcm(W)
    assert [g.tolist() for g in cls.persistent_groups] == [[0]]
    assert cls.absorption_of(1) == pytest.approx({1: 0.3, "sink": 0.7})
    assert gcm_boundary_report(cls, cs).tolist() == ["P", "B"]


def test_non_stochastic_rejected():
    counts = sp.csc_matrix(np.array([[5, 0], [0, 10]]))
    with pytest.raises(DomainError):
        classify_gcm(TransitionMatrix(counts, 10))


def test_quantized_oscillator_boundary():
    Ad, Bd = discretize_zoh(harmonic_oscillator().Ac, harmonic_oscillator().Bc, 0.1)
    K = lqr_gain(Ad, Bd, np.diag([1, 0]), [[1]])
    cs = CellSpace.from_bits([(-1, 1, 4), (-1, 1, 4)])
    ad = VectorQuantizerSpec.from_word_lengths([4, 4], [(-1, 1)] * 2)
    loop = QuantizedLoop(DiscreteLTI(Ad, Bd), K, ad, QuantizerSpec.from_word_length(4, -1, 1))
    cls = classify_gcm(build_gcm(loop.step, cs))
    grid = gcm_boundary_report(cls, cs)
    cells = np.concatenate(cls.persistent_groups)
    assert len(cells) > 0
    assert np.all(np.abs(cs.centers(cells)) < 0.25)
    assert np.any(grid == "B")
    sums = cls.absorption.sum(axis=1)
    np.testing.assert_allclose(sums, 1.0, atol=1e-6)


def test_default_sampling():
    assert default_sampling(LINE) == Subdivision(5)
    assert default_sampling(CellSpace.from_bits([(0, 1, 1)] * 3)) == MonteCarlo(128, 0)


def test_monte_carlo_determinism_across_threads():
    cs = CellSpace.from_bits([(-1, 1, 4), (-1, 1, 4)])
    f = lambda X: X @ np.array([[0.9, 0.4], [-0.5, 0.7]]).T  # noqa: E731
    import cellmap._parallel as par
    a = build_gcm(f, cs, MonteCarlo(64, 11), threads=1)
    old = par.CHUNK
    try:
        b = build_gcm(f, cs, MonteCarlo(64, 11), threads=6)
    finally:
        par.CHUNK = old
    assert (a.counts != b.counts).nnz == 0
    c = build_gcm(f, cs, MonteCarlo(64, 12))
    assert (a.counts != c.counts).nnz > 0


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5),
       st.integers(1, 4), st.integers(0, 2**31))
def test_column_stochastic_and_absorption(a, b, c, d, k, seed):
    cs = CellSpace.from_bits([(-1, 1, 2), (-1, 1, 2)])
    A = np.array([[a, b], [c, d]])
    f = lambda X: X @ A.T  # noqa: E731
    for W in (build_gcm(f, cs, Subdivision(k)), build_gcm(f, cs, MonteCarlo(20, seed))):
        assert np.all(W.counts.data > 0)
        np.testing.assert_array_equal(np.asarray(W.counts.sum(axis=0)).ravel(), W.samples)
        assert W.column(SINK) == {SINK: 1.0}
        cls = classify_gcm(W)
        if len(cls.transient_cells):
            np.testing.assert_allclose(cls.absorption.sum(axis=1), 1.0, atol=1e-6)
