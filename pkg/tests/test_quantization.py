import numpy as np
import pytest
from hypothesis import given, strategies as st

from cellmap.errors import DomainError, RangeError
from cellmap.quantization import (QuantizerSpec, RoundingMode, VectorQuantizerSpec, dequantize,
                                  fixed_point_multiply, quantize, quantize_vector, requantize)

Q8 = QuantizerSpec(0.125, 7)


def test_worked_trace_levels():
    assert quantize(0.546875, Q8) == 4
    assert dequantize(4, Q8) == 0.5
    # 2.5 is a tie and goes up
    assert quantize(0.3125, Q8) == 3


def test_zero_and_saturation():
    assert quantize(0.0, QuantizerSpec(0.37, 5)) == 0
    assert quantize(100, QuantizerSpec(1.0, 2)) == 2
    assert quantize(-100, QuantizerSpec(1.0, 2)) == -2


def test_dequantize_examples():
    assert dequantize(0, QuantizerSpec(0.3, 4)) == 0
    assert dequantize(-2, QuantizerSpec(0.25, 4)) == -0.5
    with pytest.raises(RangeError):
        dequantize(8, Q8)


def test_non_finite_rejected():
    for bad in (np.nan, np.inf, -np.inf):
        with pytest.raises(DomainError):
            quantize(bad, Q8)


def test_bad_specs():
    with pytest.raises(DomainError):
        QuantizerSpec(0.0, 3)
    with pytest.raises(DomainError):
        QuantizerSpec(0.1, -1)


def test_truncate_mode():
    q = QuantizerSpec(0.125, 7, RoundingMode.TRUNCATE)
    assert quantize(0.3125, q) == 2
    assert quantize(-0.01, q) == -1


def test_vector_examples():
    vq = VectorQuantizerSpec.uniform(2, Q8)
    assert list(quantize_vector([0.546875, 0.3125], vq)) == [4, 3]
    assert list(quantize_vector([0, 0], vq)) == [0, 0]
    assert list(quantize_vector([10, -10], VectorQuantizerSpec.uniform(2, QuantizerSpec(1.0, 3)))) == [3, -3]
    with pytest.raises(DomainError):
        quantize_vector([0.1, 0.2, 0.3], vq)


def test_fixed_point_multiply_trace():
    assert fixed_point_multiply(0.625, 0.875, Q8) == 0.5
    assert fixed_point_multiply(0.625, 0.125, Q8) == 0.125
    assert fixed_point_multiply(123.0, 0.0, Q8) == 0.0


def test_word_length_unsigned():
    q = QuantizerSpec.from_word_length(3, 0.0, 1.0)
    assert q.delta == 0.125
    assert (q.min_level, q.saturation) == (0, 7)
    np.testing.assert_array_equal(q.values(), np.arange(8) / 8)


def test_word_length_signed_two_complement():
    q = QuantizerSpec.from_word_length(4, -1.0, 1.0)
    assert (q.min_level, q.saturation) == (-8, 7)
    np.testing.assert_allclose(q.values(), -1 + np.arange(16) * 0.125)
    assert requantize(0.06, q) == 0.0
    assert requantize(0.0625, q) == 0.125
    assert requantize(5.0, q) == 0.875


specs = st.builds(QuantizerSpec, st.floats(1e-3, 10.0), st.integers(1, 200),
                  st.sampled_from(list(RoundingMode)))


@given(specs, st.floats(-1e4, 1e4), st.floats(-1e4, 1e4))
def test_monotone(q, x, y):
    lo, hi = min(x, y), max(x, y)
    assert quantize(lo, q) <= quantize(hi, q)


@given(specs, st.data())
def test_idempotent_on_representatives(q, data):
    k = data.draw(st.integers(-q.saturation, q.saturation))
    assert quantize(dequantize(k, q), q) == k


@given(st.floats(1e-3, 10.0), st.integers(1, 200), st.data())
def test_bounded_error(delta, M, data):
    q = QuantizerSpec(delta, M)
    x = data.draw(st.floats(-(M + 0.5) * delta, (M + 0.5) * delta))
    assert abs(dequantize(quantize(x, q), q) - x) <= delta / 2 * (1 + 1e-9)


@given(specs, st.floats(1.0, 1e3))
def test_constant_beyond_saturation(q, extra):
    edge = (q.saturation + 0.5) * q.delta
    assert quantize(edge + extra * q.delta, q) == q.saturation
    assert quantize(-edge - extra * q.delta, q) == -q.saturation
