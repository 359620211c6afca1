import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from asrstream.errors import FilterDiverged, InvalidInput
from asrstream.filters import (
    initial_filter_state,
    iir_filter,
    normalize_coefficients,
)


def test_identity_filter_returns_exact_copy():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((3, 40))
    y, state = iir_filter(x, [1.0], [1.0])
    assert np.array_equal(y, x)
    assert state.shape == (3, 0)


def test_fir_impulse_response():
    x = np.array([[1.0, 0.0, 0.0, 0.0]])
    y, _ = iir_filter(x, [0.5, 0.5], [1.0])
    assert np.allclose(y, [[0.5, 0.5, 0.0, 0.0]])


def test_chunked_equals_whole():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((2, 100))
    b = [0.2, 0.3, 0.1]
    a = [1.0, -0.4, 0.05]
    whole, _ = iir_filter(x, b, a)
    state = initial_filter_state(2, b, a)
    parts = []
    for start in range(0, 100, 7):
        part, state = iir_filter(x[:, start : start + 7], b, a, state)
        parts.append(part)
    chunked = np.hstack(parts)
    assert np.abs(chunked - whole).max() < 1e-12


@given(st.integers(0, 2**31 - 1), st.lists(st.integers(1, 20), min_size=1, max_size=8))
def test_chunked_equals_whole_any_partition(seed, sizes):
    rng = np.random.default_rng(seed)
    n = sum(sizes)
    x = rng.standard_normal((2, n))
    b = [0.3, 0.2]
    a = [1.0, -0.5]
    whole, _ = iir_filter(x, b, a)
    state = initial_filter_state(2, b, a)
    parts = []
    pos = 0
    for size in sizes:
        part, state = iir_filter(x[:, pos : pos + size], b, a, state)
        parts.append(part)
        pos += size
    assert np.abs(np.hstack(parts) - whole).max() < 1e-12


def test_unstable_coefficients_diverge():
    x = np.zeros((1, 2000))
    x[0, 0] = 1.0
    with pytest.raises(FilterDiverged):
        iir_filter(x, [1.0], [1.0, -2.0])


def test_state_dimension_enforced():
    with pytest.raises(InvalidInput):
        iir_filter(np.zeros((2, 5)), [1.0, 0.5], [1.0], np.zeros((2, 3)))


def test_zero_leading_denominator_rejected():
    with pytest.raises(InvalidInput):
        iir_filter(np.zeros((1, 5)), [1.0], [0.0, 1.0])


def test_empty_chunk_passes_through():
    y, state = iir_filter(np.zeros((2, 0)), [0.5, 0.5], [1.0, -0.1])
    assert y.shape == (2, 0)
    assert state.shape == (2, 1)


def test_normalize_coefficients():
    b, a = normalize_coefficients([2.0, 4.0], [2.0, 1.0])
    assert b == (1.0, 2.0)
    assert a == (1.0, 0.5)
    with pytest.raises(InvalidInput):
        normalize_coefficients([1.0], [0.0])
