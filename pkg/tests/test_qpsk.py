import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfonebit import qpsk


@pytest.mark.parametrize("bits,point", [
    ((0, 0), 1 + 1j),
    ((0, 1), 1 - 1j),
    ((1, 0), -1 + 1j),
    ((1, 1), -1 - 1j),
])
def test_constellation_mapping(bits, point):
    s = qpsk.modulate(np.array(bits))
    assert s == pytest.approx(point / np.sqrt(2))
    assert abs(s) == pytest.approx(1.0)


@given(st.lists(st.integers(0, 1), min_size=2, max_size=40)
       .filter(lambda b: len(b) % 2 == 0))
def test_round_trip(bits):
    arr = np.array(bits, dtype=np.uint8).reshape(-1, 2)
    np.testing.assert_array_equal(qpsk.demodulate(qpsk.modulate(arr)), arr)


def test_shapes_preserved():
    bits = np.random.default_rng(0).integers(0, 2, (3, 5, 2), dtype=np.uint8)
    sym = qpsk.modulate(bits)
    assert sym.shape == (3, 5)
    assert qpsk.demodulate(sym).shape == (3, 5, 2)


@given(
    st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)),
             min_size=1, max_size=16),
    st.floats(1e-6, 1e6),
)
def test_demodulation_scale_invariant(points, beta):
    shat = np.array([re + 1j * im for re, im in points])
    np.testing.assert_array_equal(qpsk.demodulate(beta * shat),
                                  qpsk.demodulate(shat))


def test_exact_zero_decides_zero_bit():
    out = qpsk.demodulate(np.array(0.0 + 0.0j))
    np.testing.assert_array_equal(out, [0, 0])
