import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from axialsig.chen import (SignatureError, TruncatedSignature, axial_word, chen_truncated_signature,
                           cross_check, extract_axial_coefficient, level_norms)
from axialsig.curves import Polyline, make_preset, sample_polyline
from axialsig.table import build_table

coords = st.floats(-2.0, 2.0, allow_nan=False)


def _poly(rows):
    return Polyline.from_vertices(np.asarray(rows, dtype=float))


def test_single_segment_is_tensor_exponential():
    v = np.array([0.5, -1.5, 2.0])
    sig = chen_truncated_signature(_poly([[0, 0, 0], v]), 4)
    for word in [(1,), (2, 3), (3, 3, 1), (1, 2, 3, 2)]:
        expected = np.prod([v[w - 1] for w in word]) / math.factorial(len(word))
        assert sig.coefficient(word) == pytest.approx(expected, rel=1e-14)


def test_constant_path_is_identity():
    sig = chen_truncated_signature(_poly([[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]), 5)
    assert sig.levels[0][0] == 1.0
    for lev in sig.levels[1:]:
        assert not lev.any()


def test_empty_polyline_rejected():
    with pytest.raises(SignatureError):
        chen_truncated_signature(_poly([[0, 0], [1, 1]]), 0)


def test_level_two_area():
    # unit square corner path (0,0) -> (1,0) -> (1,1): S^{12} = 1, S^{21} = 0
    sig = chen_truncated_signature(_poly([[0, 0], [1, 0], [1, 1]]), 2)
    assert sig.coefficient((1, 2)) == pytest.approx(1.0)
    assert sig.coefficient((2, 1)) == pytest.approx(0.0)
    assert sig.coefficient((1, 1)) == pytest.approx(0.5)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(coords, coords), min_size=3, max_size=7), st.integers(1, 4))
def test_chen_identity(points, N):
    pts = np.array(points)
    cut = len(pts) // 2
    whole = chen_truncated_signature(_poly(pts), N)
    left = chen_truncated_signature(_poly(pts[: cut + 1]), N)
    right = chen_truncated_signature(_poly(pts[cut:]), N)
    prod = left * right
    for a, b in zip(whole.levels, prod.levels):
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(coords, coords, coords), min_size=2, max_size=6))
def test_factorial_decay(points):
    poly = _poly(points)
    N = 6
    sig = chen_truncated_signature(poly, N)
    # the coefficient l1 norm pairs with the l1 length of the increments
    L = float(np.abs(poly.increments()).sum())
    for n in range(1, N + 1):
        assert np.abs(sig.levels[n]).sum() <= (L ** n / math.factorial(n)) * (1 + 1e-12) + 1e-15


def test_shuffle_of_level_one():
    # S^{(a)} S^{(b)} = S^{(ab)} + S^{(ba)} for any path
    pts = np.array([[0, 0], [0.3, 1.0], [1.2, -0.4], [2.0, 0.5]])
    sig = chen_truncated_signature(_poly(pts), 2)
    a, b = sig.coefficient((1,)), sig.coefficient((2,))
    assert a * b == pytest.approx(sig.coefficient((1, 2)) + sig.coefficient((2, 1)))


def test_axial_words():
    assert axial_word(1, 2, 2, 1) == (1, 1, 2, 1)
    c0 = 1.7
    sig = chen_truncated_signature(_poly([[0, 0], [c0, 0.3]]), 6)
    # pure axial words of a linear coordinate: C0^{n+1} / (n+1)!
    for k, l in [(0, 0), (2, 1), (3, 2)]:
        n = k + l
        assert extract_axial_coefficient(sig, 1, 1, k, l) == pytest.approx(c0 ** (n + 1) / math.factorial(n + 1))
    assert extract_axial_coefficient(sig, 1, 1, 0, 0) == pytest.approx(c0)
    flat = chen_truncated_signature(_poly([[0, 0], [0, 0]]), 3)
    assert extract_axial_coefficient(flat, 1, 2, 1, 1) == 0.0
    with pytest.raises(SignatureError):
        extract_axial_coefficient(sig, 1, 2, 4, 2)


def test_word_index_validation():
    sig = TruncatedSignature.identity(2, 2)
    with pytest.raises(SignatureError):
        sig.coefficient((3,))
    with pytest.raises(SignatureError):
        TruncatedSignature(2, 2, [np.ones(1), np.zeros(2)])


def test_cross_check_linear_exact():
    c = make_preset("linear", {"slope": 0.7})
    rep = cross_check(build_table(c, 7), chen_truncated_signature(sample_polyline(c, 3), 8), 7)
    assert rep.max_rel_err < 1e-12
    assert rep.cells == 36


def test_cross_check_flags_worst_cell():
    c = make_preset("monomial", {"m": 1})
    coarse = chen_truncated_signature(sample_polyline(c, 5), 6)
    rep = cross_check(build_table(c, 5), coarse, 5)
    assert rep.max_rel_err > 1e-3
    j, k, l = rep.worst
    assert j == 2 and k + l <= 5


def test_cross_check_reparameterized_polyline():
    # the reparameterized curve has piecewise-constant derivative, so both
    # routes describe exactly the same path
    from axialsig.curves import reparameterize_to_axial_linear
    poly = _poly([[0, 0], [0.4, 0.3], [0.5, -0.2], [1.5, 0.1]])
    curve = reparameterize_to_axial_linear(poly, 1)
    rep = cross_check(build_table(curve, 6), chen_truncated_signature(poly, 7), 6)
    assert rep.max_rel_err < 1e-9


def test_level_norms_monotone_for_short_path():
    sig = chen_truncated_signature(_poly([[0, 0], [0.3, 0.4]]), 5)
    norms = level_norms(sig)
    assert norms[0] == 1.0
    assert np.all(np.diff(norms) < 0)
