import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from axialsig.curves import (Curve, CurveError, Polyline, linear_combination, load_preset_config,
                             make_preset, read_polyline_csv, reparameterize_to_axial_linear,
                             sample_polyline, scale_components, sup_norm_and_holder,
                             write_polyline_csv)


@pytest.mark.parametrize("name,params,s,expected", [
    ("linear", {"slope": 3.0}, 0.7, [1.0, 3.0]),
    ("monomial", {"m": 2}, 0.5, [1.0, 0.25]),
    ("polynomial", {"coeffs": [0, 1, 1]}, 0.5, [1.0, 2.0]),  # y = s + s^2
    ("sine", {}, 0.0, [1.0, 2 * math.pi]),
    ("helix", {"n": 1}, 0.25, [1.0, -1.0, 0.0]),
    ("holder_kink", {"alpha": 0.5, "x0": 0.5}, 0.75, [1.0, 0.5]),
    ("zero", {"d": 4}, 0.1, [1.0, 0.0, 0.0, 0.0]),
])
def test_preset_derivatives(name, params, s, expected):
    c = make_preset(name, params)
    np.testing.assert_allclose(c.derivative(s)[:, 0], expected, atol=1e-15)


def test_axial_row_is_forced():
    c = Curve(2, 1, 2.5, lambda s: np.vstack([np.zeros_like(s), s]))
    np.testing.assert_array_equal(c.derivative([0.1, 0.9])[0], [2.5, 2.5])


@pytest.mark.parametrize("name,params", [
    ("nope", {}),
    ("monomial", {"m": -1}),
    ("monomial", {"m": 1.5}),
    ("helix", {"n": 0}),
    ("holder_kink", {"alpha": 0.0}),
    ("holder_kink", {"x0": 2.0}),
    ("sine", {"freq": -1}),
    ("polynomial", {}),
])
def test_bad_presets_rejected(name, params):
    with pytest.raises(CurveError):
        make_preset(name, params)


def test_curve_validation():
    with pytest.raises(CurveError):
        Curve(1, 1, 1.0, lambda s: s)
    with pytest.raises(CurveError):
        Curve(2, 3, 1.0, lambda s: s)
    with pytest.raises(CurveError):
        Curve(2, 1, 0.0, lambda s: s)


def test_polyline_validation():
    with pytest.raises(CurveError):
        Polyline(np.zeros((3, 2)), np.array([0.0, 0.7, 0.5]))
    with pytest.raises(CurveError):
        Polyline(np.zeros((3, 2)), np.array([0.0, 0.5]))
    p = Polyline.from_vertices([[0, 0], [3, 4]])
    assert p.length() == 5.0


def test_sample_polyline_monomial_exact():
    c = make_preset("monomial", {"m": 1})
    p = sample_polyline(c, 11)
    np.testing.assert_allclose(p.vertices[:, 1], p.grid ** 2 / 2, atol=1e-15)
    np.testing.assert_allclose(p.vertices[:, 0], p.grid, atol=0)


def test_helix_closes_up():
    p = sample_polyline(make_preset("helix", {"n": 3}), 301)
    np.testing.assert_allclose(p.vertices[-1], [1.0, 0.0, 0.0], atol=1e-13)


def test_polyline_csv_round_trip(tmp_path):
    p = sample_polyline(make_preset("sine"), 9)
    path = tmp_path / "p.csv"
    write_polyline_csv(p, path, comments=["demo"])
    q = read_polyline_csv(path)
    np.testing.assert_allclose(q.vertices, p.vertices, rtol=1e-11, atol=1e-12)
    (tmp_path / "bad.csv").write_text("t,x1\n0,0\n")
    with pytest.raises(CurveError):
        read_polyline_csv(tmp_path / "bad.csv")


def test_load_preset_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{"preset": "helix", "n": 2}')
    assert load_preset_config(path).d == 3


def test_reparameterize_linear_samples():
    # (0,0) -> (1,2) -> (2,4): slope 2 throughout, C0 = 2
    c = reparameterize_to_axial_linear(Polyline.from_vertices([[0, 0], [1, 2], [2, 4]]), 1)
    assert c.axial_speed == 2.0
    np.testing.assert_allclose(c.derivative([0.1, 0.6, 1.0]), [[2, 2, 2], [4, 4, 4]])
    assert c.breakpoints == (0.5,)


def test_reparameterize_piecewise():
    # (0,0) -> (1,1) -> (2,1): dx2/dx1 = 1 then 0; with s = x1 / 2 the slopes are 2 then 0
    c = reparameterize_to_axial_linear(Polyline.from_vertices([[0, 0], [1, 1], [2, 1]]), 1)
    vals = c.derivative([0.25, 0.75])
    np.testing.assert_allclose(vals[1] / vals[0], [1.0, 0.0])
    np.testing.assert_allclose(vals[1], [2.0, 0.0])


def test_reparameterize_rejects_non_monotone():
    with pytest.raises(CurveError, match="vertex 2"):
        reparameterize_to_axial_linear(Polyline.from_vertices([[0, 0], [1, 1], [1, 2]]), 1)


def test_linear_combination_and_scaling():
    a = make_preset("monomial", {"m": 1})
    b = make_preset("linear", {"slope": 2.0})
    c = linear_combination([2.0, -1.0], [a, b])
    s = np.linspace(0, 1, 5)
    np.testing.assert_allclose(c.derivative(s)[1], 2 * s - 2)
    np.testing.assert_allclose(scale_components(a, 3.0).derivative(s)[1], 3 * s)
    with pytest.raises(CurveError):
        linear_combination([1.0], [make_preset("linear", {"C0": 2.0})])


def test_sup_norm_and_holder():
    sup, hol = sup_norm_and_holder(make_preset("holder_kink", {"alpha": 0.5, "x0": 0.5}), 0.5)
    # |gamma'| = sqrt(1 + |s - 1/2|); the Holder quotient of |s - 1/2|^{1/2} peaks at 1
    assert sup == pytest.approx(math.sqrt(1.5))
    assert 0.7 < hol <= 1.0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.01, 3.0), min_size=1, max_size=12),
       st.lists(st.floats(-3.0, 3.0), min_size=12, max_size=12))
def test_reparameterize_preserves_ratio(dx, dy):
    dy = dy[: len(dx)]
    verts = np.vstack([[0.0, 0.0], np.cumsum(np.column_stack([dx, dy]), axis=0)])
    c = reparameterize_to_axial_linear(Polyline.from_vertices(verts), 1)
    u = np.concatenate([[0.0], np.cumsum(dx)]) / sum(dx)
    mids = 0.5 * (u[:-1] + u[1:])
    keep = np.diff(u) > 1e-9
    vals = c.derivative(mids[keep])
    np.testing.assert_allclose(vals[1] / vals[0], (np.array(dy) / np.array(dx))[keep], rtol=1e-9, atol=1e-9)
