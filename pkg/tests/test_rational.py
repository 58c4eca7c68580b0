import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from axialsig.rational import (RationalError, RationalScheme, cf_expansion,
                               continued_fraction_convergents, make_scheme, meets_rate_condition,
                               naive_pair, uniform_pairs)

unit = st.floats(0.0, 1.0, allow_nan=False)


@pytest.mark.parametrize("x,n,expected", [
    (0.5, 7, (3, 7)),
    (1.0, 5, (5, 5)),
    (0.0, 9, (0, 9)),
    (0.29, 100, (28, 100)),  # the double 0.29 lies just below 29/100
])
def test_naive_pair(x, n, expected):
    assert naive_pair(x, n) == expected


def test_naive_rejects_out_of_range():
    with pytest.raises(RationalError):
        naive_pair(1.5, 3)
    with pytest.raises(RationalError):
        naive_pair(0.5, 0)


@settings(max_examples=2000, deadline=None)
@given(unit, st.integers(1, 10 ** 6))
def test_naive_error_below_one_over_q(x, n):
    p, q = naive_pair(x, n)
    assert 0 <= p <= q
    assert abs(Fraction(p, q) - Fraction(x)) < Fraction(1, q)


def test_naive_property_sweep():
    rng = np.random.default_rng(7)
    xs = rng.random(100_000)
    ns = rng.integers(1, 10_000, size=xs.size)
    p = np.floor(ns * xs)
    assert np.all(np.abs(p / ns - xs) < 1.0 / ns)


def test_uniform_pairs():
    up = uniform_pairs(10)
    assert up(0.55) == (5, 10)
    assert up(0.0) == (0, 10)
    grid = np.linspace(0, 1, 1001)
    p, q = up(grid)
    assert np.all(q == 10)
    assert np.max(np.abs(p / q - grid)) <= 1 / 10


def test_cf_of_half_terminates():
    exp = cf_expansion(0.5, 10)
    assert exp.convergents == [(0, 1), (1, 2)]
    assert exp.terminated


def test_cf_golden_ratio_fibonacci():
    conv = continued_fraction_convergents((math.sqrt(5) - 1) / 2, 12)
    fib = [1, 1]
    while len(fib) < 16:
        fib.append(fib[-1] + fib[-2])
    assert conv[:6] == [(1, 1), (1, 2), (2, 3), (3, 5), (5, 8), (8, 13)]
    assert [q for _, q in conv] == fib[1:13]


def test_cf_pi_minus_three_quotients():
    exp = cf_expansion(math.pi - 3, 8)
    assert exp.quotients[:8] == [0, 7, 15, 1, 292, 1, 1, 1]
    assert exp.convergents[:5] == [(0, 1), (1, 7), (15, 106), (16, 113), (4687, 33102)]


def test_cf_stops_at_machine_precision():
    exp = cf_expansion(0.3, 64)
    assert exp.terminated
    assert exp.convergents[-1] == (3, 10)


@settings(max_examples=300, deadline=None)
@given(unit)
def test_cf_invariants(x):
    exp = cf_expansion(x, 40)
    qs = [q for _, q in exp.convergents]
    assert all(b > a for a, b in zip(qs, qs[1:]))
    fx = Fraction(x)
    errs = []
    for p, q in exp.convergents:
        assert 0 <= p <= q
        err = abs(Fraction(p, q) - fx)
        assert err < Fraction(1, q * q)  # Dirichlet
        errs.append(err)
    assert all(b < a for a, b in zip(errs, errs[1:]) if a > 0)
    # convergents after the first alternate around x
    signs = [Fraction(p, q) - fx for p, q in exp.convergents[1:]]
    signs = [s for s in signs if s != 0]
    assert all((a > 0) != (b > 0) for a, b in zip(signs, signs[1:]))


def test_rate_condition():
    x = 0.37
    assert meets_rate_condition([naive_pair(x, n) for n in range(2, 200)], x)
    assert meets_rate_condition(make_scheme("cf", math.sqrt(2) - 1, 10 ** 6).pairs, math.sqrt(2) - 1)
    assert not meets_rate_condition([(1, 2), (1, 2)], 0.5)
    assert not meets_rate_condition([(0, 4)], 0.9)
    with pytest.raises(RationalError):
        meets_rate_condition([], 0.5)


@pytest.mark.parametrize("kind", ["naive", "decimal", "cf"])
@pytest.mark.parametrize("x", [0.0, 0.3, 1 / math.sqrt(2), 1.0])
def test_schemes_are_valid(kind, x):
    sch = make_scheme(kind, x, 5000)
    qs = [q for _, q in sch.pairs]
    assert all(b > a for a, b in zip(qs, qs[1:]))
    assert all(0 <= p <= q <= 5000 for p, q in sch.pairs)
    assert meets_rate_condition(sch.pairs, x)


def test_decimal_scheme():
    sch = make_scheme("decimal", 1 / 3, 10 ** 12)
    assert sch.pairs[:3] == [(3, 10), (33, 100), (333, 1000)]
    assert sch.pairs[-1][1] == 10 ** 9


def test_cf_scheme_extends_exact_hits():
    sch = make_scheme("cf", 0.5, 9)
    assert sch.pairs == [(0, 1), (1, 2), (2, 4), (3, 6), (4, 8)]
    assert sch.terminated


def test_scheme_validation_and_csv():
    with pytest.raises(RationalError):
        RationalScheme("naive", 0.5, [(3, 2)])
    with pytest.raises(RationalError):
        RationalScheme("naive", 0.5, [(1, 2), (1, 2)])
    with pytest.raises(RationalError):
        make_scheme("farey", 0.5, 10)
    fixed = make_scheme("fixed_list", 0.5, 10, pairs=[(1, 2), (3, 6), (9, 18)])
    assert fixed.pairs == [(1, 2), (3, 6)]
    text = make_scheme("naive", 0.5, 3).to_csv().splitlines()
    assert text[0] == "n,p,q,err"
    assert text[1] == "1,0,1,0.5"
