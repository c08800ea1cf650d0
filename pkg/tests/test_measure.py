import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from almostlp.errors import UnsupportedFamilyCombination
from almostlp.measure import (
    Cell, MeasurableFn, MeasurableSet, MeasureSpace, TailFamily, TailSegment,
    integrate_p, integrate_signed, measure_of, pointwise_min_one, superlevel_set,
)
from almostlp.randomgen import random_fn, random_space, random_subset

GEOM = TailFamily("geometric", a=1.0, r=0.5, start=1)


def atom_sum(fn, lo=1, hi=4000):
    return sum(fn(n) for n in range(lo, hi))


def test_cells_only_integral(rng):
    sp = random_space(rng, 12)
    f = random_fn(rng, sp)
    for p in (1.0, 1.5, 3.0):
        ref = float(np.sum(np.abs(f.values) ** p * sp.weights))
        assert math.isclose(integrate_p(f, p).value, ref, rel_tol=1e-13)
    assert math.isclose(integrate_signed(f).value, float(np.dot(f.values, sp.weights)), rel_tol=1e-12, abs_tol=1e-15)


@pytest.mark.parametrize("b,rho,sigma,p", [(1.0, 1.0, 0.0, 1.0), (3.0, 1.2, 0.0, 2.0), (2.0, 1.0, 1.0, 1.0),
                                           (1.0, 0.9, 0.0, 3.0), (1.0, 1.0, -2.0, 1.5)])
def test_tail_integral_against_atom_sum(b, rho, sigma, p):
    sp = MeasureSpace([Cell(0, 0.3)], GEOM)
    seg = TailSegment(1, None, b, rho, sigma)
    f = MeasurableFn(sp, np.array([2.0]), (seg,))
    ref = 0.3 * 2.0**p + atom_sum(lambda n: (0.5 * rho**p) ** n * b**p * float(n) ** (-sigma * p))
    assert math.isclose(integrate_p(f, p, tol=1e-14).value, ref, rel_tol=1e-11)


def test_divergent_tail_integral_is_infinite():
    sp = MeasureSpace([], TailFamily("constant", c=1.0))
    f = MeasurableFn(sp, np.zeros(0), (TailSegment(1, None, 1.0, sigma=1.0),))
    assert math.isinf(integrate_p(f, 1.0).value)
    assert math.isclose(integrate_p(f, 2.0).value, math.pi**2 / 6, rel_tol=1e-11)


def test_tail_family_mass():
    assert math.isclose(GEOM.mass(1).value, 1.0, rel_tol=1e-14)
    assert math.isclose(GEOM.mass(3, 6).value, 0.125 + 0.0625 + 0.03125, rel_tol=1e-14)
    pw = TailFamily("power", c=1.0, s=2.0)
    assert math.isclose(pw.mass(1).value, math.pi**2 / 6, rel_tol=1e-11)
    assert math.isinf(TailFamily("constant", c=0.1).mass(5).value)


@pytest.mark.parametrize("kw", [dict(kind="geometric", a=1, r=1.5), dict(kind="constant", c=0),
                                dict(kind="power", c=1, s=-1), dict(kind="bogus")])
def test_tail_family_validation(kw):
    with pytest.raises(ValueError):
        TailFamily(**kw)


def test_mixed_family_segment_rejected():
    with pytest.raises(UnsupportedFamilyCombination):
        TailSegment(1, None, 1.0, rho=2.0, sigma=1.0)


def test_measure_of_matches_bruteforce(rng):
    sp = random_space(rng, 16)
    f = random_fn(rng, sp)
    for t in (1e-9, 0.5, 1.0, 10.0):
        ref = float(sp.weights[np.abs(f.values) > t].sum())
        assert math.isclose(measure_of(f, t).value, ref, rel_tol=1e-13, abs_tol=1e-15)


def test_measure_of_on_tail():
    sp = MeasureSpace([], GEOM)
    f = MeasurableFn(sp, np.zeros(0), (TailSegment(1, None, 1.0, rho=2.0),))
    # |f| = 2^n > 100 for n >= 7, weights 2^-n
    assert math.isclose(measure_of(f, 100.0).value, 2.0**-6, rel_tol=1e-13)
    E = superlevel_set(f, 100.0)
    assert E.tail == ((7, None),)


def test_set_algebra(rng):
    sp = random_space(rng, 10)
    A, B = random_subset(rng, sp), random_subset(rng, sp)
    total = float(sp.weights.sum())
    assert math.isclose(A.measure().value + A.complement().measure().value, total, rel_tol=1e-13)
    ref = float(sp.weights[(A.frac > 0) | (B.frac > 0)].sum())
    assert math.isclose(A.union(B).measure().value, ref, rel_tol=1e-13)
    assert MeasurableSet.empty(sp).is_empty
    assert math.isclose(MeasurableSet.whole(sp).measure().value, total, rel_tol=1e-13)


def test_tail_sets():
    sp = MeasureSpace([Cell(0, 1.0)], GEOM)
    T = MeasurableSet.tail_from(sp, 4)
    assert math.isclose(T.measure().value, 2.0**-3, rel_tol=1e-13)
    C = T.complement()
    assert math.isclose(C.measure().value, 1.0 + 1.0 - 2.0**-3, rel_tol=1e-13)


def test_restrict_and_arithmetic():
    sp = MeasureSpace([Cell(0, 0.5), Cell(1, 0.5)], GEOM)
    f = MeasurableFn(sp, np.array([1.0, -2.0]), (TailSegment(1, None, 1.0, rho=2.0),))
    g = MeasurableFn(sp, np.array([0.5, 0.5]), (TailSegment(1, 5, 1.0),))
    h = f - g
    for n in range(1, 12):
        assert h.tail_value(n) == pytest.approx(f.tail_value(n) - g.tail_value(n))
    r = f.restrict(MeasurableSet.of_cells(sp, [1], ((3, None),)))
    assert r.values.tolist() == [0.0, -2.0]
    assert r.tail_value(2) == 0.0 and r.tail_value(3) == 8.0
    assert (f + (-f)).is_zero()


def test_pointwise_min_one():
    sp = MeasureSpace([Cell(0, 1.0), Cell(1, 1.0)], GEOM)
    f = MeasurableFn(sp, np.array([-3.0, 0.25]), (TailSegment(1, None, 0.25, rho=2.0),))
    m = pointwise_min_one(f)
    assert m.values.tolist() == [1.0, 0.25]
    assert [m.tail_value(n) for n in (1, 2, 3)] == [0.5, 1.0, 1.0]


segments = st.builds(
    lambda start, length, b, kind, x: TailSegment(
        start, None if length == 0 else start + length, b,
        rho=x if kind == "geometric" else 1.0, sigma=x * 2 - 2 if kind == "power" else 0.0),
    st.integers(1, 50), st.integers(0, 200), st.floats(0.01, 100.0),
    st.sampled_from(["constant", "geometric", "power"]), st.floats(0.3, 2.5))


@settings(max_examples=200, deadline=None)
@given(segments, st.floats(0.001, 50.0))
def test_superlevel_matches_scan(seg, t):
    rng = seg.superlevel(t)
    hi = seg.start + 400 if seg.stop is None else seg.stop
    idx = np.arange(seg.start, hi)
    above = np.abs(seg.value(idx)) > t
    got = np.zeros_like(above)
    if rng is not None:
        lo, up = rng
        got = (idx >= lo) & ((idx < up) if up is not None else True)
    assert np.array_equal(got, above)
