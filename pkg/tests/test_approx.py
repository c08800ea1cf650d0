import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from almostlp.approx import (
    GridBox, bump_kernel, ladder_step, mollify, rational_simple_net, simple_ladder, smooth,
    total_variation, truncate_to_lp,
)
from almostlp.errors import GridTooCoarse, NotMember, UnsupportedFamilyCombination
from almostlp.functionals import alpha_norm, alpha_norm_p, in_lp
from almostlp.measure import Cell, MeasurableFn, MeasureSpace, TailFamily, TailSegment
from almostlp.randomgen import random_fn, random_space, random_values

GEOM = TailFamily("geometric", a=1.0, r=0.5, start=1)


def random_member(rng, weights=None):
    """Cells plus growing tail values on a finite-mass tail."""
    cells = random_space(rng, 6).cells
    if weights is None:
        weights = "geometric" if rng.random() < 0.5 else "power"
    if weights == "geometric":
        tail = TailFamily("geometric", a=float(rng.uniform(0.1, 2.0)), r=float(rng.uniform(0.2, 0.9)))
        seg = TailSegment(1, None, float(rng.uniform(0.1, 3.0)), rho=float(rng.uniform(1.0, 3.0)))
    else:
        tail = TailFamily("power", c=float(rng.uniform(0.1, 2.0)), s=float(rng.uniform(1.2, 3.0)))
        seg = TailSegment(1, None, float(rng.uniform(0.1, 3.0)), sigma=-float(rng.uniform(0.0, 2.0)))
    sp = MeasureSpace(cells, tail)
    return MeasurableFn(sp, random_values(rng, len(cells)), (seg,))


# ---- ladder --------------------------------------------------------------------

def test_ladder_zero_and_dyadic():
    sp = MeasureSpace([Cell(0, 1.0)])
    assert ladder_step(MeasurableFn.zero(sp), 3).is_zero()
    f = MeasurableFn(sp, np.array([0.75]))
    assert [s.values[0] for s in simple_ladder(f, 2)] == [0.5, 0.75]
    with pytest.raises(ValueError):
        ladder_step(f, 0)


def test_ladder_domination_and_bound(rng):
    for _ in range(200):
        f = random_fn(rng, random_space(rng, 16))
        a = np.abs(f.values)
        prev = np.zeros_like(a)
        for k, s in enumerate(simple_ladder(f, 12), start=1):
            sv = np.abs(s.values)
            assert np.all(sv <= a)
            assert np.all(np.sign(s.values) * np.sign(f.values) >= 0)
            assert np.all(np.abs(s.values - f.values) <= np.maximum(2.0**-k, a - k) + 1e-15)
            assert np.all(sv >= prev)
            prev = sv


def test_ladder_on_tail_dominated():
    sp = MeasureSpace([], GEOM)
    f = MeasurableFn(sp, np.zeros(0), (TailSegment(1, 40, 0.7, rho=1.5), TailSegment(40, None, 1.0, sigma=0.5)))
    for k in (1, 3, 6):
        s = ladder_step(f, k)
        for n in range(1, 300):
            assert abs(s.tail_value(n)) <= abs(f.tail_value(n)) + 1e-15
            assert abs(s.tail_value(n) - f.tail_value(n)) <= max(2.0**-k, abs(f.tail_value(n)) - k) + 1e-12


def test_ladder_refuses_unbounded_middle():
    sp = MeasureSpace([], TailFamily("constant", c=1.0))
    f = MeasurableFn(sp, np.zeros(0), (TailSegment(1, None, 1.0, sigma=0.01),))
    with pytest.raises(UnsupportedFamilyCombination):
        ladder_step(f, 4)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=20), st.integers(1, 30))
def test_ladder_property(vals, k):
    sp = MeasureSpace([Cell(i, 1.0) for i in range(len(vals))])
    f = MeasurableFn(sp, np.array(vals))
    s = ladder_step(f, k).values
    assert np.all(np.abs(s) <= np.abs(f.values))
    assert np.all(s * 2**k == np.round(s * 2**k))
    assert np.all(np.abs(s) <= k)


# ---- truncation ------------------------------------------------------------------

def test_truncate_geometric_example():
    f = MeasurableFn(MeasureSpace([], GEOM), np.zeros(0), (TailSegment(1, None, 1.0, rho=2.0),))
    tr = truncate_to_lp(f, 1.0, 0.1)
    assert tr.certified
    assert tr.removed.tail == ((5, None),)
    assert tr.removed_measure == pytest.approx(2.0**-4, rel=1e-12)
    assert tr.distance == pytest.approx(2.0**-4, rel=1e-12)
    assert in_lp(tr.g, 1.0)


def test_truncate_already_in_lp(rng):
    f = random_fn(rng, random_space(rng, 8))
    tr = truncate_to_lp(f, 2.0, 0.1)
    assert tr.removed.is_empty and tr.distance == 0.0 and tr.certified


def test_truncate_random_members(rng):
    for _ in range(100):
        f = random_member(rng)
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        eps = float(10 ** rng.uniform(-2, 0))
        tr = truncate_to_lp(f, p, eps)
        assert tr.certified, tr.to_json()


def test_truncate_non_member():
    f = MeasurableFn(MeasureSpace([], TailFamily("constant", c=1.0)), np.zeros(0), (TailSegment(1, None, 2.0),))
    with pytest.raises(NotMember):
        truncate_to_lp(f, 1.0, 0.1)


# ---- mollification -----------------------------------------------------------------

def jump():
    box = GridBox(((-2.0, 2.0),), (400,))
    return box, box.sample(lambda x: ((x >= 0) & (x <= 1)).astype(float))


def test_kernel_normalized_and_symmetric():
    box = GridBox(((0.0, 1.0), (0.0, 1.0)), (50, 50))
    k = bump_kernel(box, 0.1)
    assert k.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(k, k[::-1, ::-1])
    with pytest.raises(GridTooCoarse):
        bump_kernel(box, 0.02)


def test_mollify_jump_order_one():
    box, f = jump()
    dist = []
    for h in (0.1, 0.05, 0.025):
        m = mollify(box, f, h=h, p=1.0)
        assert m.distance_alpha <= h
        assert m.tv_ratio <= 1.0 + 1e-12
        assert m.support_inside
        assert m.max_slope <= 2.0 / h
        dist.append(m.distance_alpha)
    ratios = [a / b for a, b in zip(dist, dist[1:])]
    assert all(1.6 <= r <= 2.5 for r in ratios)


def test_mollify_zero_and_support():
    box = GridBox(((-1.0, 1.0),), (200,))
    m = mollify(box, np.zeros(200), h=0.1)
    assert m.distance_alpha == 0.0 and not np.any(m.phi)
    _, f = jump()
    phi = smooth(GridBox(((-2.0, 2.0),), (400,)), f, 0.1)
    x = GridBox(((-2.0, 2.0),), (400,)).centers(0)
    assert not np.any(phi[(x < -0.1) | (x > 1.1)])
    assert total_variation(phi) <= total_variation(f) + 1e-12


def test_mollify_to_target_eps():
    box, f = jump()
    m = mollify(box, f, p=1.0, eps=0.05)
    assert m.distance_lp < 0.025 and m.distance_alpha < 0.05
    assert [h["h"] for h in m.history] == sorted((h["h"] for h in m.history), reverse=True)


def test_mollify_grid_too_coarse():
    box = GridBox(((0.0, 1.0),), (20,))
    f = box.sample(lambda x: (x > 0.5).astype(float))
    with pytest.raises(GridTooCoarse) as exc:
        mollify(box, f, eps=1e-4)
    assert exc.value.best is not None


def test_mollify_2d():
    box = GridBox(((-2.0, 2.0), (-2.0, 2.0)), (120, 120))
    f = box.sample(lambda x, y: ((np.abs(x) < 1) & (np.abs(y) < 1)).astype(float))
    m = mollify(box, f, h=0.2)
    assert m.support_inside and m.tv_ratio <= 1.0 + 1e-12
    assert m.distance_alpha < alpha_norm(box.to_fn(f), 1.0)


def test_gridbox_validation():
    with pytest.raises(ValueError):
        GridBox(((1.0, 0.0),), (10,))
    with pytest.raises(ValueError):
        GridBox(((0, 1), (0, 1), (0, 1), (0, 1)), (2, 2, 2, 2))


# ---- countable net -------------------------------------------------------------------

def test_net_pi():
    f = MeasurableFn(MeasureSpace([Cell(0, 1.0)]), np.array([math.pi]))
    pt = rational_simple_net(f, 1.0, 0.01)
    assert pt.s.values[0] == 3.140625
    assert pt.distance < 0.01


def test_net_zero():
    f = MeasurableFn.zero(MeasureSpace([Cell(0, 1.0)]))
    assert rational_simple_net(f, 1.0, 0.1).s.is_zero()


def test_net_random_members(rng):
    for _ in range(60):
        f = random_member(rng, weights="geometric")
        p = float(rng.choice([1.0, 2.0]))
        eps = float(10 ** rng.uniform(-2, -0.5))
        pt = rational_simple_net(f, p, eps)
        assert pt.distance <= 2 * eps
        assert alpha_norm_p(f - pt.s, p).value ** (1 / p) == pytest.approx(pt.distance, rel=1e-9)


def test_net_large_cell_values():
    f = MeasurableFn(MeasureSpace([Cell(0, 0.5), Cell(1, 0.5)]), np.array([2700.3, -0.1]))
    pt = rational_simple_net(f, 1.0, 0.01)
    assert pt.distance < 0.01
    assert np.all(np.abs(pt.s.values) <= np.abs(f.values))


def test_net_refuses_very_long_tails():
    # tail mass n^-1.1 needs about 10^13 atoms before it drops below (eps/2)^p
    sp = MeasureSpace([], TailFamily("power", c=1.0, s=1.1))
    f = MeasurableFn(sp, np.zeros(0), (TailSegment(1, None, 1.0, sigma=-0.1),))
    with pytest.raises(UnsupportedFamilyCombination):
        rational_simple_net(f, 1.0, 0.01)
