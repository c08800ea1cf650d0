import itertools
import math

import numpy as np
import pytest
from scipy.optimize import linprog

from almostlp.errors import BruteForceTooLarge, InfiniteMeasureSet
from almostlp.functionals import (
    ac_modulus, alpha_monotone_in_p, alpha_norm, alpha_norm_p, alpha_norm_variational_identity,
    alpha_seminorm_on, cover_index, estimate_chain_check, estimate_chain_suite, fnorm_axioms_check,
    frechet_mu, in_lp, lambda_p_member, lp_norm, measure_plus_level_inf, truncated_membership_check,
    witness_set,
)
from almostlp.measure import Cell, MeasurableFn, MeasurableSet, MeasureSpace, TailFamily, TailSegment
from almostlp.randomgen import random_fn, random_space, random_subset

GEOM = TailFamily("geometric", a=1.0, r=0.5, start=1)
FLAT = TailFamily("constant", c=1.0, start=1)


def modulus_oracle(f, p, delta):
    """Brute force over atom subsets, LP over the divisible cells."""
    w = f.space.weights
    d = np.abs(f.values) ** p
    div = np.array([c.divisible for c in f.space.cells])
    atoms = np.nonzero(~div)[0]
    best = 0.0
    for r in range(len(atoms) + 1):
        for sub in itertools.combinations(atoms, r):
            used = float(w[list(sub)].sum())
            if used >= delta:
                continue
            gain = float((d * w)[list(sub)].sum())
            idx = np.nonzero(div)[0]
            if len(idx):
                res = linprog(-(d * w)[idx], A_ub=[w[idx]], b_ub=[delta - used], bounds=[(0, 1)] * len(idx))
                gain += -res.fun
            best = max(best, gain)
    return best


def test_alpha_norm_cells(rng):
    sp = random_space(rng, 16)
    f = random_fn(rng, sp)
    for p in (1.0, 2.0, 3.0):
        ref = float(np.sum(np.minimum(np.abs(f.values), 1.0) ** p * sp.weights))
        assert math.isclose(alpha_norm_p(f, p).value, ref, rel_tol=1e-13)
        assert math.isclose(alpha_norm(f, p), ref ** (1 / p), rel_tol=1e-13)


def test_alpha_norm_on_tail():
    # values 2^n on weights 2^-n: min(.,1) = 1 everywhere, so alpha_p^p = 1
    sp = MeasureSpace([], GEOM)
    f = MeasurableFn(sp, np.zeros(0), (TailSegment(1, None, 1.0, rho=2.0),))
    assert math.isclose(alpha_norm_p(f, 2.0).value, 1.0, rel_tol=1e-12)
    assert math.isinf(lp_norm(f, 1.0))


def test_seminorm_needs_finite_set():
    sp = MeasureSpace([Cell(0, 1.0)], FLAT)
    f = MeasurableFn(sp, np.array([2.0]))
    assert alpha_seminorm_on(f, 1.0, MeasurableSet.of_cells(sp, [0])) == 1.0
    with pytest.raises(InfiniteMeasureSet):
        alpha_seminorm_on(f, 1.0, MeasurableSet.whole(sp))


def test_variational_identity_bruteforce(rng):
    for _ in range(40):
        sp = random_space(rng, int(rng.integers(1, 11)))
        f = random_fn(rng, sp)
        for p in (1.0, 1.5, 2.0, 3.0):
            rep = alpha_norm_variational_identity(f, p)
            assert rep.passed, rep.violations


def test_variational_identity_limit(rng):
    sp = random_space(rng, 21)
    with pytest.raises(BruteForceTooLarge):
        alpha_norm_variational_identity(random_fn(rng, sp), 1.0)


def frechet_oracle(f):
    # inf over delta of mu(|f| > delta) + delta, scanning delta at 0+ and at each |f| value
    w, a = f.space.weights, np.abs(f.values)
    cands = [float(w[a > 0].sum())] + [float(w[a > v].sum()) + v for v in a if v > 0]
    return min(min(cands), 1.0)


def test_frechet_bruteforce(rng):
    for _ in range(50):
        sp = random_space(rng, 12)
        f = random_fn(rng, sp)
        assert math.isclose(frechet_mu(f), frechet_oracle(f), rel_tol=1e-13, abs_tol=1e-15)


def test_frechet_on_tails():
    # |f| = 2^-n on weights 2^-n: mu(|f| > 2^-k) + 2^-k = (1 - 2^-(k-1)) + 2^-k at its best
    sp = MeasureSpace([], GEOM)
    f = MeasurableFn(sp, np.zeros(0), (TailSegment(1, None, 1.0, rho=0.5),))
    ref = min(sum(0.5**n for n in range(1, k)) + 0.5**k for k in range(1, 60))
    assert math.isclose(measure_plus_level_inf(f), ref, rel_tol=1e-12)
    # f = n on the half line: every level leaves infinite measure above it
    g = MeasurableFn(MeasureSpace([], FLAT), np.zeros(0), (TailSegment(1, None, 1.0, sigma=-1.0),))
    assert frechet_mu(g) == 1.0


def test_ac_modulus_bruteforce(rng):
    deltas = [0.02, 0.1, 0.3, 0.9]
    for _ in range(25):
        sp = random_space(rng, 8, atom_fraction=0.4)
        f = random_fn(rng, sp)
        for p in (1.0, 2.0):
            curve = ac_modulus(f, p, deltas)
            for d, om in zip(deltas, curve.omegas):
                ref = modulus_oracle(f, p, d)
                assert om == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_ac_modulus_geometric_dichotomy():
    # weight 2^-n, value 2^(n/p): every tail atom carries p-mass 1
    for p in (1.0, 2.0):
        f = MeasurableFn(MeasureSpace([], GEOM), np.zeros(0), (TailSegment(1, None, 1.0, rho=2.0 ** (1 / p)),))
        curve = ac_modulus(f, p, [2.0**-k for k in range(1, 12)])
        assert all(om >= 1.0 - 1e-12 for om in curve.omegas)


def test_cover_index():
    assert cover_index(MeasureSpace([], GEOM), 1, 0.1) == 5
    assert cover_index(MeasureSpace([], GEOM), 9, 0.1) == 9
    assert cover_index(MeasureSpace([], FLAT), 1, 0.1) is None


def test_membership_geometric_example():
    f = MeasurableFn(MeasureSpace([], GEOM), np.zeros(0), (TailSegment(1, None, 1.0, rho=2.0),))
    m = lambda_p_member(f, 1.0)
    assert m.verdict == "member"
    assert not in_lp(f, 1.0)
    for d, E in m.witnesses.items():
        assert E.measure().value < d
        assert in_lp(f.restrict(E.complement()), 1.0)


def test_nonmember_on_infinite_tail():
    f = MeasurableFn(MeasureSpace([], FLAT), np.zeros(0), (TailSegment(1, None, 1.0),))
    m = lambda_p_member(f, 1.0)
    assert m.verdict == "non_member"
    assert witness_set(f, 1.0, 0.5) is None


def test_membership_on_finite_space_always(rng):
    for _ in range(20):
        sp = random_space(rng, 10)
        assert lambda_p_member(random_fn(rng, sp), 2.0).verdict == "member"


def test_membership_deltas_must_decrease():
    f = MeasurableFn(MeasureSpace([Cell(0, 1.0)]), np.array([1.0]))
    with pytest.raises(ValueError):
        lambda_p_member(f, 1.0, deltas=[0.1, 0.5])


def test_truncated_membership_equivalence():
    fs = [
        MeasurableFn(MeasureSpace([Cell(0, 1.0)], GEOM), np.array([5.0]), (TailSegment(1, None, 1.0, rho=2.0),)),
        MeasurableFn(MeasureSpace([], FLAT), np.zeros(0), (TailSegment(1, None, 0.5, sigma=1.0),)),
        MeasurableFn(MeasureSpace([], FLAT), np.zeros(0), (TailSegment(1, None, 3.0),)),
    ]
    for f in fs:
        for p in (1.0, 2.0):
            assert truncated_membership_check(f, p).passed


def test_fnorm_axioms_small_suite():
    for p in (1.0, 1.5, 2.0, 3.0):
        rep = fnorm_axioms_check(None, p, trials=100, seed=7)
        assert rep.passed, rep.violations[:3]


def test_fnorm_axioms_detect_broken_triangle(monkeypatch):
    # the lp norm with p = 0.5 exponent is not subadditive, so the check must notice
    import almostlp.functionals as fx

    monkeypatch.setattr(fx, "alpha_norm", lambda f, p, tol=1e-12: float(np.sum(np.abs(f.values) ** 0.5 * f.space.weights)) ** 2)
    rep = fx.fnorm_axioms_check(None, 1.0, trials=50, seed=1)
    assert any(v["axiom"] == "triangle" for v in rep.violations)


def test_estimate_chain(rng):
    assert estimate_chain_suite(200, seed=3).passed
    sp = MeasureSpace([Cell(0, 1.0)], FLAT)
    with pytest.raises(InfiniteMeasureSet):
        estimate_chain_check(MeasurableFn(sp, np.array([1.0])), 1.0, MeasurableSet.whole(sp), 0.5)


def test_alpha_monotone_in_p(rng):
    sp = random_space(rng, 12)
    f = random_fn(rng, sp)
    assert alpha_monotone_in_p(f, 1.0, 3.0).passed
    with pytest.raises(ValueError):
        alpha_monotone_in_p(f, 2.0, 1.0)


def test_membership_with_far_witness():
    # n^0.1 on weights n^-1.1: the p-integral diverges but the tail mass is finite
    sp = MeasureSpace([], TailFamily("power", c=1.0, s=1.1))
    f = MeasurableFn(sp, np.zeros(0), (TailSegment(1, None, 1.0, sigma=-0.1),))
    m = lambda_p_member(f, 1.0)
    assert m.verdict == "member" and not in_lp(f, 1.0)
    # mass of [k, inf) is about 10 k^-0.1, so delta = 1 needs k near 10^10
    assert 9e9 < m.witnesses[1.0].tail[0][0] < 2e10


def test_cover_index_gives_up_loudly():
    from almostlp.errors import UnsupportedFamilyCombination

    sp = MeasureSpace([], TailFamily("power", c=1.0, s=1.001))
    with pytest.raises(UnsupportedFamilyCombination):
        cover_index(sp, 1, 1e-3)
    f = MeasurableFn(sp, np.zeros(0), (TailSegment(1, None, 1.0, sigma=-0.5),))
    assert lambda_p_member(f, 1.0, deltas=[1e-3]).verdict == "inconclusive"


def test_alpha_norm_batch_matches_scalar(rng):
    from almostlp.functionals import alpha_norm_p_cells

    sp = random_space(rng, 9)
    V = np.stack([random_fn(rng, sp).values for _ in range(20)])
    batch = alpha_norm_p_cells(sp, V, 2.0)
    single = [alpha_norm_p(MeasurableFn(sp, v), 2.0).value for v in V]
    assert np.allclose(batch, single, rtol=1e-14, atol=0)
    with pytest.raises(ValueError):
        alpha_norm_p_cells(sp, np.ones((2, 3)), 1.0)
