"""Scalar functionals on piecewise-constant functions and checks built on them."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import AlmostLpError, BruteForceTooLarge, InfiniteMeasureSet, UnsupportedFamilyCombination
from .measure import (
    EXPLODE_LIMIT,
    MeasurableFn,
    MeasurableSet,
    MeasureSpace,
    integrate_p,
    measure_of,
    pointwise_min_one,
    superlevel_set,
)
from .randomgen import random_fn, random_space, random_subset
from .series import DEFAULT_TOL, Estimate, series_sum

ENUMERATION_LIMIT = 20
COVER_LIMIT = 2**200
WITNESS_MARGIN = 1e-9
REL_SLACK = 1e-12


@dataclass
class CheckReport:
    check: str
    trials: int = 0
    violations: list = field(default_factory=list)
    max_residual: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def residual(self, r: float):
        if math.isfinite(r):
            self.max_residual = max(self.max_residual, float(r))

    def to_json(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


# ---------------------------------------------------------------------------
# norms


def alpha_norm_p(f: MeasurableFn, p: float, over: MeasurableSet | None = None, tol: float = DEFAULT_TOL) -> Estimate:
    """int min(|f|, 1)**p, i.e. the p-th power of the alpha_p norm."""
    if not f.tail:
        frac = 1.0 if over is None else over.frac
        val = float(np.sum(frac * f.space.weights * np.minimum(np.abs(f.values), 1.0) ** p))
        return Estimate(val, float(4.0 * np.finfo(float).eps * len(f.values) * val))
    return integrate_p(pointwise_min_one(f), p, over, tol)


def alpha_norm_p_cells(space: MeasureSpace, values, p: float) -> np.ndarray:
    """alpha_p^p of many cell-only functions at once, one per row of ``values``."""
    V = np.atleast_2d(np.asarray(values, dtype=float))
    if V.shape[1] != len(space):
        raise ValueError(f"expected {len(space)} cell values per row, got {V.shape[1]}")
    return (np.minimum(np.abs(V), 1.0) ** p) @ space.weights


def alpha_norm(f: MeasurableFn, p: float, tol: float = DEFAULT_TOL) -> float:
    return alpha_norm_p(f, p, None, tol).value ** (1.0 / p)


def lp_norm(f: MeasurableFn, p: float, tol: float = DEFAULT_TOL) -> float:
    return integrate_p(f, p, None, tol).value ** (1.0 / p)


def alpha_seminorm_on(f: MeasurableFn, p: float, F: MeasurableSet, tol: float = DEFAULT_TOL) -> float:
    """alpha_p norm of f restricted to F; F must have finite measure."""
    if not F.measure(tol).finite:
        raise InfiniteMeasureSet("seminorms are only defined for sets of finite measure")
    return alpha_norm_p(f, p, F, tol).value ** (1.0 / p)


def _nonzero_measure(f: MeasurableFn, tol) -> float:
    frac = (f.values != 0).astype(float)
    total = float(np.dot(frac, f.space.weights))
    for s in f.tail:
        if s.b != 0:
            total += f.space.tail.mass(s.start, s.stop, tol).value
    return total


def measure_plus_level_inf(f: MeasurableFn, tol: float = DEFAULT_TOL, max_atoms: int = 4096) -> float:
    """inf over delta > 0 of mu(|f| > delta) + delta, without truncation.

    delta -> mu(|f| > delta) is a right-continuous step function, so the
    infimum is attained at delta -> 0+ or at one of the values of |f|.
    """
    best = _nonzero_measure(f, tol)
    for v in np.unique(np.abs(f.values)):
        if v > 0 and v < best:
            best = min(best, measure_of(f, v, tol=tol).value + v)
    for s in f.tail:
        if s.b == 0:
            continue
        if s.kind == "constant":
            v = abs(s.b)
            if v < best:
                best = min(best, measure_of(f, v, tol=tol).value + v)
            continue
        increasing = s.rho > 1.0 if s.kind == "geometric" else s.sigma < 0
        if increasing and s.stop is None and not f.space.tail.finite_mass:
            # every level leaves infinitely many heavy atoms above it
            continue
        hi = s.start + max_atoms if s.stop is None else min(s.stop, s.start + max_atoms)
        for n in range(s.start, hi):
            v = abs(float(s.value([n])[0]))
            if increasing and v >= best:
                break
            m = measure_of(f, v, tol=tol).value if v > 0 else best
            if not increasing and m >= best:
                break
            best = min(best, m + v)
    return best


def frechet_mu(f: MeasurableFn, tol: float = DEFAULT_TOL) -> float:
    """min(inf_delta {mu(|f| > delta) + delta}, 1)."""
    return min(measure_plus_level_inf(f, tol), 1.0)


# ---------------------------------------------------------------------------
# modulus of absolute continuity


@dataclass
class ACModulusCurve:
    p: float
    deltas: list
    omegas: list
    exact: list

    def to_json(self) -> dict:
        return asdict(self)


def _fractional_profile(dens: np.ndarray, wts: np.ndarray):
    """Breakpoints of the concave greedy profile budget -> best integral."""
    order = np.argsort(-dens, kind="stable")
    keep = (dens[order] > 0) & (wts[order] > 0)
    w = wts[order][keep]
    v = (dens[order] * wts[order])[keep]
    W = np.concatenate([[0.0], np.cumsum(w)])
    V = np.concatenate([[0.0], np.cumsum(v)])
    return W, V


def _profile_at(W, V, budget):
    return np.interp(np.clip(budget, 0.0, None), W, V, right=V[-1])


def _modulus_pieces(f: MeasurableFn, p: float, delta_max: float, tol: float):
    """Split f into divisible pieces and atoms for the knapsack.

    Returns (div_density, div_weight, atom_weight, atom_value, inf_from, residual, exact)
    where ``inf_from`` is the infimum of budgets at which the modulus is +inf.
    """
    space = f.space
    dens = np.abs(f.values) ** p
    div = space.divisible
    atom_w = list(space.weights[~div])
    atom_v = list((dens * space.weights)[~div])
    inf_from = math.inf
    residual = 0.0
    exact = True
    tail = space.tail
    Cw, rw, sw = tail.coefficients
    for s in f.tail:
        if s.b == 0:
            continue
        total = series_sum(abs(s.b) ** p * Cw, s.rho**p * rw, p * s.sigma + sw, s.start, s.stop, tol)
        if not total.finite:
            if s.stop is None and tail.finite_mass:
                inf_from = 0.0
                continue
            if tail.kind == "constant":
                growing = s.rho > 1 or s.sigma < 0
                if growing:
                    inf_from = min(inf_from, tail.c)
                    continue
                count = int(math.ceil(delta_max / tail.c)) + 1
                ns = np.arange(s.start, s.start + count)
            else:
                inf_from = 0.0
                exact = False
                continue
        else:
            hi = s.stop
            n_end = s.start + EXPLODE_LIMIT if hi is None else min(hi, s.start + EXPLODE_LIMIT)
            # shrink the materialized range to where the remainder is negligible
            lo_n, hi_n = s.start, n_end
            while hi_n - lo_n > 1:
                mid = (lo_n + hi_n) // 2
                rest = series_sum(abs(s.b) ** p * Cw, s.rho**p * rw, p * s.sigma + sw, mid, hi, tol)
                if rest.value <= tol:
                    hi_n = mid
                else:
                    lo_n = mid
            n_end = hi_n
            rest = series_sum(abs(s.b) ** p * Cw, s.rho**p * rw, p * s.sigma + sw, n_end, hi, tol)
            residual += rest.value + rest.error
            ns = np.arange(s.start, n_end)
        w = np.array([tail.weight(int(n)) for n in ns]) if tail.kind == "power" else Cw * np.power(rw, ns.astype(float))
        vals = np.abs(s.value(ns)) ** p * w
        atom_w.extend(w.tolist())
        atom_v.extend(vals.tolist())
    return (
        dens[div],
        space.weights[div],
        np.array(atom_w, dtype=float),
        np.array(atom_v, dtype=float),
        inf_from,
        residual,
        exact,
    )


def _knapsack_sup(div_d, div_w, atom_w, atom_v, delta):
    """sup of int_E |f|^p over mu(E) < delta; (value, exact)."""
    W, V = _fractional_profile(div_d, div_w)
    usable = (atom_w < delta) & (atom_v > 0)
    aw, av = atom_w[usable], atom_v[usable]
    if aw.size == 0:
        return float(_profile_at(W, V, delta)), True
    if aw.size <= ENUMERATION_LIMIT:
        sub_w = np.zeros(1)
        sub_v = np.zeros(1)
        for w, v in zip(aw, av):
            sub_w = np.concatenate([sub_w, sub_w + w])
            sub_v = np.concatenate([sub_v, sub_v + v])
        ok = sub_w < delta
        total = sub_v[ok] + _profile_at(W, V, delta - sub_w[ok])
        return float(total.max()), True
    # fractional relaxation over everything: an upper bound for the 0/1 problem
    W2, V2 = _fractional_profile(np.concatenate([div_d, av / aw]), np.concatenate([div_w, aw]))
    return float(_profile_at(W2, V2, delta)), False


def ac_modulus(f: MeasurableFn, p: float, deltas, tol: float = DEFAULT_TOL) -> ACModulusCurve:
    """omega(delta) = sup { int_E |f|^p : mu(E) < delta } for each delta."""
    deltas = [float(d) for d in deltas]
    if any(d <= 0 for d in deltas):
        raise ValueError("deltas must be positive")
    div_d, div_w, atom_w, atom_v, inf_from, residual, exact = _modulus_pieces(f, p, max(deltas), tol)
    omegas, flags = [], []
    for d in deltas:
        if d > inf_from:
            omegas.append(math.inf)
            flags.append(exact)
            continue
        val, ok = _knapsack_sup(div_d, div_w, atom_w, atom_v, d)
        omegas.append(val + residual if residual else val)
        flags.append(ok and exact and residual <= tol)
    return ACModulusCurve(p, deltas, omegas, flags)


# ---------------------------------------------------------------------------
# membership


def _infinite_tail_segment(f: MeasurableFn, p: float, tol: float):
    """The unbounded tail segment whose p-integral diverges, if any."""
    Cw, rw, sw = f.space.tail.coefficients
    for s in f.tail:
        if s.b == 0:
            continue
        est = series_sum(abs(s.b) ** p * Cw, s.rho**p * rw, p * s.sigma + sw, s.start, s.stop, tol)
        if not est.finite:
            return s
    return None


def cover_index(space: MeasureSpace, start: int, budget: float, tol: float = DEFAULT_TOL) -> int | None:
    """Smallest k >= start with tail mass of [k, inf) strictly below budget.

    None when the tail has infinite mass.
    """
    tail = space.tail
    if not tail.finite_mass:
        return None
    if tail.mass(start, None, tol).value < budget:
        return start
    hi = max(start, 1) * 2
    while tail.mass(hi, None, tol).value >= budget:
        hi *= 2
        if hi > COVER_LIMIT:
            raise UnsupportedFamilyCombination(
                f"tail mass stays above {budget:.3g} beyond atom 2^{COVER_LIMIT.bit_length() - 1}")
    lo = start
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail.mass(mid, None, tol).value < budget:
            hi = mid
        else:
            lo = mid
    return hi


def witness_set(f: MeasurableFn, p: float, delta: float, tol: float = DEFAULT_TOL) -> MeasurableSet | None:
    """A set E with mu(E) < delta and int_{E^c} |f|^p < inf, or None."""
    seg = _infinite_tail_segment(f, p, tol)
    if seg is None:
        return MeasurableSet.empty(f.space)
    # relative margin so mu(E) < delta survives rounding of the tail mass
    k = cover_index(f.space, seg.start, delta * (1.0 - WITNESS_MARGIN), tol)
    if k is None:
        return None
    return MeasurableSet.tail_from(f.space, k)


@dataclass
class Membership:
    verdict: str
    witnesses: dict = field(default_factory=dict)
    certificate: float | None = None
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "witnesses": {str(d): {"tail": [list(r) for r in E.tail], "measure": E.measure().value}
                          for d, E in self.witnesses.items()},
            "certificate": self.certificate,
            "reason": self.reason,
        }


def lambda_p_member(f: MeasurableFn, p: float, deltas=None, tol: float = DEFAULT_TOL) -> Membership:
    """Decide whether f is almost in L_p, with a witness set per delta."""
    if deltas is None:
        deltas = [2.0**-k for k in range(0, 11)]
    deltas = [float(d) for d in deltas]
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly decreasing")
    out = Membership("member")
    try:
        for d in deltas:
            E = witness_set(f, p, d, tol)
            if E is None:
                return Membership(
                    "non_member", out.witnesses, d,
                    "a p-divergent tail of infinite measure cannot be covered by a set of small measure",
                )
            out.witnesses[d] = E
    except AlmostLpError as exc:
        return Membership("inconclusive", out.witnesses, None, str(exc))
    return out


def in_lp(f: MeasurableFn, p: float, tol: float = DEFAULT_TOL) -> bool:
    return integrate_p(f, p, None, tol).finite


def truncated_membership_check(f: MeasurableFn, p: float, deltas=None, tol: float = DEFAULT_TOL) -> CheckReport:
    """Membership equals: finite alpha norm plus coverable part above level 1."""
    rep = CheckReport("truncated_membership", trials=1)
    left = lambda_p_member(f, p, deltas, tol)
    alpha_fin = alpha_norm_p(f, p, None, tol).finite
    above = f.restrict(superlevel_set(f, 1.0))
    right = Membership("member") if alpha_fin else Membership("non_member", reason="alpha norm is infinite")
    if alpha_fin:
        right = lambda_p_member(above, p, deltas, tol)
    rep.details = {"left": left.verdict, "right": right.verdict, "alpha_finite": alpha_fin}
    if left.verdict != right.verdict:
        rep.violations.append({"left": left.verdict, "right": right.verdict})
    return rep


# ---------------------------------------------------------------------------
# property checks


def _cellwise_zero(f: MeasurableFn) -> bool:
    return not np.any((f.values != 0) & (f.space.weights > 0)) and not f.tail


def fnorm_axioms_check(space: MeasureSpace | None, p: float, trials: int, seed: int = 0,
                       n_cells: int = 16) -> CheckReport:
    """Random check of the F-norm axioms for the alpha_p functional."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    rep = CheckReport("fnorm_axioms", trials=trials, details={"p": p})
    for t in range(trials):
        sp = space if space is not None else random_space(rng, n_cells)
        f, g = random_fn(rng, sp), random_fn(rng, sp)
        lam = rng.uniform(-1.0, 1.0)
        nf, ng = alpha_norm(f, p), alpha_norm(g, p)
        if nf < 0:
            rep.violations.append({"trial": t, "axiom": "nonnegative", "value": nf})
        if (nf == 0) != _cellwise_zero(f):
            rep.violations.append({"trial": t, "axiom": "definite", "value": nf})
        nl = alpha_norm(f.scale(lam), p)
        rep.residual(nl - nf)
        if nl > nf * (1 + REL_SLACK):
            rep.violations.append({"trial": t, "axiom": "scalar_monotone", "lambda": lam, "lhs": nl, "rhs": nf})
        if abs(alpha_norm(-f, p) - nf) > REL_SLACK * max(nf, 1e-300):
            rep.violations.append({"trial": t, "axiom": "symmetry"})
        trace = [alpha_norm(f.scale(2.0**-k), p) for k in range(0, 80, 4)]
        if any(b > a * (1 + REL_SLACK) for a, b in zip(trace, trace[1:])) or trace[-1] > 1e-9:
            rep.violations.append({"trial": t, "axiom": "scalar_continuity", "last": trace[-1]})
        ns = alpha_norm(f + g, p)
        rep.residual(ns - nf - ng)
        if ns > (nf + ng) * (1 + REL_SLACK):
            rep.violations.append({"trial": t, "axiom": "triangle", "lhs": ns, "rhs": nf + ng})
    return rep


def estimate_chain_check(f: MeasurableFn, p: float, F: MeasurableSet, delta0: float,
                         tol: float = DEFAULT_TOL) -> CheckReport:
    """Local alpha seminorm <= measure-level infimum <= alpha norm bound."""
    rep = CheckReport("estimate_chain", trials=1)
    muF = F.measure(tol).value
    if not math.isfinite(muF):
        raise InfiniteMeasureSet("F must have finite measure")
    if not delta0 > 0:
        raise ValueError("delta0 must be > 0")
    local = alpha_norm_p(f, p, F, tol).value
    level = measure_plus_level_inf(f, tol)
    alpha = alpha_norm_p(f, p, None, tol).value
    upper1 = max(1.0, muF) * level
    upper2 = max(1.0, delta0**-p) * alpha + delta0
    rep.details = {"seminorm_p": local, "level_inf": level, "alpha_p": alpha,
                   "bound1": upper1, "bound2": upper2, "measure_F": muF}
    slack = REL_SLACK * (1 + abs(upper1))
    if local > upper1 + slack:
        rep.violations.append({"inequality": "seminorm<=level", "lhs": local, "rhs": upper1})
    if level > upper2 + REL_SLACK * (1 + abs(upper2)):
        rep.violations.append({"inequality": "level<=alpha", "lhs": level, "rhs": upper2})
    rep.residual(local - upper1)
    rep.residual(level - upper2)
    return rep


def estimate_chain_suite(trials: int, seed: int = 0, n_cells: int = 12, p_values=(1.0, 1.5, 2.0, 3.0)) -> CheckReport:
    rng = np.random.default_rng(seed)
    rep = CheckReport("estimate_chain", trials=trials)
    for t in range(trials):
        sp = random_space(rng, n_cells)
        f = random_fn(rng, sp)
        F = random_subset(rng, sp)
        p = float(rng.choice(p_values))
        delta0 = 10.0 ** rng.uniform(-3, 1)
        r = estimate_chain_check(f, p, F, delta0)
        rep.residual(r.max_residual)
        for v in r.violations:
            rep.violations.append({"trial": t, **v})
    return rep


def alpha_norm_variational_identity(f: MeasurableFn, p: float) -> CheckReport:
    """Brute-force min over B of int_B |f|^p + mu(B^c) against the alpha norm."""
    space = f.space
    k = len(space)
    if k > ENUMERATION_LIMIT:
        raise BruteForceTooLarge(f"{k} cells exceed the brute-force limit {ENUMERATION_LIMIT}")
    if space.has_tail:
        raise ValueError("the brute-force identity is only defined on finite spaces")
    w = space.weights
    inside = np.abs(f.values) ** p * w
    masks = ((np.arange(2**k)[:, None] >> np.arange(k)) & 1).astype(bool)
    objective = np.where(masks, inside, w).sum(axis=1)
    best = float(objective.min())
    alpha = alpha_norm_p(f, p).value
    canonical = np.abs(f.values) <= 1
    at_canonical = float(np.where(canonical, inside, w).sum())
    rep = CheckReport("variational_identity", trials=1,
                      details={"min": best, "alpha_p": alpha, "at_canonical": at_canonical,
                               "argmin": masks[int(objective.argmin())].tolist()})
    scale = max(1.0, alpha)
    rep.residual(abs(best - alpha) / scale)
    if abs(best - alpha) > 1e-12 * scale:
        rep.violations.append({"min": best, "alpha_p": alpha})
    if at_canonical > best + 1e-12 * scale:
        rep.violations.append({"canonical_not_optimal": at_canonical, "min": best})
    return rep


def alpha_monotone_in_p(f: MeasurableFn, p: float, q: float) -> CheckReport:
    if not 1 <= p <= q:
        raise ValueError("need 1 <= p <= q")
    a_q = alpha_norm_p(f, q).value
    a_p = alpha_norm_p(f, p).value
    rep = CheckReport("alpha_monotone_in_p", trials=1, details={"alpha_q^q": a_q, "alpha_p^p": a_p})
    if a_q > a_p * (1 + REL_SLACK):
        rep.violations.append({"lhs": a_q, "rhs": a_p})
    return rep


def alpha_decomposition(f: MeasurableFn, p: float) -> tuple[float, float]:
    """(int_{|f|<=1} |f|^p, mu(|f| > 1)) on a finite space."""
    small = np.abs(f.values) <= 1
    w = f.space.weights
    return float(np.sum((np.abs(f.values) ** p * w)[small])), float(np.sum(w[~small]))


__all__ = [
    "ACModulusCurve", "CheckReport", "Membership", "ac_modulus", "alpha_decomposition",
    "alpha_monotone_in_p", "alpha_norm", "alpha_norm_p", "alpha_norm_p_cells", "alpha_norm_variational_identity",
    "alpha_seminorm_on", "cover_index", "estimate_chain_check", "estimate_chain_suite",
    "fnorm_axioms_check", "frechet_mu", "in_lp", "lambda_p_member", "lp_norm",
    "measure_plus_level_inf", "truncated_membership_check", "witness_set",
]
