"""Convergence checkers over finite prefixes of function sequences.

Every checker reduces to one or more numeric traces indexed by n = 1..N and
a three-valued trace test. Verdicts are evidence, not proofs: ``holds`` means
the trace vanishes or decays at a clear polynomial rate, ``fails`` means it
stays bounded away from zero over the second half of the window, and anything
in between is ``inconclusive``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DominationViolated, ImplicationViolation, InfiniteMeasureSet, MissingLimit, NotMember,
    UnsupportedFamilyCombination,
)
from .functionals import (
    _infinite_tail_segment,
    ac_modulus,
    alpha_norm_p,
    cover_index,
    frechet_mu,
    lambda_p_member,
)
from .measure import (
    EXPLODE_LIMIT,
    MeasurableFn,
    MeasurableSet,
    MeasureSpace,
    TailSegment,
    _range_intersect,
    complement_ranges,
    integrate_p,
    integrate_signed,
    intersect_ranges,
    measure_of,
    normalize_ranges,
    superlevel_set,
)
from .sequences import FnSequence
from .series import DEFAULT_TOL

HOLDS, FAILS, INCONCLUSIVE = "holds", "fails", "inconclusive"
TRACE_TOL = 1e-6
# a non-increasing second half whose log-log slope is at most this counts as decay
DECAY_SLOPE = -0.2
# envelope ratio over [N/2, 3N/4] at or above this counts as "not decaying"
STALL_RATIO = 0.9
DELTA_GRID = tuple(2.0**-k for k in range(0, 11))
ALMOST_DELTAS = (0.5, 0.25, 0.125, 0.0625)
TIGHT_EPS = (0.5, 0.25, 0.125, 0.0625)
LATTICE = ("Lp", "almost_Lp", "alpha_p", "in_measure", "local_in_measure")
MODES = LATTICE + ("ae", "alpha_cauchy", "uniformly_p_integrable", "alpha_tight")


# ---------------------------------------------------------------------------
# trace test


def trace_verdict(trace, tol: float = TRACE_TOL) -> str:
    t = np.asarray(trace, dtype=float)
    N = len(t)
    if N == 0:
        return INCONCLUSIVE
    if np.all(np.isinf(t)):
        return FAILS
    q = t[(3 * N) // 4:]
    if np.max(q) < tol:
        return HOLDS
    half = N // 2
    h = t[half:]
    if len(h) >= 2 and np.all(np.isfinite(h)) and np.all(np.diff(h) <= 1e-12 * np.abs(h[:-1])):
        n0, n1 = half + 1, N
        if h[-1] == 0.0:
            return HOLDS
        slope = math.log(h[-1] / h[0]) / math.log(n1 / n0) if h[0] > 0 else 0.0
        if slope <= DECAY_SLOPE:
            return HOLDS
    # running sup from the right, sampled on [N/2, 3N/4]
    env = np.maximum.accumulate(t[::-1])[::-1]
    lo, hi = half, max((3 * N) // 4, half)
    window = env[lo:hi + 1]
    if len(window) and np.min(window) > 10 * tol:
        if np.isinf(window[-1]) or window[-1] >= STALL_RATIO * window[0]:
            return FAILS
    return INCONCLUSIVE


def combine(verdicts) -> str:
    verdicts = list(verdicts)
    if any(v == FAILS for v in verdicts):
        return FAILS
    if verdicts and all(v == HOLDS for v in verdicts):
        return HOLDS
    return INCONCLUSIVE


def _clean(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def set_to_json(E: MeasurableSet) -> dict:
    cells = {str(c.id): float(fr) for c, fr in zip(E.space.cells, E.frac) if fr > 0}
    return {"cells": cells, "tail": [[lo, hi] for lo, hi in E.tail], "measure": _clean(E.measure().value)}


@dataclass
class ModeResult:
    mode: str
    verdict: str
    evidence: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    note: str = ""

    def to_json(self) -> dict:
        def enc(v):
            if isinstance(v, MeasurableSet):
                return set_to_json(v)
            if isinstance(v, (list, tuple, np.ndarray)):
                return [enc(x) for x in v]
            if isinstance(v, dict):
                return {str(k): enc(x) for k, x in v.items()}
            if isinstance(v, (float, np.floating)):
                return _clean(float(v))
            if isinstance(v, np.integer):
                return int(v)
            return v

        return {"mode": self.mode, "verdict": self.verdict, "evidence": enc(self.evidence),
                "witnesses": enc(self.witnesses), "note": self.note}


def _diffs(seq: FnSequence) -> list[MeasurableFn]:
    if seq.limit is None:
        raise MissingLimit(f"{seq.name}: this check needs a candidate limit")
    return seq.memo("diffs", seq.differences)


def _centered(seq: FnSequence) -> list[MeasurableFn]:
    """f_n - f when a limit is known, else f_n."""
    return _diffs(seq) if seq.limit is not None else seq.terms()


def _root(x: float, p: float) -> float:
    return x ** (1.0 / p) if math.isfinite(x) else math.inf


# ---------------------------------------------------------------------------
# norm-type modes


def check_lp(seq: FnSequence, p: float, tol: float = TRACE_TOL) -> ModeResult:
    def run():
        trace = [_root(integrate_p(d, p).value, p) for d in _diffs(seq)]
        return ModeResult("Lp", trace_verdict(trace, tol), {"trace": trace})

    return seq.memo(("Lp", p, tol), run)


def check_alpha(seq: FnSequence, p: float, tol: float = TRACE_TOL) -> ModeResult:
    def run():
        trace = [_root(alpha_norm_p(d, p).value, p) for d in _diffs(seq)]
        return ModeResult("alpha_p", trace_verdict(trace, tol), {"trace": trace})

    return seq.memo(("alpha_p", p, tol), run)


def check_alpha_cauchy(seq: FnSequence, p: float, tol: float = TRACE_TOL) -> ModeResult:
    """max of ||f_n - f_m|| over m = n + 1, n + 2, n + 4, ... up to n + N/4."""
    def run():
        fs = seq.terms()
        N = len(fs)
        w = max(1, N // 4)
        offsets = [1 << k for k in range(w.bit_length()) if (1 << k) <= w]
        trace = []
        for i in range(N - w):
            trace.append(max(_root(alpha_norm_p(fs[i] - fs[i + k], p).value, p) for k in offsets))
        return ModeResult("alpha_cauchy", trace_verdict(trace, tol), {"trace": trace, "window": w})

    return seq.memo(("alpha_cauchy", p, tol), run)


# ---------------------------------------------------------------------------
# measure-type modes


def _measure_within(S: MeasurableSet, T: MeasurableSet | None) -> float:
    if T is None:
        return S.measure().value
    frac = S.frac * T.frac
    total = float(np.dot(frac, S.space.weights))
    for lo, hi in intersect_ranges(S.tail, T.tail):
        total += S.space.tail.mass(lo, hi).value
    return total


def check_in_measure(seq: FnSequence, delta_grid=DELTA_GRID, tol: float = TRACE_TOL,
                     over: MeasurableSet | None = None) -> ModeResult:
    deltas = [float(d) for d in delta_grid]
    if not deltas or any(not d > 0 for d in deltas):
        raise ValueError("delta grid must be finite and positive")
    if over is not None and np.all(over.frac == 1.0) and over.tail == MeasurableSet.whole(seq.space).tail:
        over = None
    key = ("in_measure", tuple(deltas), tol, None if over is None else (over.frac.tobytes(), over.tail))
    return seq.memo(key, lambda: _in_measure_run(seq, deltas, tol, over))


def _in_measure_run(seq, deltas, tol, over):
    diffs = _diffs(seq)
    traces, verdicts = {}, {}
    for d in deltas:
        tr = [measure_of(x, d, over).value for x in diffs]
        traces[d] = tr
        verdicts[d] = trace_verdict(tr, tol)
    verdict, note = combine(verdicts.values()), ""
    if verdict == FAILS:
        # a level trace can stall only because the window is short; the
        # Frechet functional metrizes the mode and is scale free
        fr = [frechet_mu(x.restrict(over) if over is not None else x) for x in diffs]
        traces["frechet"] = fr
        if trace_verdict(fr, tol) == HOLDS:
            verdict, note = INCONCLUSIVE, "level traces stall but the Frechet trace decays"
    return ModeResult("in_measure", verdict, {"traces": traces, "verdicts": verdicts}, note=note)


def prefix_set(space: MeasureSpace, length: int) -> MeasurableSet:
    """All cells plus the first ``length`` tail atoms."""
    tail = ((space.tail.start, space.tail.start + length),) if space.has_tail and length > 0 else ()
    return MeasurableSet(space, np.ones(len(space)), tail)


def default_test_sets(space: MeasureSpace, n_max: int) -> list[MeasurableSet]:
    if space.is_finite_measure:
        return [MeasurableSet.whole(space)]
    out, L = [prefix_set(space, 0)], 1
    while L <= max(1, n_max // 4):
        out.append(prefix_set(space, L))
        L *= 4
    return out


def check_local_in_measure(seq: FnSequence, test_sets=None, delta_grid=DELTA_GRID,
                           tol: float = TRACE_TOL) -> ModeResult:
    if test_sets is None:
        test_sets = default_test_sets(seq.space, seq.n_max)
    for T in test_sets:
        if not T.measure().finite:
            raise InfiniteMeasureSet("local convergence is only tested on sets of finite measure")
    sub = [check_in_measure(seq, delta_grid, tol, over=T) for T in test_sets]
    verdicts = [r.verdict for r in sub]
    return ModeResult("local_in_measure", combine(verdicts),
                      {"per_set": [r.evidence for r in sub], "verdicts": verdicts},
                      {"test_sets": list(test_sets)})


def check_ae(seq: FnSequence, delta_grid=DELTA_GRID, tol: float = TRACE_TOL, test_sets=None) -> ModeResult:
    """Almost-uniform convergence on each finite-measure test set.

    The trace for level eta on T is mu(T and {sup_{n <= m <= N} |f_m - f| > eta}).
    By Egorov this is equivalent to a.e. convergence on sets of finite measure.
    """
    diffs = _diffs(seq)
    if test_sets is None:
        test_sets = default_test_sets(seq.space, seq.n_max)
    verdicts, traces = [], {}
    for eta in delta_grid:
        levels = [superlevel_set(d, eta) for d in diffs]
        acc = [None] * len(levels)
        cur = MeasurableSet.empty(seq.space)
        for i in range(len(levels) - 1, -1, -1):
            cur = MeasurableSet(seq.space, np.maximum(cur.frac, levels[i].frac), cur.tail + levels[i].tail)
            acc[i] = cur
        for j, T in enumerate(test_sets):
            tr = [_measure_within(S, T) for S in acc]
            traces[(eta, j)] = tr
            verdicts.append(trace_verdict(tr, tol))
    return ModeResult("ae", combine(verdicts), {"traces": {f"{k[0]}@{k[1]}": v for k, v in traces.items()}})


# ---------------------------------------------------------------------------
# almost L_p


def _late_atoms(late, p, covered):
    """Max |d|^p over late differences on tail atoms of bounded segments."""
    dens: dict[int, float] = {}
    budget = EXPLODE_LIMIT
    for d in late:
        for s in d.tail:
            if s.stop is None or s.b == 0:
                continue
            for lo, hi in intersect_ranges(((s.start, s.stop),), covered):
                if hi - lo > budget:
                    continue
                budget -= hi - lo
                idx = np.arange(lo, hi)
                vals = np.abs(s.value(idx)) ** p
                for n, v in zip(idx.tolist(), vals.tolist()):
                    if v > dens.get(n, 0.0):
                        dens[n] = v
    return dens


def almost_witness(diffs: list[MeasurableFn], p: float, delta: float, tol: float = DEFAULT_TOL):
    """Greedy candidate E with mu(E) < delta for the late differences, or None."""
    space = diffs[0].space
    late = diffs[len(diffs) // 2:]
    budget = delta * (1.0 - 1e-9)
    tail_ranges = []
    ks = []
    for d in late:
        seg = _infinite_tail_segment(d, p, tol) if d.tail else None
        if seg is not None:
            k = cover_index(space, seg.start, budget / 2, tol)
            if k is None:
                return None
            ks.append(k)
    if ks:
        tail_ranges.append((min(ks), None))
        budget -= space.tail.mass(min(ks), None, tol).value
    free = complement_ranges(normalize_ranges(tail_ranges), space.tail.start) if space.has_tail else ()

    cell_d = np.max(np.stack([np.abs(d.values) ** p for d in late]), axis=0)
    pieces = [(cell_d[i], space.weights[i], bool(space.divisible[i]), "cell", i)
              for i in range(len(space)) if cell_d[i] > 0]
    if space.has_tail:
        for n, v in _late_atoms(late, p, free).items():
            pieces.append((v, space.tail.weight(n), False, "atom", n))
    pieces.sort(key=lambda x: -x[0])
    frac = np.zeros(len(space))
    for dens, w, divisible, kind, ref in pieces:
        if budget <= 0:
            break
        if w <= 0:
            if kind == "cell":
                frac[ref] = 1.0
            continue
        if w < budget:
            budget -= w
            if kind == "cell":
                frac[ref] = 1.0
            else:
                tail_ranges.append((ref, ref + 1))
        elif divisible:
            frac[ref] = budget / w
            budget = 0.0
    return MeasurableSet(space, frac, tuple(tail_ranges))


def check_almost_lp(seq: FnSequence, p: float, deltas=ALMOST_DELTAS, tol: float = TRACE_TOL) -> ModeResult:
    def run():
        diffs = _diffs(seq)
        lp = check_lp(seq, p, tol)
        if lp.verdict == HOLDS:
            empty = MeasurableSet.empty(seq.space)
            return ModeResult("almost_Lp", HOLDS, {"traces": {d: lp.evidence["trace"] for d in deltas}},
                              {d: empty for d in deltas}, "L_p convergence: the empty set works for every delta")
        traces, verdicts, witnesses = {}, {}, {}
        for delta in deltas:
            try:
                E = almost_witness(diffs, p, delta)
            except UnsupportedFamilyCombination:
                verdicts[delta] = INCONCLUSIVE
                continue
            if E is None:
                verdicts[delta] = FAILS
                traces[delta] = [math.inf] * len(diffs)
                continue
            Ec = E.complement()
            tr = [_root(integrate_p(d, p, Ec).value, p) for d in diffs]
            traces[delta], verdicts[delta], witnesses[delta] = tr, trace_verdict(tr, tol), E
        verdict = combine(verdicts.values())
        note = "greedy witness sets are a heuristic"
        # alpha_p^p <= int_{E^c} + mu(E): failure of alpha_p refutes the mode
        if check_alpha(seq, p, tol).verdict == FAILS:
            verdict, note = FAILS, "refuted: alpha_p convergence fails"
        elif verdict == FAILS:
            verdict, note = INCONCLUSIVE, "greedy witness failed but alpha_p does not refute"
        return ModeResult("almost_Lp", verdict, {"traces": traces, "verdicts": verdicts}, witnesses, note)

    return seq.memo(("almost_Lp", p, tuple(deltas), tol), run)


# ---------------------------------------------------------------------------
# uniform integrability and tightness


def ui_deltas(n_max: int) -> list[float]:
    out, d = [], 1.0
    while d >= 2.0 / n_max - 1e-15:
        out.append(d)
        d /= 2
    return out if len(out) >= 2 else [1.0, 0.5]


def check_uniform_p_integrability(seq: FnSequence, p: float, deltas=None, tol: float = TRACE_TOL) -> ModeResult:
    """Uniform p-integrability of f_n - f (of f_n when no limit is given).

    U(delta) = sup_n omega_n(delta) is reported. The decision uses
    L(delta) = limsup_n omega_n(delta), read off the second half of the
    window (zero when the n-trace passes the trace test): uniform
    integrability holds when L shrinks with delta and fails when it stalls.
    """
    def run():
        fs = _centered(seq)
        ds = sorted((float(d) for d in (deltas or ui_deltas(seq.n_max))), reverse=True)
        curves = [ac_modulus(f, p, ds) for f in fs]
        om = np.array([c.omegas for c in curves])  # (n, delta)
        U = om.max(axis=0)
        half = len(fs) // 2
        L = []
        for j in range(len(ds)):
            col = om[:, j]
            L.append(0.0 if trace_verdict(col, tol) == HOLDS else float(np.max(col[half:])))
        lo, hi = L[-1], L[0]
        if lo < tol:
            verdict = HOLDS
        elif math.isinf(lo):
            verdict = FAILS
        elif lo <= math.sqrt(ds[-1] / ds[0]) * hi:
            verdict = HOLDS
        elif lo > 10 * tol and lo >= 0.5 * hi:
            verdict = FAILS
        else:
            verdict = INCONCLUSIVE
        exact = all(all(c.exact) for c in curves)
        return ModeResult("uniformly_p_integrable", verdict,
                          {"deltas": ds, "U": U.tolist(), "L": L, "exact": exact})

    return seq.memo(("ui", p, None if deltas is None else tuple(deltas), tol), run)


def _prefix_control(fs, space, size, eps):
    """Minimal prefix length J with max_f size(f, E_J^c) < eps, or None."""
    def ok(J):
        Ec = prefix_set(space, J).complement()
        return max(size(f, Ec) for f in fs) < eps

    if ok(0):
        return 0
    hi = 1
    while not ok(hi):
        hi *= 2
        if hi > 2**40:
            return None
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _tightness(seq, size, epsilons, mode):
    space = seq.space
    if space.is_finite_measure:
        X = MeasurableSet.whole(space)
        return ModeResult(mode, HOLDS, {"finite_measure": True}, {e: X for e in epsilons},
                          "finite measure space: E = X")
    fs = _centered(seq)
    half = fs[: max(1, len(fs) // 2)]
    verdicts, wit, ev = {}, {}, {}
    for eps in epsilons:
        j_full = _prefix_control(fs, space, size, eps)
        j_half = _prefix_control(half, space, size, eps)
        ev[eps] = {"J_full": j_full, "J_half": j_half}
        if j_full is None:
            verdicts[eps] = FAILS
        elif j_half is not None and j_full > j_half:
            # the covering set has to grow with the number of terms
            verdicts[eps] = FAILS
        else:
            verdicts[eps] = HOLDS
            wit[eps] = prefix_set(space, j_full)
    return ModeResult(mode, combine(verdicts.values()), {"prefix_lengths": ev, "verdicts": verdicts}, wit)


def check_alpha_tightness(seq: FnSequence, p: float, epsilons=TIGHT_EPS) -> ModeResult:
    def size(f, Ec):
        return _root(alpha_norm_p(f, p, Ec).value, p)

    return seq.memo(("alpha_tight", p, tuple(epsilons)),
                    lambda: _tightness(seq, size, epsilons, "alpha_tight"))


def check_tail_control(seq: FnSequence, p: float, epsilons=TIGHT_EPS) -> ModeResult:
    """sup_n int_{E^c} |f_n|^p < eps^p for a finite-measure E."""
    def size(f, Ec):
        return _root(integrate_p(f, p, Ec).value, p)

    return seq.memo(("tail_control", p, tuple(epsilons)),
                    lambda: _tightness(seq, size, epsilons, "tail_control"))


# ---------------------------------------------------------------------------
# theorems


@dataclass
class VitaliReport:
    theorem: str
    main: ModeResult
    legs: dict
    consistent: bool | None

    @property
    def failing_legs(self) -> list[str]:
        return [k for k, r in self.legs.items() if r.verdict == FAILS]

    @property
    def pattern(self) -> dict:
        out = {k: r.verdict for k, r in self.legs.items()}
        out["main:" + self.main.mode] = self.main.verdict
        return out

    def to_json(self) -> dict:
        return {"theorem": self.theorem, "main": self.main.to_json(),
                "legs": {k: r.to_json() for k, r in self.legs.items()},
                "failing_legs": self.failing_legs, "consistent": self.consistent}


def _biconditional(main: ModeResult, legs: dict) -> bool | None:
    lv = [r.verdict for r in legs.values()]
    if main.verdict == HOLDS and FAILS in lv:
        return False
    if main.verdict == FAILS and all(v == HOLDS for v in lv):
        return False
    if main.verdict == INCONCLUSIVE or INCONCLUSIVE in lv:
        return None
    return True


def vitali_classic(seq: FnSequence, p: float, tol: float = TRACE_TOL) -> VitaliReport:
    main = check_lp(seq, p, tol)
    legs = {
        "in_measure": check_in_measure(seq, tol=tol),
        "tail_control": check_tail_control(seq, p),
        "uniformly_p_integrable": check_uniform_p_integrability(seq, p, tol=tol),
    }
    return VitaliReport("classic", main, legs, _biconditional(main, legs))


def vitali_alpha(seq: FnSequence, p: float, tol: float = TRACE_TOL) -> VitaliReport:
    main = check_lp(seq, p, tol)
    legs = {
        "alpha_p": check_alpha(seq, p, tol),
        "uniformly_p_integrable": check_uniform_p_integrability(seq, p, tol=tol),
    }
    return VitaliReport("alpha", main, legs, _biconditional(main, legs))


def vitali_lambda(seq: FnSequence, p: float, tol: float = TRACE_TOL) -> VitaliReport:
    main = check_alpha(seq, p, tol)
    legs = {
        "local_in_measure": _local(seq, tol),
        "alpha_tight": check_alpha_tightness(seq, p),
    }
    return VitaliReport("lambda", main, legs, _biconditional(main, legs))


def _local(seq, tol):
    return seq.memo(("local", tol), lambda: check_local_in_measure(seq, tol=tol))


def _dominated_on_tail(f: MeasurableFn, g: MeasurableFn):
    """First tail atom where |f| > g, or None. Both may carry tail segments."""
    gr = tuple(s.span for s in g.tail if s.b != 0)
    for s in f.tail:
        if s.b == 0:
            continue
        uncovered = intersect_ranges((s.span,), complement_ranges(normalize_ranges(gr), f.space.tail.start))
        if uncovered:
            return uncovered[0][0]
        for t in g.tail:
            c = _range_intersect(s.span, t.span)
            if c is None:
                continue
            if t.b <= 0:
                return c[0]
            bad = _ratio_exceeds(s, t, c)
            if bad is not None:
                return bad
    return None


def _ratio_exceeds(s: TailSegment, t: TailSegment, rng):
    """Atom in rng where |s| > t, using log|s/t| = c + a n - b log n."""
    c = math.log(abs(s.b)) - math.log(t.b)
    a = math.log(s.rho) - math.log(t.rho)
    b = s.sigma - t.sigma
    lo, hi = rng
    slack = 1e-12

    def h(n):
        return c + a * n - b * math.log(n) if n > 0 else c + a * n

    cands = [lo]
    if hi is not None:
        cands.append(hi - 1)
    if a != 0 and b != 0 and b / a > 0:
        x = b / a
        for n in (math.floor(x), math.ceil(x)):
            if lo <= n and (hi is None or n < hi):
                cands.append(int(n))
    for n in cands:
        if h(n) > slack:
            return n
    if hi is None:
        grows = a > 0 or (a == 0 and b < 0)
        if grows:
            return lo
        if a == 0 and b == 0 and c > slack:
            return lo
    return None


@dataclass
class DominatedReport:
    alpha: ModeResult
    limit_member: str
    integral: dict
    holds: bool

    def to_json(self) -> dict:
        return {"alpha": self.alpha.to_json(), "limit_member": self.limit_member,
                "integral": {str(k): v for k, v in self.integral.items()}, "conclusion_holds": self.holds}


def check_domination(seq: FnSequence, g: MeasurableFn):
    if np.any(g.values < 0) or any(s.b < 0 for s in g.tail):
        raise DominationViolated("the dominating function must be nonnegative")
    for n, f in enumerate(seq.terms(), start=1):
        bad = np.nonzero(np.abs(f.values) > g.values * (1 + 1e-12))[0]
        if len(bad):
            raise DominationViolated(f"|f_{n}| > g on cell {seq.space.cells[bad[0]].id}")
        atom = _dominated_on_tail(f, g)
        if atom is not None:
            raise DominationViolated(f"|f_{n}| > g on tail atom {atom}")


def dominated_convergence_suite(seq: FnSequence, p: float, g: MeasurableFn, tol: float = TRACE_TOL,
                                deltas=(0.5, 0.25, 0.125)) -> DominatedReport:
    check_domination(seq, g)
    if lambda_p_member(g, p).verdict != "member":
        raise NotMember("the dominating function is not almost in L_p")
    alpha = check_alpha(seq, p, tol)
    limit_member = lambda_p_member(seq.limit, p).verdict
    integral = {}
    m1 = lambda_p_member(g, 1.0, deltas)
    if m1.verdict == "member":
        diffs = _diffs(seq)
        for d, E in m1.witnesses.items():
            Ec = E.complement()
            tr = [abs(integrate_signed(x, Ec).value) for x in diffs]
            integral[d] = {"verdict": trace_verdict(tr, tol), "trace": tr, "witness": set_to_json(E)}
    holds = alpha.verdict == HOLDS and limit_member == "member" and all(
        v["verdict"] == HOLDS for v in integral.values())
    return DominatedReport(alpha, limit_member, integral, holds)


# ---------------------------------------------------------------------------
# lattice


def assert_lattice(verdicts: dict, finite_measure: bool, traces=None):
    """Raise ImplicationViolation if an upstream mode holds while a downstream one fails."""
    chain = [m for m in LATTICE if m in verdicts]
    for i, up in enumerate(chain):
        if verdicts[up] != HOLDS:
            continue
        for down in chain[i + 1:]:
            if verdicts[down] == FAILS:
                raise ImplicationViolation(up, down, traces)
    if finite_measure:
        trio = [m for m in ("alpha_p", "in_measure", "local_in_measure") if m in verdicts]
        decided = {m: verdicts[m] for m in trio if verdicts[m] != INCONCLUSIVE}
        if len(set(decided.values())) > 1:
            up = next(m for m, v in decided.items() if v == HOLDS)
            down = next(m for m, v in decided.items() if v == FAILS)
            raise ImplicationViolation(up, down, traces)


def implication_matrix(seq: FnSequence, p: float, tol: float = TRACE_TOL, strict: bool = True) -> dict:
    results = {
        "Lp": check_lp(seq, p, tol),
        "almost_Lp": check_almost_lp(seq, p, tol=tol),
        "alpha_p": check_alpha(seq, p, tol),
        "in_measure": check_in_measure(seq, tol=tol),
        "local_in_measure": _local(seq, tol),
    }
    verdicts = {k: r.verdict for k, r in results.items()}
    if strict:
        assert_lattice(verdicts, seq.space.is_finite_measure, {k: r.evidence for k, r in results.items()})
    return verdicts


@dataclass
class ConvergenceReport:
    sequence: str
    p: float
    n_max: int
    entries: dict

    def verdicts(self) -> dict:
        return {k: r.verdict for k, r in self.entries.items()}

    def to_json(self) -> dict:
        return {"sequence": self.sequence, "p": self.p, "n_max": self.n_max,
                "verdicts": self.verdicts(), "modes": {k: r.to_json() for k, r in self.entries.items()}}

    def to_csv(self) -> str:
        """One row per (mode, series, n, value)."""
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["mode", "series", "n", "value"])
        for mode, r in self.entries.items():
            for label, tr in _traces(r.evidence):
                for n, v in enumerate(tr, start=1):
                    w.writerow([mode, label, n, repr(float(v))])
        return buf.getvalue()


def _traces(ev, prefix: str = ""):
    """Every numeric list inside an evidence tree, labelled by its path."""
    if isinstance(ev, dict):
        for k, v in ev.items():
            yield from _traces(v, f"{prefix}{k}/")
    elif isinstance(ev, list) and ev and all(isinstance(x, (int, float)) for x in ev):
        yield prefix.rstrip("/"), ev
    elif isinstance(ev, list):
        for j, sub in enumerate(ev):
            yield from _traces(sub, f"{prefix}{j}/")


def classify(seq: FnSequence, p: float, tol: float = TRACE_TOL) -> ConvergenceReport:
    entries = {}
    if seq.limit is not None:
        entries["Lp"] = check_lp(seq, p, tol)
        entries["almost_Lp"] = check_almost_lp(seq, p, tol=tol)
        entries["alpha_p"] = check_alpha(seq, p, tol)
        entries["in_measure"] = check_in_measure(seq, tol=tol)
        entries["local_in_measure"] = _local(seq, tol)
        entries["ae"] = check_ae(seq, tol=tol)
    else:
        for m in LATTICE + ("ae",):
            entries[m] = ModeResult(m, INCONCLUSIVE, note="no candidate limit")
    entries["alpha_cauchy"] = check_alpha_cauchy(seq, p, tol)
    entries["uniformly_p_integrable"] = check_uniform_p_integrability(seq, p, tol=tol)
    entries["alpha_tight"] = check_alpha_tightness(seq, p)
    rep = ConvergenceReport(seq.name, p, seq.n_max, entries)
    assert_lattice(rep.verdicts(), seq.space.is_finite_measure, {k: r.evidence for k, r in entries.items()})
    return rep
