import csv
import io
import json

import numpy as np
import pytest

from almostlp.convergence import (
    FAILS, HOLDS, INCONCLUSIVE, assert_lattice, check_alpha, check_almost_lp, check_ae,
    check_domination, check_in_measure, check_local_in_measure, check_lp, classify, combine,
    dominated_convergence_suite, implication_matrix, prefix_set, trace_verdict, ui_deltas,
    vitali_alpha, vitali_classic, vitali_lambda,
)
from almostlp.errors import DominationViolated, ImplicationViolation, InfiniteMeasureSet, MissingLimit
from almostlp.measure import MeasurableFn, MeasurableSet
from almostlp.randomgen import random_space
from almostlp.sequences import (
    RANDOM_KINDS, FnSequence, chi_shrinking, constant, escaping_box, explicit, n_chi_shrinking,
    random_sequence, shrinking_indicator,
)

H, F = HOLDS, FAILS


# ---- trace test ---------------------------------------------------------------

def test_trace_decaying_holds():
    n = np.arange(1, 65)
    assert trace_verdict(1.0 / n) == H
    assert trace_verdict(0.5**n) == H
    assert trace_verdict(np.r_[np.ones(40), np.zeros(24)]) == H


def test_trace_stalled_fails():
    assert trace_verdict(np.ones(64)) == F
    assert trace_verdict([np.inf] * 10) == F
    assert trace_verdict(np.r_[np.ones(32), np.full(32, np.inf)]) == F


def test_trace_ambiguous():
    assert trace_verdict([]) == INCONCLUSIVE
    # oscillating slow decay: the envelope still drops, but not monotonically
    n = np.arange(1, 65)
    assert trace_verdict(n**-0.3 * (1 + 0.1 * (-1) ** n)) == INCONCLUSIVE
    # very slow decay counts as stalled
    assert trace_verdict(np.log(n + 1) ** -0.1 * (1 + 0.05 * (-1) ** n)) == FAILS


def test_combine():
    assert combine([H, H]) == H
    assert combine([H, INCONCLUSIVE]) == INCONCLUSIVE
    assert combine([INCONCLUSIVE, F]) == F
    assert combine([]) == INCONCLUSIVE


# ---- canonical sequences --------------------------------------------------------

CANONICAL = {
    "chi": (chi_shrinking, {"Lp": H, "almost_Lp": H, "alpha_p": H, "in_measure": H, "local_in_measure": H,
                            "ae": H, "alpha_cauchy": H, "uniformly_p_integrable": H, "alpha_tight": H}),
    "n_chi": (n_chi_shrinking, {"Lp": F, "almost_Lp": H, "alpha_p": H, "in_measure": H, "local_in_measure": H,
                                "ae": H, "alpha_cauchy": H, "uniformly_p_integrable": F, "alpha_tight": H}),
    "escape": (escaping_box, {"Lp": F, "almost_Lp": F, "alpha_p": F, "in_measure": F, "local_in_measure": H,
                              "ae": H, "alpha_cauchy": F, "uniformly_p_integrable": H, "alpha_tight": F}),
}


@pytest.mark.parametrize("name", sorted(CANONICAL))
@pytest.mark.parametrize("p", [1.0, 2.0])
def test_canonical_classification(name, p):
    make, expected = CANONICAL[name]
    assert classify(make(64), p).verdicts() == expected


def test_n_chi_lp_norm_grows_for_p_above_one():
    # the p-th power of the L_p norm of n chi_(0,1/n) is about n^(p-1)
    seq = n_chi_shrinking(64)
    tr = check_lp(seq, 2.0).evidence["trace"]
    assert tr[-1] > tr[0]


def test_chi_on_half_line_all_hold():
    assert set(classify(chi_shrinking(64, on_half_line=True), 1.0).verdicts().values()) == {H}


def test_vitali_patterns():
    chi, nchi, esc = chi_shrinking(64), n_chi_shrinking(64), escaping_box(64)
    assert vitali_classic(chi, 1.0).pattern == {"in_measure": H, "tail_control": H,
                                                "uniformly_p_integrable": H, "main:Lp": H}
    assert vitali_classic(nchi, 1.0).failing_legs == ["uniformly_p_integrable"]
    assert vitali_classic(esc, 1.0).failing_legs == ["in_measure", "tail_control"]
    assert vitali_alpha(nchi, 1.0).failing_legs == ["uniformly_p_integrable"]
    assert vitali_alpha(esc, 1.0).failing_legs == ["alpha_p"]
    assert vitali_lambda(esc, 1.0).failing_legs == ["alpha_tight"]
    assert vitali_lambda(esc, 1.0).main.verdict == F
    for seq in (chi, nchi, esc):
        for thm in (vitali_classic, vitali_alpha, vitali_lambda):
            assert thm(seq, 1.0).consistent is True


def test_vitali_report_json():
    js = json.loads(json.dumps(vitali_classic(escaping_box(32), 1.0).to_json()))
    assert js["theorem"] == "classic" and js["consistent"] is True


# ---- random suites ------------------------------------------------------------

@pytest.mark.parametrize("kind", RANDOM_KINDS)
def test_random_finite_vitali_consistent(kind):
    rng = np.random.default_rng(hash(kind) % 2**32)
    for _ in range(6):
        seq = random_sequence(rng, random_space(rng, 8), kind)
        for thm in (vitali_classic, vitali_alpha, vitali_lambda):
            assert thm(seq, 2.0).consistent is not False
        implication_matrix(seq, 2.0)


def test_random_tailed_classify_respects_lattice():
    from almostlp.measure import MeasureSpace, TailFamily

    rng = np.random.default_rng(5)
    for _ in range(8):
        sp = MeasureSpace(random_space(rng, 6).cells, TailFamily("geometric", a=1.0, r=0.6))
        classify(random_sequence(rng, sp), 1.5)


# ---- individual modes and errors -------------------------------------------------

def test_constant_sequence_converges():
    seq = chi_shrinking(16)
    const = constant(seq[3], 16)
    assert check_lp(const, 1.0).verdict == H
    assert check_almost_lp(const, 1.0).verdict == H


def test_missing_limit():
    seq = chi_shrinking(16)
    nolimit = FnSequence(seq.space, seq.generator, 16, None, "nolimit")
    with pytest.raises(MissingLimit):
        nolimit.differences()
    rep = classify(nolimit, 1.0)
    assert rep.verdicts()["Lp"] == INCONCLUSIVE
    assert rep.verdicts()["alpha_cauchy"] == H


def test_local_in_measure_rejects_infinite_sets():
    seq = escaping_box(16)
    with pytest.raises(InfiniteMeasureSet):
        check_local_in_measure(seq, test_sets=[MeasurableSet.whole(seq.space)])
    assert check_local_in_measure(seq, test_sets=[prefix_set(seq.space, 8)]).verdict == H


def test_in_measure_witnesses_escape():
    ev = check_in_measure(escaping_box(32)).evidence
    assert ev  # traces recorded for the JSON report


def test_ae_on_escaping_box():
    assert check_ae(escaping_box(32)).verdict == H


def test_ui_deltas():
    d = ui_deltas(64)
    assert d[0] == 1.0 and min(d) >= 2.0 / 64
    assert all(b == a / 2 for a, b in zip(d, d[1:]))


def test_assert_lattice():
    assert_lattice({"Lp": H, "alpha_p": H, "in_measure": INCONCLUSIVE}, False)
    with pytest.raises(ImplicationViolation):
        assert_lattice({"Lp": H, "almost_Lp": F}, False)
    with pytest.raises(ImplicationViolation):
        assert_lattice({"alpha_p": F, "in_measure": INCONCLUSIVE, "local_in_measure": H}, True)
    # on infinite spaces local convergence may hold alone
    assert_lattice({"alpha_p": F, "in_measure": F, "local_in_measure": H}, False)


# ---- dominated convergence --------------------------------------------------------

def test_dominated_convergence():
    seq = chi_shrinking(32)
    g = MeasurableFn(seq.space, np.ones(len(seq.space)))
    rep = dominated_convergence_suite(seq, 1.0, g)
    assert rep.holds and rep.alpha.verdict == H
    with pytest.raises(DominationViolated):
        check_domination(n_chi_shrinking(32), g)
    with pytest.raises(DominationViolated):
        check_domination(seq, g.scale(-1.0))


# ---- report formats ----------------------------------------------------------------

def test_report_json_and_csv():
    rep = classify(n_chi_shrinking(16), 1.0)
    js = json.loads(json.dumps(rep.to_json(), allow_nan=False))
    assert js["verdicts"]["uniformly_p_integrable"] == F
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["mode", "series", "n", "value"]
    assert {r[0] for r in rows[1:]} >= {"Lp", "alpha_p"}


def test_explicit_sequence_requires_terms():
    with pytest.raises(ValueError):
        explicit([])
    seq = chi_shrinking(8)
    with pytest.raises(ValueError):
        FnSequence(seq.space, lambda n: shrinking_indicator(chi_shrinking(8).space, n), 8).terms()


# ---- structural properties ----------------------------------------------------------

from almostlp.measure import MeasureSpace, TailFamily, TailSegment
from almostlp.convergence import check_alpha_cauchy
from almostlp.randomgen import random_fn
from almostlp.sequences import geometric_perturbation, scaled


def test_scalar_continuity(rng):
    for _ in range(10):
        sp = random_space(rng, 8)
        seq = geometric_perturbation(random_fn(rng, sp), random_fn(rng, sp), 0.5, 48)
        assert check_alpha(seq, 2.0).verdict == H
        lam = lambda n: 3.0 + 0.5**n
        both = FnSequence(sp, lambda n: seq[n].scale(lam(n)), 48, seq.limit.scale(3.0), "scaled")
        assert check_alpha(both, 2.0).verdict == H


def test_completeness_witness(rng):
    for _ in range(10):
        sp = random_space(rng, 8)
        seq = geometric_perturbation(random_fn(rng, sp), random_fn(rng, sp), 0.6, 64)
        nolimit = FnSequence(sp, seq.generator, 64, None, "nolimit")
        assert check_alpha_cauchy(nolimit, 1.5).verdict == H
        # the cellwise limit of the values, read off the late terms
        cellwise = MeasurableFn(sp, np.round(seq[64].values, 9))
        withlimit = FnSequence(sp, seq.generator, 64, cellwise, "cellwise")
        assert check_alpha(withlimit, 1.5).verdict == H


def test_dominated_scaled_member_not_in_lp():
    sp = MeasureSpace([], TailFamily("geometric", a=1.0, r=0.5))
    g = MeasurableFn(sp, np.zeros(0), (TailSegment(1, None, 1.0, rho=2.0),))
    seq = scaled(g, lambda n: 1.0 / n, 0.0, 64)
    rep = dominated_convergence_suite(seq, 1.0, g)
    assert rep.alpha.verdict == H and rep.limit_member == "member" and rep.holds


def test_dominated_random_finite(rng):
    for _ in range(30):
        sp = random_space(rng, 8)
        f, h = random_fn(rng, sp), random_fn(rng, sp)
        seq = geometric_perturbation(f, h, float(rng.uniform(0.3, 0.7)), 48)
        g = f.abs() + h.abs()
        assert dominated_convergence_suite(seq, float(rng.choice([1.0, 2.0])), g).holds
