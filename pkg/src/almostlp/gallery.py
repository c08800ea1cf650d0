"""Named examples with closed-form expected values, checked by computation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParamOutOfDomain, UnknownEntry
from .functionals import alpha_norm_p, alpha_norm_p_cells, frechet_mu, in_lp, lambda_p_member
from .measure import Cell, MeasurableFn, MeasureSpace, TailFamily, TailSegment, integrate_p
from .randomgen import random_space, random_values

REL_TOL = 1e-12


@dataclass
class Check:
    quantity: str
    computed: object
    expected: object
    rel_error: float | None = None
    passed: bool = True

    def to_json(self) -> dict:
        return {"quantity": self.quantity, "computed": _enc(self.computed), "expected": _enc(self.expected),
                "rel_error": self.rel_error, "passed": self.passed}


def _enc(v):
    """JSON-safe copy: infinite floats become the strings "inf" / "-inf"."""
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, dict):
        return {k: _enc(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_enc(x) for x in v]
    return v


def _close(quantity: str, computed: float, expected: float, tol: float = REL_TOL) -> Check:
    if math.isinf(expected) or math.isinf(computed):
        return Check(quantity, computed, expected, None, computed == expected)
    err = abs(computed - expected) / max(abs(expected), 1e-300)
    return Check(quantity, computed, expected, err, err <= tol)


def _same(quantity: str, computed, expected) -> Check:
    return Check(quantity, computed, expected, None, computed == expected)


@dataclass
class GalleryReport:
    name: str
    params: dict
    checks: list
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {"name": self.name, "params": self.params, "passed": self.passed,
                "checks": [c.to_json() for c in self.checks], "details": _enc(self.details)}


@dataclass(frozen=True)
class Param:
    name: str
    kind: type
    default: object
    valid: Callable[[object], bool]
    domain: str


@dataclass(frozen=True)
class GalleryEntry:
    name: str
    summary: str
    params: tuple
    run: Callable[[dict], GalleryReport]

    def resolve(self, given: dict | None) -> dict:
        given = dict(given or {})
        known = {p.name for p in self.params}
        extra = set(given) - known
        if extra:
            raise ParamOutOfDomain(f"{self.name}: unknown parameter(s) {sorted(extra)}")
        out = {}
        for p in self.params:
            raw = given.get(p.name, p.default)
            try:
                val = p.kind(raw)
            except (TypeError, ValueError):
                raise ParamOutOfDomain(f"{self.name}: {p.name}={raw!r} is not a {p.kind.__name__}") from None
            if not p.valid(val):
                raise ParamOutOfDomain(f"{self.name}: {p.name}={val!r} outside {p.domain}")
            out[p.name] = val
        return out


# ---------------------------------------------------------------------------
# entries


def cube_space(eps: float, p: float, d: int) -> MeasureSpace:
    """One divisible cell: the cube with side (eps/2)^(p/d)."""
    side = (eps / 2.0) ** (p / d)
    return MeasureSpace([Cell(0, side**d)])


def _unbounded_ball(prm: dict) -> GalleryReport:
    eps, p, d, N = prm["eps"], prm["p"], prm["d"], prm["n"]
    expected = eps / 2.0
    # each f_n = n * indicator of its own cube; every cube has the same measure
    sp = cube_space(eps, p, d)
    n = np.arange(1, N + 1, dtype=float)[:, None]
    a = alpha_norm_p_cells(sp, n, p) ** (1.0 / p)
    b = alpha_norm_p_cells(sp, n * (1.0 / n), p) ** (1.0 / p)
    worst_f = float(np.max(np.abs(a - expected)) / expected)
    worst_scaled = float(np.max(np.abs(b - expected)) / expected)
    checks = [
        Check("max_n |‖f_n‖ - eps/2| / (eps/2)", worst_f, 0.0, worst_f, worst_f <= REL_TOL),
        Check("max_n |‖f_n/n‖ - eps/2| / (eps/2)", worst_scaled, 0.0, worst_scaled, worst_scaled <= REL_TOL),
        _same("f_n in the ball of radius eps", bool(expected < eps), True),
    ]
    return GalleryReport("unbounded_ball", prm, checks,
                         {"cube_side": (eps / 2.0) ** (p / d), "norm": expected,
                          "note": "scalars 1/n tend to 0 but the scaled norms stay at eps/2"})


def nonconvex_g(eps: float, p: float, K: int) -> MeasurableFn:
    """g_K = (1/K) sum_{n<=K} n * indicator(E_n) on K disjoint cubes."""
    w = (eps / 2.0) ** p
    sp = MeasureSpace([Cell(n, w) for n in range(1, K + 1)])
    return MeasurableFn(sp, np.arange(1, K + 1, dtype=float) / K)


def nonconvex_closed_form(eps: float, p: float, K: int) -> float:
    n = np.arange(1, K + 1, dtype=float)
    return float(((eps / 2.0) ** p * np.sum(n**p) / K**p) ** (1.0 / p))


def _nonconvex(prm: dict) -> GalleryReport:
    eps, p, R, k_max = prm["eps"], prm["p"], prm["R"], prm["k_max"]
    n = np.arange(1, k_max + 1, dtype=float)
    powers = (eps / 2.0) ** p * np.cumsum(n**p) / n**p
    above = np.nonzero(powers > R**p)[0]
    if len(above) == 0:
        raise ParamOutOfDomain(f"nonconvex: no K <= {k_max} leaves the ball of radius {R}")
    K = int(above[0]) + 1
    g = nonconvex_g(eps, p, K)
    computed = alpha_norm_p(g, p).value ** (1.0 / p)
    closed = nonconvex_closed_form(eps, p, K)
    checks = [
        _close("‖g_K‖ against closed form", computed, closed),
        _same("g_K outside B_R", bool(computed > R), True),
        _same("each f_n in B_eps", bool(eps / 2.0 < eps), True),
    ]
    if K > 1:
        prev = alpha_norm_p(nonconvex_g(eps, p, K - 1), p).value ** (1.0 / p)
        checks.append(_same("g_(K-1) inside B_R (K minimal)", bool(prev <= R), True))
    return GalleryReport("nonconvex", prm, checks, {"K": K, "alpha_norm": computed})


def linear_on_half_line() -> MeasurableFn:
    """f(x) = x sampled as the value n on each unit atom (n, n+1]."""
    sp = MeasureSpace([], TailFamily("constant", c=1.0, start=1))
    return MeasurableFn(sp, np.zeros(0), (TailSegment(1, None, 1.0, sigma=-1.0),))


def _frechet_pathology(prm: dict) -> GalleryReport:
    p, N = prm["p"], prm["n"]
    f = linear_on_half_line()
    fr = [frechet_mu(f.scale(1.0 / k)) for k in range(1, N + 1)]
    al = [alpha_norm_p(f.scale(1.0 / k), p).value for k in range(1, N + 1)]
    checks = [
        _same("frechet_mu(f/n) == 1 for all n", all(v == 1.0 for v in fr), True),
        _same("alpha norm of f/n infinite for all n", all(math.isinf(v) for v in al), True),
    ]
    return GalleryReport("frechet_pathology", prm, checks,
                         {"frechet": fr[:10], "note": "scalar multiples 1/n never shrink f in either functional"})


def one_over_x_pieces() -> dict:
    """Envelopes of |1/x| on the two halves {|x| <= 1} and {|x| > 1}.

    Near 0 the symmetric dyadic shells 2^-n < |x| <= 2^(1-n) have measure
    2^(1-n) and |1/x| lies in [2^(n-1), 2^n). Away from 0 the shells
    n < |x| <= n + 1 have measure 2 and |1/x| lies in [1/(n+1), 1/n].
    """
    near = MeasureSpace([], TailFamily("geometric", a=2.0, r=0.5, start=1))
    far = MeasureSpace([], TailFamily("constant", c=2.0, start=1))
    z = np.zeros(0)
    return {
        "near_upper": MeasurableFn(near, z, (TailSegment(1, None, 1.0, rho=2.0),)),
        "near_lower": MeasurableFn(near, z, (TailSegment(1, None, 0.5, rho=2.0),)),
        "far_upper": MeasurableFn(far, z, (TailSegment(1, None, 1.0, sigma=1.0),)),
    }


def _one_over_x(prm: dict) -> GalleryReport:
    p = prm["p"]
    pc = one_over_x_pieces()
    near_member = lambda_p_member(pc["near_upper"], p).verdict
    far_member = lambda_p_member(pc["far_upper"], p).verdict
    member = near_member == "member" and far_member == "member"
    not_lp = not in_lp(pc["near_lower"], p)
    far_lp = integrate_p(pc["far_upper"], p).value
    checks = [
        _same("member of the almost-L_p space", member, p > 1),
        _same("not in L_p", not_lp, True),
        _close("far half: int |f|^p <= 2 zeta(p)", far_lp, 2.0 * _zeta(p), 1e-9) if p > 1
        else _same("far half p-integral", math.isinf(far_lp), True),
    ]
    return GalleryReport("one_over_x", prm, checks,
                         {"near": near_member, "far": far_member, "far_upper_integral": far_lp})


def _zeta(s: float) -> float:
    from .series import series_sum

    return series_sum(1.0, 1.0, s, 1, None, 1e-14).value


def _finite_collapse(prm: dict) -> GalleryReport:
    rng = np.random.default_rng(prm["seed"])
    p = prm["p"]
    verdicts = []
    not_lp = 0
    for _ in range(prm["trials"]):
        cells = random_space(rng, 8).cells
        tail = TailFamily("geometric", a=float(rng.uniform(0.1, 1.0)), r=float(rng.uniform(0.2, 0.9)))
        sp = MeasureSpace(cells, tail)
        grow = TailSegment(1, None, float(rng.uniform(0.5, 2.0)), rho=float(rng.uniform(1.0, 3.0)))
        f = MeasurableFn(sp, random_values(rng, len(cells)), (grow,))
        verdicts.append(lambda_p_member(f, p).verdict)
        not_lp += not in_lp(f, p)
    checks = [_same("every function classified member", all(v == "member" for v in verdicts), True)]
    return GalleryReport("finite_collapse", prm, checks, {"trials": len(verdicts), "not_in_lp": not_lp})


def _pos(x):
    return x > 0


ENTRIES = (
    GalleryEntry(
        "unbounded_ball",
        "n times the indicator of a small cube: the ball stays unshrunk under scalars 1/n",
        (Param("eps", float, 1.0, _pos, "eps > 0"), Param("p", float, 1.0, lambda v: v >= 1, "p >= 1"),
         Param("d", int, 1, lambda v: 1 <= v <= 3, "d in {1,2,3}"),
         Param("n", int, 10_000, lambda v: 1 <= v <= 10**6, "1 <= n <= 10^6")),
        _unbounded_ball,
    ),
    GalleryEntry(
        "nonconvex",
        "averages of ball elements leave a larger ball: minimal K with ‖g_K‖ > R",
        (Param("eps", float, 1.0, lambda v: 0 < v < 2, "0 < eps < 2"),
         Param("p", float, 1.0, lambda v: v >= 1, "p >= 1"), Param("R", float, 2.0, _pos, "R > 0"),
         Param("k_max", int, 10**6, lambda v: v >= 1, "k_max >= 1")),
        _nonconvex,
    ),
    GalleryEntry(
        "frechet_pathology",
        "f(x) = x on the half line: scaling by 1/n never reduces the Frechet functional",
        (Param("p", float, 1.0, lambda v: v >= 1, "p >= 1"), Param("n", int, 64, lambda v: v >= 1, "n >= 1")),
        _frechet_pathology,
    ),
    GalleryEntry(
        "one_over_x",
        "1/x on the real line: almost in L_p but not in L_p for p > 1",
        (Param("p", float, 2.0, lambda v: v >= 1, "p >= 1"),),
        _one_over_x,
    ),
    GalleryEntry(
        "finite_collapse",
        "on finite measure spaces every finite function is almost in L_p",
        (Param("p", float, 2.0, lambda v: v >= 1, "p >= 1"), Param("trials", int, 100, _pos, "trials > 0"),
         Param("seed", int, 0, lambda v: v >= 0, "seed >= 0")),
        _finite_collapse,
    ),
)
_BY_NAME = {e.name: e for e in ENTRIES}


def list_entries() -> list[dict]:
    return [{"name": e.name, "summary": e.summary,
             "params": {p.name: {"default": p.default, "domain": p.domain} for p in e.params}}
            for e in ENTRIES]


def run_entry(name: str, params: dict | None = None) -> GalleryReport:
    try:
        entry = _BY_NAME[name]
    except KeyError:
        raise UnknownEntry(f"no gallery entry named {name!r}; known: {sorted(_BY_NAME)}") from None
    return entry.run(entry.resolve(params))
