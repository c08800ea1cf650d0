"""Function sequences n -> f_n on a fixed space, and the canonical families."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .measure import Cell, MeasurableFn, MeasureSpace, TailFamily, TailSegment

DEFAULT_N = 64


def harmonic_interval(n_max: int, tail: TailFamily | None = None) -> MeasureSpace:
    """(0, 1] cut at the points 1/k, k = 1..n_max.

    Cell k < n_max is (1/(k+1), 1/k]; cell n_max is (0, 1/n_max]. The interval
    (0, 1/n) is then exactly the union of the cells k >= n.
    """
    cells = [Cell(k, 1.0 / k - 1.0 / (k + 1)) for k in range(1, n_max)]
    cells.append(Cell(n_max, 1.0 / n_max))
    return MeasureSpace(cells, tail)


def half_line(n_max: int) -> MeasureSpace:
    """[0, inf): the harmonic cells of (0, 1] plus unit atoms (n, n+1], n >= 1."""
    return harmonic_interval(n_max, TailFamily("constant", c=1.0, start=1))


def shrinking_indicator(space: MeasureSpace, n: int, height: float = 1.0) -> MeasurableFn:
    """height * indicator of (0, 1/n) on a harmonic space."""
    vals = np.array([height if c.id >= n else 0.0 for c in space.cells])
    return MeasurableFn(space, vals)


@dataclass
class FnSequence:
    space: MeasureSpace
    generator: Callable[[int], MeasurableFn]
    n_max: int = DEFAULT_N
    limit: MeasurableFn | None = None
    name: str = "sequence"
    params: dict = field(default_factory=dict)
    _cache: list | None = field(default=None, repr=False)
    _memo: dict = field(default_factory=dict, repr=False)

    def memo(self, key, compute: Callable[[], object]):
        """Cache a checker result on this sequence (checkers are pure)."""
        if key not in self._memo:
            self._memo[key] = compute()
        return self._memo[key]

    def terms(self) -> list[MeasurableFn]:
        if self._cache is None:
            out = []
            for n in range(1, self.n_max + 1):
                f = self.generator(n)
                if f.space is not self.space:
                    raise ValueError(f"term {n} lives on a different space")
                out.append(f)
            self._cache = out
        return self._cache

    def __getitem__(self, n: int) -> MeasurableFn:
        return self.terms()[n - 1]

    def differences(self) -> list[MeasurableFn]:
        if self.limit is None:
            from .errors import MissingLimit

            raise MissingLimit(f"{self.name} has no candidate limit")
        return [f - self.limit for f in self.terms()]

    def map(self, fn: Callable[[int, MeasurableFn], MeasurableFn], limit: MeasurableFn | None, name: str) -> "FnSequence":
        terms = self.terms()
        return FnSequence(self.space, lambda n: fn(n, terms[n - 1]), self.n_max, limit, name)


def chi_shrinking(n_max: int = DEFAULT_N, on_half_line: bool = False) -> FnSequence:
    space = half_line(n_max) if on_half_line else harmonic_interval(n_max)
    return FnSequence(space, lambda n: shrinking_indicator(space, n), n_max,
                      MeasurableFn.zero(space), "chi_shrinking", {"half_line": on_half_line})


def n_chi_shrinking(n_max: int = DEFAULT_N, on_half_line: bool = False) -> FnSequence:
    space = half_line(n_max) if on_half_line else harmonic_interval(n_max)
    return FnSequence(space, lambda n: shrinking_indicator(space, n, float(n)), n_max,
                      MeasurableFn.zero(space), "n_chi_shrinking", {"half_line": on_half_line})


def escaping_box(n_max: int = DEFAULT_N) -> FnSequence:
    """Indicator of (n, n+1] on [0, inf)."""
    space = half_line(n_max)
    zeros = np.zeros(len(space))
    return FnSequence(space, lambda n: MeasurableFn(space, zeros, (TailSegment(n, n + 1, 1.0),)), n_max,
                      MeasurableFn.zero(space), "escaping_box")


def constant(f: MeasurableFn, n_max: int = DEFAULT_N) -> FnSequence:
    return FnSequence(f.space, lambda n: f, n_max, f, "constant")


def alternating(a: MeasurableFn, b: MeasurableFn, limit: MeasurableFn | None, n_max: int = DEFAULT_N) -> FnSequence:
    return FnSequence(a.space, lambda n: a if n % 2 else b, n_max, limit, "alternating")


def explicit(terms: Sequence[MeasurableFn], limit: MeasurableFn | None = None) -> FnSequence:
    terms = list(terms)
    if not terms:
        raise ValueError("explicit sequences need at least one term")
    return FnSequence(terms[0].space, lambda n: terms[n - 1], len(terms), limit, "explicit")


def geometric_perturbation(f: MeasurableFn, h: MeasurableFn, rate: float, n_max: int = DEFAULT_N) -> FnSequence:
    """f_n = f + rate**n * h, converging to f."""
    return FnSequence(f.space, lambda n: f + h.scale(rate**n), n_max, f, "geometric_perturbation", {"rate": rate})


def scaled(g: MeasurableFn, scalars: Callable[[int], float], limit_scalar: float, n_max: int = DEFAULT_N) -> FnSequence:
    """f_n = scalars(n) * g with limit limit_scalar * g."""
    return FnSequence(g.space, lambda n: g.scale(scalars(n)), n_max, g.scale(limit_scalar), "scaled")


FAMILIES = {
    "chi_shrinking": chi_shrinking,
    "n_chi_shrinking": n_chi_shrinking,
    "escaping_box": escaping_box,
}


RANDOM_KINDS = ("perturbation", "power_perturbation", "alternating_offset", "constant")


def random_tail_family(rng: np.random.Generator) -> tuple[float, float]:
    """(rho, sigma) of a decaying value family."""
    if rng.random() < 0.5:
        return float(rng.uniform(0.3, 0.9)), 0.0
    return 1.0, float(rng.uniform(1.0, 3.0))


def random_tail_segments(rng: np.random.Generator, space: MeasureSpace, family=None) -> tuple:
    """A constant head and a decaying unbounded segment of the given family."""
    if not space.has_tail:
        return ()
    rho, sigma = family or random_tail_family(rng)
    start = space.tail.start
    cut = start + int(rng.integers(1, 20))
    b1 = float(rng.choice([-1.0, 1.0]) * 10.0 ** rng.uniform(-2, 1))
    b2 = float(rng.choice([-1.0, 1.0]) * 10.0 ** rng.uniform(-2, 1))
    head = TailSegment(start, cut, b1)
    return (head, TailSegment(cut, None, b2, rho, sigma))


def random_sequence(rng: np.random.Generator, space: MeasureSpace, kind: str | None = None,
                    n_max: int = DEFAULT_N) -> FnSequence:
    """Random sequences whose verdicts are decided well within n_max terms.

    Perturbations decay geometrically (rate <= 0.7) or like n**-4 at unit
    height; offsets
    live on cells of weight >= 0.2 with height >= 0.5, so a
    non-convergent sequence is visibly non-convergent.
    """
    from .randomgen import random_values

    kind = kind or RANDOM_KINDS[int(rng.integers(len(RANDOM_KINDS)))]
    fam = random_tail_family(rng)
    f = MeasurableFn(space, random_values(rng, len(space)), random_tail_segments(rng, space, fam))
    h = MeasurableFn(space, random_values(rng, len(space)), random_tail_segments(rng, space, fam))
    if kind == "perturbation":
        seq = geometric_perturbation(f, h, float(rng.uniform(0.3, 0.7)), n_max)
    elif kind == "power_perturbation":
        top = max(float(np.max(np.abs(h.values), initial=0.0)), max((abs(s.b) for s in h.tail), default=0.0), 1e-300)
        unit = h.scale(1.0 / top)
        seq = FnSequence(space, lambda n: f + unit.scale(float(n) ** -4.0), n_max, f, "power_perturbation")
    elif kind == "alternating_offset":
        heavy = [i for i, c in enumerate(space.cells) if c.weight >= 0.2]
        i = heavy[int(rng.integers(len(heavy)))] if heavy else int(np.argmax(space.weights))
        bump = np.zeros(len(space))
        bump[i] = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0))
        seq = alternating(f, f + MeasurableFn(space, bump), f, n_max)
    elif kind == "constant":
        seq = constant(f, n_max)
    else:
        raise ValueError(f"unknown random sequence kind {kind!r}")
    seq.params = dict(seq.params, kind=kind)
    return seq
