"""Piecewise-constant measure spaces, sets and functions.

A space is a finite list of weighted cells, optionally followed by a
countable tail of atoms ``n >= start`` whose weights follow a closed-form
family. Functions take one value per cell and, on the tail, a finite list
of segments each carrying a monotone closed-form value family. All tail
series are of the shape ``C * rho**n * n**-sigma`` and are summed by
:func:`almostlp.series.series_sum`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import UnsupportedFamilyCombination
from .series import DEFAULT_TOL, ZERO, Estimate, series_sum, snap_ratio

EXPLODE_LIMIT = 100_000


@dataclass(frozen=True)
class Cell:
    id: int
    weight: float
    divisible: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.weight) and self.weight >= 0):
            raise ValueError(f"cell {self.id}: weight must be finite and >= 0, got {self.weight}")


@dataclass(frozen=True)
class TailFamily:
    """Weights of the tail atoms ``n >= start``.

    kind ``geometric``: a * r**n; ``constant``: c; ``power``: c * n**-s.
    """

    kind: str = "none"
    a: float = 0.0
    r: float = 0.0
    c: float = 0.0
    s: float = 0.0
    start: int = 1

    def __post_init__(self):
        k = self.kind
        if k == "none":
            return
        if k == "geometric":
            if not (self.a > 0 and 0 < self.r < 1):
                raise ValueError("geometric tail needs a > 0 and r in (0, 1)")
        elif k == "constant":
            if not self.c > 0:
                raise ValueError("constant tail needs c > 0")
        elif k == "power":
            if not (self.c > 0 and self.s > 0):
                raise ValueError("power tail needs c > 0 and s > 0")
            if self.start < 1:
                raise ValueError("power tail must start at n >= 1")
        else:
            raise ValueError(f"unknown tail kind {k!r}")
        for v in (self.a, self.r, self.c, self.s):
            if not math.isfinite(v):
                raise ValueError("tail parameters must be finite")

    @property
    def coefficients(self) -> tuple[float, float, float]:
        """(C, rho, sigma) with weight(n) = C * rho**n * n**-sigma."""
        if self.kind == "geometric":
            return self.a, self.r, 0.0
        if self.kind == "constant":
            return self.c, 1.0, 0.0
        if self.kind == "power":
            return self.c, 1.0, self.s
        return 0.0, 1.0, 0.0

    def weight(self, n: int) -> float:
        C, rho, sigma = self.coefficients
        return C * rho**n * (float(n) ** -sigma if sigma else 1.0)

    @property
    def finite_mass(self) -> bool:
        if self.kind == "none":
            return True
        return self.kind == "geometric" or (self.kind == "power" and self.s > 1)

    def mass(self, lo: int, hi: int | None = None, tol: float = DEFAULT_TOL) -> Estimate:
        if self.kind == "none":
            return ZERO
        C, rho, sigma = self.coefficients
        return series_sum(C, rho, sigma, max(lo, self.start), hi, tol)


class MeasureSpace:
    def __init__(self, cells: Sequence[Cell], tail: TailFamily | None = None):
        self.cells = tuple(cells)
        self.tail = tail or TailFamily()
        ids = [c.id for c in self.cells]
        if len(set(ids)) != len(ids):
            raise ValueError("cell ids must be unique")
        self.index = {cid: i for i, cid in enumerate(ids)}
        self.weights = np.array([c.weight for c in self.cells], dtype=float)
        self.divisible = np.array([c.divisible for c in self.cells], dtype=bool)

    @classmethod
    def from_weights(cls, weights: Iterable[float], divisible=True, tail=None) -> "MeasureSpace":
        weights = list(weights)
        if isinstance(divisible, bool):
            divisible = [divisible] * len(weights)
        return cls([Cell(i, float(w), bool(d)) for i, (w, d) in enumerate(zip(weights, divisible))], tail)

    def __len__(self):
        return len(self.cells)

    @property
    def has_tail(self) -> bool:
        return self.tail.kind != "none"

    def finite_measure(self) -> float:
        return float(self.weights.sum())

    def total_measure(self, tol: float = DEFAULT_TOL) -> Estimate:
        return Estimate(self.finite_measure()) + self.tail.mass(self.tail.start, None, tol)

    @property
    def is_finite_measure(self) -> bool:
        return self.tail.finite_mass

    def __repr__(self):
        return f"MeasureSpace({len(self.cells)} cells, tail={self.tail.kind})"


# ---------------------------------------------------------------------------
# tail ranges: half-open [lo, hi) with hi=None for unbounded


def _range_intersect(a, b):
    lo = max(a[0], b[0])
    if a[1] is None:
        hi = b[1]
    elif b[1] is None:
        hi = a[1]
    else:
        hi = min(a[1], b[1])
    if hi is not None and hi <= lo:
        return None
    return (lo, hi)


def normalize_ranges(ranges) -> tuple:
    rs = sorted((int(lo), None if hi is None else int(hi)) for lo, hi in ranges if hi is None or hi > lo)
    out = []
    for lo, hi in rs:
        if out and (out[-1][1] is None or lo <= out[-1][1]):
            plo, phi = out[-1]
            nhi = None if (phi is None or hi is None) else max(phi, hi)
            out[-1] = (plo, nhi)
        else:
            out.append((lo, hi))
    return tuple(out)


def complement_ranges(ranges, start):
    out = []
    cur = start
    for lo, hi in normalize_ranges(ranges):
        if lo > cur:
            out.append((cur, lo))
        if hi is None:
            return tuple(out)
        cur = max(cur, hi)
    out.append((cur, None))
    return tuple(out)


def intersect_ranges(r1, r2):
    out = []
    for a in r1:
        for b in r2:
            c = _range_intersect(a, b)
            if c is not None:
                out.append(c)
    return normalize_ranges(out)


@dataclass(frozen=True)
class TailSegment:
    """Values ``b * rho**n * n**-sigma`` on tail atoms ``start <= n < stop``.

    Only pure families are allowed: constant, geometric (sigma == 0) or
    power (rho == 1). The sign of ``b`` is the sign of the function.
    """

    start: int
    stop: int | None
    b: float
    rho: float = 1.0
    sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "rho", snap_ratio(self.rho))
        if self.rho != 1.0 and self.sigma != 0.0:
            raise UnsupportedFamilyCombination("tail value families must be geometric or power, not both")
        if not (math.isfinite(self.b) and math.isfinite(self.rho) and math.isfinite(self.sigma)):
            raise ValueError("tail values must be finite")
        if self.rho <= 0:
            raise ValueError("geometric value ratio must be positive")
        if self.sigma != 0.0 and self.start < 1:
            raise ValueError("power value families need n >= 1")
        if self.stop is not None and self.stop <= self.start:
            raise ValueError("empty tail segment")

    @property
    def kind(self) -> str:
        if self.sigma != 0.0:
            return "power"
        if self.rho != 1.0:
            return "geometric"
        return "constant"

    @property
    def family(self) -> tuple[float, float]:
        return (self.rho, self.sigma)

    @property
    def span(self) -> tuple:
        return (self.start, self.stop)

    @property
    def length(self) -> float:
        return math.inf if self.stop is None else self.stop - self.start

    def value(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        with np.errstate(over="ignore", divide="ignore"):
            out = self.b * np.power(self.rho, n)
            if self.sigma:
                out = out * np.power(n, -self.sigma)
        return out

    def with_span(self, lo, hi) -> "TailSegment":
        return TailSegment(lo, hi, self.b, self.rho, self.sigma)

    def scaled(self, lam: float) -> "TailSegment":
        return TailSegment(self.start, self.stop, self.b * lam, self.rho, self.sigma)

    def superlevel(self, threshold: float) -> tuple | None:
        """Atom range inside the segment where |value| > threshold."""
        b = abs(self.b)
        if b == 0.0:
            return None
        if self.kind == "constant":
            return self.span if b > threshold else None
        L = math.log(threshold / b) if threshold > 0 else -math.inf
        increasing = (self.rho > 1.0) if self.kind == "geometric" else (self.sigma < 0.0)
        if self.kind == "geometric":
            x = L / math.log(self.rho)
        else:
            x = math.exp(min(-L / self.sigma, 700.0)) if math.isfinite(L) else (math.inf if self.sigma > 0 else 0.0)
        cap = 2**62
        x = min(max(x, -1.0), float(cap))

        def above(n):
            return abs(float(self.value([n])[0])) > threshold

        if increasing:
            m = max(int(math.floor(x)), self.start)
            while m > self.start and above(m - 1):
                m -= 1
            while not above(m) and m < cap:
                m += 1
            rng = (m, None)
        else:
            m = max(int(math.ceil(x)), self.start)
            while m > self.start and not above(m - 1):
                m -= 1
            while above(m) and m < cap:
                m += 1
            rng = (self.start, m)
        return _range_intersect(rng, self.span)


def _combine_segments(fs, gs, sign: float) -> tuple:
    """Segments of f + sign * g."""
    points = set()
    for s in list(fs) + list(gs):
        points.add(s.start)
        if s.stop is not None:
            points.add(s.stop)
    points = sorted(points)
    bounds = [(points[i], points[i + 1]) for i in range(len(points) - 1)]
    if points:
        bounds.append((points[-1], None))

    def piece(segs, lo, hi):
        for s in segs:
            if _range_intersect(s.span, (lo, hi)) == (lo, hi):
                return s
        return None

    out = []
    for lo, hi in bounds:
        a, b = piece(fs, lo, hi), piece(gs, lo, hi)
        if a is None and b is None:
            continue
        if b is None:
            out.append(a.with_span(lo, hi))
        elif a is None:
            out.append(b.scaled(sign).with_span(lo, hi))
        elif a.family == b.family:
            coef = a.b + sign * b.b
            if coef != 0.0:
                out.append(TailSegment(lo, hi, coef, a.rho, a.sigma))
        elif hi is not None and hi - lo <= EXPLODE_LIMIT:
            ns = np.arange(lo, hi)
            vals = a.value(ns) + sign * b.value(ns)
            out.extend(TailSegment(int(n), int(n) + 1, float(v)) for n, v in zip(ns, vals) if v != 0.0)
        else:
            raise UnsupportedFamilyCombination(
                f"cannot add tail families {a.kind} and {b.kind} on an unbounded range"
            )
    return _merge(out)


def _merge(segs) -> tuple:
    out = []
    for s in sorted(segs, key=lambda s: s.start):
        if s.b == 0.0:
            continue
        if out:
            p = out[-1]
            if p.stop == s.start and p.family == s.family and p.b == s.b:
                out[-1] = p.with_span(p.start, s.stop)
                continue
        out.append(s)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class MeasurableFn:
    space: MeasureSpace
    values: np.ndarray
    tail: tuple = field(default_factory=tuple)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.space),):
            raise ValueError(f"expected {len(self.space)} cell values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("function values must be finite")
        object.__setattr__(self, "values", vals)
        segs = tuple(sorted(self.tail, key=lambda s: s.start))
        if segs and not self.space.has_tail:
            raise ValueError("tail values given on a space without a tail")
        prev_stop = self.space.tail.start
        for s in segs:
            if s.start < prev_stop:
                raise ValueError("tail segments overlap or start before the tail")
            if s.stop is None and s is not segs[-1]:
                raise ValueError("only the last tail segment may be unbounded")
            prev_stop = s.stop if s.stop is not None else s.start
        object.__setattr__(self, "tail", _merge(segs))

    @classmethod
    def zero(cls, space: MeasureSpace) -> "MeasurableFn":
        return cls(space, np.zeros(len(space)))

    @classmethod
    def from_map(cls, space: MeasureSpace, values: Mapping[int, float], tail=()) -> "MeasurableFn":
        arr = np.zeros(len(space))
        for cid, v in values.items():
            arr[space.index[int(cid)]] = v
        return cls(space, arr, tuple(tail))

    def _check_space(self, other):
        if other.space is not self.space:
            raise ValueError("functions live on different spaces")

    def __add__(self, other: "MeasurableFn") -> "MeasurableFn":
        self._check_space(other)
        return MeasurableFn(self.space, self.values + other.values, _combine_segments(self.tail, other.tail, 1.0))

    def __sub__(self, other: "MeasurableFn") -> "MeasurableFn":
        self._check_space(other)
        return MeasurableFn(self.space, self.values - other.values, _combine_segments(self.tail, other.tail, -1.0))

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, lam: float) -> "MeasurableFn":
        lam = float(lam)
        if lam == 0.0:
            return MeasurableFn.zero(self.space)
        return MeasurableFn(self.space, lam * self.values, tuple(s.scaled(lam) for s in self.tail))

    __rmul__ = scale
    __mul__ = scale

    def abs(self) -> "MeasurableFn":
        return MeasurableFn(
            self.space, np.abs(self.values), tuple(TailSegment(s.start, s.stop, abs(s.b), s.rho, s.sigma) for s in self.tail)
        )

    def is_zero(self) -> bool:
        return not np.any(self.values) and not self.tail

    def tail_value(self, n: int) -> float:
        for s in self.tail:
            if s.start <= n and (s.stop is None or n < s.stop):
                return float(s.value([n])[0])
        return 0.0

    def restrict(self, E: "MeasurableSet") -> "MeasurableFn":
        """f * indicator(E) for sets without fractional cells."""
        if E.space is not self.space:
            raise ValueError("set lives on a different space")
        if np.any((E.frac > 0) & (E.frac < 1)):
            raise ValueError("cannot restrict a piecewise-constant function to a fractional cell")
        segs = []
        for s in self.tail:
            for r in E.tail:
                c = _range_intersect(s.span, r)
                if c is not None:
                    segs.append(s.with_span(*c))
        return MeasurableFn(self.space, self.values * (E.frac >= 1), tuple(segs))

    def __repr__(self):
        return f"MeasurableFn(values={self.values.tolist()}, tail={list(self.tail)})"


@dataclass(frozen=True, eq=False)
class MeasurableSet:
    """Cells (with fractions on divisible cells) plus tail atom ranges."""

    space: MeasureSpace
    frac: np.ndarray
    tail: tuple = ()

    def __post_init__(self):
        frac = np.clip(np.asarray(self.frac, dtype=float), 0.0, 1.0)
        if frac.shape != (len(self.space),):
            raise ValueError("fraction vector does not match the cells")
        partial = (frac > 0) & (frac < 1)
        if np.any(partial & ~self.space.divisible):
            raise ValueError("fractions are only allowed on divisible cells")
        object.__setattr__(self, "frac", frac)
        t = normalize_ranges(self.tail)
        if t and not self.space.has_tail:
            raise ValueError("tail part given on a space without a tail")
        if t:
            t = intersect_ranges(t, ((self.space.tail.start, None),))
        object.__setattr__(self, "tail", t)

    @classmethod
    def empty(cls, space) -> "MeasurableSet":
        return cls(space, np.zeros(len(space)))

    @classmethod
    def whole(cls, space) -> "MeasurableSet":
        tail = ((space.tail.start, None),) if space.has_tail else ()
        return cls(space, np.ones(len(space)), tail)

    @classmethod
    def of_cells(cls, space, ids: Iterable[int] = (), tail=(), fractions: Mapping[int, float] | None = None):
        frac = np.zeros(len(space))
        for cid in ids:
            frac[space.index[int(cid)]] = 1.0
        for cid, fr in (fractions or {}).items():
            frac[space.index[int(cid)]] = fr
        if tail == "all":
            tail = ((space.tail.start, None),)
        return cls(space, frac, tuple(tail))

    @classmethod
    def tail_from(cls, space, k: int) -> "MeasurableSet":
        return cls(space, np.zeros(len(space)), ((k, None),))

    def complement(self) -> "MeasurableSet":
        tail = complement_ranges(self.tail, self.space.tail.start) if self.space.has_tail else ()
        return MeasurableSet(self.space, 1.0 - self.frac, tail)

    def union(self, other: "MeasurableSet") -> "MeasurableSet":
        """Union; fractional parts are added, which is exact for disjoint sets."""
        return MeasurableSet(self.space, np.minimum(self.frac + other.frac, 1.0), self.tail + other.tail)

    def measure(self, tol: float = DEFAULT_TOL) -> Estimate:
        total = Estimate(float(np.dot(self.frac, self.space.weights)))
        for lo, hi in self.tail:
            total = total + self.space.tail.mass(lo, hi, tol)
        return total

    @property
    def is_empty(self) -> bool:
        return not np.any(self.frac) and not self.tail

    def __repr__(self):
        return f"MeasurableSet(frac={self.frac.tolist()}, tail={list(self.tail)})"


def _whole_ranges(space):
    return ((space.tail.start, None),) if space.has_tail else ()


def _tail_pieces(f: MeasurableFn, over: MeasurableSet | None):
    ranges = _whole_ranges(f.space) if over is None else over.tail
    for s in f.tail:
        for r in ranges:
            c = _range_intersect(s.span, r)
            if c is not None:
                yield s, c


def integrate_p(f: MeasurableFn, p: float, over: MeasurableSet | None = None, tol: float = DEFAULT_TOL) -> Estimate:
    """Integral of |f|**p over a set (default: the whole space)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    frac = np.ones(len(f.space)) if over is None else over.frac
    with np.errstate(over="ignore"):
        finite = float(np.sum(frac * f.space.weights * np.abs(f.values) ** p))
    total = Estimate(finite, float(4.0 * np.finfo(float).eps * len(frac) * finite))
    pieces = list(_tail_pieces(f, over))
    if not pieces:
        return total
    Cw, rw, sw = f.space.tail.coefficients
    share = tol / len(pieces)
    for s, (lo, hi) in pieces:
        C = abs(s.b) ** p * Cw
        total = total + series_sum(C, s.rho**p * rw, p * s.sigma + sw, lo, hi, share)
    return total


def integrate_signed(f: MeasurableFn, over: MeasurableSet | None = None, tol: float = DEFAULT_TOL) -> Estimate:
    """Signed integral of f over a set (value may be +-inf; error is absolute)."""
    frac = np.ones(len(f.space)) if over is None else over.frac
    value = float(np.sum(frac * f.space.weights * f.values))
    error = 4.0 * np.finfo(float).eps * len(frac) * float(np.sum(frac * f.space.weights * np.abs(f.values)))
    pieces = list(_tail_pieces(f, over))
    Cw, rw, sw = f.space.tail.coefficients
    for s, (lo, hi) in pieces:
        est = series_sum(abs(s.b) * Cw, s.rho * rw, s.sigma + sw, lo, hi, tol / max(len(pieces), 1))
        value += math.copysign(est.value, s.b)
        error += est.error
    if math.isnan(value):
        raise UnsupportedFamilyCombination("signed integral of the form inf - inf")
    return Estimate(value, error)


def superlevel_set(f: MeasurableFn, threshold: float) -> MeasurableSet:
    """The set {|f| > threshold}."""
    frac = (np.abs(f.values) > threshold).astype(float)
    ranges = []
    for s in f.tail:
        r = s.superlevel(threshold)
        if r is not None:
            ranges.append(r)
    return MeasurableSet(f.space, frac, tuple(ranges))


def measure_of(f: MeasurableFn, threshold: float, over: MeasurableSet | None = None, tol: float = DEFAULT_TOL) -> Estimate:
    """Measure of {|f| > threshold} (intersected with ``over`` when given)."""
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    level = superlevel_set(f, threshold)
    frac = level.frac if over is None else level.frac * over.frac
    total = Estimate(float(np.dot(frac, f.space.weights)))
    ranges = level.tail if over is None else intersect_ranges(level.tail, over.tail)
    for lo, hi in ranges:
        total = total + f.space.tail.mass(lo, hi, tol)
    return total


def pointwise_min_one(f: MeasurableFn) -> MeasurableFn:
    """min(|f|, 1), with each tail segment split at its crossing of level 1."""
    segs = []
    for s in f.tail:
        a = TailSegment(s.start, s.stop, abs(s.b), s.rho, s.sigma)
        r = a.superlevel(1.0)
        if r is None:
            segs.append(a)
            continue
        segs.append(TailSegment(r[0], r[1], 1.0))
        if r[0] > a.start:
            segs.append(a.with_span(a.start, r[0]))
        if r[1] is not None and (a.stop is None or r[1] < a.stop):
            segs.append(a.with_span(r[1], a.stop))
    return MeasurableFn(f.space, np.minimum(np.abs(f.values), 1.0), tuple(segs))
