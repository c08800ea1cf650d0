"""Constructive approximation: dyadic ladders, truncation into L_p,
mollification on grids and a countable dyadic net."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import GridTooCoarse, NotMember, UnsupportedFamilyCombination
from .functionals import alpha_norm_p, cover_index, lambda_p_member, witness_set
from .measure import (
    EXPLODE_LIMIT,
    Cell,
    MeasurableFn,
    MeasurableSet,
    MeasureSpace,
    TailSegment,
    integrate_p,
)

# ---------------------------------------------------------------------------
# simple-function ladder


def _ladder_cells(values: np.ndarray, k: int, cap: float) -> np.ndarray:
    scale = 2.0**k
    mag = np.minimum(np.floor(scale * np.abs(values)) / scale, cap)
    return np.sign(values) * mag


def _runs(idx: np.ndarray, vals: np.ndarray):
    """Group consecutive atoms with equal values into constant segments."""
    out = []
    if len(idx) == 0:
        return out
    cut = np.nonzero(np.diff(vals) != 0)[0] + 1
    for lo, hi in zip(np.r_[0, cut], np.r_[cut, len(idx)]):
        if vals[lo] != 0.0:
            out.append(TailSegment(int(idx[lo]), int(idx[hi - 1]) + 1, float(vals[lo])))
    return out


def _ladder_segment(s: TailSegment, k: int, top: float) -> list[TailSegment]:
    sign = math.copysign(1.0, s.b)
    if s.kind == "constant":
        v = float(_ladder_cells(np.array([s.b]), k, top)[0])
        return [TailSegment(s.start, s.stop, v)] if v != 0.0 else []
    out = []
    cap = s.superlevel(top)
    if cap is not None:
        out.append(TailSegment(cap[0], cap[1], sign * top))
    mid = s.superlevel(2.0**-k * (1.0 - 1e-12))
    if mid is None:
        return out
    lo, hi = mid
    if cap is not None:
        # cap and mid share one endpoint since |value| is monotone on the segment
        if cap[0] == lo:
            lo = cap[1]
        else:
            hi = cap[0]
    if lo is None or (hi is not None and hi <= lo):
        return out
    if hi is None or hi - lo > EXPLODE_LIMIT:
        raise UnsupportedFamilyCombination(
            f"ladder level {k} needs more than {EXPLODE_LIMIT} explicit tail atoms")
    idx = np.arange(lo, hi)
    out.extend(_runs(idx, _ladder_cells(s.value(idx), k, top)))
    return out


def ladder_step(f: MeasurableFn, k: int, cap: float | None = None) -> MeasurableFn:
    """s_k = sign(f) * min(floor(2^k |f|) / 2^k, cap) with cap = k by default."""
    if k < 1:
        raise ValueError("ladder levels start at k = 1")
    top = float(k) if cap is None else float(cap)
    segs = []
    for s in f.tail:
        segs.extend(_ladder_segment(s, k, top))
    return MeasurableFn(f.space, _ladder_cells(f.values, k, top), tuple(segs))


def sup_abs(f: MeasurableFn) -> float:
    """sup |f| over cells and tail segments (inf for unbounded growth)."""
    top = float(np.max(np.abs(f.values), initial=0.0))
    for s in f.tail:
        if s.b == 0:
            continue
        growing = s.rho > 1.0 if s.kind == "geometric" else s.sigma < 0.0
        if growing and s.stop is None:
            return math.inf
        n = s.stop - 1 if growing else s.start
        top = max(top, abs(float(s.value([n])[0])))
    return top


def simple_ladder(f: MeasurableFn, levels: int) -> list[MeasurableFn]:
    """The ladder s_1..s_levels; |s_k| <= |f| and s_k -> f pointwise."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    return [ladder_step(f, k) for k in range(1, levels + 1)]


# ---------------------------------------------------------------------------
# truncation into L_p


@dataclass
class Truncation:
    g: MeasurableFn
    removed: MeasurableSet
    removed_measure: float
    distance: float
    lp_integral: float
    eps: float
    p: float

    @property
    def certified(self) -> bool:
        # mu(E) < eps^p, g in L_p and ||f - g||^p <= mu(E)
        return (self.removed_measure < self.eps**self.p and math.isfinite(self.lp_integral)
                and self.distance**self.p <= self.removed_measure * (1 + 1e-12) + 1e-15
                and self.distance < self.eps)

    def to_json(self) -> dict:
        return {"removed_tail": [list(r) for r in self.removed.tail],
                "removed_measure": self.removed_measure, "distance": self.distance,
                "lp_integral": self.lp_integral, "eps": self.eps, "p": self.p, "certified": self.certified}


def truncate_to_lp(f: MeasurableFn, p: float, eps: float) -> Truncation:
    """g = f restricted off a set of measure < eps^p with g in L_p."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if lambda_p_member(f, p).verdict != "member":
        raise NotMember("f is not almost in L_p")
    E = witness_set(f, p, eps**p)
    if E is None:
        raise NotMember("no witness set of the requested measure")
    g = f.restrict(E.complement())
    dist = alpha_norm_p(f - g, p).value ** (1.0 / p)
    return Truncation(g, E, E.measure().value, dist, integrate_p(g, p).value, eps, p)


# ---------------------------------------------------------------------------
# grids and mollification


@dataclass(frozen=True)
class GridBox:
    bounds: tuple  # ((lo, hi), ...) per axis
    cells: tuple  # cells per axis

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        c = tuple(int(n) for n in self.cells)
        if not 1 <= len(b) <= 3 or len(b) != len(c):
            raise ValueError("grids have 1 to 3 axes with one cell count each")
        if any(hi <= lo for lo, hi in b) or any(n < 1 for n in c):
            raise ValueError("each axis needs hi > lo and at least one cell")
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "cells", c)

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def sides(self) -> np.ndarray:
        return np.array([(hi - lo) / n for (lo, hi), n in zip(self.bounds, self.cells)])

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.sides))

    def centers(self, axis: int) -> np.ndarray:
        lo, _ = self.bounds[axis]
        return lo + (np.arange(self.cells[axis]) + 0.5) * self.sides[axis]

    def sample(self, fn) -> np.ndarray:
        """Values of fn at cell centres, shape = cells."""
        mesh = np.meshgrid(*[self.centers(a) for a in range(self.dim)], indexing="ij")
        return np.asarray(fn(*mesh), dtype=float)

    def to_space(self) -> MeasureSpace:
        vol = self.cell_volume
        return MeasureSpace([Cell(i, vol) for i in range(int(np.prod(self.cells)))])

    def to_fn(self, values: np.ndarray, space: MeasureSpace | None = None) -> MeasurableFn:
        return MeasurableFn(space or self.to_space(), np.asarray(values, dtype=float).ravel())


def bump_kernel(box: GridBox, h: float) -> np.ndarray:
    """(1 - |x/h|^2)^3 on the grid offsets with |x| < h, normalized to sum 1."""
    radius = h / box.sides
    if np.any(radius < 2.0):
        raise GridTooCoarse(f"kernel radius {h} spans fewer than 2 cells on some axis")
    axes = [np.arange(-math.floor(r), math.floor(r) + 1) * s for r, s in zip(radius, box.sides)]
    mesh = np.meshgrid(*axes, indexing="ij")
    r2 = sum(m**2 for m in mesh) / h**2
    k = np.where(r2 < 1.0, (1.0 - r2) ** 3, 0.0)
    return k / k.sum()


def grid_alpha(box: GridBox, values: np.ndarray, p: float) -> float:
    v = np.minimum(np.abs(values), 1.0) ** p
    return float(box.cell_volume * v.sum()) ** (1.0 / p)


def grid_lp(box: GridBox, values: np.ndarray, p: float) -> float:
    return float(box.cell_volume * (np.abs(values) ** p).sum()) ** (1.0 / p)


def total_variation(values: np.ndarray) -> float:
    return float(sum(np.abs(np.diff(values, axis=a)).sum() for a in range(values.ndim)))


@dataclass
class Mollified:
    phi: np.ndarray
    h: float
    distance_alpha: float
    distance_lp: float
    p: float
    max_slope: float
    tv_ratio: float
    support_inside: bool
    history: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"h": self.h, "distance_alpha": self.distance_alpha, "distance_lp": self.distance_lp,
                "p": self.p, "max_slope": self.max_slope, "tv_ratio": self.tv_ratio,
                "support_inside": self.support_inside, "history": self.history}


def smooth(box: GridBox, values: np.ndarray, h: float) -> np.ndarray:
    values = np.asarray(values, dtype=float).reshape(box.cells)
    return ndimage.correlate(values, bump_kernel(box, h), mode="constant", cval=0.0)


def _report(box, f, phi, h, p, history=None) -> Mollified:
    diff = f - phi
    slopes = [np.abs(np.diff(phi, axis=a)).max(initial=0.0) / box.sides[a] for a in range(box.dim)]
    tv_f = total_variation(f)
    tv_phi = total_variation(phi)
    margin = [int(math.ceil(h / s)) for s in box.sides]
    inner = np.zeros(box.cells, dtype=bool)
    inner[tuple(slice(m, n - m) for m, n in zip(margin, box.cells))] = True
    return Mollified(phi, h, grid_alpha(box, diff, p), grid_lp(box, diff, p), p, float(max(slopes)),
                     tv_phi / tv_f if tv_f > 0 else 0.0, not np.any(f[~inner]), history or [])


def mollify(box: GridBox, values, h: float | None = None, p: float = 1.0, eps: float | None = None) -> Mollified:
    """Smooth grid values with the bump kernel.

    With ``h`` given, smooth once and report the distances. With only
    ``eps``, halve h from a quarter of the shortest box side until the
    smoothing error in L_p drops below eps/2; on a finite box the truncation
    step of the two-step bound removes nothing, so the alpha_p distance is
    then below eps.
    """
    f = np.asarray(values, dtype=float).reshape(box.cells)
    if h is not None:
        return _report(box, f, smooth(box, f, h), h, p)
    if eps is None:
        raise ValueError("mollify needs a kernel radius h or a target eps")
    h = 0.25 * min(hi - lo for lo, hi in box.bounds)
    history, best = [], None
    while True:
        try:
            phi = smooth(box, f, h)
        except GridTooCoarse:
            raise GridTooCoarse(f"no kernel radius on this grid reaches {eps / 2} in L_p", best) from None
        rep = _report(box, f, phi, h, p, history)
        history.append({"h": h, "distance_lp": rep.distance_lp})
        if best is None or rep.distance_lp < best.distance_lp:
            best = rep
        if rep.distance_lp < eps / 2:
            return rep
        h /= 2


# ---------------------------------------------------------------------------
# countable net


@dataclass
class NetPoint:
    s: MeasurableFn
    level: int
    distance: float
    eps: float

    def to_json(self) -> dict:
        return {"level": self.level, "distance": self.distance, "bound": 2 * self.eps,
                "cells": self.s.values.tolist(),
                "tail": [[t.start, t.stop, t.b, t.rho, t.sigma] for t in self.s.tail]}


def rational_simple_net(f: MeasurableFn, p: float, eps: float, max_level: int = 60) -> NetPoint:
    """A dyadic-coefficient simple function within 2 eps of f in alpha_p."""
    g = truncate_to_lp(f, p, eps).g
    target = eps
    unbounded = [t for t in g.tail if t.stop is None and t.b != 0]
    if unbounded and g.space.tail.finite_mass:
        # cut the tail where its mass drops below (eps/2)^p, then ladder to eps/2
        k = cover_index(g.space, unbounded[0].start, (eps / 2.0) ** p)
        if k is not None:
            g = g.restrict(MeasurableSet.tail_from(g.space, k).complement())
            target = eps / 2.0

    top = sup_abs(g)
    if not math.isfinite(top):
        raise UnsupportedFamilyCombination("the truncated function is unbounded on an infinite-mass tail")
    # 2^-j rounding capped at sup |g|; |s_j| grows with j, so the distance is
    # nonincreasing in j: double, then bisect
    max_level = min(max_level, 1000)

    def close(j):
        return alpha_norm_p(ladder_step(g, j, top) - g, p).value ** (1.0 / p) < target

    hi = 1
    while not close(hi):
        if hi >= max_level:
            raise UnsupportedFamilyCombination(f"dyadic rounding did not reach {target} within {max_level} levels")
        hi = min(2 * hi, max_level)
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (lo, mid) if close(mid) else (mid, hi)
    s = ladder_step(g, hi, top)
    return NetPoint(s, hi, alpha_norm_p(f - s, p).value ** (1.0 / p), eps)
