"""Sums of the series that appear on countable atomic tails.

Every tail integrand in the package has the form ``C * rho**n * n**(-sigma)``
(a weight family times a power of a value family), so a single summation
routine with an explicit absolute error bound covers all of them.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ToleranceNotReached

DEFAULT_TOL = 1e-12
_CHUNK = 4096
_RHO_SNAP = 1e-12
# |R_3| <= 2 zeta(3) / (2 pi)^3 * int |f'''| for Euler-Maclaurin of order 3
_EM3 = 2.0 * 1.2020569031595942 / (2.0 * math.pi) ** 3


def max_tail_terms() -> int:
    return int(float(os.environ.get("ALP_MAX_TAIL_TERMS", "1e6")))


@dataclass(frozen=True)
class Estimate:
    """A nonnegative extended real with an absolute error bound."""

    value: float
    error: float = 0.0

    def __add__(self, other: "Estimate") -> "Estimate":
        return Estimate(self.value + other.value, self.error + other.error)

    def __sub__(self, other: "Estimate") -> "Estimate":
        return Estimate(self.value - other.value, self.error + other.error)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


ZERO = Estimate(0.0, 0.0)
INF = Estimate(math.inf, 0.0)


def snap_ratio(rho: float) -> float:
    return 1.0 if abs(rho - 1.0) <= _RHO_SNAP else rho


def converges(rho: float, sigma: float) -> bool:
    """Whether sum_n rho**n * n**-sigma is finite over an infinite range."""
    rho = snap_ratio(rho)
    return rho < 1.0 or (rho == 1.0 and sigma > 1.0)


def terms(C: float, rho: float, sigma: float, n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if C == 0.0:
        return np.zeros_like(n)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        logt = math.log(C) + n * math.log(rho)
        if sigma != 0.0:
            logt = logt - sigma * np.log(n)
        return np.exp(logt)


def _geometric_block(C, rho, start, length):
    # C * sum_{n=start}^{start+length-1} rho**n
    if rho == 1.0:
        return C * length
    try:
        head = C * rho**start
        return head * (1.0 - rho**length) / (1.0 - rho) if rho < 1.0 else head * math.expm1(
            length * math.log(rho)
        ) / (rho - 1.0)
    except OverflowError:
        return math.inf


def _power_em(C, sigma, a, b=None):
    """Euler-Maclaurin sum of C * n**-sigma for n in [a, b] (b=None: infinity).

    Returns (value, error_bound).
    """
    def f(x):
        return x ** (-sigma)

    def df(x):
        return -sigma * x ** (-sigma - 1.0)

    def d2f(x):
        return sigma * (sigma + 1.0) * x ** (-sigma - 2.0)

    def integral(lo, hi):
        if sigma == 1.0:
            return math.log(hi / lo)
        return (hi ** (1.0 - sigma) - lo ** (1.0 - sigma)) / (1.0 - sigma)

    if b is None:
        # only called for sigma > 1
        val = a ** (1.0 - sigma) / (sigma - 1.0) + f(a) / 2.0 - df(a) / 12.0
        err = _EM3 * abs(d2f(a))
    else:
        val = integral(a, b) + (f(a) + f(b)) / 2.0 + (df(b) - df(a)) / 12.0
        err = _EM3 * abs(d2f(b) - d2f(a))
    # float rounding of the closed forms
    err += 4.0 * np.finfo(float).eps * abs(val)
    return C * val, C * err


def series_sum(
    C: float,
    rho: float,
    sigma: float,
    start: int,
    stop: int | None = None,
    tol: float = DEFAULT_TOL,
    max_terms: int | None = None,
) -> Estimate:
    """Sum ``C * rho**n * n**-sigma`` over ``start <= n < stop``.

    ``stop=None`` means the range is unbounded. Divergent series return
    ``Estimate(inf)``. Raises ToleranceNotReached when the remainder bound
    cannot be brought below ``tol`` within ``max_terms`` explicit terms.
    """
    if C < 0 or rho <= 0:
        raise ValueError("series_sum needs C >= 0 and rho > 0")
    if max_terms is None:
        max_terms = max_tail_terms()
    rho = snap_ratio(rho)
    if sigma != 0.0 and start < 1:
        raise ValueError("power families are indexed from n >= 1")
    if C == 0.0:
        return ZERO
    if stop is not None:
        length = stop - start
        if length <= 0:
            return ZERO
        if sigma == 0.0:
            return Estimate(_geometric_block(C, rho, start, length))
        if length <= max_terms:
            vals = terms(C, rho, sigma, np.arange(start, stop))
            total = float(np.sum(vals))
            return Estimate(total, 4.0 * np.finfo(float).eps * length * total)
        if converges(rho, sigma):
            return series_sum(C, rho, sigma, start, None, tol / 2, max_terms) - series_sum(
                C, rho, sigma, stop, None, tol / 2, max_terms
            )
        if rho == 1.0:
            head = min(length, _CHUNK)
            direct = float(np.sum(terms(C, 1.0, sigma, np.arange(start, start + head))))
            val, err = _power_em(C, sigma, float(start + head), float(stop - 1))
            if err > tol and err > tol * abs(val):
                raise ToleranceNotReached(
                    f"long power block error {err:.3g} exceeds tolerance {tol:.3g}"
                )
            return Estimate(direct + val, err)
        raise ToleranceNotReached(
            f"no closed form for a block of {length} terms with rho={rho}, sigma={sigma}"
        )

    if not converges(rho, sigma):
        return INF
    if sigma == 0.0:
        return Estimate(C * rho**start / (1.0 - rho))
    if rho == 1.0:
        n0 = start
        partial = 0.0
        while True:
            val, err = _power_em(C, sigma, float(n0))
            if err <= tol:
                return Estimate(partial + val, err)
            if n0 - start >= max_terms:
                raise ToleranceNotReached(
                    f"power tail bound {err:.3g} above {tol:.3g} after {n0 - start} terms"
                )
            step = max(min(_CHUNK, max_terms - (n0 - start)), 1)
            partial += float(np.sum(terms(C, 1.0, sigma, np.arange(n0, n0 + step))))
            n0 += step
    # rho < 1: ratio-test remainder bound
    partial = 0.0
    n0 = start
    while True:
        block = terms(C, rho, sigma, np.arange(n0, n0 + _CHUNK))
        partial += float(np.sum(block))
        n0 += _CHUNK
        nxt = float(terms(C, rho, sigma, [n0])[0])
        theta = rho if sigma >= 0 else rho * (1.0 + 1.0 / n0) ** (-sigma)
        if theta < 1.0 and math.isfinite(nxt):
            bound = nxt / (1.0 - theta)
            if bound <= tol:
                return Estimate(partial + bound / 2.0, bound / 2.0 + 4.0 * np.finfo(float).eps * partial)
        if n0 - start >= max_terms:
            raise ToleranceNotReached("geometric tail did not settle within the term budget")
