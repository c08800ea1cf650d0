"""Random spaces and functions for the property suites.

Values are log-uniform on [1e-3, 1e3] with random signs; 20% of values are
pinned to zero and 10% sit next to the kink |f| = 1 of min(|f|, 1).
"""
from __future__ import annotations

import numpy as np

from .measure import Cell, MeasurableFn, MeasurableSet, MeasureSpace


def random_values(rng: np.random.Generator, n: int) -> np.ndarray:
    mags = 10.0 ** rng.uniform(-3.0, 3.0, size=n)
    signs = rng.choice([-1.0, 1.0], size=n)
    vals = mags * signs
    u = rng.random(n)
    vals[u < 0.2] = 0.0
    kink = (u >= 0.2) & (u < 0.3)
    vals[kink] = signs[kink] * (1.0 + rng.uniform(-1e-3, 1e-3, size=int(kink.sum())))
    return vals


def random_space(rng: np.random.Generator, n_cells: int = 16, atom_fraction: float = 0.25,
                 total: float | None = None) -> MeasureSpace:
    weights = rng.uniform(0.0, 1.0, size=n_cells) ** 2
    if total is not None:
        weights *= total / weights.sum()
    atoms = rng.random(n_cells) < atom_fraction
    return MeasureSpace([Cell(i, float(w), not bool(a)) for i, (w, a) in enumerate(zip(weights, atoms))])


def random_fn(rng: np.random.Generator, space: MeasureSpace) -> MeasurableFn:
    return MeasurableFn(space, random_values(rng, len(space)))


def random_subset(rng: np.random.Generator, space: MeasureSpace, p_in: float = 0.5) -> MeasurableSet:
    return MeasurableSet(space, (rng.random(len(space)) < p_in).astype(float))
