"""Almost-L_p spaces on piecewise-constant measure spaces.

Functions are constant on finitely many cells plus a countable tail of
atoms whose weights and values follow geometric or power families, so
integrals, norms and membership questions are decided exactly or with an
explicit error bound.
"""
from .errors import AlmostLpError
from .functionals import (
    ac_modulus,
    alpha_norm,
    alpha_norm_p,
    frechet_mu,
    in_lp,
    lambda_p_member,
    lp_norm,
    witness_set,
)
from .measure import (
    Cell,
    MeasurableFn,
    MeasurableSet,
    MeasureSpace,
    TailFamily,
    TailSegment,
    integrate_p,
    measure_of,
)
from .series import Estimate

__version__ = "0.1.0"
