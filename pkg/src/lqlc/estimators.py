"""Cost, influence and weight functions of the LS and LQLC M-estimators.

All functions take normalized residuals ``r = (y - Hx) / scale`` and accept
scalars or arrays.

=========  ===============  ============  ===============
estimator  cost rho(r)      psi(r)        w(r) = psi / r
=========  ===============  ============  ===============
LS         r^2 / 2          r             1
LQLC       ln(cosh r + 1)   tanh(r / 2)   tanh(r / 2) / r
=========  ===============  ============  ===============
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

_LN2 = math.log(2.0)
# below this |r|, w_LQLC uses its Taylor series 1/2 - r^2/24
_SERIES_CUTOFF = 1e-4
# above this |r|, cosh(r) is avoided
_LARGE_R = 30.0


class EstimatorSpec(str, Enum):
    LS = "ls"
    LQLC = "lqlc"

    @classmethod
    def parse(cls, name: str) -> "EstimatorSpec":
        return cls(name.strip().lower())


def _out(a: np.ndarray, like):
    return float(a) if np.ndim(like) == 0 else a


def cost(spec: EstimatorSpec, r):
    r_arr = np.asarray(r, dtype=float)
    if spec is EstimatorSpec.LS:
        return _out(0.5 * r_arr * r_arr, r)
    a = np.abs(r_arr)
    small = np.minimum(a, _LARGE_R)
    # ln(cosh r + 1) = |r| - ln 2 + 2 ln(1 + e^{-|r|})
    direct = np.log(np.cosh(small) + 1.0)
    safe = a - _LN2 + 2.0 * np.log1p(np.exp(-a))
    return _out(np.where(a > _LARGE_R, safe, direct), r)


def influence(spec: EstimatorSpec, r):
    r_arr = np.asarray(r, dtype=float)
    if spec is EstimatorSpec.LS:
        return _out(r_arr.copy(), r)
    return _out(np.tanh(0.5 * r_arr), r)


def weight(spec: EstimatorSpec, r):
    r_arr = np.asarray(r, dtype=float)
    if spec is EstimatorSpec.LS:
        return _out(np.ones_like(r_arr), r)
    small = np.abs(r_arr) < _SERIES_CUTOFF
    if not small.any():
        return _out(np.tanh(0.5 * r_arr) / r_arr, r)
    safe_r = np.where(small, 1.0, r_arr)
    w = np.where(small, 0.5 - r_arr * r_arr / 24.0, np.tanh(0.5 * safe_r) / safe_r)
    return _out(w, r)
