"""Smooth step chi and the two-sided cutoff family zeta_eps.

chi climbs 0 -> 1 over (1, 2) via the explicit bump exponential
exp(1 + 1/((t-2)^2 - 1)); all derivatives are closed-form, so the
derivative-bound constant K_chi and the zeta bounds are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def _dispatch(t, fill_hi: float, mid_fn):
    """Evaluate a chi-branch function: 0 on [0,1], fill_hi on [2,inf)."""
    t = np.asarray(t, dtype=np.float64)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.zeros_like(t)
    hi = t >= 2.0
    mid = (t > 1.0) & ~hi
    out[hi] = fill_hi
    out[mid] = mid_fn(t[mid] - 2.0)
    return float(out[0]) if scalar else out


def chi(t):
    """Smooth nondecreasing step: 0 on [0,1], 1 on [2,inf)."""
    return _dispatch(t, 1.0, lambda g: np.exp(1.0 + 1.0 / (g * g - 1.0)))


def chi_d1(t):
    """First derivative of chi (closed form)."""

    def mid(g):
        D = g * g - 1.0
        return np.exp(1.0 + 1.0 / D) * (-2.0 * g / D**2)

    return _dispatch(t, 0.0, mid)


def chi_d2(t):
    """Second derivative of chi (closed form)."""

    def mid(g):
        D = g * g - 1.0
        f1 = -2.0 * g / D**2
        f2 = (6.0 * g * g + 2.0) / D**3
        return np.exp(1.0 + 1.0 / D) * (f2 + f1 * f1)

    return _dispatch(t, 0.0, mid)


@lru_cache(maxsize=1)
def k_chi() -> float:
    """max{2 ||chi'||_inf, 4 ||chi''||_inf}, by grid maximization on [1, 2].

    The grid is refined until the value is stable to 1e-6 relative.
    """
    prev = None
    m = 4001
    while True:
        t = np.linspace(1.0, 2.0, m)[1:-1]
        val = max(2.0 * np.max(np.abs(chi_d1(t))), 4.0 * np.max(np.abs(chi_d2(t))))
        if prev is not None and abs(val - prev) <= 1e-6 * abs(val):
            return float(val)
        prev = val
        m = 2 * m - 1


def zeta(eps: float, s):
    """Two-sided cutoff: 1 on [eps, 1/eps], supported in [eps/2, 2/eps]."""
    _check_eps(eps)
    s = np.asarray(s, dtype=np.float64)
    inner = s <= 1.0
    out = np.where(inner, chi(2.0 * s / eps), 1.0 - chi(eps * s))
    return out if out.ndim else float(out)


def zeta_d1(eps: float, s):
    _check_eps(eps)
    s = np.asarray(s, dtype=np.float64)
    inner = s <= 1.0
    out = np.where(inner, (2.0 / eps) * chi_d1(2.0 * s / eps), -eps * chi_d1(eps * s))
    return out if out.ndim else float(out)


def zeta_d2(eps: float, s):
    _check_eps(eps)
    s = np.asarray(s, dtype=np.float64)
    inner = s <= 1.0
    out = np.where(
        inner, (4.0 / eps**2) * chi_d2(2.0 * s / eps), -(eps**2) * chi_d2(eps * s)
    )
    return out if out.ndim else float(out)


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 1.0:
        raise ValueError("cutoff scale eps must lie in (0, 1)")


@dataclass(frozen=True)
class CutoffFamily:
    """Bundles chi, its derivative-bound constant, and the zeta evaluators."""

    K_chi: float

    chi = staticmethod(chi)
    chi_d1 = staticmethod(chi_d1)
    chi_d2 = staticmethod(chi_d2)
    zeta = staticmethod(zeta)
    zeta_d1 = staticmethod(zeta_d1)
    zeta_d2 = staticmethod(zeta_d2)


def default_cutoffs() -> CutoffFamily:
    return CutoffFamily(K_chi=k_chi())
