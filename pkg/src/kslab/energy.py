"""Weighted Lyapunov functionals of the deviation and their parameter algebra.

The functional phi_eps(t) = int s^-gamma zeta_eps^2 phi^p ds decreases along
solutions in dimensions n >= 10 once the exponents (p, gamma) are admissible.
This module computes the functional, its exact six-term derivative identity,
the Hardy-type weighted inequality behind the dissipation estimate, the
cumulative dissipation integral, and the cutoff boundary-layer errors, plus
the scan that selects admissible exponents from a tail-pinching rate theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from kslab.cutoffs import zeta, zeta_d1, zeta_d2
from kslab.grids import DeviationField, gradient_nonuniform


@dataclass(frozen=True)
class EnergyParams:
    """Exponents of the weighted functional; eps = 0 means the cutoff-free limit."""

    n: int
    p: float
    gamma: float
    alpha: float
    eps: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ValueError("dimension n must be >= 3")
        if self.p <= 1.0:
            raise ValueError("power p must exceed 1")
        if not 0.0 <= self.eps < 1.0:
            raise ValueError("cutoff scale eps must lie in [0, 1)")

    def flags(self) -> dict:
        """The five admissibility conditions, each individually testable."""
        n, p, g = self.n, self.p, self.gamma
        out = {
            "gamma_weight": g > 1.0 - 2.0 / n,
            "p_gt_1": p > 1.0,
            "flag_42_1": p > n * g / (n - 2) - 1.0,
            "flag_44_01": p * self.alpha < g - 1.0,
        }
        if n >= 10:
            pm, pp = p_bounds(n, g)
            out["flag_44_1"] = pm - 1e-12 <= p <= pp + 1e-12
        else:
            out["flag_44_1"] = False
        return out

    def admissible(self) -> bool:
        return all(self.flags().values())


def p_bounds(n: int, gamma: float) -> tuple:
    """Roots p_(-+) = n/4 (gamma - 1 + 2/n)(1 -+ sqrt((n-10)/(n-2))).

    The quadratic in p controlling the sign of the dominant derivative terms
    is nonpositive exactly between these roots; they collapse at n = 10.
    """
    if n < 10:
        raise ValueError("real roots require n >= 10 (negative radicand below)")
    if gamma <= 1.0 - 2.0 / n:
        raise ValueError("need gamma > 1 - 2/n")
    root = math.sqrt((n - 10) / (n - 2))
    base = n / 4.0 * (gamma - 1.0 + 2.0 / n)
    return base * (1.0 - root), base * (1.0 + root)


def theta_threshold(n: int) -> float:
    """Critical tail-pinching rate (n - 2 + sqrt((n-2)(n-10)))/2."""
    if n < 10:
        raise ValueError("the threshold is defined for n >= 10")
    return (n - 2 + math.sqrt((n - 2) * (n - 10))) / 2.0


GAMMA_SCAN_STEP = 0.5
GAMMA_SCAN_CAP = 1e3


def select_params(n: int, theta: float) -> EnergyParams:
    """Scan gamma upward until p = p_+(gamma) satisfies all admissibility flags.

    Requires theta strictly between the critical rate and n - 2; the scan is
    guaranteed to terminate because every flag holds for all large gamma.
    """
    thr = theta_threshold(n)
    if not thr < theta < n - 2:
        raise ValueError(
            f"tail rate theta must lie in ({thr:g}, {n - 2:g}); got {theta:g}"
        )
    alpha = (n - 2 - theta) / n
    gamma = max(2.0, 1.0 - 2.0 / n + 0.1)
    while gamma <= GAMMA_SCAN_CAP:
        p = p_bounds(n, gamma)[1]
        params = EnergyParams(n=n, p=p, gamma=gamma, alpha=alpha) if p > 1.0 else None
        if params is not None and params.admissible():
            return params
        gamma += GAMMA_SCAN_STEP
    raise RuntimeError(
        "no admissible gamma below the scan cap; this contradicts the large-gamma "
        "asymptotics and indicates a bug"
    )


# ---------------------------------------------------------------------------
# quadrature helpers (s = 0 node excluded: the weights are singular there)

def _interior(phi: DeviationField):
    s = phi.mesh.nodes[1:]
    return s, phi.values[1:]


def _weight(params: EnergyParams, s: np.ndarray) -> np.ndarray:
    if params.eps > 0.0:
        return zeta(params.eps, s) ** 2
    return np.ones_like(s)


def phi_functional(phi: DeviationField, params: EnergyParams) -> float:
    """int s^-gamma zeta_eps^2 phi^p ds by trapezoid quadrature on s > 0."""
    s, vals = _interior(phi)
    integrand = s ** (-params.gamma) * _weight(params, s) * np.abs(vals) ** params.p
    return float(np.trapezoid(integrand, s))


@dataclass(frozen=True)
class IdentityRecord:
    """Two-sided check of the derivative identity for phi_eps at one time."""

    t: float
    lhs: float      # centered time difference of phi_eps / p
    terms: tuple    # the six quadratures, signed
    rhs_sum: float

    @property
    def mismatch(self) -> float:
        floor = 1e-30
        return abs(self.lhs - self.rhs_sum) / max(abs(self.lhs), abs(self.rhs_sum), floor)


# The six terms are large and cancel to a small rate, so they need far more
# quadrature accuracy than the functional itself: the integrands are sampled
# from a cubic spline in r on a uniformly refined grid before integrating.
IDENTITY_QUADRATURE_REFINE = 64


def _identity_terms(phi: DeviationField, params: EnergyParams) -> tuple:
    """The six signed quadratures of the phi_eps' decomposition at one instant."""
    from scipy.interpolate import CubicSpline

    n, p, g, eps = params.n, params.p, params.gamma, params.eps
    if eps <= 0.0:
        raise ValueError("the derivative identity needs a positive cutoff scale")
    r_nodes = phi.mesh.r
    spline = CubicSpline(r_nodes, phi.values)
    r = np.linspace(r_nodes[1], r_nodes[-1],
                    IDENTITY_QUADRATURE_REFINE * r_nodes.size + 1)
    s = r**n
    vals = np.abs(spline(r))
    phis = spline(r, 1) / (n * r ** (n - 1))
    ze = zeta(eps, s)
    ze1 = zeta_d1(eps, s)
    ze2 = zeta_d2(eps, s)
    jac = n * r ** (n - 1)

    def q(integrand):
        return float(np.trapezoid(integrand * jac, r))

    t1 = -(n * n) * (p - 1.0) * q(s ** (2.0 - 2.0 / n - g) * ze**2 * vals ** (p - 2.0) * phis**2)
    coef2 = (n / p) * (n * g - 2.0 * n + 4.0) * (g - 1.0 + 2.0 / n) + 2.0 * (n - 2)
    t2 = coef2 * q(s ** (-2.0 / n - g) * ze**2 * vals**p)
    t3 = -(n * g) / (p + 1.0) * q(s ** (-g - 1.0) * ze**2 * vals ** (p + 1.0))
    t4 = -(4.0 * n / p) * (n * g - 2.0 * n + 3.0) * q(s ** (1.0 - 2.0 / n - g) * ze * ze1 * vals**p)
    t5 = (2.0 * n * n / p) * q(s ** (2.0 - 2.0 / n - g) * (ze * ze2 + ze1**2) * vals**p)
    t6 = (2.0 * n) / (p + 1.0) * q(s ** (-g) * ze * ze1 * vals ** (p + 1.0))
    return (t1, t2, t3, t4, t5, t6)


def identity_4_1(trajectory, params: EnergyParams, t: float) -> IdentityRecord:
    """Check phi_eps'(t)/p against its six-term decomposition at a snapshot time.

    The left side is the centered difference of phi_eps/p over the two
    neighboring stored snapshots; the right side re-derives the same rate from
    the equation.  Agreement certifies both the stepping and the quadratures.
    """
    from kslab.grids import deviation  # local import avoids a cycle at module load

    times = trajectory.times
    k = int(np.argmin(np.abs(np.asarray(times) - t)))
    if k == 0 or k == len(times) - 1:
        raise ValueError("centered differencing needs interior snapshot times")
    prev_phi = deviation(trajectory.snapshots[k - 1])
    here_phi = deviation(trajectory.snapshots[k])
    next_phi = deviation(trajectory.snapshots[k + 1])
    dt2 = times[k + 1] - times[k - 1]
    lhs = (phi_functional(next_phi, params) - phi_functional(prev_phi, params)) / (
        params.p * dt2
    )
    terms = _identity_terms(here_phi, params)
    return IdentityRecord(t=times[k], lhs=lhs, terms=terms, rhs_sum=float(sum(terms)))


# ---------------------------------------------------------------------------
# Hardy machinery

@dataclass(frozen=True)
class HardyRecord:
    lhs: float
    rhs: float
    holds: bool


def hardy_check(s: np.ndarray, psi: np.ndarray, beta: float) -> HardyRecord:
    """int s^-beta psi^2 <= 4/(beta-1)^2 int s^(2-beta) psi_s^2 for psi
    vanishing near 0 and infinity."""
    if beta <= 1.0:
        raise ValueError("the weighted inequality needs beta > 1")
    s = np.asarray(s, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    if s[0] <= 0.0:
        raise ValueError("support must stay away from s = 0")
    psis = gradient_nonuniform(s, psi)
    lhs = float(np.trapezoid(s ** (-beta) * psi**2, s))
    rhs = float(4.0 / (beta - 1.0) ** 2 * np.trapezoid(s ** (2.0 - beta) * psis**2, s))
    return HardyRecord(lhs=lhs, rhs=rhs, holds=lhs <= rhs * (1.0 + 1e-6))


def hardy_bound_41(phi: DeviationField, params: EnergyParams, eps: float) -> HardyRecord:
    """Weighted bound on int s^(-2/n-gamma) zeta^2 phi^p with the three-term
    right side produced by the Hardy inequality applied to zeta phi^(p/2)."""
    n, p, g = params.n, params.p, params.gamma
    s, vals = _interior(phi)
    vals = np.abs(vals)
    ze = zeta(eps, s)
    ze1 = zeta_d1(eps, s)
    ze2 = zeta_d2(eps, s)
    phis = gradient_nonuniform(phi.mesh.nodes, phi.values)[1:]

    def q(integrand):
        return float(np.trapezoid(integrand, s))

    lhs = q(s ** (-2.0 / n - g) * ze**2 * vals**p)
    pref = 1.0 / (g - 1.0 + 2.0 / n) ** 2
    rhs = pref * (
        p * p * q(s ** (2.0 - 2.0 / n - g) * ze**2 * vals ** (p - 2.0) * phis**2)
        + 4.0 * (g - 2.0 + 2.0 / n) * q(s ** (1.0 - 2.0 / n - g) * ze * ze1 * vals**p)
        - 4.0 * q(s ** (2.0 - 2.0 / n - g) * ze * ze2 * vals**p)
    )
    return HardyRecord(lhs=lhs, rhs=rhs, holds=lhs <= rhs * (1.0 + 1e-6))


# ---------------------------------------------------------------------------
# dissipation and boundary-layer errors

def dissipation_integral(trajectory, params: EnergyParams):
    """Running value of the double integral of s^(-gamma-1) phi^(p+1).

    Returns (times, cumulative values); time quadrature is trapezoidal over
    the stored snapshots.  Finite limits certify the dissipation estimate.
    """
    from kslab.grids import deviation

    g, p = params.gamma, params.p
    rates = []
    for snap in trajectory.snapshots:
        s, vals = _interior(deviation(snap))
        rates.append(float(np.trapezoid(s ** (-g - 1.0) * np.abs(vals) ** (p + 1.0), s)))
    times = np.asarray(trajectory.times)
    rates = np.asarray(rates)
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (rates[1:] + rates[:-1]) * np.diff(times))))
    return times, cum


# (layer, weight exponent, derivative pattern, power of phi)
_LAYER_INTEGRALS = (
    ("inner", "1-2/n-gamma", "z*|z1|", "p"),
    ("inner", "2-2/n-gamma", "z1^2", "p"),
    ("inner", "2-2/n-gamma", "z*|z2|", "p"),
    ("inner", "-gamma", "z*|z1|", "p+1"),
    ("outer", "1-2/n-gamma", "z*|z1|", "p"),
    ("outer", "2-2/n-gamma", "z1^2", "p"),
    ("outer", "2-2/n-gamma", "z*|z2|", "p"),
)


def cutoff_error_decay(trajectory, params: EnergyParams, eps_seq, T: float):
    """Boundary-layer error integrals for each eps, as a list of row dicts.

    Four integrals live on the inner layer (eps/2, eps) and three on the
    outer layer (1/eps, 2/eps); each must decay to 0 along eps -> 0 at the
    power-law rates implied by the tail bounds.
    """
    from kslab.grids import deviation

    n, p, g = params.n, params.p, params.gamma
    times = np.asarray(trajectory.times)
    keep = times <= T + 1e-12
    times = times[keep]
    snaps = [trajectory.snapshots[i] for i in np.nonzero(keep)[0]]
    rows = []
    for eps in eps_seq:
        vals = {key: [] for key in _LAYER_INTEGRALS}
        for snap in snaps:
            s, phiv = _interior(deviation(snap))
            phiv = np.abs(phiv)
            z = zeta(eps, s)
            z1 = zeta_d1(eps, s)
            z2 = zeta_d2(eps, s)
            masks = {
                "inner": (s >= eps / 2.0) & (s <= eps),
                "outer": (s >= 1.0 / eps) & (s <= 2.0 / eps),
            }
            weights = {
                "1-2/n-gamma": s ** (1.0 - 2.0 / n - g),
                "2-2/n-gamma": s ** (2.0 - 2.0 / n - g),
                "-gamma": s ** (-g),
            }
            derivs = {"z*|z1|": z * np.abs(z1), "z1^2": z1**2, "z*|z2|": z * np.abs(z2)}
            powers = {"p": phiv**p, "p+1": phiv ** (p + 1.0)}
            for key in _LAYER_INTEGRALS:
                layer, wkey, dkey, pkey = key
                m = masks[layer]
                if np.count_nonzero(m) < 2:
                    vals[key].append(0.0)
                    continue
                integrand = (weights[wkey] * derivs[dkey] * powers[pkey])[m]
                vals[key].append(float(np.trapezoid(integrand, s[m])))
        for key in _LAYER_INTEGRALS:
            series = np.asarray(vals[key])
            total = float(np.trapezoid(series, times)) if times.size > 1 else 0.0
            rows.append(
                {
                    "eps": float(eps),
                    "layer": key[0],
                    "weight": key[1],
                    "cutoff_factor": key[2],
                    "power": key[3],
                    "value": total,
                }
            )
    return rows


def layer_decay_exponents(params: EnergyParams) -> dict:
    """Analytic power-law rates of the boundary-layer integrals in eps."""
    n, p, g, a = params.n, params.p, params.gamma, params.alpha
    return {
        "inner": 1.0 - 2.0 / n - g + (1.0 - 2.0 / n) * p,
        "outer": -1.0 + 2.0 / n + g - p * a,
    }


def with_eps(params: EnergyParams, eps: float) -> EnergyParams:
    return replace(params, eps=eps)
