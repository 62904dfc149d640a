"""Closed-form sub/supersolutions, their ODE ingredients, and residual checks.

Three certificate families:

  * an exponentially growing power supersolution of the deviation equation,
    valid on s >= 1 (any n >= 3);
  * an oscillating separated subsolution driven by a logistic ODE, valid on
    a cos-positive window [s1, s2] (3 <= n <= 9 only);
  * a rational upper barrier for the mass function on [0, s_star], driven by
    a saturating scalar ODE.

Residuals are evaluated from analytic derivatives; the comparison lemmas
prescribe their signs, which `residual` verifies numerically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from kslab.cutoffs import k_chi
from kslab.grids import Mesh


@dataclass(frozen=True)
class BarrierCertificate:
    """A closed-form candidate with parameters, validity region and evaluators.

    kind is one of supersolution_lemma3 | subsolution_lemma21 |
    upper_barrier_lemma22; `sign` is the prescribed residual sign (+1 for
    supersolutions, -1 for subsolutions) in `equation` form.
    """

    kind: str
    n: int
    equation: str  # form_0w | form_0p
    sign: int
    s_range: tuple
    t_range: tuple
    params: dict
    _value: object = None
    _ds: object = None
    _dss: object = None
    _dt: object = None

    def value(self, s, t):
        return self._value(np.asarray(s, float), np.asarray(t, float))

    def ds(self, s, t):
        return self._ds(np.asarray(s, float), np.asarray(t, float))

    def dss(self, s, t):
        return self._dss(np.asarray(s, float), np.asarray(t, float))

    def dt(self, s, t):
        return self._dt(np.asarray(s, float), np.asarray(t, float))

    def report(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "equation": self.equation,
            "sign": self.sign,
            "s_range": list(self.s_range),
            "t_range": list(self.t_range),
            "params": self.params,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.report(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# exponential power supersolution on s >= 1

def lemma3_super(n: int, alpha: float, c1_fit: float = 2.0) -> BarrierCertificate:
    """Supersolution c2 e^(lambda t) s^alpha with lambda = 2 n alpha + 2(n-2).

    c1_fit is the measured growth constant of the initial deviation; the
    prefactor is max(c1_fit, 2) so the barrier dominates at s = 1.
    """
    if not 0.0 < alpha < 1.0 - 2.0 / n:
        raise ValueError("growth exponent alpha must lie in (0, 1 - 2/n)")
    lam = 2.0 * n * alpha + 2.0 * (n - 2)
    c2 = max(c1_fit, 2.0)

    def val(s, t):
        return c2 * np.exp(lam * t) * s**alpha

    def ds(s, t):
        return alpha * val(s, t) / s

    def dss(s, t):
        return alpha * (alpha - 1.0) * val(s, t) / s**2

    def dt(s, t):
        return lam * val(s, t)

    return BarrierCertificate(
        kind="supersolution_lemma3",
        n=n,
        equation="form_0p",
        sign=+1,
        s_range=(1.0, np.inf),
        t_range=(0.0, np.inf),
        params={"alpha": alpha, "lambda": lam, "c2": c2},
        _value=val,
        _ds=ds,
        _dss=dss,
        _dt=dt,
    )


# ---------------------------------------------------------------------------
# oscillating subsolution (low dimensions)

@dataclass(frozen=True)
class Lemma21Params:
    """Constants of the oscillating subsolution construction."""

    n: int
    s0: float
    omega: float
    mu: float
    k0: int
    s1: float
    s2: float
    s_star: float
    c1: float
    c2: float
    c3: float

    def __post_init__(self) -> None:
        if not 3 <= self.n <= 9:
            raise ValueError("oscillating subsolutions need 3 <= n <= 9")
        if self.c1 <= 0.0:
            raise ValueError("repulsion rate c1 must be positive")
        if not self.s0 < self.s1 < self.s_star < self.s2:
            raise ValueError("window ordering s0 < s1 < s_star < s2 violated")


def omega_sup(n: int) -> float:
    """Supremum of admissible oscillation frequencies: sqrt((n-2)(10-n))/(2n)."""
    if not 3 <= n <= 9:
        raise ValueError("oscillation requires 3 <= n <= 9")
    return math.sqrt((n - 2) * (10 - n)) / (2 * n)


def lemma21_params(n: int, s0: float, omega_fraction: float = 0.9) -> Lemma21Params:
    """Pick the oscillation frequency and the smallest admissible window."""
    if not 0.0 < omega_fraction < 1.0:
        raise ValueError("omega_fraction must lie in (0, 1)")
    if s0 <= 0.0:
        raise ValueError("s0 must be positive")
    omega = omega_fraction * omega_sup(n)
    mu = (n - 2) / (2.0 * n)
    c1 = n * n * (mu * mu - mu - omega * omega) + 2.0 * n * mu + 2.0 * (n - 2)
    k0 = 1
    while math.exp((4 * k0 - 1) * math.pi / (2.0 * omega)) <= s0:
        k0 += 1
    s1 = math.exp((4 * k0 - 1) * math.pi / (2.0 * omega))
    s2 = math.exp((4 * k0 + 1) * math.pi / (2.0 * omega))
    s_star = math.exp(2 * k0 * math.pi / omega)
    c2 = s2 ** (2.0 / n)
    c3 = n * (mu + omega) * s1 ** (-mu)
    return Lemma21Params(
        n=n, s0=s0, omega=omega, mu=mu, k0=k0,
        s1=s1, s2=s2, s_star=s_star, c1=c1, c2=c2, c3=c3,
    )


def bernoulli_y(c1: float, c2: float, c3: float, y0: float, t) :
    """Closed-form logistic solution of y' = (c1/c2) y - (c3/c2) y^2, y(1) = y0."""
    t = np.asarray(t, dtype=np.float64)
    E = np.exp((c1 / c2) * (t - 1.0))
    out = c1 * y0 * E / (c1 + c3 * y0 * (E - 1.0))
    return out if out.ndim else float(out)


def bernoulli_y_rk4(c1: float, c2: float, c3: float, y0: float, t_end: float, dt: float = 1e-3):
    """Independent fixed-step 4th-order integration of the logistic ODE.

    Returns (times, values) from t = 1 to t_end; serves as the oracle for
    the closed form, never the other way around.
    """
    def f(y):
        return (c1 / c2) * y - (c3 / c2) * y * y

    n_steps = max(1, int(math.ceil((t_end - 1.0) / dt)))
    h = (t_end - 1.0) / n_steps
    ts = np.empty(n_steps + 1)
    ys = np.empty(n_steps + 1)
    ts[0], ys[0] = 1.0, y0
    y = y0
    for k in range(n_steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        ts[k + 1] = 1.0 + (k + 1) * h
        ys[k + 1] = y
    return ts, ys


def lemma21_sub(params: Lemma21Params, y0: float) -> BarrierCertificate:
    """Subsolution y(t) s^mu cos(omega ln s) on [s1, s2] x [1, inf)."""
    if y0 <= 0.0:
        raise ValueError("initial logistic value must be positive")
    c1, c2, c3 = params.c1, params.c2, params.c3
    mu, omega = params.mu, params.omega
    n = params.n

    def y(t):
        return bernoulli_y(c1, c2, c3, y0, t)

    def yprime(t):
        yt = y(t)
        return (c1 / c2) * yt - (c3 / c2) * yt * yt

    def val(s, t):
        return y(t) * s**mu * np.cos(omega * np.log(s))

    def ds(s, t):
        ls = np.log(s)
        return y(t) * s ** (mu - 1.0) * (mu * np.cos(omega * ls) - omega * np.sin(omega * ls))

    def dss(s, t):
        ls = np.log(s)
        return y(t) * s ** (mu - 2.0) * (
            (mu * mu - mu - omega * omega) * np.cos(omega * ls)
            - (2.0 * mu - 1.0) * omega * np.sin(omega * ls)
        )

    def dt(s, t):
        return yprime(t) * s**mu * np.cos(omega * np.log(s))

    return BarrierCertificate(
        kind="subsolution_lemma21",
        n=n,
        equation="form_0p",
        sign=-1,
        s_range=(params.s1, params.s2),
        t_range=(1.0, np.inf),
        params={**asdict(params), "y0": y0},
        _value=val,
        _ds=ds,
        _dss=dss,
        _dt=dt,
    )


# ---------------------------------------------------------------------------
# rational upper barrier for the mass function

@dataclass(frozen=True)
class Lemma22Params:
    """Inputs of the rational barrier 2s/(s^(2/n) + b(t))."""

    n: int
    s_star: float
    B: float
    b0: float
    t0: float
    M: float | None = None  # measured window deficit, when available

    def __post_init__(self) -> None:
        if self.B <= 0.0:
            raise ValueError("B must be positive")
        if not 0.0 < self.b0 < 2.0 * self.B:
            raise ValueError("need 0 < b0 < 2B")
        if self.M is not None and 4.0 * self.B * self.s_star ** (1.0 - 4.0 / self.n) > self.M:
            raise ValueError("B too large for the measured deficit: need 4 B s_star^(1-4/n) <= M")


def b_solve(params: Lemma22Params, t_end: float, dt: float = 1e-3):
    """4th-order fixed-step integration of the saturating ODE for b(t).

    b' = 2b/(s_star^(2/n) + b) * (2B - b)/(2B), b(t0) = b0; b increases
    monotonically to 2B.
    """
    n, B, s_star = params.n, params.B, params.s_star
    spow = s_star ** (2.0 / n)

    def f(b):
        return 2.0 * b / (spow + b) * (2.0 * B - b) / (2.0 * B)

    n_steps = max(1, int(math.ceil((t_end - params.t0) / dt)))
    h = (t_end - params.t0) / n_steps
    ts = np.empty(n_steps + 1)
    bs = np.empty(n_steps + 1)
    ts[0], bs[0] = params.t0, params.b0
    b = params.b0
    for k in range(n_steps):
        k1 = f(b)
        k2 = f(b + 0.5 * h * k1)
        k3 = f(b + 0.5 * h * k2)
        k4 = f(b + h * k3)
        b = b + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        ts[k + 1] = params.t0 + (k + 1) * h
        bs[k + 1] = b
    return ts, bs


def lemma22_barrier(params: Lemma22Params, t_end: float, dt_ode: float = 1e-3) -> BarrierCertificate:
    """Upper barrier 2s/(s^(2/n) + b(t)) on [0, s_star] x [t0, t_end]."""
    n = params.n
    ts, bs = b_solve(params, t_end, dt=dt_ode)
    spow_star = params.s_star ** (2.0 / n)
    B = params.B

    def b_of(t):
        return np.interp(np.asarray(t, float), ts, bs)

    def bprime_of(t):
        b = b_of(t)
        return 2.0 * b / (spow_star + b) * (2.0 * B - b) / (2.0 * B)

    def val(s, t):
        return 2.0 * s / (s ** (2.0 / n) + b_of(t))

    def ds(s, t):
        b = b_of(t)
        den = (s ** (2.0 / n) + b) ** 2
        return ((2.0 - 4.0 / n) * s ** (2.0 / n) + 2.0 * b) / den

    def dss(s, t):
        b = b_of(t)
        den = (s ** (2.0 / n) + b) ** 3
        return (
            -(4.0 / n) * (1.0 - 2.0 / n) * s ** (-1.0 + 4.0 / n)
            - (4.0 / n + 8.0 / n**2) * b * s ** (-1.0 + 2.0 / n)
        ) / den

    def dt(s, t):
        b = b_of(t)
        return -2.0 * bprime_of(t) * s / (s ** (2.0 / n) + b) ** 2

    return BarrierCertificate(
        kind="upper_barrier_lemma22",
        n=n,
        equation="form_0w",
        sign=+1,
        s_range=(0.0, params.s_star),
        t_range=(params.t0, t_end),
        params={
            "s_star": params.s_star,
            "B": params.B,
            "b0": params.b0,
            "t0": params.t0,
            "M": params.M,
            "b_final": float(bs[-1]),
        },
        _value=val,
        _ds=ds,
        _dss=dss,
        _dt=dt,
    )


# ---------------------------------------------------------------------------
# residual certification

@dataclass(frozen=True)
class ResidualField:
    """Signed residuals of a candidate on a validity grid."""

    values: np.ndarray
    s: np.ndarray
    t: np.ndarray
    min: float
    max: float
    scale: float


def residual(cert: BarrierCertificate, equation: str, s_grid, t_grid) -> ResidualField:
    """Evaluate candidate_t - RHS(candidate) on a grid of the validity region.

    form_0w: N[q] = q_t - n^2 s^(2-2/n) q_ss - n q q_s
    form_0p: N[q] = q_t - n^2 s^(2-2/n) q_ss - 2n s^(1-2/n) q_s
                    - 2(n-2) s^(-2/n) q + n q q_s
    """
    if equation not in ("form_0w", "form_0p"):
        raise ValueError(f"unknown equation form {equation!r}")
    s = np.asarray(s_grid, dtype=np.float64)
    t = np.asarray(t_grid, dtype=np.float64)
    if np.any(s < cert.s_range[0]) or np.any(s > cert.s_range[1]):
        raise ValueError("s grid leaves the certificate's validity region")
    if np.any(t < cert.t_range[0]) or np.any(t > cert.t_range[1]):
        raise ValueError("t grid leaves the certificate's validity region")
    n = cert.n
    S, T = np.meshgrid(s, t, indexing="ij")
    q = cert.value(S, T)
    qs = cert.ds(S, T)
    qss = cert.dss(S, T)
    qt = cert.dt(S, T)
    diff = n * n * S ** (2.0 - 2.0 / n) * qss
    if equation == "form_0w":
        res = qt - diff - n * q * qs
    else:
        res = (
            qt
            - diff
            - 2.0 * n * S ** (1.0 - 2.0 / n) * qs
            - 2.0 * (n - 2) * S ** (-2.0 / n) * q
            + n * q * qs
        )
    scale = float(np.max(np.abs(qt)) + np.max(np.abs(diff)))
    return ResidualField(
        values=res, s=s, t=t, min=float(np.min(res)), max=float(np.max(res)), scale=scale
    )


# ---------------------------------------------------------------------------
# absorbing-set constant

def absorbing_constant(n: int, B: float, K_chi: float | None = None) -> float:
    """Dimension-level sup-norm bound of the absorbing set (3 <= n <= 9).

    Evaluates the two Bernstein-argument constants and combines them as
    sqrt((8/n^2) max{c1, c2} max{2/B, 2}).
    """
    if not 3 <= n <= 9:
        raise ValueError("the absorbing-set constant is defined for 3 <= n <= 9")
    if B <= 0.0:
        raise ValueError("B must be positive")
    K = k_chi() if K_chi is None else K_chi
    c1 = (
        14.0 * n**2 * (1.0 + 4.0 * K**2) / B
        + 4.0 * n**2 * (2.0 - 2.0 / n) ** 2 / B
        + 64.0 / B**3
        + 4.0 * n**2 * K * (3.0 + K) / B
        + 4.0 * n * (1.0 + 2.0 * K) / B**2
        + 2.0 * K / B
    )
    c2 = (
        14.0 * n**2 * (1.0 + 2.0 ** (4.0 - 2.0 / n) * K**2)
        + 4.0 * n**2 * (2.0 - 2.0 / n) ** 2
        + 64.0
        + 2.0 * n**2 * (2.0 - 2.0 / n) * (1.0 + 4.0 * K)
        + 2.0 ** (4.0 - 2.0 / n) * n**2 * K * (2.0 + K)
        + 2.0 * K
    )
    return math.sqrt(8.0 / n**2 * max(c1, c2) * max(2.0 / B, 2.0))
