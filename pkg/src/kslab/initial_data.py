"""Generators and validators for admissible initial data.

All families produce continuous radial densities squeezed below the singular
steady state, regularized at the origin by a flat cap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kslab.grids import (
    DeviationField,
    Mesh,
    RadialDensity,
    u_star,
    u_to_w,
)


@dataclass(frozen=True)
class InitialDatumSpec:
    """Declarative description of one initial datum, for configs and manifests."""

    n: int
    family: str  # pinched_chandrasekhar | scaled_chandrasekhar | compact_bump
    theta: float | None = None
    C: float | None = None
    a: float | None = None
    cap: float | None = None

    def build(self, mesh: Mesh) -> RadialDensity:
        if self.family == "pinched_chandrasekhar":
            return make_pinched(self.n, self.theta, self.C, mesh, cap=self.cap)
        if self.family == "scaled_chandrasekhar":
            return make_scaled(self.n, self.a, self.cap, mesh)
        if self.family == "compact_bump":
            return make_compact_bump(self.n, self.a, mesh)
        raise ValueError(f"unknown initial-datum family {self.family!r}")


def _uncapped_pinched(n: int, theta: float, C: float, r: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = 2.0 * (n - 2) / r**2 - C * r ** (-2.0 - theta)
    vals[r == 0.0] = np.inf
    return np.maximum(vals, 0.0)


def minimal_pinched_cap(n: int, theta: float, C: float) -> float:
    """Smallest flat cap keeping the pinched tail bound intact for r >= 1.

    The cap must dominate the uncapped profile everywhere on [1, inf); its
    supremum there is found by a dense grid scan (the profile is unimodal).
    """
    r = np.geomspace(1.0, 100.0, 20001)
    return float(np.max(_uncapped_pinched(n, theta, C, r)))


def make_pinched(
    n: int, theta: float, C: float, mesh: Mesh, cap: float | None = None
) -> RadialDensity:
    """Steady state minus an algebraic tail deficit C r^(-2-theta), capped.

    The datum equals max(0, u_star - C r^(-2-theta)) wherever that stays below
    the cap; it satisfies both the admissibility bound and the tail pinching
    condition on r >= 1 provided the cap is at least minimal_pinched_cap.
    """
    if theta <= 0.0 or C <= 0.0:
        raise ValueError("tail exponent theta and amplitude C must be positive")
    min_cap = minimal_pinched_cap(n, theta, C)
    if cap is None:
        cap = 2.0 * min_cap
    if cap < min_cap:
        raise ValueError(
            f"cap {cap:g} breaks the tail condition at r >= 1; need cap >= {min_cap:g}"
        )
    vals = np.minimum(cap, _uncapped_pinched(n, theta, C, mesh.r))
    return RadialDensity(mesh=mesh, values=vals)


def make_scaled(n: int, a: float, cap: float, mesh: Mesh) -> RadialDensity:
    """min(cap, a * u_star): a uniform concentration fraction of the steady state."""
    if not 0.0 <= a <= 1.0:
        raise ValueError("amplitude fraction a must lie in [0, 1]")
    if cap <= 0.0:
        raise ValueError("cap must be positive")
    r = mesh.r
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(r > 0.0, a * 2.0 * (n - 2) / np.maximum(r, 1e-300) ** 2, np.inf)
    if a == 0.0:
        vals = np.zeros_like(r)
    return RadialDensity(mesh=mesh, values=np.minimum(cap, vals))


def make_compact_bump(n: int, a: float, mesh: Mesh, r_outer: float | None = None) -> RadialDensity:
    """A smooth compactly supported bump under the steady state.

    Height a * u_star(r_mid) at the midpoint of (0, r_outer), vanishing
    outside; stays admissible because the profile is capped by a * u_star.
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError("amplitude fraction a must lie in [0, 1]")
    r = mesh.r
    if a == 0.0:
        return RadialDensity(mesh=mesh, values=np.zeros_like(r))
    if r_outer is None:
        r_outer = 0.5 * float(r[-1])
    x = r / r_outer
    bump = np.zeros_like(r)
    inside = (x > 0.0) & (x < 1.0)
    bump[inside] = np.exp(1.0 - 1.0 / (1.0 - (2.0 * x[inside] - 1.0) ** 2))
    peak = u_star(n, 0.5 * r_outer)
    with np.errstate(divide="ignore", invalid="ignore"):
        ceiling = 2.0 * (n - 2) / np.maximum(r, 1e-300) ** 2
    return RadialDensity(mesh=mesh, values=np.minimum(a * ceiling, a * peak * bump))


@dataclass(frozen=True)
class InitReport:
    """Outcome of the admissibility check 0 <= u0 <= u_star at r > 0."""

    passed: bool
    max_violation: float
    where_r: float


def check_init(u0: RadialDensity) -> InitReport:
    """Verify 0 <= u0 <= u_star at every node r > 0; report the worst violation."""
    r = u0.r[1:]
    vals = u0.values[1:]
    ustar = u_star(u0.n, r)
    over = vals - ustar
    under = -vals
    viol = np.maximum(over, under)
    k = int(np.argmax(viol))
    worst = float(viol[k])
    return InitReport(passed=worst <= 0.0, max_violation=max(worst, 0.0), where_r=float(r[k]))


def less_concentrated(u0: RadialDensity, ref: RadialDensity, rtol: float = 1e-12) -> bool:
    """Partial order by cumulated-mass comparison over all centered balls."""
    if not np.array_equal(u0.mesh.nodes, ref.mesh.nodes):
        raise ValueError("operands must share a mesh")
    w0 = u_to_w(u0).values
    wr = u_to_w(ref).values
    tol = rtol * max(float(wr[-1]), 1.0)
    return bool(np.all(w0 <= wr + tol))


def alpha_of(n: int, theta: float) -> float:
    """Growth exponent (n-2-theta)/n for the tail-pinched family."""
    if theta >= n - 2:
        raise ValueError("need theta < n - 2")
    return (n - 2 - theta) / n


def sup_growth(phi0: DeviationField, alpha: float) -> float:
    """sup over grid nodes s >= 1 of phi(s, 0) / s^alpha."""
    s = phi0.mesh.nodes
    mask = s >= 1.0
    if not np.any(mask):
        return 0.0
    return float(np.max(phi0.values[mask] / s[mask] ** alpha))
