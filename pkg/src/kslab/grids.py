"""Meshes on the volume coordinate s = r^n, core field types, and transforms.

The cumulated radial mass w(s,t) of a radial density u is the solver's state;
phi = w_star - w is its deviation from the singular steady state.  All types
are immutable value objects; every operation here is pure.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

GRADINGS = ("uniform_in_r", "uniform_in_s", "log")


@dataclass(frozen=True)
class Mesh:
    """Strictly increasing s-nodes with nodes[0] = 0 and nodes[-1] = S_max."""

    n: int
    nodes: np.ndarray
    grading: str

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=np.float64)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("mesh needs at least two nodes")
        if nodes[0] != 0.0:
            raise ValueError("first node must be s = 0")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("nodes must be strictly increasing")
        nodes.setflags(write=False)

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def s_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def r(self) -> np.ndarray:
        return self.nodes ** (1.0 / self.n)

    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)

    def summary(self) -> dict:
        return {
            "n": self.n,
            "N": self.N,
            "S_max": self.s_max,
            "grading": self.grading,
        }


def build_mesh(n: int, S_max: float, N: int, grading: str = "uniform_in_r") -> Mesh:
    """Build an s-mesh of N cells on [0, S_max].

    uniform_in_r places s_j = (j*dr)^n with dr = S_max^(1/n)/N, concentrating
    nodes near the origin where the steady state is singular.
    """
    if n < 3 or int(n) != n:
        raise ValueError("dimension n must be an integer >= 3")
    if N < 2:
        raise ValueError("need N >= 2 cells")
    if not S_max > 0.0:
        raise ValueError("S_max must be positive")
    if grading == "uniform_in_r":
        dr = S_max ** (1.0 / n) / N
        nodes = (np.arange(N + 1) * dr) ** n
        nodes[-1] = S_max
    elif grading == "uniform_in_s":
        nodes = np.linspace(0.0, S_max, N + 1)
    elif grading == "log":
        # geometric spacing from S_max*1e-6 up to S_max, prepended with 0
        inner = np.geomspace(S_max * 1e-6, S_max, N)
        nodes = np.concatenate(([0.0], inner))
    else:
        raise ValueError(f"unknown grading {grading!r}")
    return Mesh(n=int(n), nodes=nodes, grading=grading)


def w_star(n: int, s) :
    """Cumulated mass of the singular steady state: 2 s^(1-2/n)."""
    s = np.asarray(s, dtype=np.float64)
    out = 2.0 * s ** (1.0 - 2.0 / n)
    return out if out.ndim else float(out)


def u_star(n: int, r):
    """The singular steady state 2(n-2)/r^2; undefined at r = 0."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r <= 0.0):
        raise ValueError("steady state is singular at r = 0")
    out = 2.0 * (n - 2) / r**2
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class RadialDensity:
    """Samples of a nonnegative radial density u on the mesh's r-grid."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.mesh.nodes.shape:
            raise ValueError("values must match the mesh nodes")
        if not np.all(np.isfinite(vals)):
            raise ValueError("density values must be finite")
        if np.any(vals < 0.0):
            raise ValueError("density values must be nonnegative")
        vals.setflags(write=False)

    @property
    def n(self) -> int:
        return self.mesh.n

    @property
    def r(self) -> np.ndarray:
        return self.mesh.r


@dataclass(frozen=True)
class MassFunction:
    """Cumulated radial mass w on the s-grid at one instant t.

    w(0) = 0 and w is nondecreasing for nonnegative densities.  The bound
    0 <= w <= w_star for admissible data is monitored downstream, never
    enforced here.
    """

    mesh: Mesh
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.mesh.nodes.shape:
            raise ValueError("values must match the mesh nodes")
        if vals[0] != 0.0:
            raise ValueError("w(0) must vanish")
        vals.setflags(write=False)

    @property
    def n(self) -> int:
        return self.mesh.n


@dataclass(frozen=True)
class DeviationField:
    """phi = w_star - w on the s-grid at one instant t."""

    mesh: Mesh
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.mesh.nodes.shape:
            raise ValueError("values must match the mesh nodes")
        vals.setflags(write=False)

    @property
    def n(self) -> int:
        return self.mesh.n

    def bound_violation(self) -> float:
        """Largest violation of 0 <= phi <= w_star (0 when the bound holds)."""
        ws = w_star(self.mesh.n, self.mesh.nodes)
        below = np.max(-self.values, initial=0.0)
        above = np.max(self.values - ws, initial=0.0)
        return float(max(below, above, 0.0))


# ---------------------------------------------------------------------------
# finite differences on a nonuniform grid

def gradient_nonuniform(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Second-order first derivative on a nonuniform grid.

    Three-point central stencils inside, one-sided three-point stencils at
    both endpoints; exact on quadratics.
    """
    x = np.asarray(x, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    out = np.empty_like(f)
    h1 = x[1:-1] - x[:-2]
    h2 = x[2:] - x[1:-1]
    out[1:-1] = (
        -h2 / (h1 * (h1 + h2)) * f[:-2]
        + (h2 - h1) / (h1 * h2) * f[1:-1]
        + h1 / (h2 * (h1 + h2)) * f[2:]
    )
    a, b = x[1] - x[0], x[2] - x[0]
    out[0] = (
        -(a + b) / (a * b) * f[0]
        + b / (a * (b - a)) * f[1]
        - a / (b * (b - a)) * f[2]
    )
    a, b = x[-1] - x[-2], x[-1] - x[-3]
    out[-1] = (
        (a + b) / (a * b) * f[-1]
        - b / (a * (b - a)) * f[-2]
        + a / (b * (b - a)) * f[-3]
    )
    return out


def second_derivative_nonuniform(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Three-point second derivative at interior nodes; endpoints copied."""
    x = np.asarray(x, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    out = np.empty_like(f)
    h1 = x[1:-1] - x[:-2]
    h2 = x[2:] - x[1:-1]
    out[1:-1] = 2.0 * (
        f[:-2] / (h1 * (h1 + h2))
        - f[1:-1] / (h1 * h2)
        + f[2:] / (h2 * (h1 + h2))
    )
    out[0] = out[1]
    out[-1] = out[-2]
    return out


# ---------------------------------------------------------------------------
# transforms

def u_to_w(u: RadialDensity, mesh: Mesh | None = None) -> MassFunction:
    """Cumulated mass by composite trapezoid quadrature of rho^(n-1) u."""
    mesh = mesh if mesh is not None else u.mesh
    if mesh is not u.mesh and not np.array_equal(mesh.nodes, u.mesh.nodes):
        raise ValueError("density lives on a different mesh")
    r = mesh.r
    integrand = r ** (mesh.n - 1) * u.values
    w = np.concatenate(([0.0], cumulative_trapezoid(integrand, r)))
    return MassFunction(mesh=mesh, values=w, t=0.0)


NEGATIVE_CLAMP_REL = 1e-12


def w_to_u(w: MassFunction) -> RadialDensity:
    """Recover the density u = n * dw/ds by finite differences.

    Negatives are judged by the mass they represent, not by the density
    scale: on strongly graded meshes a rounding-level wiggle in w divided by
    a tiny spacing yields a large-looking negative density.  Dips whose
    implied mass error stays below 1e-12 * max|w| are clamped silently;
    anything larger is a scheme failure reported via a warning before zeroing.
    """
    nodes = w.mesh.nodes
    u = w.mesh.n * gradient_nonuniform(nodes, w.values)
    h = np.empty_like(u)
    h[1:] = np.diff(nodes)
    h[0] = h[1]
    mass_err = np.where(u < 0.0, -u * h / w.mesh.n, 0.0)
    tiny = NEGATIVE_CLAMP_REL * np.max(np.abs(w.values), initial=0.0)
    if np.any(mass_err > tiny):
        worst = float(np.min(u))
        warnings.warn(f"negative density {worst:g} beyond rounding noise", RuntimeWarning)
    u = np.maximum(u, 0.0)
    return RadialDensity(mesh=w.mesh, values=u)


def deviation(w: MassFunction) -> DeviationField:
    """phi = w_star - w, pointwise; bound violations are reported, not fixed."""
    phi = w_star(w.mesh.n, w.mesh.nodes) - w.values
    return DeviationField(mesh=w.mesh, values=phi, t=w.t)


def v_gradient(w: MassFunction) -> np.ndarray:
    """Radial chemoattractant gradient v_r(r) = -w(r^n)/r^(n-1), for r > 0."""
    r = w.mesh.r[1:]
    return -w.values[1:] / r ** (w.mesh.n - 1)


# ---------------------------------------------------------------------------
# serialization

def field_to_csv(obj, path) -> None:
    """Write a field (mass, deviation or density) as CSV rows (s, r, value, t)."""
    mesh = obj.mesh
    t = getattr(obj, "t", 0.0)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "r", "value", "t"])
        for s, r, v in zip(mesh.nodes, mesh.r, obj.values):
            writer.writerow([repr(float(s)), repr(float(r)), repr(float(v)), repr(float(t))])


def mesh_to_json(mesh: Mesh, path) -> None:
    with open(path, "w") as fh:
        json.dump(mesh.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
