"""Observable channels for the stability dichotomy.

Everything here is a pure evaluation over one snapshot or one recorded
channel: sup-norms, ball averages against the universal bound 2n/r^2, local
deviation from the singular steady state, absorbing-set entry detection, the
repulsion gap of centered averages, and the gradient-quotient monitor used in
the Bernstein-type sup bound.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from kslab.cutoffs import chi, zeta
from kslab.grids import MassFunction, RadialDensity, u_star, w_star, w_to_u


@dataclass
class DiagnosticSeries:
    """Named scalar channels, each a list of (t, value), plus run metadata."""

    meta: dict = field(default_factory=dict)
    channels: dict = field(default_factory=dict)

    def append(self, name: str, t: float, value: float) -> None:
        series = self.channels.setdefault(name, [])
        if series and t <= series[-1][0]:
            raise ValueError(f"times must increase within channel {name!r}")
        series.append((float(t), float(value)))

    def times(self, name: str) -> np.ndarray:
        return np.asarray([t for t, _ in self.channels[name]])

    def values(self, name: str) -> np.ndarray:
        return np.asarray([v for _, v in self.channels[name]])

    def to_csv(self, path) -> None:
        """One row per time; channels as columns (times assumed shared)."""
        names = sorted(self.channels)
        if not names:
            with open(path, "w", newline="") as fh:
                csv.writer(fh).writerow(["t"])
            return
        ts = self.times(names[0])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + names)
            for i, t in enumerate(ts):
                row = [repr(float(t))]
                for name in names:
                    series = self.channels[name]
                    row.append(repr(series[i][1]) if i < len(series) else "")
                writer.writerow(row)


def sup_norm(u: RadialDensity) -> float:
    """Max of the density over the grid."""
    return float(np.max(u.values))


def ball_average(u_or_w, r: float) -> float:
    """Average of u over the centered ball of radius r: n w(r^n)/r^n.

    Accepts either a density (integrated on the fly) or a mass function.
    The universal bound for admissible data is 2n/r^2.
    """
    if isinstance(u_or_w, RadialDensity):
        from kslab.grids import u_to_w

        w = u_to_w(u_or_w)
    else:
        w = u_or_w
    if r <= 0.0 or r ** w.mesh.n > w.mesh.s_max * (1.0 + 1e-12):
        raise ValueError("radius outside the mesh range")
    ws = float(np.interp(r ** w.mesh.n, w.mesh.nodes, w.values))
    return w.mesh.n * ws / r ** w.mesh.n


def ball_average_bound(n: int, r: float) -> float:
    return 2.0 * n / r**2


def annulus_error(u: RadialDensity, r1: float, r2: float) -> float:
    """Max over grid nodes in [r1, r2] of |u - u_star|."""
    if not 0.0 < r1 < r2:
        raise ValueError("need 0 < r1 < r2")
    r = u.r
    mask = (r >= r1) & (r <= r2)
    if not np.any(mask):
        raise ValueError("no grid nodes in the annulus")
    return float(np.max(np.abs(u.values[mask] - u_star(u.n, r[mask]))))


def absorbing_entry(times, values, C: float):
    """First time after which the channel stays <= C through the end; None if never."""
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    above = values > C
    if not np.any(~above):
        return None
    # last index where the channel exceeds C; entry is the next sample
    if not np.any(above):
        return float(times[0])
    last_above = int(np.max(np.nonzero(above)[0]))
    if last_above == times.size - 1:
        return None
    return float(times[last_above + 1])


def repulsion_gap(u_or_w, r0: float) -> float:
    """min over grid radii in (0, r0] of 2n/r^2 - ball_average(u, r).

    Positive values witness uniform repulsion from the singular steady state
    on small balls.  The origin node is skipped (the bound is singular there);
    comparison starts at the 3rd grid node.
    """
    if isinstance(u_or_w, RadialDensity):
        from kslab.grids import u_to_w

        w = u_to_w(u_or_w)
    else:
        w = u_or_w
    n = w.mesh.n
    r = w.mesh.r
    mask = (r <= r0) & (np.arange(r.size) >= 2)
    if not np.any(mask):
        raise ValueError("no grid radii at or below r0")
    rm = r[mask]
    avg = n * w.values[mask] / rm**n
    return float(np.min(2.0 * n / rm**2 - avg))


def repulsion_gap_floor(n: int, B: float, r0: float) -> float:
    """Analytic lower bound 2nB/(r0^2 (r0^2 + B)) for states under the
    rational barrier with b = B."""
    return 2.0 * n * B / (r0**2 * (r0**2 + B))


BERNSTEIN_W_FLOOR_REL = 1e-14


def bernstein_monitor(w: MassFunction, eps: float, t: float, t1: float) -> float:
    """Max over nodes of chi(t - t1) * s * zeta_eps^2 * w_s^2 / w.

    The quotient is skipped where w is below 1e-14 of the far-field steady
    mass.  Uniform-in-time boundedness of this channel is the numerical
    shadow of the Bernstein gradient estimate.
    """
    from kslab.grids import gradient_nonuniform

    s = w.mesh.nodes
    ws_vals = gradient_nonuniform(s, w.values)
    floor = BERNSTEIN_W_FLOOR_REL * w_star(w.mesh.n, w.mesh.s_max)
    mask = w.values > floor
    if not np.any(mask):
        return 0.0
    z = (
        chi(t - t1)
        * s[mask]
        * zeta(eps, s[mask]) ** 2
        * ws_vals[mask] ** 2
        / w.values[mask]
    )
    return float(np.max(z))


# ---------------------------------------------------------------------------
# standard channel collection along a trajectory

def collect(trajectory, radii=(0.5, 1.0, 2.0), annulus=(1.0, 2.0), r0: float = 1.0,
            bernstein_eps: float = 0.1, bernstein_t1: float = 1.0) -> DiagnosticSeries:
    """Evaluate the standard channels at every stored snapshot."""
    series = DiagnosticSeries(meta={"formulation": trajectory.formulation,
                                    **trajectory.mesh.summary()})
    r_max = trajectory.mesh.r[-1]
    for snap in trajectory.snapshots:
        t = snap.t
        u = w_to_u(snap)
        series.append("sup_norm", t, sup_norm(u))
        for r in radii:
            if r <= r_max:
                series.append(f"ball_avg@{r:g}", t, ball_average(snap, r))
        if annulus[1] <= r_max:
            series.append("annulus_err", t, annulus_error(u, *annulus))
        series.append("gap@r0", t, repulsion_gap(snap, r0))
        series.append("bernstein", t,
                      bernstein_monitor(snap, bernstein_eps, t, bernstein_t1))
    return series


def mass_bound_violation(series: DiagnosticSeries, n: int) -> float:
    """Worst relative violation of the ball-average bound across channels."""
    worst = 0.0
    for name in series.channels:
        if not name.startswith("ball_avg@"):
            continue
        r = float(name.split("@")[1])
        bound = ball_average_bound(n, r)
        excess = (series.values(name) - bound) / bound
        worst = max(worst, float(np.max(excess, initial=0.0)))
    return worst


def plot_channels(series: DiagnosticSeries, out_dir, prefix: str = "") -> list:
    """One SVG line plot per channel; returns the written paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(series.channels):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.plot(series.times(name), series.values(name), lw=1.2)
        ax.set_xlabel("t")
        ax.set_ylabel(name)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        safe = name.replace("@", "_at_").replace("/", "_")
        path = out_dir / f"{prefix}{safe}.svg"
        fig.savefig(path, format="svg")
        plt.close(fig)
        written.append(path)
    return written
