"""Observable channels: sup-norms, ball averages, gaps, entry detection."""

import numpy as np
import pytest

from kslab import diagnostics
from kslab.cutoffs import chi, zeta
from kslab.grids import (
    MassFunction,
    RadialDensity,
    build_mesh,
    u_star,
    w_star,
)


@pytest.fixture(scope="module")
def mesh5():
    return build_mesh(5, 1e4, 1024)


def _star_mass(mesh, t=0.0):
    return MassFunction(mesh=mesh, values=w_star(mesh.n, mesh.nodes), t=t)


def _star_density(mesh):
    vals = np.empty_like(mesh.r)
    vals[1:] = u_star(mesh.n, mesh.r[1:])
    vals[0] = vals[1]
    return RadialDensity(mesh=mesh, values=vals)


# ---------------------------------------------------------------------------
# pointwise channels

def test_sup_norm_cases(mesh5):
    assert diagnostics.sup_norm(RadialDensity(mesh=mesh5, values=np.zeros(1025))) == 0.0
    import kslab

    capped = kslab.make_scaled(5, 0.5, 7.0, mesh5)
    assert diagnostics.sup_norm(capped) == 7.0


def test_ball_average_steady_state_saturates_bound(mesh5):
    w = _star_mass(mesh5)
    for k in (10, 100, 500):
        r = mesh5.r[k]
        assert diagnostics.ball_average(w, r) == pytest.approx(
            diagnostics.ball_average_bound(5, r), rel=1e-12
        )


def test_ball_average_zero_mass(mesh5):
    w = MassFunction(mesh=mesh5, values=np.zeros(1025))
    assert diagnostics.ball_average(w, 1.0) == 0.0


def test_ball_average_rejects_outside_radius(mesh5):
    w = _star_mass(mesh5)
    with pytest.raises(ValueError):
        diagnostics.ball_average(w, 2.0 * mesh5.r[-1])


def test_annulus_error_steady_samples(mesh5):
    assert diagnostics.annulus_error(_star_density(mesh5), 1.0, 2.0) == 0.0
    with pytest.raises(ValueError):
        diagnostics.annulus_error(_star_density(mesh5), 2.0, 1.0)


# ---------------------------------------------------------------------------
# absorbing entry

def test_absorbing_entry_constant_below():
    t = np.linspace(0.0, 10.0, 11)
    vals = np.full(11, 0.5)
    assert diagnostics.absorbing_entry(t, vals, 1.0) == 0.0


def test_absorbing_entry_crossing_down():
    t = np.linspace(0.0, 10.0, 101)
    vals = np.where(t < 7.0, 2.0, 0.5)
    entry = diagnostics.absorbing_entry(t, vals, 1.0)
    assert abs(entry - 7.0) <= 0.1  # within sampling resolution


def test_absorbing_entry_never():
    t = np.linspace(0.0, 10.0, 11)
    assert diagnostics.absorbing_entry(t, np.full(11, 5.0), 1.0) is None
    # ends above C: no entry even after a dip
    vals = np.array([0.5] * 10 + [5.0])
    assert diagnostics.absorbing_entry(t, vals, 1.0) is None


# ---------------------------------------------------------------------------
# repulsion gap

def test_repulsion_gap_vanishes_at_steady_state(mesh5):
    gap = diagnostics.repulsion_gap(_star_mass(mesh5), 1.0)
    assert abs(gap) <= 1e-6  # zero up to power-evaluation rounding


def test_repulsion_gap_floor_under_rational_barrier(mesh5):
    B, r0 = 1.0, 1.0
    s = mesh5.nodes
    w = MassFunction(mesh=mesh5, values=2.0 * s / (s**0.4 + B))
    gap = diagnostics.repulsion_gap(w, r0)
    assert gap >= diagnostics.repulsion_gap_floor(5, B, r0) * (1.0 - 1e-12)


# ---------------------------------------------------------------------------
# gradient-quotient monitor

def test_bernstein_skips_vanishing_mass(mesh5):
    w = MassFunction(mesh=mesh5, values=np.zeros(1025), t=3.0)
    assert diagnostics.bernstein_monitor(w, 0.1, t=3.0, t1=0.0) == 0.0


def test_bernstein_closed_form_at_steady_state():
    n = 5
    mesh = build_mesh(n, 1e4, 2048)
    w = MassFunction(mesh=mesh, values=w_star(n, mesh.nodes), t=3.0)
    val = diagnostics.bernstein_monitor(w, 0.1, t=3.0, t1=0.0)
    s = mesh.nodes[1:]
    analytic = np.max(
        chi(3.0) * s * zeta(0.1, s) ** 2
        * 2.0 * (1.0 - 2.0 / n) ** 2 * s ** (-1.0 - 2.0 / n)
    )
    assert val == pytest.approx(analytic, rel=1e-2)


def test_bernstein_vanishes_before_activation(mesh5):
    w = _star_mass(mesh5, t=0.5)
    # chi(t - t1) = 0 for t - t1 <= 1
    assert diagnostics.bernstein_monitor(w, 0.1, t=0.5, t1=0.0) == 0.0


# ---------------------------------------------------------------------------
# series plumbing and run-level channels

def test_series_requires_increasing_times():
    series = diagnostics.DiagnosticSeries()
    series.append("x", 0.0, 1.0)
    with pytest.raises(ValueError):
        series.append("x", 0.0, 2.0)


def test_series_csv_roundtrip(tmp_path):
    series = diagnostics.DiagnosticSeries()
    for t in (0.0, 1.0, 2.0):
        series.append("a", t, 2.0 * t)
        series.append("b", t, -t)
    path = tmp_path / "diag.csv"
    series.to_csv(path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "t,a,b"
    assert len(rows) == 4


def test_collect_channels_and_mass_bound(n5_scaled_traj):
    series = diagnostics.collect(n5_scaled_traj)
    assert "sup_norm" in series.channels
    assert "gap@r0" in series.channels
    assert "annulus_err" in series.channels
    assert diagnostics.mass_bound_violation(series, 5) <= 1e-6


def test_absorbing_channels_in_low_dimension(n5_scaled_traj):
    series = diagnostics.collect(n5_scaled_traj)
    t = series.times("sup_norm")
    sups = series.values("sup_norm")
    C = 1.5 * float(np.max(sups[t >= 0.75 * t[-1]]))
    entry = diagnostics.absorbing_entry(t, sups, C)
    assert entry is not None
    gap = series.values("gap@r0")
    assert np.all(gap[t >= entry] > 0.0)
    bern = series.values("bernstein")
    after = t >= 3.0
    assert np.max(bern[after]) <= 2.0 * np.max(bern)  # bounded, no runaway


def test_pinched_run_annulus_error_decreasing(n10_pinched_traj):
    series = diagnostics.collect(n10_pinched_traj)
    ann = series.values("annulus_err")
    assert ann[-1] < ann[0]


def test_plot_channels_writes_svgs(tmp_path, n10_pinched_traj):
    series = diagnostics.collect(n10_pinched_traj)
    written = diagnostics.plot_channels(series, tmp_path)
    assert written
    for path in written:
        assert path.suffix == ".svg"
        assert path.exists()
