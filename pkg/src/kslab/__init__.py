"""Numerical laboratory for radial chemotaxis aggregation.

Simulates the radially symmetric parabolic-elliptic chemotaxis system in
mass-accumulation variables and certifies, at desk scale, the stability
dichotomy of the singular steady state u(r) = 2(n-2)/r^2: attraction and
infinite-time grow-up for n >= 10, absorbing-set instability for 3 <= n <= 9.
"""

from kslab.grids import (
    Mesh,
    RadialDensity,
    MassFunction,
    DeviationField,
    build_mesh,
    w_star,
    u_star,
    u_to_w,
    w_to_u,
    deviation,
    v_gradient,
)
from kslab.cutoffs import CutoffFamily, default_cutoffs
from kslab.initial_data import (
    InitialDatumSpec,
    make_pinched,
    make_scaled,
    make_compact_bump,
    check_init,
    less_concentrated,
    alpha_of,
    sup_growth,
)
from kslab.solver import SolverConfig, Trajectory, step_w, step_phi, run
from kslab.energy import (
    EnergyParams,
    p_bounds,
    theta_threshold,
    select_params,
    phi_functional,
    identity_4_1,
    hardy_check,
    hardy_bound_41,
    dissipation_integral,
    cutoff_error_decay,
)
from kslab.barriers import (
    BarrierCertificate,
    Lemma21Params,
    lemma3_super,
    lemma21_params,
    lemma21_sub,
    lemma22_barrier,
    bernoulli_y,
    b_solve,
    residual,
    absorbing_constant,
)
from kslab.diagnostics import (
    DiagnosticSeries,
    sup_norm,
    ball_average,
    annulus_error,
    absorbing_entry,
    repulsion_gap,
    bernstein_monitor,
)
from kslab.experiments import ExperimentConfig, run_experiment, sweep

__all__ = [
    "Mesh",
    "RadialDensity",
    "MassFunction",
    "DeviationField",
    "build_mesh",
    "w_star",
    "u_star",
    "u_to_w",
    "w_to_u",
    "deviation",
    "v_gradient",
    "CutoffFamily",
    "default_cutoffs",
    "InitialDatumSpec",
    "make_pinched",
    "make_scaled",
    "make_compact_bump",
    "check_init",
    "less_concentrated",
    "alpha_of",
    "sup_growth",
    "SolverConfig",
    "Trajectory",
    "step_w",
    "step_phi",
    "run",
    "EnergyParams",
    "p_bounds",
    "theta_threshold",
    "select_params",
    "phi_functional",
    "identity_4_1",
    "hardy_check",
    "hardy_bound_41",
    "dissipation_integral",
    "cutoff_error_decay",
    "BarrierCertificate",
    "Lemma21Params",
    "lemma3_super",
    "lemma21_params",
    "lemma21_sub",
    "lemma22_barrier",
    "bernoulli_y",
    "b_solve",
    "residual",
    "absorbing_constant",
    "DiagnosticSeries",
    "sup_norm",
    "ball_average",
    "annulus_error",
    "absorbing_entry",
    "repulsion_gap",
    "bernstein_monitor",
    "ExperimentConfig",
    "run_experiment",
    "sweep",
]
