"""Nearest-neighbor Lagrangian particle solver for the 1D porous medium equation.

The package integrates the particle system whose reconstruction approximates
solutions of ``rho_t = (rho^m)_xx`` (m > 1), and numerically certifies the
discrete estimates the scheme satisfies: the Aronson-Benilan-type lower bound
on the convexity indicator, the gap minimum principle, support growth and
sup-norm decay ceilings, pairwise contraction, and convergence to exact
Barenblatt profiles.
"""

from .core import (
    ParticleState,
    PiecewiseDensity,
    densities,
    discrete_laplacian,
    forward_diff,
    gaps,
    reconstruct,
)
from .diagnostics import (
    BoundReport,
    ConsistencyTriple,
    DiagnosticsRecord,
    SmoothBump,
    ab_lower_bound,
    check_ab,
    check_contraction,
    check_density_lower,
    check_linf,
    check_minimum_principle,
    check_support_ab,
    check_support_universal,
    check_tv,
    consistency_triple,
    diagnostics_series,
    linf_bound,
    max_density,
    metric_dh,
    metric_dh_full,
    metric_dinf_full,
    subsampled,
    support_bound_ab,
    support_growth_constant,
    support_length,
    tv_bound,
    tv_halfpower,
    verify_trajectory,
    w1_upper,
    write_diagnostics_csv,
    z_vector,
)
from .dynamics import (
    IntegratorConfig,
    IntegratorStats,
    Trajectory,
    initial_step_size,
    integrate,
    rhs,
    rhs_density_form,
)
from .reference import (
    BarenblattProfile,
    barenblatt_eval,
    barenblatt_mass_parameter,
    l1_error,
    lm_error,
    n1_gap_closed_form,
)
from .sampling import (
    BarrierConfig,
    DensitySpec,
    QuantileTable,
    barenblatt_density,
    barrier_configuration,
    barrier_densities,
    barrier_profile,
    barrier_profile_integral,
    cdf_pseudo_inverse,
    density_from_name,
    initial_state_from_name,
    quantile_table,
    sample_support_preserving,
    truncated_gaussian_density,
    uniform_density,
    wasserstein1,
)

__version__ = "0.1.0"
