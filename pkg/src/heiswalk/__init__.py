"""Heisenberg-group mean value operators, walks and tug-of-war games."""

from .hgroup import (
    point, group_mul, group_inv, gauge, dist, dilate,
    EllipsoidShape, ellipsoid_map, sample_ball, ball_volume,
    UNIT_BALL_VOLUME,
)
from .calculus import (
    ScalarField, HorizontalJet, SubLaplacians,
    horizontal_jet, sub_laplacians, gauge_power_jet, gauge_power_field,
    radial_profile, radial_p_harmonic, coordinate_field, named_field,
)
from .averaging import (
    QuadratureSpec, BallSearchSpec,
    stochastic_avg, ellipsoid_avg, deterministic_avg, ball_extrema,
    dpp_operator, dpp1_weights, gamma_p, coefficient_fit,
)
from .domains import (
    Domain, make_ball_domain, make_annulus_domain, make_cusp_domain,
    corkscrew_probe,
)
from .dpp import (
    GridSpec, GridField, RadialGridField, DppConfig, SolveReport,
    d_eps, make_grid, solve_dpp, solve_dpp_radial, dpp_residual,
    apply_dpp_operator, candidate_net,
)
from .stochastic import (
    WalkConfig, GameConfig, Strategy, Estimate,
    run_walk, run_walk_batch, estimate_walk_value,
    run_game, run_game_batch, estimate_game_value,
    zero_strategy, greedy_strategy, annulus_experiment, regularity_probe,
    clamped_radial_data,
)
from .errors import (
    HeiswalkError, DegenerateGradient, GaugeZero, ConstraintViolation,
    ConfigInvalid, NonConvergence, NotOnBoundary,
)

__version__ = "0.1.0"
