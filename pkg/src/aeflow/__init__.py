"""Numerical lab for Ricci flow of rotationally symmetric asymptotically Euclidean metrics."""

from .config import Config, ConfigError, parse_config
from .entropy import ContractError, el_residual, minimize_mu, monotonicity_check, mu_tail, noncollapse_check, w_functional
from .flow import FlowState, FlowTrajectory, RunControls, SingularityError, run, step
from .geometry import (
    InvalidProfileError,
    MassUndefinedError,
    MetricProfile,
    RadialGrid,
    ae_order_check,
    curvature,
    flat_profile,
    make_grid,
    radial_distance,
    volume_ratio,
    weighted_norm,
)
from .harness import RunReport, run_scenario, sweep
from .heat import harnack_check, li_yau_check, solve_heat
from .mass import adm_mass, mass_drift, scalar_mass_identity
from .presets import make_scenario
from .soliton import SolitonCandidate, hamilton_identity_check, soliton_residual

__all__ = [
    "Config", "ConfigError", "ContractError", "FlowState", "FlowTrajectory", "InvalidProfileError",
    "MassUndefinedError", "MetricProfile", "RadialGrid", "RunControls", "RunReport", "SingularityError",
    "SolitonCandidate", "adm_mass", "ae_order_check", "curvature", "el_residual", "flat_profile", "hamilton_identity_check",
    "harnack_check", "li_yau_check", "make_grid", "make_scenario", "mass_drift", "minimize_mu",
    "monotonicity_check", "mu_tail", "noncollapse_check", "parse_config", "radial_distance", "run",
    "run_scenario", "scalar_mass_identity", "soliton_residual", "solve_heat", "step", "sweep",
    "volume_ratio", "w_functional", "weighted_norm",
]
