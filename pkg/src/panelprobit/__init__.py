"""Estimators for dynamic and static panel probit models with large individual effects."""

from __future__ import annotations

from .conditional_glm import build_switcher_design, fit_conditional, identifiability_check
from .core_math import (g_derivative, g_function, g_inverse, k_link, phi_product_integral,
                        tau_weighted_integral)
from .heckman import MleSpec, fit_mle
from .panel import PanelData, parse_panel_csv, read_panel_csv
from .priors import MixtureNormal, Normal, Uniform
from .ratio import TransitionCounts, count_transitions, estimate_gamma_ratio
from .results import EstimateResult
from .runs import RunsCounts, estimate_gamma_t3, t3_probabilities
from .simulation import SimulationScenario, run_rmse_experiment, simulate_panel

__all__ = [
    "EstimateResult", "MixtureNormal", "MleSpec", "Normal", "PanelData", "RunsCounts",
    "SimulationScenario", "TransitionCounts", "Uniform", "build_switcher_design",
    "count_transitions", "estimate_gamma_ratio", "estimate_gamma_t3", "fit_conditional",
    "fit_mle", "g_derivative", "g_function", "g_inverse", "identifiability_check", "k_link",
    "parse_panel_csv", "phi_product_integral", "read_panel_csv", "run_rmse_experiment",
    "simulate_panel", "t3_probabilities", "tau_weighted_integral",
]
