"""Numerical bench: Renyi estimation, fractional Dirichlet forms and inequality checks."""

from .checks import (
    FlowRow,
    PoincareCheck,
    VerificationRow,
    bregman_gap,
    check_fractional_poincare,
    flow_check,
    gaussian_flow_oracle,
)
from .dirichlet import (
    DirichletEstimate,
    QuadConfig,
    dirichlet_form,
    dirichlet_form_estimate,
    dirichlet_form_spherical,
    spherical_J,
)
from .renyi import DensityEstimate, default_bins, estimate_renyi, gaussian_renyi, shared_histograms
from .testfunctions import Constant, GaussianBump, PolyBump, Step, TanhRidge, TestFunction

__all__ = [
    "FlowRow",
    "PoincareCheck",
    "VerificationRow",
    "bregman_gap",
    "check_fractional_poincare",
    "flow_check",
    "gaussian_flow_oracle",
    "DirichletEstimate",
    "QuadConfig",
    "dirichlet_form",
    "dirichlet_form_estimate",
    "dirichlet_form_spherical",
    "spherical_J",
    "DensityEstimate",
    "default_bins",
    "estimate_renyi",
    "gaussian_renyi",
    "shared_histograms",
    "Constant",
    "GaussianBump",
    "PolyBump",
    "Step",
    "TanhRidge",
    "TestFunction",
]
