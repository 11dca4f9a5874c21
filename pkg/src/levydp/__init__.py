"""Renyi-DP accounting and numerical checks for heavy-tailed noisy (S)GD."""

from .accountant import (
    AccountingParams,
    ContinuousTime,
    DiscreteSteps,
    NoiseMode,
    NoiseSpec,
    bound,
    multifractal_bound,
    pure_jump_bound,
    sweep,
    zero_delta_report,
)
from .constants import c_alpha_d, k_alpha_d, sphere_area
from .errors import (
    BudgetExceeded,
    ConfigError,
    DegenerateSupportError,
    DomainError,
    LevyDPError,
    PoincareConditionError,
    UnsupportedFamilyError,
)
from .poincare import ConvexProblem, PoincareConstants, track_sgd
from .privacy_core import (
    EnvelopeParams,
    RdpGuarantee,
    Regime,
    optimize_beta,
    rdp_to_eps_delta,
    rdp_to_zero_delta,
    solve_envelope,
)
from .stable_noise import make_rng, sample_isotropic_stable, sample_positive_stable

__version__ = "0.1.0"
