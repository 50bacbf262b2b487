"""Estimation toolbox for the simultaneous logit model and its dynamic
fixed-effects panel extensions."""

from .counting import CountConfig, CountReport, count_moments, \
    extract_moment_basis
from .cre import QuadratureRule, cre_plim, fit_cre
from .cmle import cond_loglik_restricted, cond_loglik_unrestricted, fit_cmle
from .gmm import GmmResult, bootstrap_se, fit_gmm_rho
from .heterogeneity import HeterogeneityDist
from .model import CovariatePath, PairSequence, enumerate_sequences, \
    joint_prob_static, sequence_prob
from .moments import moment_coefficients, sample_moments, validate_moments
from .panel import Panel
from .panelio import load_panel, write_panel
from .params import CommonParams, FixedEffects
from .pooled import fit_dynamic_ss, fit_static_ss, rho_from_cells, \
    rho_to_correlation
from .results import FitResult
from .runner import RunConfig, emit_figure_data, run
from .simulate import simulate_panel

__version__ = "1.0.0"

__all__ = [
    "CommonParams", "FixedEffects", "PairSequence", "CovariatePath",
    "Panel", "FitResult", "HeterogeneityDist", "QuadratureRule",
    "enumerate_sequences", "joint_prob_static", "sequence_prob",
    "simulate_panel", "fit_static_ss", "fit_dynamic_ss", "fit_cmle",
    "cond_loglik_unrestricted", "cond_loglik_restricted",
    "rho_from_cells", "rho_to_correlation",
    "validate_moments", "moment_coefficients", "sample_moments",
    "GmmResult", "fit_gmm_rho", "bootstrap_se",
    "CountConfig", "CountReport", "count_moments", "extract_moment_basis",
    "fit_cre", "cre_plim",
    "load_panel", "write_panel", "RunConfig", "run", "emit_figure_data",
]
