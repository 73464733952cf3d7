"""Quasi-Bayesian sparse phase retrieval.

Recover a sparse signal from noisy intensity measurements
``y_j = (A_j . theta*)^2 + eps_j`` by sampling the Gibbs quasi-posterior
``exp(-lam * r(theta)) * pi(theta)`` with Langevin Monte Carlo.
"""
from .errors import (DimensionError, DivergenceError, DomainError, EmptyChainError,
                     PGMParseError, QPhaseError, SparsityError, SupportError)
from .model import (ProblemInstance, assumption_diagnostics, empirical_risk, generate_instance,
                    generate_signal, risk_gradient)
from .prior import PriorConfig, log_prior_gradient, log_prior_unnorm
from .rng import DEFAULT_SEED, RngState, normal_vector, standard_normal
from .samplers import (Chain, SamplerConfig, estimate, grad_log_posterior, lmc_run,
                       log_posterior_unnorm, mala_run)
from .baseline import BaselineConfig, hard_threshold, spectral_init, thresholded_wf_run
from .experiments import mre, run_sweep, summarize

__version__ = "0.1.0"
