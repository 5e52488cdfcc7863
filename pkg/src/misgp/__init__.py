"""Gaussian process bandits under model misspecification."""

from .algorithms import BalancingMaster, EcGpUcb, GpUcb, PhasedUncertaintySampling, make_master_config
from .confidence import BetaAccumulator, ConfidenceParams, beta_value, enlarged_bonus
from .environments import make_objective, spike_objective, synthesize_rkhs
from .experiments import ExperimentConfig, run_experiment
from .infogain import gamma_exact, gamma_greedy, gamma_upper_estimate
from .kernels import ActionDomain, KernelSpec, gram_matrix, kernel_eval
from .posterior import PosteriorState, posterior_init

__version__ = "0.1.0"

__all__ = [
    "ActionDomain",
    "BalancingMaster",
    "BetaAccumulator",
    "ConfidenceParams",
    "EcGpUcb",
    "ExperimentConfig",
    "GpUcb",
    "KernelSpec",
    "PhasedUncertaintySampling",
    "PosteriorState",
    "beta_value",
    "enlarged_bonus",
    "gamma_exact",
    "gamma_greedy",
    "gamma_upper_estimate",
    "gram_matrix",
    "kernel_eval",
    "make_master_config",
    "make_objective",
    "posterior_init",
    "run_experiment",
    "spike_objective",
    "synthesize_rkhs",
]
