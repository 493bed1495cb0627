"""Tail index and extreme quantile estimation for right-censored heavy-tailed data."""

from .core import CensoredSample, DomainError, OrderedSample, log_spacings, order, p_k
from .estimators import (StepSurvival, Trajectory, averaged_trimmed, hill_a, hill_censored,
                         hill_trajectory, hill_z, kaplan_meier, kernel_estimate,
                         kernel_estimate_tilde, kernel_trajectory, km_quantile,
                         trimmed_hill, trimmed_kernel, weissman_quantile, worms,
                         worms_trajectory)
from .kernels import (Kernel, QuadratureConfig, QuadratureError, bar_transform,
                      kernel_from_name, kernel_k0, kernel_k1, kernel_k2,
                      tilde_discrete, tilde_transform, tilde_weights)
from .secondorder import (DerivedZParams, SecondOrderModel, amse, bias_term,
                          derive_z_params, q0z, theoretical_k_opt, variance_term)
from .threshold import (ThresholdConfig, ThresholdResult, adaptive_k_hill,
                        adaptive_k_kernel, khat0, kopt_scaling, s2_trajectory)

__version__ = "0.1.0"

__all__ = [
    "adaptive_k_hill", "adaptive_k_kernel", "amse", "averaged_trimmed", "bar_transform",
    "bias_term", "CensoredSample", "derive_z_params", "DerivedZParams", "DomainError",
    "hill_a", "hill_censored", "hill_trajectory", "hill_z", "kaplan_meier", "Kernel",
    "kernel_estimate", "kernel_estimate_tilde", "kernel_from_name", "kernel_k0",
    "kernel_k1", "kernel_k2", "kernel_trajectory", "khat0", "km_quantile", "kopt_scaling",
    "log_spacings", "order", "OrderedSample", "p_k", "q0z", "QuadratureConfig",
    "QuadratureError", "s2_trajectory", "SecondOrderModel", "StepSurvival",
    "theoretical_k_opt", "ThresholdConfig", "ThresholdResult", "tilde_discrete",
    "tilde_transform", "tilde_weights", "Trajectory", "trimmed_hill", "trimmed_kernel",
    "variance_term", "weissman_quantile", "worms", "worms_trajectory",
]
