"""Geometric adaptive gradient methods and their verification harnesses."""

__version__ = "0.1.0"

from .errors import ConfigError, ContractError, NonFiniteError
from .fixedpoint import (OperatorConfig, apply_T, contraction_alpha,
                         estimate_lipschitz, iterate_to_fixed_point,
                         normalized_gradient_map, power_iteration,
                         verify_cocoercivity)
from .geometry import annealing_factor, cos_theta_oracle, ema_update, geo_update_step
from .nn import MlpParams, MlpSpec, evaluate, forward, loss_and_grad, train
from .objectives import (LogisticSynthetic, Quadratic, RandomLinearSequence,
                         ReddiSequence, Rosenbrock, finite_diff_grad,
                         grid_minimizer, offline_minimizer, reddi_adversarial)
from .online import (BoundConstants, RegretTrace, integral_test_check,
                     log_checkpoints, regret_bound, regret_bound_appendix,
                     run_online, sublinearity_check)
from .optimizers import (OPTIMIZER_NAMES, Adam, AdaGrad, AmsGrad, GeoAdaLer,
                         GeoAdaMax, HyperParams, RmsProp, SgdMomentum, beta_at,
                         jensen_comparison, lr_at, make_optimizer)
from .rng import SplitMix64

__all__ = [
    "__version__",
    "ConfigError", "ContractError", "NonFiniteError",
    "SplitMix64",
    "annealing_factor", "cos_theta_oracle", "ema_update", "geo_update_step",
    "HyperParams", "GeoAdaLer", "GeoAdaMax", "SgdMomentum", "AdaGrad",
    "RmsProp", "Adam", "AmsGrad", "make_optimizer", "OPTIMIZER_NAMES",
    "lr_at", "beta_at", "jensen_comparison",
    "Quadratic", "Rosenbrock", "LogisticSynthetic", "ReddiSequence",
    "RandomLinearSequence", "reddi_adversarial", "offline_minimizer",
    "grid_minimizer", "finite_diff_grad",
    "BoundConstants", "RegretTrace", "regret_bound", "regret_bound_appendix",
    "integral_test_check", "run_online", "sublinearity_check", "log_checkpoints",
    "OperatorConfig", "apply_T", "contraction_alpha", "estimate_lipschitz",
    "iterate_to_fixed_point", "normalized_gradient_map", "power_iteration",
    "verify_cocoercivity",
    "MlpSpec", "MlpParams", "forward", "loss_and_grad", "evaluate", "train",
]
