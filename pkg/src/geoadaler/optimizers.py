"""Stateful update rules behind a shared step interface.

Every optimizer consumes one gradient per call and returns the parameter
delta instead of mutating parameters, so harnesses can project iterates
onto a feasible set before committing.  Step indices are 1-based: the
first ``step()`` call is t = 1, which for the geometric methods seeds the
moving average with the raw gradient.
"""

import math

import numpy as np
from dataclasses import dataclass, replace

from .errors import ConfigError, ContractError
from .geometry import _scaled_direction, as_vector

LR_SCHEDULES = ("constant", "inverse_sqrt")
BETA_SCHEDULES = ("constant", "exponential")


@dataclass(frozen=True)
class HyperParams:
    """Shared hyperparameter bundle; methods read only the fields they use.

    ``lam`` is the decay constant of the exponential beta schedule
    beta_t = beta * lam**(t - beta_decay_offset); the offset default of 1
    makes beta_1 = beta.  ``epsilon`` selects the normal-plane vector for
    the geometric methods, ``stability`` is the small denominator constant
    of the baselines.
    """

    gamma: float = 1e-3
    beta: float = 0.9
    lam: float = 0.999
    epsilon: float = 1.0
    beta2: float = 0.99
    momentum: float = 0.9
    dampening: float = 0.9
    stability: float = 1e-8
    lr_schedule: str = "constant"
    beta_schedule: str = "constant"
    beta_decay_offset: int = 1

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if not 0.0 <= self.beta < 1.0:
            raise ConfigError(f"beta must lie in [0, 1), got {self.beta}")
        if not 0.0 < self.lam < 1.0:
            raise ConfigError(f"lambda must lie in (0, 1), got {self.lam}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0.0 <= self.beta2 < 1.0:
            raise ConfigError(f"beta2 must lie in [0, 1), got {self.beta2}")
        if self.lr_schedule not in LR_SCHEDULES:
            raise ConfigError(f"unknown lr schedule {self.lr_schedule!r}")
        if self.beta_schedule not in BETA_SCHEDULES:
            raise ConfigError(f"unknown beta schedule {self.beta_schedule!r}")


def lr_at(h, t):
    """Learning rate at 1-based step t: gamma, or gamma / sqrt(t)."""
    if t < 1:
        raise ContractError(f"step index must be >= 1, got {t}")
    if h.lr_schedule == "inverse_sqrt":
        return h.gamma / math.sqrt(t)
    return h.gamma


def beta_at(h, t):
    """EMA decay at 1-based step t: beta, or beta * lam**(t - offset)."""
    if t < 1:
        raise ContractError(f"step index must be >= 1, got {t}")
    if h.beta_schedule == "exponential":
        return h.beta * h.lam ** (t - h.beta_decay_offset)
    return h.beta


class Optimizer:
    """Base: owns the step counter and gradient validation."""

    name = "base"

    def __init__(self, dim, h=None):
        self.dim = int(dim)
        self.h = h if h is not None else default_hyperparams(self.name)
        self.t = 0

    def _validate(self, g):
        g = as_vector(g, "gradient")
        if g.size != self.dim:
            raise ContractError(f"gradient dim {g.size} does not match optimizer dim {self.dim}")
        return g

    def step(self, g):
        raise NotImplementedError


class GeoAdaLer(Optimizer):
    """EMA of gradients scaled by the geometric annealing factor.

    delta = -gamma_t * m_t / sqrt(||m_t||^2 + epsilon); the first step
    seeds m with the raw gradient, so beta = 0 gives the deterministic
    single-gradient update.
    """

    name = "geoadaler"

    def __init__(self, dim, h=None, group_slices=None):
        super().__init__(dim, h)
        self.m = np.zeros(self.dim)
        self.group_slices = group_slices

    def _update_ema(self, g):
        t = self.t + 1
        if self.t == 0:
            self.m = g.copy()
        else:
            b = beta_at(self.h, t)
            self.m = b * self.m + (1.0 - b) * g
        return t

    def step(self, g):
        g = self._validate(g)
        t = self._update_ema(g)
        delta = -lr_at(self.h, t) * _scaled_direction(self.m, self.h.epsilon, self.group_slices)
        self.t = t
        return delta


class GeoAdaMax(GeoAdaLer):
    """GeoAdaLer with a running maximum of the normalizing denominator.

    u_t = max(||m_t||^2 + epsilon, u_{t-1}) never decreases, so the
    effective step scale is non-increasing for a given m.
    """

    name = "geoadamax"

    def __init__(self, dim, h=None):
        super().__init__(dim, h)
        self.u = 0.0

    def step(self, g):
        g = self._validate(g)
        t = self._update_ema(g)
        self.u = max(float(np.dot(self.m, self.m)) + self.h.epsilon, self.u)
        delta = -lr_at(self.h, t) * self.m / math.sqrt(self.u)
        self.t = t
        return delta


class SgdMomentum(Optimizer):
    """Heavy-ball SGD: buf = momentum * buf + (1 - dampening) * g."""

    name = "sgd_momentum"

    def __init__(self, dim, h=None):
        super().__init__(dim, h)
        self.buf = None

    def step(self, g):
        g = self._validate(g)
        t = self.t + 1
        if self.buf is None:
            self.buf = g.copy()
        else:
            self.buf = self.h.momentum * self.buf + (1.0 - self.h.dampening) * g
        self.t = t
        return -lr_at(self.h, t) * self.buf


class AdaGrad(Optimizer):
    """Per-coordinate scaling by the accumulated squared gradients."""

    name = "adagrad"

    def __init__(self, dim, h=None):
        super().__init__(dim, h)
        self.accum = np.zeros(self.dim)

    def step(self, g):
        g = self._validate(g)
        t = self.t + 1
        self.accum += g * g
        self.t = t
        return -lr_at(self.h, t) * g / np.sqrt(self.accum + self.h.stability)


class RmsProp(Optimizer):
    """AdaGrad with an exponentially decayed squared-gradient average."""

    name = "rmsprop"

    def __init__(self, dim, h=None):
        super().__init__(dim, h)
        self.accum = np.zeros(self.dim)

    def step(self, g):
        g = self._validate(g)
        t = self.t + 1
        self.accum = self.h.beta * self.accum + (1.0 - self.h.beta) * g * g
        self.t = t
        return -lr_at(self.h, t) * g / np.sqrt(self.accum + self.h.stability)


class Adam(Optimizer):
    """Bias-corrected first and second moments; beta, beta2 are the decays."""

    name = "adam"

    def __init__(self, dim, h=None):
        super().__init__(dim, h)
        self.m = np.zeros(self.dim)
        self.v = np.zeros(self.dim)

    def _moments(self, g):
        t = self.t + 1
        self.m = self.h.beta * self.m + (1.0 - self.h.beta) * g
        self.v = self.h.beta2 * self.v + (1.0 - self.h.beta2) * g * g
        m_hat = self.m / (1.0 - self.h.beta**t)
        v_hat = self.v / (1.0 - self.h.beta2**t)
        return t, m_hat, v_hat

    def step(self, g):
        g = self._validate(g)
        t, m_hat, v_hat = self._moments(g)
        self.t = t
        return -lr_at(self.h, t) * m_hat / (np.sqrt(v_hat) + self.h.stability)


class AmsGrad(Adam):
    """Adam with a running componentwise maximum of the corrected second moment."""

    name = "amsgrad"

    def __init__(self, dim, h=None):
        super().__init__(dim, h)
        self.v_max = np.zeros(self.dim)

    def step(self, g):
        g = self._validate(g)
        t, m_hat, v_hat = self._moments(g)
        self.v_max = np.maximum(self.v_max, v_hat)
        self.t = t
        return -lr_at(self.h, t) * m_hat / (np.sqrt(self.v_max) + self.h.stability)


_REGISTRY = {
    "geoadaler": GeoAdaLer,
    "geoadamax": GeoAdaMax,
    "sgd_momentum": SgdMomentum,
    "sgd": SgdMomentum,
    "adagrad": AdaGrad,
    "rmsprop": RmsProp,
    "adam": Adam,
    "amsgrad": AmsGrad,
}

# Paper-style defaults: SGD 0.01/momentum 0.9/dampening 0.9; Adam-family
# 0.001 with beta2 = 0.99; the geometric methods mirror Adam's rate.
_DEFAULTS = {
    "geoadaler": HyperParams(gamma=1e-3, beta=0.9),
    "geoadamax": HyperParams(gamma=1e-3, beta=0.9),
    "sgd_momentum": HyperParams(gamma=1e-2, momentum=0.9, dampening=0.9),
    "adagrad": HyperParams(gamma=1e-2),
    "rmsprop": HyperParams(gamma=1e-2, beta=0.99),
    "adam": HyperParams(gamma=1e-3, beta=0.9, beta2=0.99),
    "amsgrad": HyperParams(gamma=1e-3, beta=0.9, beta2=0.99),
}


def canonical_name(name):
    key = str(name).strip().lower().replace("-", "_")
    if key not in _REGISTRY:
        raise ConfigError(f"unknown optimizer {name!r}; choose from {sorted(set(_REGISTRY))}")
    return _REGISTRY[key].name


def default_hyperparams(name):
    return _DEFAULTS.get(canonical_name(name), HyperParams())


def make_optimizer(name, dim, h=None, **overrides):
    """Build an optimizer by tag; overrides patch the method defaults."""
    cls = _REGISTRY[canonical_name(name)]
    if h is None:
        h = default_hyperparams(name)
    if overrides:
        h = replace(h, **overrides)
    return cls(dim, h)


OPTIMIZER_NAMES = tuple(sorted({cls.name for cls in _REGISTRY.values()}))


def jensen_comparison(stream, beta):
    """Squared single-EMA versus EMA-of-squares along a scalar stream.

    Both recursions start from the first gradient.  Returns an (T, 2)
    array of (geo_Gt, adam_Gt); Jensen's inequality makes the first
    column never exceed the second.
    """
    if not 0.0 <= beta < 1.0:
        raise ContractError(f"beta must lie in [0, 1), got {beta}")
    values = np.asarray(stream, dtype=np.float64).ravel()
    if values.size == 0:
        return np.empty((0, 2))
    out = np.empty((values.size, 2))
    m = values[0]
    v = values[0] ** 2
    out[0] = (m * m, v)
    for i, g in enumerate(values[1:], start=1):
        m = beta * m + (1.0 - beta) * g
        v = beta * v + (1.0 - beta) * g * g
        out[i] = (m * m, v)
    return out
