"""Online-learning harness: runs, exact regret accounting, bound evaluation.

Regret after T rounds is the summed gap between the losses actually paid
and those of the best fixed point in hindsight.  Two printed forms of the
theoretical bound exist (a compact one and the one reassembled from the
proof's final display, which disagrees in its last term and denominator);
both are tabulated so the discrepancy stays visible, and validity checks
use whichever is looser.
"""

import math

import numpy as np
from dataclasses import dataclass, field

from .errors import ContractError
from .objectives import offline_minimizer


@dataclass(frozen=True)
class BoundConstants:
    """Measured or assumed constants entering the regret bounds."""

    D: float
    G: float
    beta: float
    lam: float
    T: int

    def __post_init__(self):
        if self.D < 0 or self.G < 0:
            raise ContractError("D and G must be non-negative")
        if not 0.0 <= self.beta < 1.0:
            raise ContractError(f"beta must lie in [0, 1), got {self.beta}")
        if not 0.0 < self.lam < 1.0:
            raise ContractError(f"lambda must lie in (0, 1), got {self.lam}")
        if self.T < 1:
            raise ContractError(f"T must be >= 1, got {self.T}")


def regret_bound(c):
    """Compact bound: [D^2 sqrt(G^2+1) sqrt(T) + G(2 sqrt(T)-1)] / (2(1-beta))
    + D G beta (1-lam^T) / ((1-beta)(1-lam))."""
    root_t = math.sqrt(c.T)
    first = (c.D**2 * math.sqrt(c.G**2 + 1.0) * root_t + c.G * (2.0 * root_t - 1.0)) / (2.0 * (1.0 - c.beta))
    second = c.D * c.G * c.beta * (1.0 - c.lam**c.T) / ((1.0 - c.beta) * (1.0 - c.lam))
    return first + second


def regret_bound_appendix(c, gamma=1.0):
    """Proof-display bound: sqrt(T) D^2 sqrt(G^2+1) / (gamma (1 - beta lam^(T-1)))
    + D G beta (1-lam^T)/((1-beta)(1-lam)) + gamma G^2 (2 sqrt(T)-1)/(2(1-beta))."""
    if not gamma > 0:
        raise ContractError(f"gamma must be > 0, got {gamma}")
    root_t = math.sqrt(c.T)
    beta_T = c.beta * c.lam ** (c.T - 1)
    first = root_t * c.D**2 * math.sqrt(c.G**2 + 1.0) / (gamma * (1.0 - beta_T))
    second = c.D * c.G * c.beta * (1.0 - c.lam**c.T) / ((1.0 - c.beta) * (1.0 - c.lam))
    third = gamma * c.G**2 * (2.0 * root_t - 1.0) / (2.0 * (1.0 - c.beta))
    return first + second + third


def integral_test_check(T):
    """(sum_{t=1..T} 1/sqrt(t), 2 sqrt(T) - 1); the sum never exceeds the integral side."""
    if T < 1:
        raise ContractError(f"T must be >= 1, got {T}")
    lhs = float(np.sum(1.0 / np.sqrt(np.arange(1, T + 1, dtype=np.float64))))
    rhs = 2.0 * math.sqrt(T) - 1.0
    return lhs, rhs


CSV_HEADER = [
    "t",
    "loss",
    "opt_loss",
    "inst_regret",
    "cum_regret",
    "regret_over_t",
    "measured_D",
    "measured_G",
    "bound_theorem",
    "bound_appendix",
]


@dataclass
class RegretTrace:
    """Per-step records of an online run plus the hindsight optimum."""

    t: np.ndarray
    loss: np.ndarray
    opt_loss: np.ndarray
    inst_regret: np.ndarray
    cum_regret: np.ndarray
    regret_over_t: np.ndarray
    measured_D: np.ndarray
    measured_G: np.ndarray
    bound_theorem: np.ndarray
    bound_appendix: np.ndarray
    x_star: np.ndarray

    def __len__(self):
        return self.t.size

    def rows(self, checkpoints=None):
        """CSV rows, optionally restricted to the given 1-based step values."""
        idx = range(len(self)) if checkpoints is None else [int(c) - 1 for c in checkpoints]
        out = []
        for i in idx:
            if not 0 <= i < len(self):
                raise ContractError(f"checkpoint {i + 1} outside trace of length {len(self)}")
            out.append([
                int(self.t[i]),
                self.loss[i],
                self.opt_loss[i],
                self.inst_regret[i],
                self.cum_regret[i],
                self.regret_over_t[i],
                self.measured_D[i],
                self.measured_G[i],
                self.bound_theorem[i],
                self.bound_appendix[i],
            ])
        return out

    def regret_at(self, t):
        return float(self.cum_regret[int(t) - 1])


def log_checkpoints(T, per_decade=10):
    """Logarithmically spaced 1-based step values from 1 to T inclusive."""
    if T < 1:
        raise ContractError(f"T must be >= 1, got {T}")
    n = max(2, int(per_decade * math.log10(max(T, 2))) + 1)
    pts = np.unique(np.round(np.logspace(0.0, math.log10(T), n)).astype(np.int64))
    return [int(p) for p in pts if 1 <= p <= T] + ([T] if T not in pts else [])


def run_online(opt, seq, T, project=True, x0=None):
    """Play seq for T rounds with opt, then fill in the regret columns.

    Each round reveals f_t, pays the loss at the current iterate, feeds
    the gradient to the optimizer, and (when project is on) clamps the
    updated iterate back into the feasible box.  The hindsight optimum is
    computed afterwards, so the regret columns are exact for this run.
    """
    if T < 1:
        raise ContractError(f"T must be >= 1, got {T}")
    x = seq.center() if x0 is None else np.asarray(x0, dtype=np.float64).ravel().copy()
    if x.size != seq.dim:
        raise ContractError(f"x0 dim {x.size} does not match sequence dim {seq.dim}")
    if np.any(x < seq.lo) or np.any(x > seq.hi):
        raise ContractError("x0 must lie inside the feasible box")
    if opt.dim != seq.dim:
        raise ContractError(f"optimizer dim {opt.dim} does not match sequence dim {seq.dim}")

    losses = np.empty(T)
    grad_norms = np.empty(T)
    iterates = np.empty((T, seq.dim))
    for t in range(1, T + 1):
        value, g = seq.eval(t, x)
        losses[t - 1] = value
        grad_norms[t - 1] = float(np.linalg.norm(g))
        iterates[t - 1] = x
        x = x + opt.step(g)
        if project:
            x = np.clip(x, seq.lo, seq.hi)

    x_star = offline_minimizer(seq, T)
    opt_losses = np.array([seq.eval(t, x_star)[0] for t in range(1, T + 1)])
    inst = losses - opt_losses
    cum = np.cumsum(inst)
    steps = np.arange(1, T + 1, dtype=np.float64)
    measured_D = np.maximum.accumulate(np.linalg.norm(iterates - x_star, axis=1))
    measured_G = np.maximum.accumulate(grad_norms)

    beta, lam, gamma = opt.h.beta, opt.h.lam, opt.h.gamma
    root_t = np.sqrt(steps)
    sqrt_g2 = np.sqrt(measured_G**2 + 1.0)
    lam_pow_t = lam**steps
    thm = (measured_D**2 * sqrt_g2 * root_t + measured_G * (2.0 * root_t - 1.0)) / (2.0 * (1.0 - beta))
    thm += measured_D * measured_G * beta * (1.0 - lam_pow_t) / ((1.0 - beta) * (1.0 - lam))
    beta_T = beta * lam ** (steps - 1.0)
    app = root_t * measured_D**2 * sqrt_g2 / (gamma * (1.0 - beta_T))
    app += measured_D * measured_G * beta * (1.0 - lam_pow_t) / ((1.0 - beta) * (1.0 - lam))
    app += gamma * measured_G**2 * (2.0 * root_t - 1.0) / (2.0 * (1.0 - beta))

    return RegretTrace(
        t=np.arange(1, T + 1),
        loss=losses,
        opt_loss=opt_losses,
        inst_regret=inst,
        cum_regret=cum,
        regret_over_t=cum / steps,
        measured_D=measured_D,
        measured_G=measured_G,
        bound_theorem=thm,
        bound_appendix=app,
        x_star=x_star,
    )


@dataclass
class SublinearityReport:
    windows: list
    ratios: list
    ok: bool
    failures: list = field(default_factory=list)


def sublinearity_check(trace, windows, slack=0.05):
    """Average regret at each window, flagged when a later window exceeds
    an earlier one by more than the relative slack."""
    windows = sorted(int(w) for w in windows)
    if windows and windows[-1] > len(trace):
        raise ContractError(f"window {windows[-1]} exceeds trace length {len(trace)}")
    ratios = [float(trace.regret_over_t[w - 1]) for w in windows]
    failures = []
    for i in range(1, len(ratios)):
        if ratios[i] > ratios[i - 1] + slack * abs(ratios[i - 1]) + 1e-12:
            failures.append((windows[i - 1], windows[i], ratios[i - 1], ratios[i]))
    return SublinearityReport(windows=windows, ratios=ratios, ok=not failures, failures=failures)
