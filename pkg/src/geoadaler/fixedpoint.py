"""Fixed-point view of the deterministic method.

One deterministic update x -> x - gamma * grad / sqrt(||grad||^2 + eps)
is an operator application; its fixed points are exactly the stationary
points of the objective.  This module estimates Lipschitz constants
empirically, evaluates the closed-form contraction parameter, iterates to
a fixed point, and checks the co-coercivity and quadratic-bound
inequalities by sampling.
"""

import math

import numpy as np
from dataclasses import dataclass

from .errors import ContractError
from .geometry import _scaled_direction, as_vector
from .rng import SplitMix64


@dataclass(frozen=True)
class OperatorConfig:
    objective: object
    gamma: float
    epsilon: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ContractError(f"gamma must be > 0, got {self.gamma}")
        if not self.epsilon > 0:
            raise ContractError(f"epsilon must be > 0, got {self.epsilon}")


def normalized_gradient_map(obj, epsilon=1.0):
    """The map grad f / sqrt(||grad f||^2 + epsilon) as a callable."""

    def phi(x):
        g = as_vector(obj.grad(x), "gradient")
        return _scaled_direction(g, epsilon)

    return phi


def apply_T(cfg, x):
    """One operator application; bitwise identical to a step with beta = 0."""
    x = as_vector(x, "point")
    g = as_vector(cfg.objective.grad(x), "gradient")
    return x - cfg.gamma * _scaled_direction(g, cfg.epsilon)


def power_iteration(A, tol=1e-10, max_iter=100_000, seed=7):
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    A = np.asarray(A, dtype=np.float64)
    rng = SplitMix64(seed)
    v = rng.normal_array(A.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = A @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        new_lam = float(v @ A @ v)
        if abs(new_lam - lam) <= tol * max(1.0, abs(new_lam)):
            return new_lam
        lam = new_lam
    return lam


def sample_pairs(lo, hi, n_pairs, seed):
    """Test-point pairs inside the box, mixing three regimes.

    One third independent uniform pairs, one third axis-aligned small
    perturbations at uniform base points, one third axis-aligned pairs at
    points pulled toward the box center where curvature of normalized
    maps concentrates.
    """
    lo = as_vector(lo, "box lower bound")
    hi = as_vector(hi, "box upper bound")
    if np.any(hi <= lo):
        raise ContractError("sampling box must have positive volume in every axis")
    dim = lo.size
    rng = SplitMix64(seed)
    span = hi - lo
    n_free = n_pairs // 3
    n_axis = (n_pairs - n_free) // 2
    n_center = n_pairs - n_free - n_axis

    xs = [rng.uniform_array((n_free, dim)) * span + lo]
    ys = [rng.uniform_array((n_free, dim)) * span + lo]

    for count, shrink in ((n_axis, False), (n_center, True)):
        base = rng.uniform_array((count, dim)) * span + lo
        if shrink:
            pull = rng.uniform_array((count, 1)) ** 3
            base = (base - (lo + hi) / 2.0) * pull + (lo + hi) / 2.0
        axes = (np.arange(count) % dim)
        h = 1e-5 * span[axes] * (0.5 + rng.uniform_array(count))
        offset = np.zeros((count, dim))
        offset[np.arange(count), axes] = h
        perturbed = np.clip(base + offset, lo, hi)
        xs.append(base)
        ys.append(perturbed)

    return np.concatenate(xs), np.concatenate(ys)


def estimate_lipschitz(map_fn, lo, hi, n_pairs=10_000, seed=11):
    """max ||map(x) - map(y)|| / ||x - y|| over sampled pairs in the box."""
    if n_pairs < 1000:
        raise ContractError(f"need at least 1000 pairs for a usable estimate, got {n_pairs}")
    xs, ys = sample_pairs(lo, hi, n_pairs, seed)
    best = 0.0
    for x, y in zip(xs, ys):
        dx = float(np.linalg.norm(x - y))
        if dx < 1e-12:
            continue
        ratio = float(np.linalg.norm(map_fn(x) - map_fn(y))) / dx
        if ratio > best:
            best = ratio
    return best


def contraction_alpha(gamma, L, LG):
    """sqrt(1 + gamma^2 LG^2 - 2 gamma LG^2 / L); below 1 means the closed
    form certifies a contraction, at or above 1 there is no guarantee."""
    if not gamma > 0:
        raise ContractError(f"gamma must be > 0, got {gamma}")
    if not (L > 0 and LG >= 0):
        raise ContractError(f"Lipschitz constants must be positive, got L={L}, LG={LG}")
    radicand = 1.0 + gamma**2 * LG**2 - 2.0 * gamma * LG**2 / L
    if radicand < -1e-12:
        raise ContractError(f"negative radicand {radicand:g}: gamma={gamma}, L={L}, LG={LG}")
    return math.sqrt(max(radicand, 0.0))


@dataclass
class FixedPointResult:
    x: np.ndarray
    iterations: int
    converged: bool
    grad_norms: np.ndarray
    dist_to_opt: np.ndarray | None

    def decay_ratios(self):
        """Per-step ||x_{t+1} - x*|| / ||x_t - x*|| where defined."""
        if self.dist_to_opt is None:
            raise ContractError("distance trace requires an objective with a known minimizer")
        d = self.dist_to_opt
        mask = d[:-1] > 0
        return d[1:][mask] / d[:-1][mask]


def iterate_to_fixed_point(cfg, x0, tol=1e-8, max_iter=100_000):
    """Apply the operator until the gradient norm drops to tol.

    Runs to max_iter at most and flags non-convergence instead of raising,
    so divergent configurations can still be inspected.
    """
    if not tol > 0:
        raise ContractError(f"tolerance must be > 0, got {tol}")
    obj = cfg.objective
    xstar = getattr(obj, "xstar", None)
    x = as_vector(x0, "starting point").copy()
    grad_norms = []
    dists = [] if xstar is not None else None
    converged = False
    iterations = 0
    for iterations in range(max_iter + 1):
        g = as_vector(obj.grad(x), "gradient")
        gn = float(np.linalg.norm(g))
        grad_norms.append(gn)
        if dists is not None:
            dists.append(float(np.linalg.norm(x - xstar)))
        if gn <= tol:
            converged = True
            break
        if iterations == max_iter:
            break
        x = x - cfg.gamma * _scaled_direction(g, cfg.epsilon)
    return FixedPointResult(
        x=x,
        iterations=iterations,
        converged=converged,
        grad_norms=np.array(grad_norms),
        dist_to_opt=np.array(dists) if dists is not None else None,
    )


@dataclass
class InequalityReport:
    n_pairs: int
    coco_violations: int
    coco_max_violation: float
    quad_violations: int
    quad_max_violation: float
    lg_used: float
    l_used: float


def verify_cocoercivity(obj, n_pairs=10_000, seed=13, lo=None, hi=None, epsilon=1.0,
                        lg=None, l=None, rel_slack=1e-9, abs_slack=1e-12):
    """Sampled check of two convex-analysis inequalities.

    Co-coercivity of the normalized gradient map Phi with constant LG:
    (1/LG) ||Phi(x)-Phi(y)||^2 <= <Phi(x)-Phi(y), x-y>; and the quadratic
    upper-bound consequence ||grad f(z)||^2 / (2L) <= f(z) - f(x*).  LG
    defaults to its sampled estimate (a lower estimate, hence the small
    stated slack); L defaults to the exact top curvature for quadratics.
    """
    dim = obj.dim
    if lo is None:
        lo = np.full(dim, -10.0)
    if hi is None:
        hi = np.full(dim, 10.0)
    phi = normalized_gradient_map(obj, epsilon)
    if lg is None:
        lg = estimate_lipschitz(phi, lo, hi, max(n_pairs, 1000), seed + 1)
    if l is None:
        if hasattr(obj, "A"):
            l = power_iteration(obj.A)
        else:
            l = estimate_lipschitz(obj.grad, lo, hi, max(n_pairs, 1000), seed + 2)

    xs, ys = sample_pairs(lo, hi, n_pairs, seed)
    coco_violations = 0
    coco_max = 0.0
    quad_violations = 0
    quad_max = 0.0
    xstar = getattr(obj, "xstar", None)
    f_star = obj.value(xstar) if xstar is not None else None
    for x, y in zip(xs, ys):
        dphi = phi(x) - phi(y)
        lhs = float(dphi @ dphi) / lg
        rhs = float(dphi @ (x - y))
        gap = lhs - (rhs + rel_slack * abs(rhs) + abs_slack)
        if gap > 0:
            coco_violations += 1
            coco_max = max(coco_max, gap)
        if f_star is not None:
            g = obj.grad(x)
            q_lhs = float(g @ g) / (2.0 * l)
            q_rhs = obj.value(x) - f_star
            q_gap = q_lhs - (q_rhs + rel_slack * abs(q_rhs) + abs_slack)
            if q_gap > 0:
                quad_violations += 1
                quad_max = max(quad_max, q_gap)
    return InequalityReport(
        n_pairs=n_pairs,
        coco_violations=coco_violations,
        coco_max_violation=coco_max,
        quad_violations=quad_violations,
        quad_max_violation=quad_max,
        lg_used=lg,
        l_used=l,
    )
