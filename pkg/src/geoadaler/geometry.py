"""Geometric primitives behind the optimizers.

The annealing factor ``||g|| / sqrt(||g||^2 + eps)`` is the cosine of the
acute angle between the surface normal ``[-g, 1]`` and its projection onto
the horizontal hyperplane.  It approaches 1 for steep gradients and 0 near
stationary points, replacing the raw gradient magnitude as the step scale.
"""

import math

import numpy as np

from .errors import ContractError, NonFiniteError


def as_vector(values, what="vector"):
    """Coerce to a float64 1-D array and reject NaN/Inf with the bad index."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if not np.all(np.isfinite(v)):
        idx = int(np.flatnonzero(~np.isfinite(v))[0])
        raise NonFiniteError(what, idx, float(v[idx]))
    return v


def annealing_factor(g, epsilon=1.0):
    """Step-scale factor ||g|| / sqrt(||g||^2 + epsilon) in [0, 1).

    Uses the Euclidean norm over the full flattened gradient.  Returns 0
    exactly when g = 0.
    """
    if not epsilon > 0:
        raise ContractError(f"epsilon must be > 0, got {epsilon}")
    g = as_vector(g, "gradient")
    n = float(np.linalg.norm(g))
    if n == 0.0:
        return 0.0
    return n / math.hypot(n, math.sqrt(epsilon))


def cos_theta_oracle(g):
    """Brute-force angle computation for the epsilon = 1 annealing factor.

    Builds the (dim+1)-vectors n = [-g, 1] and h = [-g, 0] explicitly and
    returns their normalised dot product.  By convention the result is 0
    for g = 0 (h degenerates to the zero vector).
    """
    g = as_vector(g, "gradient")
    normal = np.concatenate([-g, [1.0]])
    horizontal = np.concatenate([-g, [0.0]])
    h_norm = float(np.linalg.norm(horizontal))
    if h_norm == 0.0:
        # covers g = 0 and subnormal g whose squared norm underflows
        return 0.0
    dot = float(np.dot(normal, horizontal))
    return dot / (float(np.linalg.norm(normal)) * h_norm)


def ema_update(m_prev, g, beta):
    """Exponential moving average: beta * m_prev + (1 - beta) * g."""
    if not 0.0 <= beta < 1.0:
        raise ContractError(f"beta must lie in [0, 1), got {beta}")
    m_prev = as_vector(m_prev, "ema state")
    g = as_vector(g, "gradient")
    if m_prev.shape != g.shape:
        raise ContractError(f"dimension mismatch: ema state {m_prev.shape} vs gradient {g.shape}")
    return beta * m_prev + (1.0 - beta) * g


def _scaled_direction(m, epsilon, group_slices=None):
    """m / sqrt(||m||^2 + epsilon), with the norm taken globally or per group."""
    if group_slices is None:
        n = float(np.linalg.norm(m))
        return m / math.hypot(n, math.sqrt(epsilon))
    out = np.empty_like(m)
    for sl in group_slices:
        n = float(np.linalg.norm(m[sl]))
        out[sl] = m[sl] / math.hypot(n, math.sqrt(epsilon))
    return out


def geo_update_step(x, m, gamma, epsilon=1.0, group_slices=None):
    """One raw update: x - gamma * m / sqrt(||m||^2 + epsilon).

    The returned displacement has norm strictly below gamma whenever
    epsilon >= 1; a zero m leaves x unchanged.  ``group_slices`` switches
    from the default global norm to independent per-group scaling.
    """
    if not gamma > 0:
        raise ContractError(f"gamma must be > 0, got {gamma}")
    if not epsilon > 0:
        raise ContractError(f"epsilon must be > 0, got {epsilon}")
    x = as_vector(x, "parameters")
    m = as_vector(m, "update direction")
    if x.shape != m.shape:
        raise ContractError(f"dimension mismatch: parameters {x.shape} vs direction {m.shape}")
    return x - gamma * _scaled_direction(m, epsilon, group_slices)
