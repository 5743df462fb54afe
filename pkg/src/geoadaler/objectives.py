"""Deterministic and online test objectives with analytic gradients.

The deterministic objectives (quadratic, Rosenbrock, synthetic logistic)
expose value/grad pairs for the fixed-point and gradient-check suites.
The online objectives reveal one convex loss per step over a feasible box
and know their own exact linear structure when they have one, which makes
the hindsight minimizer computable in closed form.
"""

import math

import numpy as np

from .errors import ConfigError, ContractError, NonFiniteError
from .geometry import as_vector
from .rng import SplitMix64


class Quadratic:
    """f(x) = 0.5 x'Ax - b'x with A symmetric positive definite."""

    def __init__(self, A, b=None):
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ContractError(f"A must be square, got shape {A.shape}")
        if not np.allclose(A, A.T, rtol=0.0, atol=1e-12):
            raise ContractError("A must be symmetric")
        try:
            np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            raise ContractError("A must be positive definite") from None
        self.A = A
        self.dim = A.shape[0]
        self.b = np.zeros(self.dim) if b is None else as_vector(b, "b")
        if self.b.size != self.dim:
            raise ContractError(f"b has dim {self.b.size}, expected {self.dim}")
        self.xstar = np.linalg.solve(A, self.b)
        resid = float(np.linalg.norm(A @ self.xstar - self.b))
        if resid > 1e-10:
            raise ContractError(f"minimizer residual {resid:g} exceeds 1e-10")

    @classmethod
    def diag(cls, entries, b=None):
        return cls(np.diag(np.asarray(entries, dtype=np.float64)), b)

    def value(self, x):
        x = as_vector(x, "point")
        return 0.5 * float(x @ self.A @ x) - float(self.b @ x)

    def grad(self, x):
        x = as_vector(x, "point")
        return self.A @ x - self.b

    def value_and_grad(self, x):
        x = as_vector(x, "point")
        Ax = self.A @ x
        return 0.5 * float(x @ Ax) - float(self.b @ x), Ax - self.b


class Rosenbrock:
    """Chained Rosenbrock; global minimizer at the all-ones vector."""

    def __init__(self, dim):
        if dim < 2:
            raise ContractError(f"rosenbrock needs dim >= 2, got {dim}")
        self.dim = int(dim)
        self.xstar = np.ones(self.dim)

    def value(self, x):
        x = as_vector(x, "point")
        return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))

    def grad(self, x):
        x = as_vector(x, "point")
        g = np.zeros_like(x)
        diff = x[1:] - x[:-1] ** 2
        g[:-1] = -400.0 * x[:-1] * diff - 2.0 * (1.0 - x[:-1])
        g[1:] += 200.0 * diff
        return g

    def value_and_grad(self, x):
        return self.value(x), self.grad(x)


class LogisticSynthetic:
    """Mean cross-entropy of a linear classifier on a fixed synthetic set.

    200 points, 5 features, labels from a ground-truth hyperplane with 10%
    of them flipped; everything drawn from the seeded generator so the
    objective is identical across runs.
    """

    def __init__(self, n=200, dim=5, label_noise=0.1, seed=2024):
        rng = SplitMix64(seed)
        self.dim = int(dim)
        self.X = rng.normal_array((n, self.dim))
        w_true = rng.normal_array(self.dim)
        y = (self.X @ w_true > 0).astype(np.float64)
        flips = rng.uniform_array(n) < label_noise
        self.y = np.where(flips, 1.0 - y, y)

    def value(self, x):
        x = as_vector(x, "weights")
        z = self.X @ x
        # log(1 + e^z) - y z, computed stably
        return float(np.mean(np.logaddexp(0.0, z) - self.y * z))

    def grad(self, x):
        x = as_vector(x, "weights")
        z = self.X @ x
        p = 1.0 / (1.0 + np.exp(-z))
        return self.X.T @ (p - self.y) / self.X.shape[0]

    def value_and_grad(self, x):
        return self.value(x), self.grad(x)


def reddi_adversarial(C, t, x):
    """Periodic scalar loss C*x on steps t = 1 mod 3, else -x.

    The rare large-gradient step dominates the aggregate slope, which
    defeats optimizers that forget past gradient magnitude too quickly.
    """
    if not C > 2:
        raise ConfigError(f"C must exceed 2 so the aggregate slope is positive, got {C}")
    if t < 1:
        raise ContractError(f"step index must be >= 1, got {t}")
    if t % 3 == 1:
        return C * x, C
    return -x, -1.0


class LinearOnlineSequence:
    """Online objective f_t(x) = c_t . x on the box [lo, hi]^dim."""

    def __init__(self, lo, hi):
        self.lo = as_vector(lo, "box lower bound")
        self.hi = as_vector(hi, "box upper bound")
        if self.lo.shape != self.hi.shape or np.any(self.lo >= self.hi):
            raise ContractError("feasible box must satisfy lo < hi componentwise")
        self.dim = self.lo.size

    def coeff(self, t):
        raise NotImplementedError

    def eval(self, t, x):
        c = self.coeff(t)
        x = np.asarray(x, dtype=np.float64).ravel()
        return float(c @ x), c

    def center(self):
        return 0.5 * (self.lo + self.hi)


class ReddiSequence(LinearOnlineSequence):
    def __init__(self, C=3.0):
        super().__init__([-1.0], [1.0])
        if not C > 2:
            raise ConfigError(f"C must exceed 2, got {C}")
        self.C = float(C)

    def coeff(self, t):
        if t < 1:
            raise ContractError(f"step index must be >= 1, got {t}")
        return np.array([self.C if t % 3 == 1 else -1.0])

    def grad_bound(self):
        return self.C


class RandomLinearSequence(LinearOnlineSequence):
    """Coefficients drawn once from the seeded generator, bounded by G."""

    def __init__(self, dim, horizon, seed, grad_bound=1.0, lo=-1.0, hi=1.0):
        super().__init__(np.full(dim, float(lo)), np.full(dim, float(hi)))
        self.horizon = int(horizon)
        self._coeffs = SplitMix64(seed).uniform_array((self.horizon, dim), -grad_bound, grad_bound)
        self._bound = float(grad_bound)

    def coeff(self, t):
        if not 1 <= t <= self.horizon:
            raise ContractError(f"step index {t} outside horizon 1..{self.horizon}")
        return self._coeffs[t - 1]

    def grad_bound(self):
        return self._bound * math.sqrt(self.dim)


def offline_minimizer(seq, T):
    """Best fixed point in hindsight over steps 1..T.

    Linear sequences are solved exactly: the aggregate objective is
    linear, so each coordinate sits at the box edge opposite the summed
    slope's sign (box center on an exact tie).  General convex sequences
    go through projected gradient descent on the summed objective down to
    ||x - P(x - grad)|| <= 1e-9.
    """
    if T < 1:
        raise ContractError(f"horizon must be >= 1, got {T}")
    if not (np.all(np.isfinite(seq.lo)) and np.all(np.isfinite(seq.hi))):
        raise ContractError("offline minimizer needs a bounded feasible box")
    if hasattr(seq, "coeff"):
        slope = np.zeros(seq.dim)
        for t in range(1, T + 1):
            slope += seq.coeff(t)
        center = seq.center()
        return np.where(slope > 0, seq.lo, np.where(slope < 0, seq.hi, center))
    return _projected_descent(seq, T)


def _summed_value_grad(seq, T, x):
    total, grad = 0.0, np.zeros(seq.dim)
    for t in range(1, T + 1):
        v, g = seq.eval(t, x)
        total += v
        grad += g
    return total, grad


def _projected_descent(seq, T, tol=1e-9, max_iter=200_000):
    x = seq.center().copy()
    step = 1.0
    value, grad = _summed_value_grad(seq, T, x)
    for _ in range(max_iter):
        mapped = np.clip(x - grad, seq.lo, seq.hi)
        if float(np.linalg.norm(x - mapped)) <= tol:
            return x
        while True:
            cand = np.clip(x - step * grad, seq.lo, seq.hi)
            cand_value, cand_grad = _summed_value_grad(seq, T, cand)
            move = cand - x
            if cand_value <= value + float(grad @ move) + float(move @ move) / (2.0 * step):
                break
            step *= 0.5
            if step < 1e-18:
                return x
        x, value, grad = cand, cand_value, cand_grad
        step *= 1.3
    raise ContractError("projected gradient descent did not reach tolerance")


def grid_minimizer(seq, T, resolution=1e-3):
    """Exhaustive hindsight minimizer on a grid; oracle for dims <= 2."""
    if seq.dim > 2:
        raise ContractError("grid search oracle only supports dims 1 and 2")
    axes = [np.arange(seq.lo[i], seq.hi[i] + resolution / 2, resolution) for i in range(seq.dim)]
    if seq.dim == 1:
        points = axes[0][:, None]
    else:
        g0, g1 = np.meshgrid(axes[0], axes[1], indexing="ij")
        points = np.column_stack([g0.ravel(), g1.ravel()])
    best_x, best_v = None, math.inf
    for p in points:
        total = 0.0
        for t in range(1, T + 1):
            total += seq.eval(t, p)[0]
        if total < best_v:
            best_v, best_x = total, p.copy()
    return best_x


def finite_diff_grad(fn, x, h=None):
    """Central-difference gradient of a scalar function, one axis at a time."""
    x = as_vector(x, "point")
    if h is None:
        h = 1e-6 * max(1.0, float(np.linalg.norm(x)))
    if not h > 0:
        raise ContractError(f"step size must be > 0, got {h}")
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        hi, lo = fn(x + e), fn(x - e)
        if not (math.isfinite(hi) and math.isfinite(lo)):
            raise NonFiniteError("finite-difference evaluation", i, hi if not math.isfinite(hi) else lo)
        g[i] = (hi - lo) / (2.0 * h)
    return g
