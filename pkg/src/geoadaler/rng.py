"""Splittable 64-bit PRNG (SplitMix64).

Every experiment draws randomness through this generator so that runs are
bit-reproducible across platforms.  The scalar and bulk paths walk the same
counter sequence: ``n`` scalar draws leave the state exactly where one bulk
draw of ``n`` values does.
"""

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 2**-53, top 53 bits of a u64 -> double in [0, 1)
_TO_UNIT = 1.0 / (1 << 53)


def _mix(z):
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def _mix_array(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Counter-based splittable generator with vectorised bulk output."""

    def __init__(self, seed):
        self._state = int(seed) & _MASK64

    @property
    def state(self):
        return self._state

    def next_u64(self):
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix(self._state)

    def split(self):
        """Child generator seeded from this stream; both remain independent."""
        return SplitMix64(self.next_u64())

    def _u64_array(self, n):
        n = int(n)
        if n == 0:
            return np.empty(0, dtype=np.uint64)
        counters = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GOLDEN)
        counters += np.uint64(self._state)
        self._state = (self._state + n * _GOLDEN) & _MASK64
        return _mix_array(counters)

    def uniform(self, lo=0.0, hi=1.0):
        u = (self.next_u64() >> 11) * _TO_UNIT
        return lo + (hi - lo) * u

    def uniform_array(self, shape, lo=0.0, hi=1.0):
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        n = int(np.prod(shape)) if shape else 1
        u = (self._u64_array(n) >> np.uint64(11)).astype(np.float64) * _TO_UNIT
        return (lo + (hi - lo) * u).reshape(shape)

    def normal_array(self, shape):
        """Standard normals via Box-Muller on consecutive uniform pairs."""
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        n = int(np.prod(shape)) if shape else 1
        half = (n + 1) // 2
        bits = self._u64_array(2 * half)
        # u1 in (0, 1] so the log is finite
        u1 = ((bits[:half] >> np.uint64(11)).astype(np.float64) + 1.0) * _TO_UNIT
        u2 = (bits[half:] >> np.uint64(11)).astype(np.float64) * _TO_UNIT
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * math.pi * u2
        out = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return out.reshape(shape)

    def normal(self):
        return float(self.normal_array(1)[0])

    def permutation(self, n):
        """Deterministic permutation of range(n): order by 64-bit random keys."""
        keys = self._u64_array(n)
        return np.argsort(keys, kind="stable")
