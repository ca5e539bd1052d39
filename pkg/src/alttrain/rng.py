"""Deterministic, platform-independent random number generation.

The generator is SplitMix64 used in counter mode: draw ``j`` (1-based) of a
stream seeded with ``s`` is ``mix64((s + j * GAMMA) mod 2**64)`` where GAMMA
is the canonical odd constant 0x9E3779B97F4A7C15 and ``mix64`` is the
xor-shift/multiply finalizer below.  Uniform doubles take the top 53 bits:
``(x >> 11) * 2**-53``, giving values in [0, 1).

Only fixed-width integer arithmetic and IEEE-754 float64 operations are
used, so streams are bit-identical across platforms and numpy versions.
"""

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1
_U53_SCALE = 2.0**-53


def mix64(z):
    """SplitMix64 finalizer on a Python int, reduced mod 2**64."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


class Rng:
    """Counter-based SplitMix64 stream.

    The stream position is an explicit counter, so drawing ``n`` values
    advances the state by exactly ``n`` regardless of which method is used.
    Equal seeds give bit-identical streams.
    """

    __slots__ = ("seed", "_counter")

    def __init__(self, seed):
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise TypeError("seed must be an int")
        if not 0 <= seed <= _MASK64:
            raise ValueError("seed must be in [0, 2**64)")
        self.seed = seed
        self._counter = 0

    def raw_uint64(self, n):
        """Next n raw 64-bit outputs as a uint64 array."""
        if n < 0:
            raise ValueError("n must be >= 0")
        js = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        z = (np.uint64(self.seed) + js * np.uint64(GAMMA)).astype(np.uint64)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def uniform01(self, n):
        """n float64 values uniform on [0, 1)."""
        return (self.raw_uint64(n) >> np.uint64(11)).astype(np.float64) * _U53_SCALE

    def uniform(self, lo, hi, n):
        """n float64 values uniform on [lo, hi)."""
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError("bounds must be finite")
        if not lo < hi:
            raise ValueError("need lo < hi")
        vals = lo + (hi - lo) * self.uniform01(n)
        # Rounding of lo + (hi-lo)*u can land exactly on hi; keep the
        # half-open contract.
        np.copyto(vals, np.nextafter(hi, lo), where=vals >= hi)
        return vals

    def integer(self, bound):
        """One integer uniform on [0, bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return min(int(self.uniform01(1)[0] * bound), bound - 1)

    def partial_permutation(self, n, take):
        """First ``take`` entries of a uniform permutation of range(n).

        Fisher-Yates on a sparse virtual array; consumes exactly ``take``
        draws, so streams stay aligned regardless of n.
        """
        if not 0 <= take <= n:
            raise ValueError("need 0 <= take <= n")
        u = self.uniform01(take)
        swapped = {}
        out = np.empty(take, dtype=np.int64)
        for i in range(take):
            j = i + int(u[i] * (n - i))
            if j > n - 1:
                j = n - 1
            out[i] = swapped.get(j, j)
            swapped[j] = swapped.get(i, i)
        return out

    def permutation(self, n):
        """Uniform permutation of range(n)."""
        return self.partial_permutation(n, n)

    def spawn(self):
        """Child generator seeded from the next raw output of this stream."""
        return Rng(int(self.raw_uint64(1)[0]))

    @property
    def position(self):
        """Number of raw draws consumed so far."""
        return self._counter
