"""Deterministic counter-based random stream (splitmix64).

Every random decision in the engine is drawn from this stream so that a run
is reproducible bit-for-bit from its seed alone, independent of call order
inside numpy or the platform's libc.

The generator is the splitmix64 finalizer applied to an affine counter:

    value(i) = mix64(seed + (i + 1) * GAMMA)   (mod 2**64)

where ``mix64`` is the xor-shift/multiply finalizer from Vigna's
splitmix64.c and GAMMA = 0x9E3779B97F4A7C15.  Because the i-th output is a
pure function of ``(seed, i)``, bulk draws can be vectorized with numpy
uint64 arithmetic and are guaranteed identical to scalar evaluation.

Derived values:
  * uniforms take the top 53 bits: u = (value >> 11) * 2**-53, in [0, 1).
  * normals use Box-Muller on consecutive uniform pairs, with the first
    uniform shifted into (0, 1] to keep the logarithm finite.
  * bounded integers use value % bound (the tiny modulo bias is irrelevant
    here; determinism is what matters).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MULT1) & _MASK64
    z = ((z ^ (z >> 27)) * _MULT2) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MULT1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MULT2)
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, label: str, index: int = 0) -> int:
    """Derive an independent sub-stream seed for (seed, label, index).

    Folds the label bytes and the index into the master seed one mix at a
    time; used to give the initial state, the selector, and each stage
    transition their own non-overlapping streams.
    """
    h = mix64(seed)
    for byte in label.encode("utf-8"):
        h = mix64(h ^ byte)
    return mix64(h ^ ((index * _GAMMA) & _MASK64))


class UniformStream:
    """Stateful view over the counter-based stream for one consumer.

    The counter advances by the number of raw 64-bit values consumed, so a
    sequence of draws is equivalent to one big draw split at the same
    offsets.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self.counter = 0

    def uint64(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit values as a uint64 array."""
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            states = np.uint64(self.seed) + idx * np.uint64(_GAMMA)
            return _mix64_array(states)

    def uniform(self, n: int) -> np.ndarray:
        """Next ``n`` uniforms in [0, 1), float64, 53-bit resolution."""
        return (self.uint64(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def normal(self, n: int) -> np.ndarray:
        """Next ``n`` standard normals via Box-Muller.

        Consumes an even number of uniforms (pairs); for odd ``n`` the last
        generated normal is discarded.
        """
        pairs = (n + 1) // 2
        raw = self.uint64(2 * pairs)
        # shift u1 into (0, 1] so log(u1) is finite
        u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]

    def integer_below(self, bound: int) -> int:
        """One integer in [0, bound)."""
        if bound < 1:
            raise ValueError("bound must be >= 1")
        return int(self.uint64(1)[0] % np.uint64(bound))

    def choose(self, items: np.ndarray, k: int) -> np.ndarray:
        """Pick ``k`` distinct entries of ``items`` (partial Fisher-Yates).

        Returned entries are sorted; the draw order itself is not exposed.
        """
        pool = np.array(items, copy=True)
        n = len(pool)
        if not 0 <= k <= n:
            raise ValueError(f"cannot choose {k} of {n} items")
        for j in range(k):
            swap = j + self.integer_below(n - j)
            pool[j], pool[swap] = pool[swap], pool[j]
        return np.sort(pool[:k])
