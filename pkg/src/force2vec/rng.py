"""Counter-based random streams usable inside parallel numba kernels.

Every draw is a pure function of ``(seed, a, b, counter)``, so the values a
worker sees never depend on how work was scheduled across threads.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@njit(inline="always")
def mix64(x):
    x = np.uint64(x)
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


@njit(inline="always")
def stream_key(seed, a, b):
    """Key for the stream identified by two integers (e.g. iteration, vertex)."""
    k = mix64(np.uint64(seed) + _GOLDEN)
    k = mix64(k ^ (np.uint64(a) + _GOLDEN))
    return mix64(k ^ (np.uint64(b) * _GOLDEN + np.uint64(1)))


@njit(inline="always")
def draw_index(key, counter, n):
    """``counter``-th uniform integer in [0, n) from stream ``key``."""
    x = mix64(key + (np.uint64(counter) + np.uint64(1)) * _GOLDEN)
    return np.int64(x % np.uint64(n))


@njit(cache=True)
def draw_indices(seed, a, b, count, n):
    key = stream_key(seed, a, b)
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        out[i] = draw_index(key, i, n)
    return out
