"""Deterministic random streams shared by the stochastic lattice kernels.

xorshift64* generator with splitmix64 seed derivation.  Two implementations
of the same stream: plain Python (reference, testable without compilation)
and numba-jitted helpers that thread a length-1 uint64 state array through
the simulation kernels.  The test suite locks the two together sample by
sample, so the jitted kernels inherit the reference semantics.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1

_SPLITMIX_GAMMA = 0x9E3779B97F4B7C15
_SPLITMIX_MUL1 = 0xBF58476D1CE4E5B9
_SPLITMIX_MUL2 = 0x94D049BB133111EB
_XORSHIFT_MUL = 2685821657736338717


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new_state, output)."""
    state = (state + _SPLITMIX_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _SPLITMIX_MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _SPLITMIX_MUL2) & MASK64
    z = z ^ (z >> 31)
    return state, z


def derive_stream_seeds(master_seed: int, count: int) -> np.ndarray:
    """Derive `count` independent xorshift seeds from one master seed.

    Zero outputs are remapped: zero is the absorbing state of xorshift64*.
    """
    state = master_seed & MASK64
    seeds = np.empty(count, dtype=np.uint64)
    for k in range(count):
        state, out = splitmix64(state)
        if out == 0:
            out = _SPLITMIX_GAMMA
        seeds[k] = out
    return seeds


class Xorshift64Star:
    """Pure-Python reference stream.  Mirrors the jitted helpers exactly."""

    def __init__(self, seed: int):
        seed &= MASK64
        if seed == 0:
            seed = _SPLITMIX_GAMMA
        self._x = seed

    def next_u64(self) -> int:
        x = self._x
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self._x = x
        return (x * _XORSHIFT_MUL) & MASK64

    def uniform(self) -> float:
        # 53-bit mantissa draw in [0, 1)
        return (self.next_u64() >> 11) * 2.0**-53

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection below the largest multiple of n.

        Bound matches the jitted helper: largest multiple of n that fits in
        uint64, i.e. ((2**64 - 1) // n) * n, not (2**64 // n) * n.
        """
        if n <= 0:
            raise ValueError("n must be positive")
        bound = (((1 << 64) - 1) // n) * n
        while True:
            out = self.next_u64()
            if out < bound:
                return out % n


@njit(cache=True, nogil=True)
def next_u64(state):
    """Advance a length-1 uint64 state array; return the next raw draw."""
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return x * np.uint64(2685821657736338717)


@njit(cache=True, nogil=True)
def next_uniform(state):
    """Uniform draw in [0, 1) with 53 random mantissa bits."""
    return (next_u64(state) >> np.uint64(11)) * 2.0**-53


@njit(cache=True, nogil=True)
def next_below(state, n):
    """Unbiased integer in [0, n); n must be a positive uint64."""
    bound = (np.uint64(0xFFFFFFFFFFFFFFFF) // n) * n
    while True:
        out = next_u64(state)
        if out < bound:
            return out % n


def make_state(seed: int) -> np.ndarray:
    """Jitted-kernel state vector for one stream."""
    seed &= MASK64
    if seed == 0:
        seed = _SPLITMIX_GAMMA
    return np.array([seed], dtype=np.uint64)
