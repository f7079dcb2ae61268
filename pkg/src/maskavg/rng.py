"""Deterministic seeded randomness for agents, schedulers and audits.

Everything derives from a single 64-bit master seed through a splitmix64
finalizer, so that:

* each agent's random shares depend only on (master seed, agent id) and
  never on message delivery order — required for the asynchrony
  independence of the protocol;
* audit trials derive their streams solely from (master seed, trial
  index), which makes trial batches reproducible and embarrassingly
  parallel;
* the k-th output of a stream is a closed-form function of the stream
  seed, so whole batches of trials can be generated with vectorized
  uint64 numpy arithmetic, bit-identical to the scalar streams.

Not cryptographic randomness; statistical quality is what the simulation
needs and gets.
"""

from __future__ import annotations

import numpy as np

from .unitinterval import UFrac

__all__ = ["MASK64", "derive_seed", "SplitMix64", "stream_output_np", "derive_seed_np"]

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
# Domain separation between "derive a child seed" and "draw from a stream".
_DERIVE_SALT = 0xD1B54A32D192ED03

_GOLDEN_NP = np.uint64(_GOLDEN)
_MIX1_NP = np.uint64(_MIX1)
_MIX2_NP = np.uint64(_MIX2)
_SALT_NP = np.uint64(_DERIVE_SALT)


def _finalize(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *tags: int) -> int:
    """Derive a child seed by folding integer tags into ``seed``.

    Each tag is mixed through the full 64-bit finalizer, so children for
    distinct tag paths are statistically independent.
    """
    s = seed & MASK64
    for tag in tags:
        s = _finalize(((s ^ _DERIVE_SALT) + ((tag + 1) * _GOLDEN)) & MASK64)
    return s


class SplitMix64:
    """Sequential 64-bit generator; output k is finalize(seed + k*golden)."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & MASK64

    def next_raw(self) -> int:
        self._state = (self._state + _GOLDEN) & MASK64
        return _finalize(self._state)

    def next_ufrac(self) -> UFrac:
        """Uniform draw on the Q0.64 lattice, standing in for Uniform[0,1)."""
        return UFrac(self.next_raw())

    def next_unit(self) -> float:
        """Uniform double in [0,1) with 53 random bits."""
        return (self.next_raw() >> 11) * 2.0**-53

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) without modulo bias (rejection)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = MASK64 - (MASK64 + 1) % n
        while True:
            r = self.next_raw()
            if r <= limit:
                return r % n


def _finalize_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1_NP
    z = (z ^ (z >> np.uint64(27))) * _MIX2_NP
    return z ^ (z >> np.uint64(31))


def derive_seed_np(seed: np.ndarray | int, tag: np.ndarray | int) -> np.ndarray:
    """Vectorized ``derive_seed`` for one tag level (uint64 in, uint64 out)."""
    s = np.asarray(seed, dtype=np.uint64)
    t = np.asarray(tag, dtype=np.uint64)
    with np.errstate(over="ignore"):  # wrap mod 2**64 is the point
        return _finalize_np((s ^ _SALT_NP) + (t + np.uint64(1)) * _GOLDEN_NP)


def stream_output_np(seed: np.ndarray | int, k: np.ndarray | int) -> np.ndarray:
    """Vectorized k-th output (1-based) of ``SplitMix64(seed)``."""
    s = np.asarray(seed, dtype=np.uint64)
    kk = np.asarray(k, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _finalize_np(s + kk * _GOLDEN_NP)
