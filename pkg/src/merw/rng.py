"""Reproducible per-trajectory random streams.

Each trajectory owns a SplitMix64 stream derived from ``(seed, index)``:

    base  = mix64(seed)
    state = mix64(base + index * GOLDEN)
    gamma = mix_gamma(state + GOLDEN)
    next  : state += gamma; return mix64(state)

``mix64`` is the SplitMix64 finalizer and ``mix_gamma`` the odd-increment
derivation of Java's ``SplittableRandom``, so distinct stream indices get
distinct starting states and distinct Weyl increments. A uniform double is
``(next >> 11) * 2**-53``. All arithmetic is modulo 2**64.

The numba helpers below reproduce the pure-Python class bit for bit.
"""
from __future__ import annotations

import numba
import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_G1 = 0xFF51AFD7ED558CCD
_G2 = 0xC4CEB9FE1A85EC53
_INV53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def mix_gamma(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 33)) * _G1) & MASK
    z = ((z ^ (z >> 33)) * _G2) & MASK
    z = (z ^ (z >> 33)) | 1
    if bin(z ^ (z >> 1)).count("1") < 24:
        z ^= 0xAAAAAAAAAAAAAAAA
    return z


def stream_key(seed: int, index: int) -> tuple:
    """Initial ``(state, gamma)`` of stream ``index`` under root ``seed``."""
    if not 0 <= seed <= MASK or not 0 <= index <= MASK:
        raise ValueError("seed and stream index must be 64-bit unsigned integers")
    base = mix64(seed)
    state = mix64((base + index * GOLDEN) & MASK)
    gamma = mix_gamma((state + GOLDEN) & MASK)
    return state, gamma


class RngStream:
    """Pure-Python reference stream; slow, used by the reference steppers."""

    def __init__(self, seed: int, index: int = 0):
        self.seed = seed
        self.index = index
        self._state, self._gamma = stream_key(seed, index)
        self.draws = 0

    def next_u64(self) -> int:
        self._state = (self._state + self._gamma) & MASK
        self.draws += 1
        return mix64(self._state)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * _INV53

    def __repr__(self):
        return f"RngStream(seed={self.seed}, index={self.index}, draws={self.draws})"


# numba versions -------------------------------------------------------------

_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U33 = np.uint64(33)
_U11 = np.uint64(11)
_U1 = np.uint64(1)
_NM1 = np.uint64(_M1)
_NM2 = np.uint64(_M2)
_NG1 = np.uint64(_G1)
_NG2 = np.uint64(_G2)
_NGOLD = np.uint64(GOLDEN)
_NFLIP = np.uint64(0xAAAAAAAAAAAAAAAA)


@numba.njit(cache=True, inline="always")
def nb_mix64(z):
    z = (z ^ (z >> _U30)) * _NM1
    z = (z ^ (z >> _U27)) * _NM2
    return z ^ (z >> _U31)


@numba.njit(cache=True)
def _popcount(z):
    c = 0
    while z:
        z &= z - _U1
        c += 1
    return c


@numba.njit(cache=True)
def nb_mix_gamma(z):
    z = (z ^ (z >> _U33)) * _NG1
    z = (z ^ (z >> _U33)) * _NG2
    z = (z ^ (z >> _U33)) | _U1
    if _popcount(z ^ (z >> _U1)) < 24:
        z ^= _NFLIP
    return z


@numba.njit(cache=True)
def nb_stream_key(seed, index):
    base = nb_mix64(np.uint64(seed))
    state = nb_mix64(base + np.uint64(index) * _NGOLD)
    gamma = nb_mix_gamma(state + _NGOLD)
    return state, gamma


@numba.njit(cache=True, inline="always")
def nb_uniform(state, gamma):
    """Advance ``state`` and return ``(new_state, uniform)``."""
    state = state + gamma
    return state, np.float64(nb_mix64(state) >> _U11) * _INV53


@numba.njit(cache=True)
def nb_uniforms(seed, index, count):
    """First ``count`` uniforms of stream ``(seed, index)``."""
    state, gamma = nb_stream_key(seed, index)
    out = np.empty(count)
    for i in range(count):
        state, out[i] = nb_uniform(state, gamma)
    return out
