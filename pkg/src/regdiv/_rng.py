"""Counter-based per-path random streams.

Each simulated path gets its own xoshiro256++ generator whose 256-bit state
is derived deterministically from (seed, path_index) through splitmix64, so
batch results do not depend on scheduling or worker count.  The compiled
kernel in :mod:`regdiv.mc` inlines the identical construction; this Python
mirror exists so single-path simulations and bit-compatibility tests can run
without numba.

Draw conventions shared by both implementations:

* uniforms map a 64-bit word to (0, 1] via ((z >> 11) + 1) * 2**-53, which
  keeps logarithms finite,
* normals come from the classic Box-Muller pair with the second member
  cached, so draw order is deterministic,
* exponentials are -ln(U)/rate.
"""

from __future__ import annotations

import math

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_TWO_PI = 2.0 * math.pi


def mix64(z: int) -> int:
    z &= _MASK
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


def splitmix64(state: int) -> tuple[int, int]:
    state = (state + _GOLDEN) & _MASK
    return state, mix64(state)


def path_state(seed: int, path_index: int) -> tuple[int, int, int, int]:
    """The xoshiro256++ initial state for one (seed, path) pair."""
    state = mix64((seed & _MASK) ^ mix64((path_index & _MASK) + _GOLDEN))
    state, s0 = splitmix64(state)
    state, s1 = splitmix64(state)
    state, s2 = splitmix64(state)
    state, s3 = splitmix64(state)
    if s0 == s1 == s2 == s3 == 0:
        s0 = 1
    return s0, s1, s2, s3


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class PathRNG:
    """Sequential draws for one path; mirrors the compiled kernel exactly."""

    __slots__ = ("s0", "s1", "s2", "s3", "_spare", "_has_spare")

    def __init__(self, seed: int, path_index: int):
        self.s0, self.s1, self.s2, self.s3 = path_state(seed, path_index)
        self._spare = 0.0
        self._has_spare = False

    def next_u64(self) -> int:
        result = (_rotl((self.s0 + self.s3) & _MASK, 23) + self.s0) & _MASK
        t = (self.s1 << 17) & _MASK
        self.s2 ^= self.s0
        self.s3 ^= self.s1
        self.s1 ^= self.s2
        self.s0 ^= self.s3
        self.s2 ^= t
        self.s3 = _rotl(self.s3, 45)
        return result

    def uniform(self) -> float:
        return ((self.next_u64() >> 11) + 1) * 2.0**-53

    def normal(self) -> float:
        if self._has_spare:
            self._has_spare = False
            return self._spare
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = _TWO_PI * u2
        self._spare = r * math.sin(theta)
        self._has_spare = True
        return r * math.cos(theta)

    def exponential(self, rate: float) -> float:
        return -math.log(self.uniform()) / rate
