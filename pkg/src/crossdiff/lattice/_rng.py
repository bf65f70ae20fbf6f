"""Deterministic random-number machinery for the lattice simulator.

The event kernels (compiled and pure-Python) consume raw 64-bit draws from a
xoshiro256++ stream whose four-word state lives in a numpy array owned by the
driver.  Everything that needs floating point (Poisson counts for the number
of candidate events per checkpoint interval) runs here in Python on the same
stream, so both kernel backends see bit-identical draw sequences and produce
byte-identical output.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix_output(state: int) -> int:
    z = state & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def make_state(seed: int, stream: int = 0) -> np.ndarray:
    """Expand (seed, stream) into a xoshiro256++ state via splitmix64.

    Stream k takes splitmix outputs 4k..4k+3, so distinct streams from one
    seed never share state words.
    """
    if stream < 0:
        raise ValueError("stream must be nonnegative")
    base = int(seed) & MASK64
    first = 4 * stream + 1
    words = [_splitmix_output(base + i * _GOLDEN) for i in
             range(first, first + 4)]
    if not any(words):  # the all-zero state is a fixed point of xoshiro
        words[0] = _GOLDEN
    return np.array(words, dtype=np.uint64)


class StateRNG:
    """xoshiro256++ view over a shared uint64[4] state array.

    Each draw reads the array, advances it, and writes it back, so a kernel
    can pick up exactly where the Python side stopped and vice versa.
    """

    __slots__ = ("state",)

    def __init__(self, state: np.ndarray):
        if state.dtype != np.uint64 or state.shape != (4,):
            raise ValueError("state must be a uint64 array of length 4")
        self.state = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = (int(v) for v in self.state)
        tmp = (s0 + s3) & MASK64
        result = (((tmp << 23) | (tmp >> 41)) + s0) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & MASK64
        self.state[0] = s0
        self.state[1] = s1
        self.state[2] = s2
        self.state[3] = s3
        return result

    def random(self) -> float:
        """Uniform double in the open interval (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) * 2.0**-53


def poisson(lam: float, rng: StateRNG) -> int:
    """Poisson variate; product method below 10, PTRS rejection above.

    PTRS is the transformed-rejection sampler of Hoermann (1993); the
    constants below are the published ones.
    """
    if lam < 0.0 or not math.isfinite(lam):
        raise ValueError("rate must be finite and nonnegative")
    if lam == 0.0:
        return 0
    if lam < 10.0:
        enlam = math.exp(-lam)
        count = 0
        prod = 1.0
        while True:
            prod *= rng.random()
            if prod <= enlam:
                return count
            count += 1
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = rng.random() - 0.5
        v = rng.random()
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= k * loglam - lam - math.lgamma(k + 1.0)):
            return int(k)
