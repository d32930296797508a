"""SplitMix64 generator and the seeded instance generator.

State transition (all arithmetic mod 2^64):
    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    output z ^ (z >> 31)
Integers in [lo, hi] are lo + output % (hi - lo + 1); the small modulo bias is
accepted so that other implementations can reproduce the stream exactly.
"""
from __future__ import annotations

from fractions import Fraction

from .model import MODELS, SETUP_CLASS, Instance, Job

MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def randint(self, lo: int, hi: int) -> int:
        if hi < lo:
            raise ValueError("empty range")
        return lo + self.next() % (hi - lo + 1)


def generate(model: str, n: int, m: int, seed: int, classes: int | None = None,
             grid: int = 10, denominator: int = 1) -> Instance:
    """Random instance with times k/denominator, k drawn from 1..grid."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    if n < 0 or m < 1 or grid < 1 or denominator < 1:
        raise ValueError("need n >= 0, m >= 1, grid >= 1, denominator >= 1")
    rng = SplitMix64(seed)

    def draw() -> Fraction:
        return Fraction(rng.randint(1, grid), denominator)

    if model == SETUP_CLASS:
        K = classes if classes is not None else min(n, 2)
        if K > n or (n > 0 and K < 1):
            raise ValueError("need 1 <= K <= n classes")
        setups = tuple(draw() for _ in range(K))
        jobs = []
        for j in range(n):
            k = j if j < K else rng.randint(0, K - 1)
            jobs.append(Job(draw(), cls=k))
        return Instance(model, m, tuple(jobs), setups)
    jobs = []
    for _ in range(n):
        p = draw()
        jobs.append(Job(p, draw()))
    return Instance(model, m, tuple(jobs))
