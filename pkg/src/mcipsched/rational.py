"""Exact rational helpers on top of fractions.Fraction."""
from __future__ import annotations

import math
from fractions import Fraction

Rat = Fraction


def rat(value) -> Fraction:
    """Parse "a/b", an int, or a Fraction into a Fraction (floats rejected)."""
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "." in text or "e" in text.lower():
            raise ValueError(f"decimal notation not accepted: {value!r}")
        return Fraction(text)
    raise TypeError(f"cannot read {value!r} as an exact rational")


def fmt(value: Fraction) -> str | int:
    """Inverse of rat for JSON: integers stay bare, others become "a/b"."""
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    return f"{value.numerator}/{value.denominator}"


def ceil_to(value: Fraction, unit: Fraction) -> Fraction:
    """Smallest multiple of unit that is >= value."""
    return math.ceil(Fraction(value) / unit) * unit


def floor_to(value: Fraction, unit: Fraction) -> Fraction:
    return math.floor(Fraction(value) / unit) * unit


def as_int(value: Fraction) -> int:
    value = Fraction(value)
    if value.denominator != 1:
        raise ValueError(f"{value} is not integral")
    return value.numerator


def parse_epsilon(value) -> Fraction:
    """Accuracy parameter: must be 1/k for an integer k >= 2."""
    eps = rat(value)
    if eps <= 0 or eps.numerator != 1 or eps > Fraction(1, 2):
        raise ValueError(f"epsilon must be 1/k with integer k >= 2, got {value!r}")
    return eps


def ceil_log(x: Fraction, base: Fraction) -> int:
    """Smallest integer e with base**e >= x, for x > 0 and base > 1 (exact)."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("ceil_log needs a positive argument")
    e = 0
    power = Fraction(1)
    if x <= 1:
        while power / base >= x:
            power /= base
            e -= 1
        return e
    while power < x:
        power *= base
        e += 1
    return e


def geometric_round(x: Fraction, base: Fraction, unit: Fraction) -> Fraction:
    """Round x up to the grid unit * base**e, e integer."""
    return base ** ceil_log(Fraction(x) / unit, base) * unit


def container_round(h: Fraction, eps: Fraction, base: Fraction, grid: Fraction) -> Fraction:
    """Geometric rounding on the (1+eps) grid above `base`, then up to a multiple of `grid`."""
    return ceil_to(geometric_round(h, 1 + eps, base), grid)
