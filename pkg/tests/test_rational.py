from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcipsched.rational import (ceil_log, ceil_to, container_round, floor_to, fmt,
                                geometric_round, parse_epsilon, rat)

positive = st.fractions(min_value=Fraction(1, 1000), max_value=1000)


def test_rat_parses_strings_ints_and_fractions():
    assert rat("3/6") == Fraction(1, 2)
    assert rat(7) == 7
    assert rat(Fraction(2, 3)) == Fraction(2, 3)


@pytest.mark.parametrize("bad", ["0.5", "1e3", 0.5, True])
def test_rat_rejects_inexact_input(bad):
    with pytest.raises((ValueError, TypeError)):
        rat(bad)


@given(st.fractions())
def test_fmt_round_trips(x):
    assert rat(fmt(x)) == x


def test_fmt_keeps_integers_bare():
    assert fmt(Fraction(6, 3)) == 2
    assert fmt(Fraction(4, 6)) == "2/3"


@given(positive, positive)
def test_ceil_and_floor_to_multiples(x, unit):
    up, down = ceil_to(x, unit), floor_to(x, unit)
    assert (up / unit).denominator == 1 and (down / unit).denominator == 1
    assert down <= x <= up
    assert up - x < unit and x - down < unit


@pytest.mark.parametrize("text", ["1/2", "1/3", "1/10"])
def test_epsilon_accepts_reciprocals(text):
    assert parse_epsilon(text) == rat(text)


@pytest.mark.parametrize("text", ["1", "2/3", "0", "-1/2", "3/10"])
def test_epsilon_rejects_others(text):
    with pytest.raises(ValueError):
        parse_epsilon(text)


@given(positive, st.sampled_from([Fraction(3, 2), Fraction(4, 3), Fraction(2)]))
def test_ceil_log_is_tight(x, base):
    e = ceil_log(x, base)
    assert base**e >= x > base ** (e - 1)


@given(positive, st.sampled_from([Fraction(3, 2), Fraction(5, 4)]))
def test_geometric_round_stays_within_one_step(x, base):
    y = geometric_round(x, base, Fraction(1))
    assert x <= y < base * x


def test_container_round_example():
    # grid 4, base 4: 12 -> 1.5^3 * 4 = 13.5 -> 16
    assert container_round(Fraction(12), Fraction(1, 2), Fraction(4), Fraction(4)) == 16
