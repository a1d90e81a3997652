"""Shared hypothesis strategies and small random-instance builders."""

import random
from fractions import Fraction

from hypothesis import strategies as st

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=12)


def line_entries(lo, hi, R, max_size=20):
    """Rational chains on lo..hi with |a - b| <= R."""
    pair = st.tuples(st.integers(lo, hi), st.integers(-R, R)).map(lambda t: (t[0], t[0] + t[1])) \
        .filter(lambda p: lo <= p[1] <= hi)
    return st.dictionaries(pair, rationals, max_size=max_size)


def random_rational(rng: random.Random, span: int = 5, den: int = 7) -> Fraction:
    return Fraction(rng.randint(-span * den, span * den), rng.randint(1, den))


def random_pushforward_instance(rng: random.Random):
    """A random map between small weighted point sets, with rational chains on both sides.

    Returns (phi, mu_x, mu_y, f, c, g, g2): f and c live on X, g and g2 on Y.
    """
    from muponzi.coarse_core import interval_window
    from muponzi.measure_chains import weighted_counting

    nx, ny = rng.randint(1, 7), rng.randint(1, 4)
    wx, wy = interval_window(0, nx - 1), interval_window(0, ny - 1)
    mx = weighted_counting({x: Fraction(rng.randint(1, 4), rng.randint(1, 3)) for x in wx.points}, wx)
    my = weighted_counting({y: Fraction(rng.randint(1, 4), rng.randint(1, 3)) for y in wy.points}, wy)
    phi = {x: rng.randrange(ny) for x in wx.points}
    f = {x: random_rational(rng) for x in wx.points if rng.random() < 0.8}
    c = {(a, b): random_rational(rng) for a in wx.points for b in wx.points if rng.random() < 0.4}
    g = {y: random_rational(rng) for y in wy.points}
    g2 = {(a, b): random_rational(rng) for a in wy.points for b in wy.points}
    return phi, mx, my, f, c, g, g2
