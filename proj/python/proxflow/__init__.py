"""Multistep proximal point methods: stability analysis and experiments."""

from fractions import Fraction

from ._core import *  # noqa: F401,F403
from ._core import Error, ValidationError, DivergenceError, delta_constant_exact as _delta_exact


def bdf_delta(order):
    """Exact delta constant of the BDF rule of the given order."""
    num, den = _delta_exact(order)
    return Fraction(num, den)
