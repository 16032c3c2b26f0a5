"""Exact rational helpers shared by the algebra, graph and report layers."""

import random
from fractions import Fraction

import sympy

from .exceptions import ParseError

RANDOM_BOUND = 7


def to_fraction(value) -> Fraction:
    """Convert an int, Fraction or sympy rational to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    rational = sympy.Rational(value)
    return Fraction(int(rational.p), int(rational.q))


def format_rational(value) -> str:
    q = to_fraction(value)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str | int) -> Fraction:
    if isinstance(text, int):
        return Fraction(text)
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError, AttributeError) as e:
        raise ParseError(f"Invalid rational {text!r}: {e}") from e


def random_rational(rng: random.Random, nonzero: bool = True) -> Fraction:
    """Small random rational with numerator and denominator bounded by 7."""
    while True:
        value = Fraction(rng.randint(-RANDOM_BOUND, RANDOM_BOUND), rng.randint(1, RANDOM_BOUND))
        if value or not nonzero:
            return value


def sympy_matrix(rows: int, cols: int, entries: dict[tuple[int, int], Fraction]) -> sympy.Matrix:
    matrix = sympy.zeros(rows, cols)
    for (i, j), value in entries.items():
        matrix[i, j] = sympy.Rational(value.numerator, value.denominator)
    return matrix
