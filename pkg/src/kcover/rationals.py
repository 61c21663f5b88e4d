"""Bit-exact rational serialization: "p/q" strings in all file formats."""

from __future__ import annotations

from fractions import Fraction

from .errors import InputError


def parse_rational(value) -> Fraction:
    """Parse an integer, a "p/q" string, or a plain integer string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a rational: {value!r}") from exc
    raise InputError(f"not a rational: {value!r}")


def format_rational(x: Fraction) -> str:
    """Render exactly; integers come out without the "/1" suffix."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"
