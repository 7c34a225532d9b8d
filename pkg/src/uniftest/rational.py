"""Exact rational parameters.

Proximity parameters arrive as floats, strings ("0.3", "3/10") or
Fractions.  Floats are converted through their shortest repr so that
``0.3`` means 3/10 rather than the nearest binary double; every threshold
comparison downstream is then done in integer arithmetic.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

from .errors import ValidationError


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"not a rational number: {value!r}")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"not a finite number: {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse rational {value!r}") from exc
    raise ValidationError(f"not a rational number: {value!r}")


def ceil_fraction(value: Fraction) -> int:
    return -((-value.numerator) // value.denominator)


def exceeds(count: int, eps: Fraction, total: int) -> bool:
    """True iff ``count > eps * total``, exactly."""
    return count * eps.denominator > eps.numerator * total


def below(count: int, eps: Fraction, total: int) -> bool:
    """True iff ``count < eps * total``, exactly."""
    return count * eps.denominator < eps.numerator * total


def fmt_decimal(value: Fraction, digits: int = 6) -> str:
    """Round half-even to ``digits`` places and render without exponent."""
    scaled = value * 10**digits
    q = round(scaled)
    sign = "-" if q < 0 else ""
    q = abs(q)
    whole, frac = divmod(q, 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"
