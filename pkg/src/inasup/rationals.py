"""Exact rational arithmetic backend.

Every proof-carrying quantity in this package is an arbitrary-precision
rational kept in canonical reduced form (positive denominator, coprime
numerator).  gmpy2 (GMP bindings) is used when available; the stdlib
Fraction is a drop-in fallback with identical semantics.
"""

from __future__ import annotations

try:
    from gmpy2 import mpq as _mpq

    BACKEND = "gmpy2"
except ImportError:  # pragma: no cover - exercised only without gmpy2
    from fractions import Fraction as _mpq

    BACKEND = "fractions"


Rational = _mpq

ZERO = _mpq(0)
ONE = _mpq(1)
HALF = _mpq(1, 2)


def rational(num, den=None):
    """Build a reduced rational from ints, strings like '11/25', or rationals.

    Floats are rejected: a binary float silently substitutes a nearby

    rational and would invalidate exactness guarantees.
    """
    if isinstance(num, float) or isinstance(den, float):
        raise TypeError("floats are not exact; pass an int, string or rational")
    if den is None:
        return _mpq(num)
    return _mpq(num, den)


def rat_floor(q) -> int:
    """Largest integer <= q."""
    q = _mpq(q)
    return int(q.numerator // q.denominator)


def rat_ceil(q) -> int:
    """Smallest integer >= q."""
    q = _mpq(q)
    return -int((-q.numerator) // q.denominator)


def fold_half(q):
    """Reduce mod 1 into [-1/2, 1/2)."""
    q = _mpq(q)
    return q - rat_floor(q + HALF)


def fold_unit(q):
    """Reduce mod 1 into [0, 1)."""
    q = _mpq(q)
    return q - rat_floor(q)


def is_half_integer(q) -> bool:
    """True iff q lies in 1/2 + Z."""
    q = _mpq(q) + HALF
    return q.denominator == 1


def format_rational(q) -> str:
    """Canonical 'num/den' text form, denominator always explicit."""
    q = _mpq(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str):
    """Parse 'num/den' or plain integer text into a reduced rational."""
    text = text.strip()
    if "." in text or "e" in text.lower():
        raise ValueError(f"not an exact fraction: {text!r} (write e.g. 11/25, not 0.44)")
    try:
        return _mpq(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse rational from {text!r}") from exc
