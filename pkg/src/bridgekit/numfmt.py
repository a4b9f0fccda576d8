"""Number formatting shared by reports: one decimal, half away from zero."""

from decimal import ROUND_HALF_UP, Decimal


def round1(x: float) -> float:
    """Round to one decimal, half away from zero (table convention)."""
    q = Decimal(repr(float(x))).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
    return float(q)
