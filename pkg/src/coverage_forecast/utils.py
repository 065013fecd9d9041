import math
from collections.abc import Sequence
from decimal import ROUND_HALF_EVEN, Decimal


def format_float(value: float) -> str:
    """Shortest round-trip decimal for CSV output."""
    return repr(float(value))


def round_half_even(value: float, places: int = 3) -> str:
    """Round the shortest decimal form of ``value`` half-to-even, as markdown tables print it."""
    if not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    quantum = Decimal(1).scaleb(-places)
    return str(Decimal(repr(float(value))).quantize(quantum, rounding=ROUND_HALF_EVEN))


def markdown_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Render a pipe table."""
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return "\n".join(lines) + "\n"
