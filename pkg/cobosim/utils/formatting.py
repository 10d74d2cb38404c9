"""Formatting utilities for metric tables."""

import math
from typing import Optional


def format_metric(value: Optional[float], digits: int = 4) -> str:
    """Format a real number for a table cell.

    Args:
        value: Number to format, or None when not applicable
        digits: Significant digits

    Returns:
        Formatted string (e.g., "0.01234"), "-" for None or NaN
    """
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    return f"{value:.{digits}g}"


def format_percent(fraction: Optional[float]) -> str:
    """Convert a fraction in [0, 1] to a percentage string (e.g., "87.5%")."""
    if fraction is None or math.isnan(fraction):
        return "-"
    return f"{100.0 * fraction:.1f}%"


def format_duration(seconds: float) -> str:
    if seconds < 60:
        return f"{seconds:.1f}s"
    minutes, secs = divmod(seconds, 60)
    return f"{int(minutes)}m {secs:.0f}s"
