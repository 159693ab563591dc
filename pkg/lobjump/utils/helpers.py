"""
Helper utilities for time formatting and small conversions.
"""

from typing import Dict


def format_clock(timestamp_ms: int) -> str:
    """
    Format milliseconds since midnight for display.

    Args:
        timestamp_ms: Exchange-local milliseconds since midnight

    Returns:
        Clock string such as "09:05:00.000"
    """
    seconds, millis = divmod(int(timestamp_ms), 1000)
    minutes, seconds = divmod(seconds, 60)
    hours, minutes = divmod(minutes, 60)
    return f"{hours:02d}:{minutes:02d}:{seconds:02d}.{millis:03d}"


def parse_mapping(text: str) -> Dict[str, float]:
    """
    Parse "name:value, name:value" into a dictionary of floats.

    Args:
        text: Mapping text from a config file

    Returns:
        Dictionary of names to values (empty for blank text)
    """
    mapping = {}
    for item in filter(None, (chunk.strip() for chunk in text.split(","))):
        name, sep, value = item.partition(":")
        if not sep or not name.strip():
            raise ValueError(f"Invalid mapping entry '{item}', expected name:value")
        mapping[name.strip()] = float(value)
    return mapping

