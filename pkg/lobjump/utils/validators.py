"""
Validation utilities for event-file rows.

Each validator returns a (is_valid, error_message) tuple so that callers can
attach the line number before raising.
"""

import re
from typing import Sequence, Tuple

EVENT_HEADER = ("seq", "timestamp_ms", "kind", "side", "price_ticks", "size")
EVENT_KINDS = ("LA", "LC", "MO")
EVENT_SIDES = ("B", "A")
INTEGER_PATTERN = re.compile(r"-?[0-9]+")


def validate_integer(value: str, field_name: str, minimum: int = None) -> Tuple[bool, str]:
    """
    Validate that a field holds a base-10 integer.

    Args:
        value: Raw field text
        field_name: Name of the field for error messages
        minimum: Smallest accepted value, if any

    Returns:
        Tuple of (is_valid, error_message)
    """
    if value is None or not str(value).strip():
        return False, f"{field_name} is required"
    text = str(value).strip()
    if not INTEGER_PATTERN.fullmatch(text):
        return False, f"{field_name} must be an integer, got '{text}'"
    if minimum is not None and int(text) < minimum:
        return False, f"{field_name} must be >= {minimum}, got {text}"
    return True, ""


def validate_choice(value: str, field_name: str, choices: Sequence[str]) -> Tuple[bool, str]:
    if value not in choices:
        return False, f"{field_name} must be one of {'/'.join(choices)}, got '{value}'"
    return True, ""


def validate_header(columns: Sequence[str]) -> Tuple[bool, str]:
    if tuple(columns) != EVENT_HEADER:
        return False, f"header must be {','.join(EVENT_HEADER)}, got {','.join(map(str, columns))}"
    return True, ""


def validate_event_row(row: Sequence[str]) -> Tuple[bool, str]:
    """
    Validate one `seq,timestamp_ms,kind,side,price_ticks,size` row.

    Args:
        row: The six raw fields

    Returns:
        Tuple of (is_valid, error_message)
    """
    if len(row) != len(EVENT_HEADER):
        return False, f"expected {len(EVENT_HEADER)} fields, got {len(row)}"
    seq, timestamp_ms, kind, side, price_ticks, size = row

    for value, name, minimum in ((seq, "seq", 0), (timestamp_ms, "timestamp_ms", 0), (size, "size", 1)):
        is_valid, error = validate_integer(value, name, minimum)
        if not is_valid:
            return False, error

    for value, name, choices in ((kind, "kind", EVENT_KINDS), (side, "side", EVENT_SIDES)):
        is_valid, error = validate_choice(value, name, choices)
        if not is_valid:
            return False, error

    # market orders carry no price
    minimum = 0 if kind == "MO" else 1
    is_valid, error = validate_integer(price_ticks, "price_ticks", minimum)
    if not is_valid:
        return False, error
    if kind == "MO" and int(price_ticks) != 0:
        return False, f"price_ticks must be 0 for a market order, got {price_ticks}"

    return True, ""
