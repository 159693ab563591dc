"""
Shared fixtures: a hand-built book scenario and small simulator settings.
"""

import pytest

from lobjump.models.events import EventKind, LobEvent, Side
from lobjump.schemas.config import SimConfig

MORNING_START = (9 * 60 + 5) * 60_000


def make_event(seq, kind, side, price, size, timestamp_ms=None):
    return LobEvent(
        seq=seq,
        timestamp_ms=MORNING_START + seq if timestamp_ms is None else timestamp_ms,
        kind=EventKind(kind),
        side=Side(side),
        price_ticks=price,
        size=size,
    )


def opening_book():
    """Bids 100x40, 99x30, 98x80; asks 102x30, 103x40, 104x25."""
    rows = [
        ("LA", "B", 100, 40), ("LA", "A", 102, 30),
        ("LA", "B", 99, 30), ("LA", "A", 103, 40),
        ("LA", "B", 98, 80), ("LA", "A", 104, 25),
    ]
    return [make_event(i, *row) for i, row in enumerate(rows, start=1)]


def four_event_scenario():
    """
    A trade-through selling 60, an ask of 20 inside the spread, a cancel of the
    whole best bid, then a regular sell of 60.
    """
    return opening_book() + [
        make_event(7, "MO", "B", 0, 60),
        make_event(8, "LA", "A", 101, 20),
        make_event(9, "LC", "B", 99, 10),
        make_event(10, "MO", "B", 0, 60),
    ]


@pytest.fixture
def scenario_events():
    return four_event_scenario()


@pytest.fixture
def small_sim():
    return SimConfig(seed=3, n_events=3000, depth=3, initial_levels=6, refill_buffer=2)
