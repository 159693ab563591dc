from dataclasses import dataclass
from enum import Enum
from typing import ClassVar, Dict


class Side(str, Enum):
    BID = "B"
    ASK = "A"

    @property
    def opposite(self) -> "Side":
        return Side.ASK if self is Side.BID else Side.BID


class EventKind(str, Enum):
    LIMIT_ARRIVAL = "LA"
    LIMIT_CANCEL = "LC"
    MARKET_ORDER = "MO"


@dataclass(frozen=True, slots=True)
class LobEvent:
    """One order-flow event. For a market order `side` is the book side it consumes."""

    seq: int
    timestamp_ms: int
    kind: EventKind
    side: Side
    price_ticks: int
    size: int

    @property
    def is_trade(self) -> bool:
        return self.kind is EventKind.MARKET_ORDER


def _ms(hours: int, minutes: int) -> int:
    return (hours * 60 + minutes) * 60_000


@dataclass(frozen=True, slots=True)
class SessionWindow:
    """Half-open interval [start_ms, end_ms) of exchange-local milliseconds since midnight."""

    start_ms: int
    end_ms: int

    PRESETS: ClassVar[Dict[str, "SessionWindow"]]

    def __post_init__(self):
        if self.start_ms >= self.end_ms:
            raise ValueError(f"Session window start {self.start_ms} must precede end {self.end_ms}")

    def contains(self, timestamp_ms: int) -> bool:
        return self.start_ms <= timestamp_ms < self.end_ms

    @classmethod
    def named(cls, name: str) -> "SessionWindow":
        try:
            return cls.PRESETS[name.lower()]
        except KeyError:
            raise ValueError(f"Unknown session window '{name}'") from None


SessionWindow.PRESETS = {
    "morning": SessionWindow(_ms(9, 5), _ms(13, 15)),
    "afternoon": SessionWindow(_ms(13, 15), _ms(17, 25)),
    "allday": SessionWindow(_ms(9, 5), _ms(17, 25)),
}
MORNING = SessionWindow.PRESETS["morning"]
AFTERNOON = SessionWindow.PRESETS["afternoon"]
ALLDAY = SessionWindow.PRESETS["allday"]
