from dataclasses import dataclass
from typing import List

from .book import BookSnapshot
from .events import LobEvent


@dataclass(frozen=True, slots=True)
class TruthRow:
    """True probabilities behind one simulated trade; NaN where the regime plants nothing."""

    seq: int
    true_p_jump_bid: float
    true_p_jump_ask: float
    true_p_buy: float


@dataclass(frozen=True)
class SimOutput:
    """
    A simulated session: the event stream, the book after every event and the
    per-trade truth.

    `snapshots[k]` is the depth-L book right after `events[k]`.
    """

    planted: str
    depth: int
    events: List[LobEvent]
    snapshots: List[BookSnapshot]
    truth: List[TruthRow]

    @property
    def n_trades(self) -> int:
        return sum(ev.is_trade for ev in self.events)
