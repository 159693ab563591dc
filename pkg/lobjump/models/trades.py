from dataclasses import dataclass, astuple
from typing import Optional, Tuple


@dataclass(frozen=True, slots=True)
class EventFlags:
    """The six event dummies. Limit events cover arrivals and cancellations alike."""

    BLO: int = 0
    ALO: int = 0
    BMO: int = 0
    AMO: int = 0
    BTT: int = 0
    ATT: int = 0

    # R2 ordering
    ORDER = ("BMO", "AMO", "BLO", "ALO", "BTT", "ATT")

    def __post_init__(self):
        if self.BLO + self.ALO + self.BMO + self.AMO != 1:
            raise ValueError(f"Exactly one event-side dummy must be set, got {self}")
        if self.BTT and not self.BMO:
            raise ValueError("BTT requires BMO")
        if self.ATT and not self.AMO:
            raise ValueError("ATT requires AMO")

    def as_r2(self) -> Tuple[int, int, int, int, int, int]:
        return (self.BMO, self.AMO, self.BLO, self.ALO, self.BTT, self.ATT)

    def as_tuple(self) -> Tuple[int, ...]:
        return astuple(self)


@dataclass(frozen=True, slots=True)
class LabeledTrade:
    """
    One market order with its sign, trade-through flag and jump labels.

    `sign` is +1 for a buyer-initiated trade (ask side consumed). The labels are
    None for the last trade of a session.
    """

    k: int
    t_seq: int
    sign: int
    v_mo_log: float
    tt: int
    y_bid: Optional[int] = None
    y_ask: Optional[int] = None

    @property
    def labeled(self) -> bool:
        return self.y_bid is not None and self.y_ask is not None


@dataclass(frozen=True, slots=True)
class SessionSummary:
    instrument: str
    session: str
    n_lo: int
    n_mo: int
    n_bid_jump: int
    n_ask_jump: int
    n_bid_tt: int
    n_ask_tt: int
