"""
Immutable book records: ticks, execution reports and L-level snapshots.

Prices are integer ticks and sizes are share counts. Log quantities are only
derived here, on the snapshot, with the configured tick size.
"""

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional, Tuple

from .events import Side
from .trades import EventFlags


@lru_cache(maxsize=65536)
def log_price(price_ticks: int, tick_size: float) -> float:
    """Natural log of the currency price of a tick-grid quote."""
    return math.log(price_ticks * tick_size)


@dataclass(frozen=True, slots=True)
class Tick:
    price_ticks: int
    tick_size: float

    def __post_init__(self):
        if self.price_ticks < 1:
            raise ValueError(f"price_ticks must be >= 1, got {self.price_ticks}")
        if not self.tick_size > 0:
            raise ValueError(f"tick_size must be positive, got {self.tick_size}")

    @property
    def price(self) -> float:
        return self.price_ticks * self.tick_size

    @property
    def log_price(self) -> float:
        return log_price(self.price_ticks, self.tick_size)


@dataclass(frozen=True, slots=True)
class Fill:
    price_ticks: int
    size: int


@dataclass(frozen=True, slots=True)
class ExecutionReport:
    """
    Outcome of applying one event.

    For limit events `fills` is empty. `best_before`/`best_after` refer to the
    side the event touched (0 when that side is empty). `through_best` is True
    when a market order consumed more than the pre-event best-level size.
    """

    seq: int
    side: Side
    filled_size: int = 0
    fills: Tuple[Fill, ...] = ()
    best_before: int = 0
    best_after: int = 0
    best_size_before: int = 0
    through_best: bool = False

    @property
    def vwap_ticks(self) -> float:
        if not self.filled_size:
            return 0.0
        return sum(f.price_ticks * f.size for f in self.fills) / self.filled_size


@dataclass(frozen=True)
class BookSnapshot:
    """
    The L best levels per side instantaneously after event `seq`.

    Levels are stored raw (ticks, shares), best first. A side with fewer than
    `depth` populated levels makes the snapshot incomplete.
    """

    seq: int
    timestamp_ms: int
    depth: int
    tick_size: float
    bid_ticks: Tuple[int, ...]
    bid_sizes: Tuple[int, ...]
    ask_ticks: Tuple[int, ...]
    ask_sizes: Tuple[int, ...]
    flags: Optional[EventFlags] = None
    trade_ticks: int = 0
    trade_size: int = 0

    @property
    def complete(self) -> bool:
        return len(self.bid_ticks) >= self.depth and len(self.ask_ticks) >= self.depth

    @property
    def best_bid_ticks(self) -> int:
        return self.bid_ticks[0] if self.bid_ticks else 0

    @property
    def best_ask_ticks(self) -> int:
        return self.ask_ticks[0] if self.ask_ticks else 0

    @cached_property
    def bid_prices(self) -> Tuple[float, ...]:
        """P^{b,i}, i = 1..L (log)."""
        return tuple(Tick(p, self.tick_size).log_price for p in self.bid_ticks)

    @cached_property
    def ask_prices(self) -> Tuple[float, ...]:
        return tuple(Tick(p, self.tick_size).log_price for p in self.ask_ticks)

    @cached_property
    def bid_volumes(self) -> Tuple[float, ...]:
        """V^{b,i} (log shares); a one-share level gives 0."""
        return tuple(math.log(s) for s in self.bid_sizes)

    @cached_property
    def ask_volumes(self) -> Tuple[float, ...]:
        return tuple(math.log(s) for s in self.ask_sizes)

    @property
    def spread(self) -> float:
        if not (self.bid_ticks and self.ask_ticks):
            return math.nan
        return self.ask_prices[0] - self.bid_prices[0]

    @property
    def bid_gaps(self) -> Tuple[float, ...]:
        """G^{b,i} = P^{b,i} - P^{b,i+1}."""
        p = self.bid_prices
        return tuple(p[i] - p[i + 1] for i in range(len(p) - 1))

    @property
    def ask_gaps(self) -> Tuple[float, ...]:
        """G^{a,i} = P^{a,i+1} - P^{a,i}."""
        p = self.ask_prices
        return tuple(p[i + 1] - p[i] for i in range(len(p) - 1))

    @property
    def p_mo(self) -> float:
        """Log trade price (pre-trade best of the consumed side), 0 when no trade."""
        return Tick(self.trade_ticks, self.tick_size).log_price if self.trade_size else 0.0

    @property
    def v_mo(self) -> float:
        """Log trade size, 0 when no trade."""
        return math.log(self.trade_size) if self.trade_size else 0.0

    @property
    def is_trade(self) -> bool:
        return self.trade_size > 0
