"""
Full-depth limit order book and its per-event snapshot.

The book is kept as two sorted price -> size maps on the integer tick grid
(bids best-first descending, asks ascending). Events mutate an OrderBook in
place; `apply_event` is the pure form that works on a copy.
"""

import logging
from itertools import islice
from operator import neg
from typing import Optional, Tuple

from sortedcontainers import SortedDict

from lobjump.exceptions import InsufficientDepthError, MalformedEventError
from lobjump.models.book import BookSnapshot, ExecutionReport, Fill
from lobjump.models.events import EventKind, LobEvent, Side
from lobjump.models.trades import EventFlags

logger = logging.getLogger(__name__)

Level = Tuple[int, int]


class BookState:
    """Two ordered price->size maps; every stored size is >= 1."""

    def __init__(self):
        self.bids: SortedDict = SortedDict(neg)
        self.asks: SortedDict = SortedDict()

    def book_side(self, side: Side) -> SortedDict:
        return self.bids if side is Side.BID else self.asks

    def best(self, side: Side) -> int:
        """Best price on `side` in ticks, 0 if the side is empty."""
        levels = self.book_side(side)
        return levels.peekitem(0)[0] if levels else 0

    def best_size(self, side: Side) -> int:
        levels = self.book_side(side)
        return levels.peekitem(0)[1] if levels else 0

    def n_levels(self, side: Side) -> int:
        return len(self.book_side(side))

    def size_at(self, side: Side, price_ticks: int) -> int:
        return self.book_side(side).get(price_ticks, 0)

    def levels(self, side: Side, n: Optional[int] = None) -> Tuple[Level, ...]:
        """(price_ticks, size) pairs, best first, optionally truncated to n levels."""
        items = self.book_side(side).items()
        return tuple(items if n is None else islice(items, n))

    def total_size(self, side: Side) -> int:
        return sum(self.book_side(side).values())

    def copy(self) -> "BookState":
        clone = type(self)()
        clone.bids = self.bids.copy()
        clone.asks = self.asks.copy()
        return clone

    def check_invariants(self) -> None:
        for side in Side:
            for price, size in self.book_side(side).items():
                if size < 1 or price < 1:
                    raise AssertionError(f"{side.name} level ({price}, {size}) is not populated")
        if self.bids and self.asks and self.best(Side.BID) >= self.best(Side.ASK):
            raise AssertionError(
                f"crossed book: best bid {self.best(Side.BID)} >= best ask {self.best(Side.ASK)}"
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, BookState):
            return NotImplemented
        return dict(self.bids) == dict(other.bids) and dict(self.asks) == dict(other.asks)

    def __repr__(self) -> str:
        return f"BookState(bids={list(self.bids.items())}, asks={list(self.asks.items())})"


class OrderBook(BookState):
    """BookState that applies events in place."""

    def apply(self, ev: LobEvent) -> ExecutionReport:
        if ev.size < 1:
            raise MalformedEventError(ev.seq, f"size must be >= 1, got {ev.size}")
        if ev.kind is EventKind.LIMIT_ARRIVAL:
            return self._arrive(ev)
        if ev.kind is EventKind.LIMIT_CANCEL:
            return self._cancel(ev)
        return self._execute(ev)

    def _arrive(self, ev: LobEvent) -> ExecutionReport:
        if ev.price_ticks < 1:
            raise MalformedEventError(ev.seq, f"limit price must be >= 1 tick, got {ev.price_ticks}")
        opposite = self.best(ev.side.opposite)
        if opposite:
            crosses = ev.price_ticks >= opposite if ev.side is Side.BID else ev.price_ticks <= opposite
            if crosses:
                raise MalformedEventError(
                    ev.seq, f"{ev.side.name} limit at {ev.price_ticks} crosses opposite best {opposite}"
                )
        levels = self.book_side(ev.side)
        before, before_size = self.best(ev.side), self.best_size(ev.side)
        levels[ev.price_ticks] = levels.get(ev.price_ticks, 0) + ev.size
        return ExecutionReport(
            seq=ev.seq, side=ev.side, best_before=before,
            best_after=self.best(ev.side), best_size_before=before_size,
        )

    def _cancel(self, ev: LobEvent) -> ExecutionReport:
        levels = self.book_side(ev.side)
        resting = levels.get(ev.price_ticks, 0)
        if ev.size > resting:
            raise MalformedEventError(
                ev.seq, f"cancel of {ev.size} exceeds resting {resting} at {ev.side.name} {ev.price_ticks}"
            )
        before, before_size = self.best(ev.side), self.best_size(ev.side)
        if ev.size == resting:
            del levels[ev.price_ticks]
        else:
            levels[ev.price_ticks] = resting - ev.size
        return ExecutionReport(
            seq=ev.seq, side=ev.side, best_before=before,
            best_after=self.best(ev.side), best_size_before=before_size,
        )

    def _execute(self, ev: LobEvent) -> ExecutionReport:
        levels = self.book_side(ev.side)
        available = sum(levels.values())
        if ev.size > available:
            raise InsufficientDepthError(
                f"seq {ev.seq}: market order of {ev.size} exceeds {ev.side.name} depth {available}"
            )
        before, before_size = self.best(ev.side), self.best_size(ev.side)
        remaining = ev.size
        fills = []
        while remaining:
            price, size = levels.peekitem(0)
            take = min(remaining, size)
            fills.append(Fill(price, take))
            if take == size:
                del levels[price]
            else:
                levels[price] = size - take
            remaining -= take
        return ExecutionReport(
            seq=ev.seq, side=ev.side, filled_size=ev.size, fills=tuple(fills),
            best_before=before, best_after=self.best(ev.side),
            best_size_before=before_size, through_best=ev.size > before_size,
        )


def apply_event(state: BookState, ev: LobEvent) -> Tuple[OrderBook, ExecutionReport]:
    """Apply `ev` to a copy of `state`; the input is left untouched."""
    book = OrderBook()
    book.bids = state.bids.copy()
    book.asks = state.asks.copy()
    report = book.apply(ev)
    return book, report


def snapshot(
    state: BookState,
    depth: int,
    tick_size: float,
    *,
    seq: int = 0,
    timestamp_ms: int = 0,
    flags: Optional[EventFlags] = None,
    report: Optional[ExecutionReport] = None,
) -> BookSnapshot:
    """
    Truncate the book to its `depth` best levels per side.

    When `report` describes a market order the trade fields carry the pre-event
    best price of the consumed side and the total traded size.
    """
    bids = state.levels(Side.BID, depth)
    asks = state.levels(Side.ASK, depth)
    trade_ticks = trade_size = 0
    if report is not None and report.filled_size:
        trade_ticks, trade_size = report.best_before, report.filled_size
    snap = BookSnapshot(
        seq=seq,
        timestamp_ms=timestamp_ms,
        depth=depth,
        tick_size=tick_size,
        bid_ticks=tuple(p for p, _ in bids),
        bid_sizes=tuple(s for _, s in bids),
        ask_ticks=tuple(p for p, _ in asks),
        ask_sizes=tuple(s for _, s in asks),
        flags=flags,
        trade_ticks=trade_ticks,
        trade_size=trade_size,
    )
    if not snap.complete:
        logger.debug("Snapshot at seq %s incomplete: %d bid / %d ask levels", seq, len(bids), len(asks))
    return snap

