"""
Event dummies, trade signs, trade-throughs and inter-trade price jump labels.
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from lobjump.book.lob_core import BookState
from lobjump.exceptions import DataFormatError
from lobjump.models.book import BookSnapshot, ExecutionReport
from lobjump.models.events import EventKind, LobEvent, Side
from lobjump.models.trades import EventFlags, LabeledTrade, SessionSummary

logger = logging.getLogger(__name__)

TRADE_COLUMNS = ["k", "t_seq", "sign", "v_mo_log", "tt", "y_bid", "y_ask"]


def classify_event(
    ev: LobEvent,
    pre_state: Optional[BookState],
    report: ExecutionReport,
) -> EventFlags:
    """
    Set the dummy matching the event's side and nature.

    A market order is a trade-through when its size strictly exceeds the
    pre-event best-level size of the side it consumes; a tie is a regular trade.
    """
    if ev.kind is not EventKind.MARKET_ORDER:
        return EventFlags(BLO=1) if ev.side is Side.BID else EventFlags(ALO=1)

    best_size = pre_state.best_size(ev.side) if pre_state is not None else report.best_size_before
    through = int(ev.size > best_size)
    if ev.side is Side.BID:
        return EventFlags(BMO=1, BTT=through)
    return EventFlags(AMO=1, ATT=through)


def label_jumps(snapshots: Sequence[BookSnapshot]) -> List[LabeledTrade]:
    """
    Label every trade against the next one.

    y_bid(i) = 1 iff the next trade executes strictly below the best bid read on
    the snapshot of trade i itself; y_ask(i) symmetric above the best ask. The
    last trade of the session keeps empty labels.
    """
    trades = [s for s in snapshots if s.is_trade]
    if len(trades) < 2:
        logger.warning("Only %d trade(s) in session, no jump labels produced", len(trades))
        return []

    labeled = []
    for k, current in enumerate(trades, start=1):
        y_bid = y_ask = None
        if k < len(trades):
            nxt = trades[k]
            # ticks order like log prices
            y_bid = int(bool(current.bid_ticks) and nxt.trade_ticks < current.best_bid_ticks)
            y_ask = int(bool(current.ask_ticks) and nxt.trade_ticks > current.best_ask_ticks)
        flags = current.flags
        labeled.append(
            LabeledTrade(
                k=k,
                t_seq=current.seq,
                sign=1 if flags.AMO else -1,
                v_mo_log=current.v_mo,
                tt=flags.BTT | flags.ATT,
                y_bid=y_bid,
                y_ask=y_ask,
            )
        )
    return labeled


def summarize_session(
    snapshots: Sequence[BookSnapshot],
    trades: Sequence[LabeledTrade],
    instrument: str = "SIM",
    session: str = "allday",
) -> SessionSummary:
    """Event, trade, jump and trade-through counts for one session."""
    flags = [s.flags for s in snapshots if s.flags is not None]
    return SessionSummary(
        instrument=instrument,
        session=session,
        n_lo=sum(f.BLO + f.ALO for f in flags),
        n_mo=sum(f.BMO + f.AMO for f in flags),
        n_bid_jump=sum(t.y_bid or 0 for t in trades),
        n_ask_jump=sum(t.y_ask or 0 for t in trades),
        n_bid_tt=sum(f.BTT for f in flags),
        n_ask_tt=sum(f.ATT for f in flags),
    )


def trades_to_frame(trades: Sequence[LabeledTrade]) -> pd.DataFrame:
    frame = pd.DataFrame([[getattr(t, c) for c in TRADE_COLUMNS] for t in trades], columns=TRADE_COLUMNS)
    for column in ("y_bid", "y_ask"):
        frame[column] = frame[column].astype("Int64")
    return frame


def trades_from_frame(frame: pd.DataFrame) -> List[LabeledTrade]:
    if list(frame.columns) != TRADE_COLUMNS:
        raise DataFormatError(f"labeled-trade header must be {','.join(TRADE_COLUMNS)}", line=1)
    trades = []
    for row in frame.itertuples(index=False):
        trades.append(
            LabeledTrade(
                k=int(row.k),
                t_seq=int(row.t_seq),
                sign=int(row.sign),
                v_mo_log=float(row.v_mo_log),
                tt=int(row.tt),
                y_bid=None if pd.isna(row.y_bid) else int(row.y_bid),
                y_ask=None if pd.isna(row.y_ask) else int(row.y_ask),
            )
        )
    return trades


def write_trades(path: Path, trades: Sequence[LabeledTrade]) -> None:
    trades_to_frame(trades).to_csv(path, index=False, lineterminator="\n", float_format="%.17g")


def read_trades(path: Path) -> List[LabeledTrade]:
    return trades_from_frame(pd.read_csv(path, dtype={"y_bid": "Int64", "y_ask": "Int64"}))
