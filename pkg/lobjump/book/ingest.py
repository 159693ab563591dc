"""
Event-file parsing, session filtering and replay into per-event snapshots.

The interchange format is a headed CSV `seq,timestamp_ms,kind,side,price_ticks,size`
with kind in LA/LC/MO and side in B/A. `seq` is the ordering key because
millisecond timestamps can collide.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, List, Sequence, Tuple

import pandas as pd

from lobjump.analysis.labeler import classify_event
from lobjump.book.lob_core import OrderBook, snapshot
from lobjump.exceptions import DataFormatError
from lobjump.models.book import BookSnapshot, ExecutionReport
from lobjump.models.events import EventKind, LobEvent, SessionWindow, Side
from lobjump.models.trades import EventFlags
from lobjump.utils.helpers import format_clock
from lobjump.utils.validators import EVENT_HEADER, validate_event_row, validate_header

logger = logging.getLogger(__name__)

FLAG_COLUMNS = ["BLO", "ALO", "BMO", "AMO", "BTT", "ATT"]


@dataclass(frozen=True)
class ParsedEvents:
    events: List[LobEvent]
    n_rows: int
    n_out_of_window: int


def parse_events(path: Path, window: SessionWindow) -> ParsedEvents:
    """
    Read an event file and keep the rows inside `window`, in seq order.

    Malformed rows and non-increasing seq numbers raise DataFormatError with the
    offending line number (the header is line 1).
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, on_bad_lines="error", encoding="utf-8")
    except pd.errors.ParserError as exc:
        raise DataFormatError(f"unparseable event file {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"event file {path} is not UTF-8 text: {exc.reason} at byte {exc.start}") from exc
    except pd.errors.EmptyDataError:
        raise DataFormatError(f"event file {path} is empty, header row is mandatory", line=1)

    is_valid, error = validate_header(frame.columns)
    if not is_valid:
        raise DataFormatError(error, line=1)

    events = []
    previous_seq = previous_ts = None
    n_out = 0
    for offset, row in enumerate(frame.itertuples(index=False, name=None)):
        line = offset + 2
        is_valid, error = validate_event_row(row)
        if not is_valid:
            raise DataFormatError(error, line=line)
        seq, timestamp_ms = int(row[0]), int(row[1])
        if previous_seq is not None and seq <= previous_seq:
            raise DataFormatError(f"seq {seq} does not increase (previous {previous_seq})", line=line)
        if previous_ts is not None and timestamp_ms < previous_ts:
            raise DataFormatError(f"timestamp {timestamp_ms} decreases (previous {previous_ts})", line=line)
        previous_seq, previous_ts = seq, timestamp_ms

        if not window.contains(timestamp_ms):
            n_out += 1
            continue
        events.append(
            LobEvent(
                seq=seq,
                timestamp_ms=timestamp_ms,
                kind=EventKind(row[2]),
                side=Side(row[3]),
                price_ticks=int(row[4]),
                size=int(row[5]),
            )
        )

    logger.info(
        "Parsed %d rows from %s, kept %d in [%s, %s), dropped %d out of window",
        len(frame), path, len(events), format_clock(window.start_ms), format_clock(window.end_ms), n_out,
    )
    return ParsedEvents(events=events, n_rows=len(frame), n_out_of_window=n_out)


def events_to_frame(events: Sequence[LobEvent]) -> pd.DataFrame:
    return pd.DataFrame(
        [(e.seq, e.timestamp_ms, e.kind.value, e.side.value, e.price_ticks, e.size) for e in events],
        columns=list(EVENT_HEADER),
    )


def write_events(path: Path, events: Sequence[LobEvent]) -> None:
    events_to_frame(events).to_csv(path, index=False, lineterminator="\n")


def iter_books(events: Iterable[LobEvent]) -> Iterator[Tuple[LobEvent, ExecutionReport, OrderBook]]:
    """Apply events from an empty book, yielding the live book after each one."""
    book = OrderBook()
    for ev in events:
        report = book.apply(ev)
        yield ev, report, book


def replay(events: Iterable[LobEvent], depth: int = 5, tick_size: float = 0.01) -> List[BookSnapshot]:
    """One snapshot per event, taken instantaneously after it, starting from an empty book."""
    snapshots = []
    for ev, report, book in iter_books(events):
        flags = classify_event(ev, None, report)
        snapshots.append(
            snapshot(book, depth, tick_size, seq=ev.seq, timestamp_ms=ev.timestamp_ms, flags=flags, report=report)
        )
    n_incomplete = sum(not s.complete for s in snapshots)
    if n_incomplete:
        logger.info("%d of %d snapshots have fewer than %d levels on a side", n_incomplete, len(snapshots), depth)
    return snapshots


def _snapshot_columns(depth: int) -> List[str]:
    columns = ["seq", "timestamp_ms", "complete"]
    for prefix in ("bid_px", "bid_sz", "ask_px", "ask_sz"):
        columns += [f"{prefix}_{i}" for i in range(1, depth + 1)]
    return columns + ["trade_px", "trade_sz"] + FLAG_COLUMNS


def _padded(values: Tuple[int, ...], depth: int) -> List[int]:
    return list(values[:depth]) + [0] * (depth - len(values))


def snapshots_to_frame(snapshots: Sequence[BookSnapshot], depth: int) -> pd.DataFrame:
    """Raw ticks and share counts per snapshot; empty levels are written as 0."""
    rows = []
    for s in snapshots:
        flags = s.flags.as_tuple() if s.flags is not None else (0,) * len(FLAG_COLUMNS)
        rows.append(
            [s.seq, s.timestamp_ms, int(s.complete)]
            + _padded(s.bid_ticks, depth) + _padded(s.bid_sizes, depth)
            + _padded(s.ask_ticks, depth) + _padded(s.ask_sizes, depth)
            + [s.trade_ticks, s.trade_size] + list(flags)
        )
    return pd.DataFrame(rows, columns=_snapshot_columns(depth), dtype="int64")


def snapshots_from_frame(frame: pd.DataFrame, tick_size: float) -> List[BookSnapshot]:
    depth = sum(1 for c in frame.columns if c.startswith("bid_px_"))
    if depth == 0 or list(frame.columns) != _snapshot_columns(depth):
        raise DataFormatError("snapshot header does not match the snapshot artifact layout", line=1)

    def levels(row, prefix_px, prefix_sz):
        ticks, sizes = [], []
        for i in range(1, depth + 1):
            size = int(row[f"{prefix_sz}_{i}"])
            if size == 0:
                break
            ticks.append(int(row[f"{prefix_px}_{i}"]))
            sizes.append(size)
        return tuple(ticks), tuple(sizes)

    snapshots = []
    for row in frame.to_dict("records"):
        bid_ticks, bid_sizes = levels(row, "bid_px", "bid_sz")
        ask_ticks, ask_sizes = levels(row, "ask_px", "ask_sz")
        flag_values = {name: int(row[name]) for name in FLAG_COLUMNS}
        snapshots.append(
            BookSnapshot(
                seq=int(row["seq"]),
                timestamp_ms=int(row["timestamp_ms"]),
                depth=depth,
                tick_size=tick_size,
                bid_ticks=bid_ticks,
                bid_sizes=bid_sizes,
                ask_ticks=ask_ticks,
                ask_sizes=ask_sizes,
                flags=EventFlags(**flag_values) if any(flag_values.values()) else None,
                trade_ticks=int(row["trade_px"]),
                trade_size=int(row["trade_sz"]),
            )
        )
    return snapshots
