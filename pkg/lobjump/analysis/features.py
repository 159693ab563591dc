"""
Per-event feature vectors, the bid-ask volume ratio and the lagged design matrix.

R1 (book shape) for event t, full layout, length 4L-1:
    [GB{L-1}, ..., GB1, S, GA1, ..., GA{L-1}, VB{L}, ..., VB1, VA1, ..., VA{L}]
The `gaps` layout keeps only the first 2L-1 entries (gaps and spread).
R2 (event nature), length 6: [BMO, AMO, BLO, ALO, BTT, ATT].

A design row for trade event t is
    [1, VMO_0, R1_t, R1_{t-1}, ..., R1_{t-m+1}, R2_t, ..., R2_{t-n+1}]
with columns named <name>_<lag>, e.g. VB1_0 or BMO_2. Lags count all events.
"""

import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from lobjump.exceptions import DataFormatError
from lobjump.models.book import BookSnapshot
from lobjump.models.design import DesignMatrix
from lobjump.models.trades import EventFlags, LabeledTrade

logger = logging.getLogger(__name__)

LAYOUTS = ("full", "gaps")
R2_NAMES = list(EventFlags.ORDER)

_NAME = re.compile(r"^(?:(VB|VA|GB|GA)(\d+)|(S|VMO|BMO|AMO|BLO|ALO|BTT|ATT))_(\d+)$")


def r1_names(depth: int, lag: int, layout: str = "full") -> List[str]:
    names = (
        [f"GB{i}_{lag}" for i in range(depth - 1, 0, -1)]
        + [f"S_{lag}"]
        + [f"GA{i}_{lag}" for i in range(1, depth)]
    )
    if layout == "full":
        names += [f"VB{i}_{lag}" for i in range(depth, 0, -1)] + [f"VA{i}_{lag}" for i in range(1, depth + 1)]
    return names


def r2_names(lag: int) -> List[str]:
    return [f"{name}_{lag}" for name in R2_NAMES]


def column_names(depth: int, m: int, n: int, layout: str = "full") -> List[str]:
    """Registry of design columns, intercept first."""
    if layout not in LAYOUTS:
        raise ValueError(f"Unknown R1 layout '{layout}', expected one of {LAYOUTS}")
    names = ["intercept", "VMO_0"]
    for lag in range(m):
        names += r1_names(depth, lag, layout)
    for lag in range(n):
        names += r2_names(lag)
    return names


def design_width(depth: int, m: int, n: int, layout: str = "full") -> int:
    per_lag = 4 * depth - 1 if layout == "full" else 2 * depth - 1
    return 2 + m * per_lag + 6 * n


def r1_vector(snap: BookSnapshot, layout: str = "full") -> np.ndarray:
    """R1 of one snapshot, all NaN when the snapshot is incomplete."""
    depth = snap.depth
    width = 4 * depth - 1 if layout == "full" else 2 * depth - 1
    if not snap.complete:
        return np.full(width, np.nan)
    bid_gaps = snap.bid_gaps[: depth - 1]
    ask_gaps = snap.ask_gaps[: depth - 1]
    values = list(reversed(bid_gaps)) + [snap.spread] + list(ask_gaps)
    if layout == "full":
        values += list(reversed(snap.bid_volumes[:depth])) + list(snap.ask_volumes[:depth])
    return np.asarray(values, dtype=float)


def r1_matrix(snapshots: Sequence[BookSnapshot], depth: int, layout: str = "full") -> np.ndarray:
    """R1 for every event as rows; incomplete snapshots give NaN rows."""
    T = len(snapshots)
    complete = np.array([s.complete for s in snapshots], dtype=bool)
    bid_px = np.ones((T, depth))
    ask_px = np.ones((T, depth))
    bid_sz = np.ones((T, depth))
    ask_sz = np.ones((T, depth))
    tick_size = snapshots[0].tick_size if T else 1.0
    for t in np.flatnonzero(complete):
        s = snapshots[t]
        bid_px[t] = s.bid_ticks[:depth]
        ask_px[t] = s.ask_ticks[:depth]
        bid_sz[t] = s.bid_sizes[:depth]
        ask_sz[t] = s.ask_sizes[:depth]

    log_bid = np.log(bid_px * tick_size)
    log_ask = np.log(ask_px * tick_size)
    bid_gaps = log_bid[:, :-1] - log_bid[:, 1:]
    ask_gaps = log_ask[:, 1:] - log_ask[:, :-1]
    spread = (log_ask[:, 0] - log_bid[:, 0])[:, None]
    blocks = [bid_gaps[:, ::-1], spread, ask_gaps]
    if layout == "full":
        blocks += [np.log(bid_sz)[:, ::-1], np.log(ask_sz)]
    out = np.hstack(blocks)
    out[~complete] = np.nan
    return out


def r2_matrix(snapshots: Sequence[BookSnapshot]) -> np.ndarray:
    zero = (0,) * len(R2_NAMES)
    return np.array([s.flags.as_r2() if s.flags is not None else zero for s in snapshots], dtype=float).reshape(
        len(snapshots), len(R2_NAMES)
    )


def w_ratio(snap: BookSnapshot, depth: int) -> Optional[float]:
    """
    Bid-ask volume ratio W(i): log total bid shares over total ask shares down to depth i.

    Returns None when either side has fewer than `depth` levels.
    """
    if len(snap.bid_sizes) < depth or len(snap.ask_sizes) < depth:
        return None
    return float(logsumexp(snap.bid_volumes[:depth]) - logsumexp(snap.ask_volumes[:depth]))


def feature_lag(name: str) -> int:
    """Lag suffix of a design column name."""
    match = _NAME.match(name)
    if match is None:
        raise ValueError(f"Unknown feature name '{name}'")
    return int(match.group(4))


def feature_value(snapshots: Sequence[BookSnapshot], index: int, name: str) -> float:
    """
    Value of one named design column for the event at `index`.

    Agrees with the corresponding build_design entry; raises ValueError when the
    lag reaches before the first snapshot or into an incomplete snapshot.
    """
    match = _NAME.match(name)
    if match is None:
        raise ValueError(f"Unknown feature name '{name}'")
    level_kind, level, plain, lag = match.group(1), match.group(2), match.group(3), int(match.group(4))
    if index - lag < 0:
        raise ValueError(f"{name} needs {lag} events of history before index {index}")
    snap = snapshots[index - lag]

    if plain in R2_NAMES:
        return float(getattr(snap.flags, plain)) if snap.flags is not None else 0.0
    if plain == "VMO":
        return snap.v_mo
    if not snap.complete:
        raise ValueError(f"{name} reads incomplete snapshot seq {snap.seq}")
    if plain == "S":
        return snap.spread
    i = int(level)
    if level_kind == "VB":
        return snap.bid_volumes[i - 1]
    if level_kind == "VA":
        return snap.ask_volumes[i - 1]
    if level_kind == "GB":
        return snap.bid_gaps[i - 1]
    return snap.ask_gaps[i - 1]


def feature_row(snapshots: Sequence[BookSnapshot], index: int, names: Sequence[str]) -> Dict[str, float]:
    return {name: feature_value(snapshots, index, name) for name in names}


def build_design(
    snapshots: Sequence[BookSnapshot],
    labeled_trades: Sequence[LabeledTrade],
    m: int,
    n: int,
    side: str,
    layout: str = "full",
) -> DesignMatrix:
    """
    One row per labeled trade whose R1 and R2 lag windows are available.

    Rows whose lag window starts before the session or touches an incomplete
    snapshot are dropped and counted.
    """
    if m < 1 or n < 1:
        raise ValueError(f"lags must be >= 1, got m={m}, n={n}")
    if side not in ("bid", "ask"):
        raise ValueError(f"side must be 'bid' or 'ask', got '{side}'")
    depth = snapshots[0].depth if snapshots else 1
    columns = column_names(depth, m, n, layout)
    position = {s.seq: i for i, s in enumerate(snapshots)}
    r1 = r1_matrix(snapshots, depth, layout)
    r2 = r2_matrix(snapshots)

    rows, labels, seqs = [], [], []
    dropped_history = dropped_incomplete = 0
    for trade in labeled_trades:
        if not trade.labeled:
            continue
        t = position.get(trade.t_seq)
        if t is None:
            raise DataFormatError(f"trade seq {trade.t_seq} has no snapshot")
        if t - (max(m, n) - 1) < 0:
            dropped_history += 1
            continue
        r1_window = r1[t - m + 1: t + 1][::-1]
        if np.isnan(r1_window).any():
            dropped_incomplete += 1
            continue
        r2_window = r2[t - n + 1: t + 1][::-1]
        rows.append(np.concatenate(([1.0, snapshots[t].v_mo], r1_window.ravel(), r2_window.ravel())))
        labels.append(trade.y_bid if side == "bid" else trade.y_ask)
        seqs.append(trade.t_seq)

    if dropped_history or dropped_incomplete:
        logger.info(
            "%s design: dropped %d rows for short history, %d for incomplete snapshots",
            side, dropped_history, dropped_incomplete,
        )
    if not rows:
        logger.warning("%s design is empty: no labeled trade has a full lag history", side)
    X = np.vstack(rows) if rows else np.empty((0, len(columns)))
    return DesignMatrix(
        X=X,
        y=np.asarray(labels, dtype=float),
        columns=columns,
        side=side,
        seqs=np.asarray(seqs, dtype=np.int64),
        n_dropped_history=dropped_history,
        n_dropped_incomplete=dropped_incomplete,
    )


def design_to_frame(design: DesignMatrix) -> pd.DataFrame:
    frame = pd.DataFrame(design.X, columns=design.columns)
    frame.insert(0, "y", design.y.astype(np.int64))
    return frame


def design_from_frame(frame: pd.DataFrame, side: str) -> DesignMatrix:
    if list(frame.columns[:2]) != ["y", "intercept"]:
        raise DataFormatError("design header must start with y,intercept", line=1)
    return DesignMatrix(
        X=frame.iloc[:, 1:].to_numpy(dtype=float),
        y=frame["y"].to_numpy(dtype=float),
        columns=list(frame.columns[1:]),
        side=side,
    )


def write_design(path: Path, design: DesignMatrix) -> None:
    design_to_frame(design).to_csv(path, index=False, lineterminator="\n", float_format="%.17g")


def read_design(path: Path, side: str) -> DesignMatrix:
    return design_from_frame(pd.read_csv(path), side)
