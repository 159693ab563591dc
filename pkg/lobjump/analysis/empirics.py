"""
Conditional trade-sign probabilities against the bid-ask volume ratio W(i).

The buy curve is P(next trade is a buy | W(i) >= x), with W read on the
snapshot just before the trade. The sell curve mirrors it by default,
P(sell | W(i) <= -x); `literal` conditions on W(i) <= x over the raw grid.
"""

import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from lobjump.analysis.features import w_ratio
from lobjump.models.book import BookSnapshot
from lobjump.models.evaluation import CondProbCurve
from lobjump.models.trades import LabeledTrade

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["depth", "x", "n", "p_hat", "side"]
SELL_MODES = ("mirrored", "literal")


def pre_trade_ratios(
    labeled_trades: Sequence[LabeledTrade], snapshots: Sequence[BookSnapshot], depth: int
) -> Tuple[np.ndarray, np.ndarray]:
    """W(depth) on the snapshot preceding each trade, with the trade signs; trades without a full book are skipped."""
    position = {s.seq: i for i, s in enumerate(snapshots)}
    ratios, signs = [], []
    skipped = 0
    for trade in labeled_trades:
        t = position.get(trade.t_seq)
        w = w_ratio(snapshots[t - 1], depth) if t else None
        if w is None:
            skipped += 1
            continue
        ratios.append(w)
        signs.append(trade.sign)
    if skipped:
        logger.debug("W(%d) unavailable before %d trades", depth, skipped)
    return np.asarray(ratios, dtype=float), np.asarray(signs, dtype=np.int64)


def _curve(depth, side, grid, n, hits, min_count) -> CondProbCurve:
    keep = n >= max(min_count, 1)
    n_kept = n[keep]
    return CondProbCurve(
        depth=depth,
        side=side,
        x=grid[keep],
        n=n_kept,
        p_hat=hits[keep] / n_kept,
        min_count=min_count,
    )


def tradesign_curve(
    labeled_trades: Sequence[LabeledTrade],
    snapshots: Sequence[BookSnapshot],
    depth: int,
    grid: Optional[np.ndarray] = None,
    min_count: int = 50,
    n_points: int = 50,
    sell_mode: str = "mirrored",
) -> Tuple[CondProbCurve, CondProbCurve]:
    """
    Buy and sell conditional trade-sign curves at one depth.

    Args:
        labeled_trades: Trades with signs (+1 buy, -1 sell)
        snapshots: Session snapshots the trades refer to
        depth: Depth i of the volume ratio W(i)
        grid: Thresholds x; defaults to n_points evenly spaced over the observed W range
        min_count: Points conditioning on fewer trades are omitted
        n_points: Size of the default grid
        sell_mode: "mirrored" (W <= -x) or "literal" (W <= x)

    Returns:
        (buy curve, sell curve)
    """
    if sell_mode not in SELL_MODES:
        raise ValueError(f"sell_mode must be one of {SELL_MODES}, got '{sell_mode}'")
    ratios, signs = pre_trade_ratios(labeled_trades, snapshots, depth)
    if len(ratios) == 0:
        logger.warning("No trade has W(%d) available, trade-sign curves are empty", depth)
        empty = np.empty(0)
        return (
            CondProbCurve(depth, "buy", empty, np.empty(0, dtype=np.int64), empty, min_count),
            CondProbCurve(depth, "sell", empty, np.empty(0, dtype=np.int64), empty, min_count),
        )

    if grid is None:
        grid = np.linspace(ratios.min(), ratios.max(), n_points)
    grid = np.asarray(grid, dtype=float)

    order = np.argsort(ratios, kind="mergesort")
    w_sorted = ratios[order]
    buys = np.r_[0, np.cumsum(signs[order] == 1)]
    sells = np.r_[0, np.cumsum(signs[order] == -1)]
    total = len(w_sorted)

    # W >= x
    lo = np.searchsorted(w_sorted, grid, side="left")
    buy = _curve(depth, "buy", grid, total - lo, buys[-1] - buys[lo], min_count)

    # W <= threshold
    threshold = -grid if sell_mode == "mirrored" else grid
    hi = np.searchsorted(w_sorted, threshold, side="right")
    sell = _curve(depth, "sell", grid, hi, sells[hi], min_count)

    for curve in (buy, sell):
        if len(curve) == 0:
            logger.warning("%s curve at depth %d has no point with at least %d trades", curve.side, depth, min_count)
    return buy, sell


def tradesign_curves(
    labeled_trades: Sequence[LabeledTrade],
    snapshots: Sequence[BookSnapshot],
    depths: Iterable[int],
    min_count: int = 50,
    n_points: int = 50,
    sell_mode: str = "mirrored",
) -> List[CondProbCurve]:
    curves = []
    for depth in depths:
        curves.extend(
            tradesign_curve(labeled_trades, snapshots, depth, min_count=min_count, n_points=n_points, sell_mode=sell_mode)
        )
    return curves


def curves_to_frame(curves: Sequence[CondProbCurve]) -> pd.DataFrame:
    frames = [
        pd.DataFrame({"depth": c.depth, "x": c.x, "n": c.n, "p_hat": c.p_hat, "side": c.side}, columns=CURVE_COLUMNS)
        for c in curves
    ]
    if not frames:
        return pd.DataFrame(columns=CURVE_COLUMNS)
    frame = pd.concat(frames, ignore_index=True)
    frame["depth"] = frame["depth"].astype(np.int64)
    frame["n"] = frame["n"].astype(np.int64)
    return frame


def write_curves(path: Path, curves: Sequence[CondProbCurve]) -> None:
    curves_to_frame(curves).to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
