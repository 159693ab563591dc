"""
Synthetic order flow: a zero-intelligence book and two planted regimes.

Every decision draws an exponential inter-arrival time and one of limit
arrival, cancellation or market order in proportion to the configured rates.
Limit prices are uniform within `placement_ticks` of the opposite best; sizes
are geometric. A refill guard keeps each side at depth + refill_buffer levels
by adding levels behind the deepest one, and neither cancels nor market orders
may leave fewer than `depth` levels.

Planted regimes:
    jump  after trade i the bid-jump probability σ(γ0 + γ·x_i) is evaluated on
          the design features of the post-trade book, a label is drawn, and the
          next trade is arranged so the labeler reproduces it.
    sign  each market order buys with probability σ(c0 + c·W(1)) on the book
          just before it.
"""

import logging
import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import expit

from lobjump.analysis.features import column_names, feature_lag, feature_row, w_ratio
from lobjump.analysis.labeler import classify_event, label_jumps
from lobjump.book.lob_core import OrderBook, snapshot
from lobjump.estimation.evaluation import auc
from lobjump.exceptions import ConfigError, DataFormatError
from lobjump.models.book import ExecutionReport
from lobjump.models.events import EventKind, LobEvent, SessionWindow, Side
from lobjump.models.simulation import SimOutput, TruthRow
from lobjump.models.trades import LabeledTrade
from lobjump.schemas.config import SimConfig

logger = logging.getLogger(__name__)

TRUTH_COLUMNS = ["seq", "true_p_jump_bid", "true_p_jump_ask", "true_p_buy"]


class SessionSimulator:
    """Generates one seeded session; use `simulate(cfg)` for the public entry point."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.depth = cfg.depth
        self.target_levels = cfg.depth + cfg.refill_buffer
        self.window = SessionWindow.named(cfg.window)
        self.rng = np.random.default_rng(cfg.seed)
        rates = np.array([cfg.limit_rate, cfg.cancel_rate, cfg.market_rate], dtype=float)
        self.rates = rates / rates.sum()

        self.book = OrderBook()
        self.events: List[LobEvent] = []
        self.snapshots = []
        self.truth: List[TruthRow] = []
        self.clock = float(self.window.start_ms)
        self.timestamp = self.window.start_ms
        self.pending: Optional[Tuple[int, int]] = None
        self._check_config()

    def _check_config(self):
        cfg = self.cfg
        if cfg.initial_levels < self.target_levels:
            raise ConfigError(
                f"{cfg.initial_levels} initial levels cannot sustain depth {self.depth} "
                f"plus refill buffer {cfg.refill_buffer}"
            )
        if cfg.planted == "jump":
            names = list(cfg.planted_coefficients)
            try:
                max_lag = max(feature_lag(name) for name in names)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            registry = set(column_names(self.depth, max_lag + 1, max_lag + 1))
            unknown = sorted(set(names) - registry)
            if unknown:
                raise ConfigError(f"planted features not in the depth-{self.depth} registry: {', '.join(unknown)}")

    # event plumbing

    def _advance_clock(self):
        self.clock += self.rng.exponential(self.cfg.mean_interarrival_ms)
        timestamp = int(round(self.clock))
        if not self.window.contains(timestamp):
            raise ConfigError(
                f"{self.cfg.n_events} events at {self.cfg.mean_interarrival_ms} ms mean spacing "
                f"overrun the '{self.cfg.window}' window"
            )
        self.timestamp = timestamp

    def _emit(self, kind: EventKind, side: Side, price_ticks: int, size: int) -> ExecutionReport:
        ev = LobEvent(
            seq=len(self.events) + 1,
            timestamp_ms=self.timestamp,
            kind=kind,
            side=side,
            price_ticks=price_ticks,
            size=size,
        )
        report = self.book.apply(ev)
        self.events.append(ev)
        self.snapshots.append(
            snapshot(
                self.book, self.depth, self.cfg.tick_size,
                seq=ev.seq, timestamp_ms=ev.timestamp_ms,
                flags=classify_event(ev, None, report), report=report,
            )
        )
        return report

    def _size(self, mean: float) -> int:
        return int(self.rng.geometric(1.0 / mean))

    def _gap(self) -> int:
        return int(self.rng.integers(1, self.cfg.max_level_gap_ticks + 1))

    def _side(self) -> Side:
        return Side.BID if self.rng.random() < 0.5 else Side.ASK

    def _add_behind(self, side: Side):
        deepest = self.book.book_side(side).peekitem(-1)[0]
        price = deepest - self._gap() if side is Side.BID else deepest + self._gap()
        if price < 1:
            raise ConfigError("bid side ran out of ticks above zero, raise start_ticks")
        self._emit(EventKind.LIMIT_ARRIVAL, side, price, self._size(self.cfg.limit_size_mean))

    def _refill(self, side: Side, levels: Optional[int] = None):
        levels = self.target_levels if levels is None else levels
        while self.book.n_levels(side) < levels:
            self._add_behind(side)

    # order flow

    def _initial_book(self):
        cfg = self.cfg
        bid, ask = cfg.start_ticks, cfg.start_ticks + cfg.initial_spread_ticks
        for _ in range(cfg.initial_levels):
            self._emit(EventKind.LIMIT_ARRIVAL, Side.BID, bid, self._size(cfg.initial_size_mean))
            self._emit(EventKind.LIMIT_ARRIVAL, Side.ASK, ask, self._size(cfg.initial_size_mean))
            bid -= self._gap()
            ask += self._gap()

    def _limit_arrival(self):
        side = self._side()
        offset = int(self.rng.integers(1, self.cfg.placement_ticks + 1))
        opposite = self.book.best(side.opposite)
        price = opposite - offset if side is Side.BID else opposite + offset
        if price < 1:
            price = 1
        self._emit(EventKind.LIMIT_ARRIVAL, side, price, self._size(self.cfg.limit_size_mean))

    def _cancel(self):
        side = self._side()
        levels = self.book.levels(side)
        price, resting = levels[int(self.rng.integers(len(levels)))]
        amount = int(self.rng.integers(1, resting + 1))
        if amount == resting and len(levels) <= self.depth:
            amount -= 1
        if amount < 1:
            self._limit_arrival()
            return
        self._emit(EventKind.LIMIT_CANCEL, side, price, amount)

    def _market_cap(self, side: Side) -> int:
        """Largest order that leaves `depth` levels on the consumed side."""
        sizes = [size for _, size in self.book.levels(side)]
        spare = len(sizes) - self.depth
        if spare < 0:
            return 0
        return sum(sizes[:spare]) + sizes[spare] - 1

    def _clear_beyond(self, side: Side, level: int):
        """
        Cancel every level priced at or better than `level` on a bid side (strictly
        better on an ask side), refilling behind first so the side keeps its target depth.
        """
        if side is Side.BID:
            survives = lambda price: price < level
        else:
            survives = lambda price: price >= level
        levels = self.book.book_side(side)
        while sum(1 for price in levels if survives(price)) < self.target_levels:
            self._add_behind(side)
        for price in [price for price in levels if not survives(price)]:
            self._emit(EventKind.LIMIT_CANCEL, side, price, levels[price])

    def _arrange_jump(self, level: int) -> Side:
        """Make the next trade a sell strictly below `level`."""
        self._clear_beyond(Side.BID, level)
        return Side.BID

    def _arrange_no_jump(self, level: int) -> Side:
        """Make the next trade execute at or above `level`."""
        if self._side() is Side.BID:
            if self.book.best(Side.BID) >= level:
                return Side.BID
            if level < self.book.best(Side.ASK):
                self._emit(EventKind.LIMIT_ARRIVAL, Side.BID, level, self._size(self.cfg.limit_size_mean))
                return Side.BID
        self._clear_beyond(Side.ASK, level)
        return Side.ASK

    def _market_order(self):
        cfg = self.cfg
        p_buy = math.nan
        if cfg.planted == "jump" and self.pending is not None:
            target, level = self.pending
            self.pending = None
            side = self._arrange_jump(level) if target else self._arrange_no_jump(level)
        elif cfg.planted == "sign":
            w = w_ratio(self.snapshots[-1], 1)
            p_buy = float(expit(cfg.sign_intercept + cfg.sign_coefficient * w))
            side = Side.ASK if self.rng.random() < p_buy else Side.BID
        else:
            side = self._side()

        cap = self._market_cap(side)
        if cap < 1:
            self._limit_arrival()
            return
        size = min(self._size(cfg.market_size_mean), cap)
        report = self._emit(EventKind.MARKET_ORDER, side, 0, size)
        self._record_trade(report, p_buy)

    def _record_trade(self, report: ExecutionReport, p_buy: float):
        p_jump = math.nan
        if self.cfg.planted == "jump":
            index = len(self.snapshots) - 1
            try:
                coefficients = self.cfg.planted_coefficients
                row = feature_row(self.snapshots, index, list(coefficients))
                score = self.cfg.planted_intercept + sum(gamma * row[name] for name, gamma in coefficients.items())
                p_jump = float(expit(score))
                draw = p_jump
            except ValueError:
                # lag window not available yet
                draw = float(expit(self.cfg.planted_intercept))
            target = int(self.rng.random() < draw)
            self.pending = (target, self.book.best(Side.BID))
        self.truth.append(TruthRow(report.seq, p_jump, math.nan, p_buy))

    def run(self) -> SimOutput:
        cfg = self.cfg
        self._initial_book()
        actions = (self._limit_arrival, self._cancel, self._market_order)
        while len(self.events) < cfg.n_events:
            self._advance_clock()
            actions[int(self.rng.choice(3, p=self.rates))]()
            for side in Side:
                self._refill(side)

        events = self.events[: cfg.n_events]
        last_seq = events[-1].seq if events else 0
        truth = [row for row in self.truth if row.seq <= last_seq]
        logger.info(
            "Simulated %d events (%d trades) over %.1f s, planted=%s, seed=%d",
            len(events), len(truth), (self.timestamp - self.window.start_ms) / 1000.0, cfg.planted, cfg.seed,
        )
        return SimOutput(
            planted=cfg.planted,
            depth=self.depth,
            events=events,
            snapshots=self.snapshots[: cfg.n_events],
            truth=truth,
        )


def simulate(cfg: SimConfig) -> SimOutput:
    """Generate a seeded session; identical configs give identical outputs."""
    return SessionSimulator(cfg).run()


def truth_auc(
    truth: Iterable[TruthRow],
    trades: Sequence[LabeledTrade],
    planted: str,
    seqs: Optional[Iterable[int]] = None,
) -> float:
    """
    AUC of the true probabilities against the realized outcomes.

    Jump truth is scored against y_bid, sign truth against buy/sell. `seqs`
    restricts the score to those trades; trades without a defined truth are skipped.
    """
    if planted not in ("jump", "sign"):
        raise ConfigError(f"no planted truth in a '{planted}' simulation")
    by_seq = {row.seq: row for row in truth}
    keep = None if seqs is None else set(int(s) for s in seqs)
    scores, labels = [], []
    for trade in trades:
        row = by_seq.get(trade.t_seq)
        if row is None or (keep is not None and trade.t_seq not in keep):
            continue
        if planted == "jump":
            p, outcome = row.true_p_jump_bid, trade.y_bid
        else:
            p, outcome = row.true_p_buy, int(trade.sign == 1)
        if outcome is None or math.isnan(p):
            continue
        scores.append(p)
        labels.append(outcome)
    return auc(scores, labels)


def bayes_auc(output: SimOutput, seqs: Optional[Iterable[int]] = None) -> float:
    """Ceiling AUC of a planted session: the true probabilities scored against realized labels."""
    return truth_auc(output.truth, label_jumps(output.snapshots), output.planted, seqs)


def truth_to_frame(truth: Sequence[TruthRow]) -> pd.DataFrame:
    frame = pd.DataFrame(
        [(r.seq, r.true_p_jump_bid, r.true_p_jump_ask, r.true_p_buy) for r in truth], columns=TRUTH_COLUMNS
    )
    frame["seq"] = frame["seq"].astype(np.int64)
    return frame


def truth_from_frame(frame: pd.DataFrame) -> List[TruthRow]:
    if list(frame.columns) != TRUTH_COLUMNS:
        raise DataFormatError(f"truth header must be {','.join(TRUTH_COLUMNS)}")
    return [
        TruthRow(int(r.seq), float(r.true_p_jump_bid), float(r.true_p_jump_ask), float(r.true_p_buy))
        for r in frame.itertuples(index=False)
    ]


def write_truth(path: Path, truth: Sequence[TruthRow]) -> None:
    truth_to_frame(truth).to_csv(path, index=False, lineterminator="\n", float_format="%.17g")


def read_truth(path: Path) -> List[TruthRow]:
    return truth_from_frame(pd.read_csv(path))
