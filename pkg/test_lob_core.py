"""
Tests for the full-depth book: event application, execution reports and snapshots.
"""

import math

import pytest

from conftest import make_event, opening_book
from lobjump.book.lob_core import BookState, OrderBook, apply_event, snapshot
from lobjump.book.ingest import iter_books, replay
from lobjump.exceptions import InsufficientDepthError, MalformedEventError
from lobjump.models.book import Tick
from lobjump.models.events import Side
from lobjump.schemas.config import SimConfig
from lobjump.simulation.simulator import simulate


def built_book(events):
    book = OrderBook()
    for ev in events:
        book.apply(ev)
    return book


class TestTick:
    def test_price_and_log_price(self):
        tick = Tick(250, 0.01)
        assert tick.price == pytest.approx(2.5)
        assert tick.log_price == pytest.approx(math.log(2.5))

    def test_log_price_increases_with_ticks(self):
        logs = [Tick(p, 0.05).log_price for p in range(1, 200)]
        assert all(a < b for a, b in zip(logs, logs[1:]))

    @pytest.mark.parametrize("price_ticks, tick_size", [(0, 0.01), (-3, 0.01), (10, 0.0), (10, -0.01)])
    def test_rejects_off_grid_values(self, price_ticks, tick_size):
        with pytest.raises(ValueError):
            Tick(price_ticks, tick_size)


class TestApply:
    def test_arrivals_build_sorted_sides(self):
        book = built_book(opening_book())
        assert book.levels(Side.BID) == ((100, 40), (99, 30), (98, 80))
        assert book.levels(Side.ASK) == ((102, 30), (103, 40), (104, 25))
        assert book.best(Side.BID) == 100 and book.best(Side.ASK) == 102
        book.check_invariants()

    def test_arrival_at_existing_level_adds_size(self):
        book = built_book(opening_book() + [make_event(7, "LA", "B", 99, 5)])
        assert book.size_at(Side.BID, 99) == 35

    def test_crossing_arrival_is_rejected(self):
        book = built_book(opening_book())
        with pytest.raises(MalformedEventError) as exc_info:
            book.apply(make_event(7, "LA", "B", 102, 10))
        assert exc_info.value.seq == 7

    def test_cancel_more_than_resting_is_rejected(self):
        book = built_book(opening_book())
        with pytest.raises(MalformedEventError):
            book.apply(make_event(7, "LC", "A", 103, 41))

    def test_cancel_of_missing_level_is_rejected(self):
        book = built_book(opening_book())
        with pytest.raises(MalformedEventError):
            book.apply(make_event(7, "LC", "A", 110, 1))

    def test_full_cancel_removes_level(self):
        book = built_book(opening_book() + [make_event(7, "LC", "B", 100, 40)])
        assert book.best(Side.BID) == 99
        assert book.n_levels(Side.BID) == 2

    def test_market_order_walks_levels(self):
        book = built_book(opening_book())
        report = book.apply(make_event(7, "MO", "A", 0, 50))
        assert [(f.price_ticks, f.size) for f in report.fills] == [(102, 30), (103, 20)]
        assert report.best_before == 102 and report.best_after == 103
        assert report.through_best
        assert report.vwap_ticks == pytest.approx((102 * 30 + 103 * 20) / 50)
        assert book.levels(Side.ASK) == ((103, 20), (104, 25))
        assert book.total_size(Side.ASK) == 45 and book.total_size(Side.BID) == 150

    def test_market_order_equal_to_best_size_is_not_through(self):
        book = built_book(opening_book())
        report = book.apply(make_event(7, "MO", "B", 0, 40))
        assert not report.through_best
        assert book.best(Side.BID) == 99

    def test_market_order_beyond_depth(self):
        book = built_book(opening_book())
        with pytest.raises(InsufficientDepthError):
            book.apply(make_event(7, "MO", "A", 0, 96))

    def test_zero_size_is_malformed(self):
        with pytest.raises(MalformedEventError):
            OrderBook().apply(make_event(1, "LA", "B", 100, 0))

    def test_apply_event_leaves_input_untouched(self):
        state = built_book(opening_book())
        before = state.copy()
        after, report = apply_event(state, make_event(7, "MO", "B", 0, 60))
        assert state == before
        assert after.levels(Side.BID) == ((99, 10), (98, 80))
        assert report.filled_size == 60


class TestSnapshot:
    def test_truncates_to_depth(self):
        book = built_book(opening_book())
        snap = snapshot(book, 2, 0.01, seq=6)
        assert snap.bid_ticks == (100, 99) and snap.ask_sizes == (30, 40)
        assert snap.complete

    def test_incomplete_side(self):
        book = built_book(opening_book())
        snap = snapshot(book, 5, 0.01)
        assert not snap.complete

    def test_log_quantities(self):
        book = built_book(opening_book())
        snap = snapshot(book, 3, 0.01)
        assert snap.spread == pytest.approx(math.log(1.02) - math.log(1.00))
        assert snap.bid_gaps[0] == pytest.approx(math.log(1.00) - math.log(0.99))
        assert snap.ask_gaps[0] == pytest.approx(math.log(1.03) - math.log(1.02))
        assert snap.bid_volumes[2] == pytest.approx(math.log(80))
        assert snap.v_mo == 0.0 and snap.p_mo == 0.0

    def test_trade_fields_use_pre_trade_best(self):
        book = built_book(opening_book())
        report = book.apply(make_event(7, "MO", "B", 0, 60))
        snap = snapshot(book, 2, 0.01, seq=7, report=report)
        assert snap.trade_ticks == 100 and snap.trade_size == 60
        assert snap.v_mo == pytest.approx(math.log(60))
        assert snap.p_mo == pytest.approx(math.log(1.00))

    def test_one_share_trade_has_zero_log_size(self):
        book = built_book(opening_book())
        report = book.apply(make_event(7, "MO", "A", 0, 1))
        snap = snapshot(book, 2, 0.01, seq=7, report=report)
        assert snap.is_trade and snap.v_mo == 0.0

    def test_empty_book(self):
        snap = snapshot(BookState(), 5, 0.01)
        assert snap.best_bid_ticks == 0 and math.isnan(snap.spread)


def test_scenario_quotes_evolve(scenario_events):
    books = [(ev.seq, book.copy()) for ev, _, book in iter_books(scenario_events)]
    quotes = {seq: (b.best(Side.BID), b.best(Side.ASK)) for seq, b in books}
    assert quotes[7] == (99, 102)
    assert quotes[8] == (99, 101)
    assert quotes[9] == (98, 101)
    assert quotes[10] == (98, 101)


def test_invariants_hold_along_simulated_session(small_sim):
    output = simulate(small_sim)
    opening = 2 * small_sim.initial_levels
    for i, (_, _, book) in enumerate(iter_books(output.events)):
        book.check_invariants()
        if i >= opening:
            assert book.n_levels(Side.BID) >= small_sim.depth
            assert book.n_levels(Side.ASK) >= small_sim.depth


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
def test_replay_matches_long_simulated_sessions(seed):
    cfg = SimConfig(seed=1000 + seed, n_events=50_000)
    output = simulate(cfg)
    assert replay(output.events, cfg.depth, cfg.tick_size) == output.snapshots
    for _, _, book in iter_books(output.events):
        book.check_invariants()
    for snap in output.snapshots:
        if snap.complete:
            assert snap.spread > 0
            assert all(gap > 0 for gap in snap.bid_gaps + snap.ask_gaps)
