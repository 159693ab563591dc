"""
Tests for event-file parsing, session filtering and replay.
"""

import pytest

from conftest import MORNING_START
from lobjump.book.ingest import (
    parse_events, replay, snapshots_from_frame, snapshots_to_frame, write_events,
)
from lobjump.exceptions import DataFormatError
from lobjump.models.events import AFTERNOON, ALLDAY, MORNING, EventKind, Side
from lobjump.schemas.config import SimConfig
from lobjump.simulation.simulator import simulate

HEADER = "seq,timestamp_ms,kind,side,price_ticks,size\n"


def write_file(tmp_path, body, header=HEADER):
    path = tmp_path / "events.csv"
    path.write_text(header + body)
    return path


class TestParseEvents:
    def test_window_boundary(self, tmp_path):
        nine, ten_past = 9 * 3_600_000, 9 * 3_600_000 + 10 * 60_000
        path = write_file(tmp_path, f"1,{nine},LA,B,100,10\n2,{ten_past},LA,B,100,10\n")
        parsed = parse_events(path, MORNING)
        assert [e.seq for e in parsed.events] == [2]
        assert parsed.n_rows == 2 and parsed.n_out_of_window == 1

    def test_window_is_half_open(self, tmp_path):
        path = write_file(tmp_path, f"1,{MORNING.start_ms},LA,B,100,10\n2,{MORNING.end_ms},LA,A,101,10\n")
        assert [e.seq for e in parse_events(path, MORNING).events] == [1]

    def test_presets_split_the_day(self, tmp_path):
        path = write_file(tmp_path, f"1,{MORNING.end_ms - 1},LA,B,100,10\n2,{AFTERNOON.start_ms},LA,A,101,10\n")
        assert [e.seq for e in parse_events(path, AFTERNOON).events] == [2]
        assert [e.seq for e in parse_events(path, ALLDAY).events] == [1, 2]
        assert AFTERNOON.end_ms == ALLDAY.end_ms

    def test_field_mapping(self, tmp_path):
        path = write_file(tmp_path, "5,34200000,MO,B,0,60\n")
        (event,) = parse_events(path, MORNING).events
        assert event.seq == 5 and event.timestamp_ms == 34_200_000
        assert event.kind is EventKind.MARKET_ORDER and event.side is Side.BID
        assert event.price_ticks == 0 and event.size == 60

    def test_malformed_row_reports_line(self, tmp_path):
        path = write_file(tmp_path, f"1,{MORNING_START},LA,B,100,10\n2,{MORNING_START},XX,B,100,10\n")
        with pytest.raises(DataFormatError) as exc_info:
            parse_events(path, MORNING)
        assert exc_info.value.line == 3
        assert "kind" in str(exc_info.value)

    @pytest.mark.parametrize(
        "row",
        [
            "1,{ts},LA,B,0,10",      # limit at tick 0
            "1,{ts},MO,A,101,10",    # priced market order
            "1,{ts},LA,B,100,0",     # empty order
            "1,{ts},LA,X,100,10",    # unknown side
            "1,{ts},LA,B,1.5,10",    # fractional tick
        ],
    )
    def test_out_of_domain_rows(self, tmp_path, row):
        path = write_file(tmp_path, row.format(ts=MORNING_START) + "\n")
        with pytest.raises(DataFormatError):
            parse_events(path, MORNING)

    @pytest.mark.parametrize("seq", ["--5", "²", "٣"])
    def test_non_ascii_integers_rejected(self, tmp_path, seq):
        path = tmp_path / "events.csv"
        path.write_text(HEADER + f"{seq},{MORNING_START},LA,B,100,10\n", encoding="utf-8")
        with pytest.raises(DataFormatError) as exc_info:
            parse_events(path, MORNING)
        assert exc_info.value.line == 2
        assert "seq" in str(exc_info.value)

    def test_invalid_utf8_file(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_bytes(HEADER.encode() + f"1,{MORNING_START},LA,B,100,".encode() + b"\xff\xfe\n")
        with pytest.raises(DataFormatError) as exc_info:
            parse_events(path, MORNING)
        assert "UTF-8" in str(exc_info.value)

    def test_non_monotone_seq(self, tmp_path):
        path = write_file(tmp_path, f"3,{MORNING_START},LA,B,100,10\n3,{MORNING_START},LA,B,99,10\n")
        with pytest.raises(DataFormatError) as exc_info:
            parse_events(path, MORNING)
        assert exc_info.value.line == 3

    def test_equal_timestamps_are_accepted(self, tmp_path):
        path = write_file(tmp_path, f"1,{MORNING_START},LA,B,100,10\n2,{MORNING_START},LA,A,101,10\n")
        assert len(parse_events(path, MORNING).events) == 2

    def test_missing_header(self, tmp_path):
        path = write_file(tmp_path, f"1,{MORNING_START},LA,B,100,10\n", header="")
        with pytest.raises(DataFormatError) as exc_info:
            parse_events(path, MORNING)
        assert exc_info.value.line == 1

    def test_header_only_gives_no_events(self, tmp_path):
        parsed = parse_events(write_file(tmp_path, ""), MORNING)
        assert parsed.events == [] and parsed.n_rows == 0

    def test_simulated_file_round_trip(self, tmp_path):
        output = simulate(SimConfig(seed=11, n_events=1000))
        path = tmp_path / "sim.csv"
        write_events(path, output.events)
        parsed = parse_events(path, ALLDAY)
        assert parsed.events == output.events


class TestReplay:
    def test_empty_event_list(self):
        assert replay([]) == []

    def test_one_snapshot_per_event(self, scenario_events):
        snapshots = replay(scenario_events, depth=2)
        assert [s.seq for s in snapshots] == list(range(1, 11))

    def test_scenario_quotes(self, scenario_events):
        snapshots = {s.seq: s for s in replay(scenario_events, depth=2)}

        through = snapshots[7]
        assert through.bid_ticks == (99, 98) and through.bid_sizes == (10, 80)
        assert through.flags.BMO == 1 and through.flags.BTT == 1
        assert through.trade_ticks == 100 and through.trade_size == 60

        inside = snapshots[8]
        assert inside.ask_ticks == (101, 102) and inside.ask_sizes == (20, 30)
        assert inside.flags.ALO == 1 and not inside.is_trade

        cancelled = snapshots[9]
        assert cancelled.bid_ticks == (98,) and cancelled.bid_sizes == (80,)
        assert not cancelled.complete

        regular = snapshots[10]
        assert regular.bid_sizes == (20,)
        assert regular.flags.BMO == 1 and regular.flags.BTT == 0
        assert regular.trade_ticks == 98

    def test_limit_events_have_zero_trade_fields(self, scenario_events):
        for snap in replay(scenario_events, depth=2):
            if not snap.is_trade:
                assert snap.v_mo == 0.0 and snap.p_mo == 0.0

    def test_matches_simulator_snapshots(self, small_sim):
        output = simulate(small_sim)
        assert replay(output.events, small_sim.depth, small_sim.tick_size) == output.snapshots

    def test_snapshot_frame_round_trip(self, scenario_events):
        snapshots = replay(scenario_events, depth=3)
        frame = snapshots_to_frame(snapshots, 3)
        restored = snapshots_from_frame(frame, 0.01)
        assert restored == snapshots

    def test_snapshot_frame_header_checked(self, scenario_events):
        frame = snapshots_to_frame(replay(scenario_events, depth=2), 2).drop(columns=["BTT"])
        with pytest.raises(DataFormatError):
            snapshots_from_frame(frame, 0.01)
