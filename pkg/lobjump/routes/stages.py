"""
Pipeline stages. Each handler reads the artifacts of earlier stages from the
run's output directory and writes its own.
"""

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from lobjump.analysis.empirics import tradesign_curves, write_curves
from lobjump.analysis.features import build_design, read_design, write_design
from lobjump.analysis.labeler import label_jumps, read_trades, summarize_session, write_trades
from lobjump.book.ingest import parse_events, replay, snapshots_from_frame, snapshots_to_frame, write_events
from lobjump.estimation.evaluation import (
    aggregate_selection, backtest, roc_curve, split_rows,
    write_auc_summary, write_roc, write_selection,
)
from lobjump.estimation.glm_lasso import decision_function, fit_to_dict, write_path
from lobjump.exceptions import InsufficientDataError, StageInputMissingError
from lobjump.models.design import DesignMatrix
from lobjump.schemas.config import RunConfig
from lobjump.schemas.responses import StageResponse
from lobjump.simulation.simulator import bayes_auc, read_truth, simulate, truth_auc, write_truth
from lobjump.storage import ArtifactStore

logger = logging.getLogger(__name__)

Handler = Callable[..., StageResponse]


@dataclass(frozen=True)
class Stage:
    name: str
    help: str
    handler: Handler


class StageRouter:
    """Collects stage handlers under their subcommand names."""

    def __init__(self):
        self.stages: Dict[str, Stage] = {}

    def stage(self, name: str, help: str = ""):
        def decorator(func: Handler) -> Handler:
            self.stages[name] = Stage(name=name, help=help, handler=func)
            return func
        return decorator


router = StageRouter()


def _ok(stage: str, artifacts: List[Path], message: str, **details) -> StageResponse:
    return StageResponse(
        result="ok",
        stage=stage,
        message=message,
        artifacts=[path.name for path in artifacts],
        details=details or None,
    )


def _load_snapshots(config: RunConfig, store: ArtifactStore):
    return snapshots_from_frame(store.read_frame("snapshots.csv"), config.tick_size)


def _load_design(store: ArtifactStore, side: str) -> DesignMatrix:
    design = read_design(store.require(f"design_{side}.csv"), side)
    seqs = store.read_frame(f"design_{side}_rows.csv")["seq"].to_numpy(dtype=np.int64)
    return DesignMatrix(X=design.X, y=design.y, columns=design.columns, side=side, seqs=seqs)


def _planted_truth(config: RunConfig, store: ArtifactStore):
    if config.input_events is not None or config.sim.planted == "none" or not store.exists("truth.csv"):
        return None
    return read_truth(store.path("truth.csv"))


@router.stage("simulate", help="generate a synthetic session (events.csv, truth.csv)")
def simulate_session(config: RunConfig, store: ArtifactStore, **options) -> StageResponse:
    """Simulate one session from the sim.* settings"""
    output = simulate(config.sim_config())
    artifacts = [
        store.write("events.csv", lambda path: write_events(path, output.events)),
        store.write("truth.csv", lambda path: write_truth(path, output.truth)),
    ]
    details = {"events": len(output.events), "trades": output.n_trades, "planted": output.planted}
    if output.planted != "none":
        try:
            details["bayes_auc"] = bayes_auc(output)
        except InsufficientDataError as exc:
            logger.warning("No Bayes AUC for this session: %s", exc)
    return _ok("simulate", artifacts, f"simulated {len(output.events)} events", **details)


@router.stage("replay", help="rebuild the book and write per-event snapshots")
def replay_events(config: RunConfig, store: ArtifactStore, **options) -> StageResponse:
    """Replay the event file into L-level snapshots"""
    source = Path(config.input_events) if config.input_events else store.require("events.csv")
    parsed = parse_events(source, config.session_window)
    snapshots = replay(parsed.events, config.depth, config.tick_size)
    path = store.write_frame("snapshots.csv", snapshots_to_frame(snapshots, config.depth))
    return _ok(
        "replay", [path], f"replayed {len(parsed.events)} events",
        rows=parsed.n_rows,
        out_of_window=parsed.n_out_of_window,
        incomplete=sum(not s.complete for s in snapshots),
    )


@router.stage("label", help="classify trades and label inter-trade price jumps")
def label_trades(config: RunConfig, store: ArtifactStore, **options) -> StageResponse:
    """Label every trade against the next one"""
    trades = label_jumps(_load_snapshots(config, store))
    path = store.write("trades.csv", lambda p: write_trades(p, trades))
    return _ok(
        "label", [path], f"labeled {len(trades)} trades",
        bid_jumps=sum(t.y_bid or 0 for t in trades),
        ask_jumps=sum(t.y_ask or 0 for t in trades),
    )


@router.stage("featurize", help="build the lagged design matrices")
def featurize(config: RunConfig, store: ArtifactStore, **options) -> StageResponse:
    """Build one design matrix per configured side"""
    snapshots = _load_snapshots(config, store)
    trades = read_trades(store.require("trades.csv"))
    artifacts, details = [], {}
    for side in config.sides:
        design = build_design(snapshots, trades, config.lags_r1, config.lags_r2, side, config.r1_layout)
        artifacts.append(store.write(f"design_{side}.csv", lambda p: write_design(p, design)))
        artifacts.append(store.write_frame(f"design_{side}_rows.csv", pd.DataFrame({"seq": design.seqs})))
        details[f"{side}_rows"] = design.n_rows
        details["width"] = len(design.columns)
    return _ok("featurize", artifacts, "design matrices written", **details)


@router.stage("fit", help="cross-validated LASSO fit on the training rows")
def fit_models(config: RunConfig, store: ArtifactStore, **options) -> StageResponse:
    """Fit each side on its training segment and record the path"""
    artifacts, details = [], {}
    for side in config.sides:
        design = _load_design(store, side)
        result = backtest(design, config.split, config.fit, config.split_mode)
        artifacts.append(store.write(f"path_{side}.csv", lambda p: write_path(p, result.fit.path)))
        metadata = fit_to_dict(result.fit, config.fit, side)
        metadata.update(
            instrument=config.instrument,
            session=config.window,
            split=config.split,
            split_mode=config.split_mode,
            baseline_auc=None if np.isnan(result.baseline_auc) else result.baseline_auc,
        )
        artifacts.append(store.write_json(f"fit_{side}.json", metadata))
        details[f"{side}_lambda"] = result.fit.lambda_
        details[f"{side}_selected"] = result.fit.selected
    return _ok("fit", artifacts, "models fitted", **details)


def _beta(metadata: Dict[str, object], columns: List[str]) -> np.ndarray:
    values = metadata["beta"]
    return np.array([float(values.get(name, 0.0)) for name in columns])


@router.stage("evaluate", help="out-of-sample ROC/AUC of the fitted models")
def evaluate_models(config: RunConfig, store: ArtifactStore, **options) -> StageResponse:
    """Score the held-out rows with the stored coefficients"""
    truth = _planted_truth(config, store)
    trades = read_trades(store.require("trades.csv")) if truth is not None else None
    rows, artifacts, details = [], [], {}
    for side in config.sides:
        design = _load_design(store, side)
        metadata = store.read_json(f"fit_{side}.json")
        _, test_idx = split_rows(design.n_rows, metadata["split"], metadata["split_mode"], config.fit.seed)
        test = design.rows(test_idx)
        roc = roc_curve(decision_function(_beta(metadata, design.columns), test.features), test.y)
        artifacts.append(store.write(f"roc_{side}.csv", lambda p: write_roc(p, roc)))
        rows.append(
            {
                "instrument": config.instrument,
                "session": config.window,
                "side": side,
                "auc": roc.auc,
                "n_train": metadata["n_train"],
                "n_test": test.n_rows,
                "lambda": metadata["lambda"],
            }
        )
        details[f"{side}_auc"] = roc.auc
        if truth is not None and side == "bid" and config.sim.planted == "jump":
            try:
                details["bid_bayes_auc"] = truth_auc(truth, trades, "jump", test.seqs)
            except InsufficientDataError as exc:
                logger.warning("No Bayes AUC on the bid test rows: %s", exc)
    artifacts.append(store.write("auc.csv", lambda p: write_auc_summary(p, rows)))
    return _ok("evaluate", artifacts, "models evaluated", **details)


@router.stage("curve", help="conditional trade-sign curves against W(i)")
def trade_sign_curve(config: RunConfig, store: ArtifactStore, depth: Optional[int] = None, **options) -> StageResponse:
    """Buy and sell curves for one depth or all depths 1..L"""
    snapshots = _load_snapshots(config, store)
    trades = read_trades(store.require("trades.csv"))
    depths = [depth] if depth else list(range(1, config.depth + 1))
    curves = tradesign_curves(
        trades, snapshots, depths,
        min_count=config.curve_min_count, n_points=config.curve_points, sell_mode=config.sell_curve,
    )
    path = store.write("curve.csv", lambda p: write_curves(p, curves))
    return _ok("curve", [path], f"{len(curves)} curves written", points=sum(len(c) for c in curves))


@router.stage("summarize", help="per-session event, jump and trade-through counts")
def summarize(config: RunConfig, store: ArtifactStore, **options) -> StageResponse:
    """Descriptive counts for the session"""
    snapshots = _load_snapshots(config, store)
    trades = read_trades(store.require("trades.csv"))
    summary = summarize_session(snapshots, trades, config.instrument, config.window)
    row = asdict(summary)
    path = store.write_frame("summary.csv", pd.DataFrame([row]))
    return _ok("summarize", [path], "session summarized", **row)


@router.stage("report", help="aggregate selection ranks over fit_*.json files")
def selection_report(
    config: RunConfig, store: ArtifactStore, directory: Optional[str] = None, **options
) -> StageResponse:
    """Rank-1..5 selection frequencies across every fit under a directory"""
    root = Path(directory) if directory else store.root
    fits = sorted(root.rglob("fit_*.json"))
    if not fits:
        raise StageInputMissingError(f"fit_*.json under {root}", "fit")
    orders = [ArtifactStore(path.parent).read_json(path.name)["selection_order"] for path in fits]
    report = aggregate_selection(orders)
    path = store.write("selection_report.csv", lambda p: write_selection(p, report))
    return _ok("report", [path], f"aggregated {report.n_backtests} fits", fits=report.n_backtests)


PIPELINE: Tuple[str, ...] = ("simulate", "replay", "label", "featurize", "fit", "evaluate", "curve", "summarize", "report")


@router.stage("all", help="run every stage in order")
def run_all(config: RunConfig, store: ArtifactStore, **options) -> StageResponse:
    """Simulate (unless an event file is configured) and run the whole pipeline"""
    artifacts: List[str] = []
    details: Dict[str, object] = {}
    for name in PIPELINE:
        if name == "simulate" and config.input_events:
            continue
        response = router.stages[name].handler(config, store)
        artifacts.extend(response.artifacts or [])
        details.update(response.details or {})
    return StageResponse(result="ok", stage="all", message="pipeline complete", artifacts=artifacts, details=details)
