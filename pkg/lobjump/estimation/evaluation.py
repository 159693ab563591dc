"""
Out-of-sample scoring (ROC/AUC), train/test backtests and selection-rank tables.
"""

import logging
from collections import Counter
from dataclasses import replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import rankdata
from sklearn import metrics
from sklearn.model_selection import train_test_split

from lobjump.estimation.glm_lasso import cross_validate, decision_function, fit_logistic
from lobjump.exceptions import DataFormatError, InsufficientDataError
from lobjump.models.design import DesignMatrix
from lobjump.models.evaluation import BacktestResult, RocCurve, SelectionReport
from lobjump.schemas.config import FitConfig

logger = logging.getLogger(__name__)

AUC_COLUMNS = ["instrument", "session", "side", "auc", "n_train", "n_test", "lambda"]
SELECTION_COLUMNS = ["rank", "variable", "count"]
SPLIT_MODES = ("chrono", "random")


def _scored(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DataFormatError(f"scores {scores.shape} and labels {labels.shape} must be matching vectors")
    if not np.isin(labels, (0.0, 1.0)).all():
        raise DataFormatError("labels must be 0/1")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InsufficientDataError("AUC is undefined for single-class labels", n_pos=n_pos, n_neg=n_neg)
    return scores, labels, n_pos, n_neg


def auc(scores, labels) -> float:
    """Rank-statistic AUC with midranks for tied scores."""
    scores, labels, n_pos, n_neg = _scored(scores, labels)
    ranks = rankdata(scores, method="average")
    return float((ranks[labels == 1.0].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def roc_curve(scores, labels) -> RocCurve:
    """
    Threshold sweep from the highest score down; tied scores move as one step.

    Args:
        scores: Higher means more likely positive
        labels: 0/1 outcomes

    Returns:
        RocCurve whose auc is the trapezoidal area under the points
    """
    scores, labels, _, _ = _scored(scores, labels)
    fpr, tpr, _ = metrics.roc_curve(labels, scores, drop_intermediate=False)
    return RocCurve(fpr=fpr, tpr=tpr, auc=float(metrics.auc(fpr, tpr)))


def split_rows(n_rows: int, split: float, mode: str = "chrono", seed: int = 0):
    """Train and test row indices; chrono keeps the first `split` fraction for training."""
    if mode not in SPLIT_MODES:
        raise ValueError(f"split mode must be one of {SPLIT_MODES}, got '{mode}'")
    rows = np.arange(n_rows)
    n_train = int(np.floor(split * n_rows))
    if not 0 < n_train < n_rows:
        return rows[:n_train], rows[n_train:]
    shuffle = mode == "random"
    train, test = train_test_split(
        rows, train_size=n_train, shuffle=shuffle, random_state=seed if shuffle else None
    )
    return np.sort(train), np.sort(test)


def backtest(
    design: DesignMatrix,
    split: float = 0.7,
    cfg: Optional[FitConfig] = None,
    mode: str = "chrono",
) -> BacktestResult:
    """
    Cross-validated fit on the training rows, ROC/AUC on the held-out rows.

    The unpenalized logistic fit on the same rows is scored alongside as a
    baseline; its AUC is metadata only.
    """
    cfg = cfg or FitConfig()
    train_idx, test_idx = split_rows(design.n_rows, split, mode, cfg.seed)
    train, test = design.rows(train_idx), design.rows(test_idx)
    test_pos = int(test.y.sum())
    if test_pos == 0 or test_pos == test.n_rows:
        raise InsufficientDataError(
            f"{design.side} test segment of {test.n_rows} rows is single-class",
            n_pos=test_pos, n_neg=test.n_rows - test_pos,
        )

    fit = cross_validate(train.features, train.y, cfg, design.feature_names)
    fit = replace(fit, n_test=test.n_rows)
    roc = roc_curve(decision_function(fit.beta, test.features), test.y)

    baseline = float("nan")
    try:
        baseline = auc(decision_function(fit_logistic(train.features, train.y), test.features), test.y)
    except InsufficientDataError as exc:
        logger.info("No baseline AUC for %s: %s", design.side, exc)

    logger.info(
        "%s backtest: AUC %.4f on %d test rows (baseline %.4f), λ=%.4g, %d selected",
        design.side, roc.auc, test.n_rows, baseline, fit.lambda_, len(fit.selected),
    )
    return BacktestResult(
        fit=fit,
        roc=roc,
        selection_order=list(fit.selection_order),
        n_train=train.n_rows,
        n_test=test.n_rows,
        baseline_auc=baseline,
    )


def aggregate_selection(orders: Iterable[Sequence[str]], ranks: int = 5, top: int = 5) -> SelectionReport:
    """Count, per selection rank, which variable entered at that rank."""
    orders = list(orders)
    counts: Dict[int, Counter] = {rank: Counter() for rank in range(1, ranks + 1)}
    for order in orders:
        for rank, name in enumerate(order[:ranks], start=1):
            counts[rank][name] += 1
    return SelectionReport(
        counts={rank: dict(counter) for rank, counter in counts.items()},
        n_backtests=len(orders),
        top=top,
    )


def write_roc(path: Path, roc: RocCurve) -> None:
    frame = pd.DataFrame({"fpr": roc.fpr, "tpr": roc.tpr})
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")


def write_auc_summary(path: Path, rows: List[Dict[str, object]]) -> None:
    frame = pd.DataFrame(rows, columns=AUC_COLUMNS)
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")


def write_selection(path: Path, report: SelectionReport) -> None:
    frame = pd.DataFrame(report.rows(), columns=SELECTION_COLUMNS)
    frame.to_csv(path, index=False, lineterminator="\n")
