from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .fit import FitResult


@dataclass(frozen=True)
class RocCurve:
    """ROC points from (0, 0) to (1, 1), one step per distinct score, and the area under them."""

    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


@dataclass(frozen=True)
class SelectionReport:
    """
    How often each variable was selected at each rank across backtests.

    `counts[rank]` maps variable name to count for ranks 1..n_ranks.
    """

    counts: Dict[int, Dict[str, int]]
    n_backtests: int
    top: int = 5

    def table(self, rank: int) -> List[Tuple[str, int]]:
        """Top entries for one rank, count descending then name ascending."""
        ranked = sorted(self.counts.get(rank, {}).items(), key=lambda item: (-item[1], item[0]))
        return ranked[: self.top]

    def rows(self) -> List[Tuple[int, str, int]]:
        return [(rank, name, count) for rank in sorted(self.counts) for name, count in self.table(rank)]


@dataclass(frozen=True)
class BacktestResult:
    fit: FitResult
    roc: RocCurve
    selection_order: List[str]
    n_train: int
    n_test: int
    baseline_auc: float = float("nan")

    @property
    def auc(self) -> float:
        return self.roc.auc


@dataclass(frozen=True)
class CondProbCurve:
    """
    Empirical P(trade sign | W(depth) condition at x) on a threshold grid.

    `side` is "buy" or "sell"; points with fewer than `min_count` conditioning
    trades are omitted.
    """

    depth: int
    side: str
    x: np.ndarray
    n: np.ndarray
    p_hat: np.ndarray
    min_count: int = field(default=0)

    def __len__(self) -> int:
        return len(self.x)
