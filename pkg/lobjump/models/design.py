from dataclasses import dataclass
from typing import List, Optional

import numpy as np


@dataclass(frozen=True)
class DesignMatrix:
    """
    Lagged feature rows X_i (intercept first) and the jump labels y_i of one side.

    Rows are in trade order. `seqs` holds the seq of the trade behind each row.
    """

    X: np.ndarray
    y: np.ndarray
    columns: List[str]
    side: str
    seqs: Optional[np.ndarray] = None
    n_dropped_history: int = 0
    n_dropped_incomplete: int = 0

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[1] != len(self.columns):
            raise ValueError(f"X has shape {self.X.shape} but {len(self.columns)} columns are named")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y disagree on the number of rows")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("design column names must be unique")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def features(self) -> np.ndarray:
        """X without the intercept column."""
        return self.X[:, 1:]

    @property
    def feature_names(self) -> List[str]:
        return self.columns[1:]

    def rows(self, index: np.ndarray) -> "DesignMatrix":
        return DesignMatrix(
            X=self.X[index],
            y=self.y[index],
            columns=self.columns,
            side=self.side,
            seqs=None if self.seqs is None else self.seqs[index],
        )
