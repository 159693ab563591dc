from dataclasses import dataclass, field
from typing import List

import numpy as np


@dataclass(frozen=True)
class RegPath:
    """
    Solutions along a descending λ grid.

    `coefs[k]` is the coefficient vector at `lambdas[k]` on the original feature
    scale, intercept first. `selection_order` lists feature names in the order
    they first become non-zero as λ decreases.
    """

    lambdas: np.ndarray
    coefs: np.ndarray
    objective: np.ndarray
    deviance: np.ndarray
    n_nonzero: np.ndarray
    converged: np.ndarray
    feature_names: List[str]
    selection_order: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.lambdas)

    @property
    def lambda_max(self) -> float:
        return float(self.lambdas[0])


@dataclass(frozen=True)
class FitResult:
    """Cross-validated choice of λ and the full-data solution at it."""

    lambda_: float
    lambda_index: int
    beta: np.ndarray
    cv_deviance: np.ndarray
    path: RegPath
    n_train: int
    n_test: int = 0

    @property
    def cv_mean(self) -> np.ndarray:
        return self.cv_deviance.mean(axis=0)

    @property
    def selection_order(self) -> List[str]:
        return self.path.selection_order

    @property
    def selected(self) -> List[str]:
        """Names of the penalized coefficients that are non-zero at the chosen λ."""
        return [name for name, b in zip(self.path.feature_names, self.beta[1:]) if b != 0.0]
