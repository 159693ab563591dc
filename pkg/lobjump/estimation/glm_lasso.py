"""
L1-penalized logistic regression along a λ path with a cross-validated λ.

For a feature matrix F (N x p, no intercept column) the path solves, for each
λ on a descending grid,

    minimize_b  (1/N) Σ_i [log(1 + exp(a_i·b)) - y_i a_i·b] + λ Σ_{j>=1} |b_j|

where a_i = [1, z_i] and z_i is the standardized feature row. Coefficients are
reported on the original scale with the intercept first. The intercept is never
penalized.

Each grid point is solved by proximal Newton steps: a weighted quadratic model
of the loss is minimized by cyclic coordinate descent over a working set
(intercept, non-zeros and KKT violators), then a backtracking search on the
true objective keeps the objective non-increasing.
"""

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import minimize
from scipy.special import expit, logit
from sklearn.model_selection import KFold, StratifiedKFold
from sklearn.preprocessing import StandardScaler

from lobjump.exceptions import ConvergenceWarning, DataFormatError, InsufficientDataError
from lobjump.models.fit import FitResult, RegPath
from lobjump.schemas.config import FitConfig

logger = logging.getLogger(__name__)

MIN_ROWS = 10
MIN_WEIGHT = 1e-6
MIN_STEP = 1e-10
ARMIJO = 1e-4


def _labels(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or not np.isin(y, (0.0, 1.0)).all():
        raise DataFormatError("labels must be a vector of 0/1 values")
    return y


def nll(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Logistic negative log-likelihood Σ log(1 + e^{β·X_i}) - y_i β·X_i; X carries the intercept column."""
    y = _labels(y)
    z = X @ beta
    return float(np.sum(np.logaddexp(0.0, z) - y * z))


def grad_nll(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient Σ (σ(β·X_i) - y_i) X_i."""
    y = _labels(y)
    return X.T @ (expit(X @ beta) - y)


def decision_function(beta: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Linear score β0 + F β for original-scale coefficients and an intercept-free F."""
    return beta[0] + np.asarray(F, dtype=float) @ beta[1:]


def predict_proba(beta: np.ndarray, F: np.ndarray) -> np.ndarray:
    return expit(decision_function(beta, F))


@dataclass(frozen=True)
class Scaling:
    """StandardScaler over the feature columns; zero-variance columns map to exactly 0."""

    scaler: StandardScaler
    constant: np.ndarray

    @classmethod
    def fit(cls, F: np.ndarray, standardize: bool = True) -> "Scaling":
        scaler = StandardScaler(with_mean=standardize, with_std=standardize).fit(F)
        if standardize:
            constant = np.ptp(F, axis=0) == 0
        else:
            constant = np.zeros(F.shape[1], dtype=bool)
        return cls(scaler, constant)

    @property
    def center(self) -> np.ndarray:
        if self.scaler.mean_ is None:
            return np.zeros(self.scaler.n_features_in_)
        return self.scaler.mean_

    @property
    def scale(self) -> np.ndarray:
        if self.scaler.scale_ is None:
            return np.ones(self.scaler.n_features_in_)
        return np.where(self.constant, 1.0, self.scaler.scale_)

    def design(self, F: np.ndarray) -> np.ndarray:
        """A = [1, Z] for the solver."""
        Z = self.scaler.transform(F)
        Z[:, self.constant] = 0.0
        return np.hstack([np.ones((F.shape[0], 1)), Z])

    def to_original(self, b: np.ndarray) -> np.ndarray:
        beta = np.empty_like(b)
        beta[1:] = b[1:] / self.scale
        beta[0] = b[0] - np.sum(beta[1:] * self.center)
        return beta

    def to_standardized(self, beta: np.ndarray) -> np.ndarray:
        b = np.empty_like(beta, dtype=float)
        b[1:] = beta[1:] * self.scale
        b[0] = beta[0] + np.sum(beta[1:] * self.center)
        return b


def _check_inputs(F, y) -> Tuple[np.ndarray, np.ndarray]:
    F = np.asarray(F, dtype=float)
    y = _labels(y)
    if F.ndim != 2 or F.shape[0] != y.shape[0]:
        raise DataFormatError(f"feature matrix shape {F.shape} does not match {y.shape[0]} labels")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if len(y) < MIN_ROWS or n_pos == 0 or n_neg == 0:
        raise InsufficientDataError(
            f"need at least {MIN_ROWS} rows with both classes, got {len(y)} rows", n_pos=n_pos, n_neg=n_neg
        )
    return F, y


def _loss(z: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def _null_model(A: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Intercept-only optimum and the full gradient there."""
    b = np.zeros(A.shape[1])
    b[0] = logit(y.mean())
    g = A.T @ (y.mean() - y) / len(y)
    return b, g


def lambda_max(F, y, standardize: bool = True) -> float:
    """Smallest λ at which every penalized coefficient is zero."""
    F, y = _check_inputs(F, y)
    A = Scaling.fit(F, standardize).design(F)
    _, g = _null_model(A, y)
    return float(np.max(np.abs(g[1:]))) if g.shape[0] > 1 else 0.0


def lambda_grid(lam_max: float, cfg: FitConfig) -> np.ndarray:
    """Log-spaced descending grid from lam_max down to lam_max * lambda_ratio."""
    if not lam_max > 0:
        logger.info("All penalized gradients vanish at the null model, using a unit λ grid")
        lam_max = 1.0
    if cfg.n_lambdas == 1:
        return np.array([lam_max])
    return lam_max * cfg.lambda_ratio ** (np.arange(cfg.n_lambdas) / (cfg.n_lambdas - 1))


def _kkt(b: np.ndarray, g: np.ndarray, lam: float) -> np.ndarray:
    """Per-coordinate KKT residuals relative to λ; entry 0 is the intercept."""
    res = np.empty_like(b)
    res[0] = abs(g[0]) / lam
    pen, gp = b[1:], g[1:]
    res[1:] = np.where(
        pen == 0.0,
        np.maximum(0.0, np.abs(gp) - lam),
        np.abs(gp + lam * np.sign(pen)),
    ) / lam
    return res


def kkt_residuals(F, y, beta: np.ndarray, lam: float, standardize: bool = True) -> np.ndarray:
    """
    Relative KKT residuals of original-scale coefficients on the standardized problem.

    Args:
        F: Feature matrix without intercept
        y: 0/1 labels
        beta: Coefficients on the original scale, intercept first
        lam: Penalty level
        standardize: Whether the fit standardized its columns

    Returns:
        Residual per coefficient (intercept first); all <= tol at a tol-optimal solution
    """
    F, y = _check_inputs(F, y)
    scaling = Scaling.fit(F, standardize)
    A = scaling.design(F)
    b = scaling.to_standardized(np.asarray(beta, dtype=float))
    b[1:][scaling.constant] = 0.0
    g = A.T @ (expit(A @ b) - y) / len(y)
    return _kkt(b, g, lam)


def _soft(z: float, t: float) -> float:
    return math.copysign(max(abs(z) - t, 0.0), z)


def _quadratic_cd(
    H: np.ndarray, g: np.ndarray, v: np.ndarray, lam: float, max_sweeps: int, tol: float
) -> Tuple[np.ndarray, bool]:
    """
    Minimize g·(u - v) + ½(u - v)ᵀH(u - v) + λ Σ_{j>=1} |u_j| by cyclic coordinate descent.

    Index 0 is the unpenalized intercept. Sweeps alternate between the non-zero
    coordinates and full passes; it stops when a full pass moves no coordinate by
    more than `tol` in gradient units.
    """
    k = len(v)
    u = v.astype(float)
    r = g.astype(float)
    diag = np.diag(H).copy()
    thresh = np.full(k, lam)
    thresh[0] = 0.0
    rows = [H[j] for j in range(k)]
    full = True
    for _ in range(max_sweeps):
        index = range(k) if full else np.flatnonzero((u != 0.0) | (thresh == 0.0))
        max_move = 0.0
        for j in index:
            h = diag[j]
            if h <= 0.0:
                continue
            uj = u[j]
            new = _soft(h * uj - r[j], thresh[j]) / h
            step = new - uj
            if step != 0.0:
                u[j] = new
                r += rows[j] * step
                max_move = max(max_move, h * abs(step))
        if max_move <= tol:
            if full:
                return u, True
            full = True
        else:
            full = False
    return u, False


def solve_lambda(
    A: np.ndarray,
    y: np.ndarray,
    lam: float,
    b_start: np.ndarray,
    cfg: FitConfig,
    history: Optional[List[float]] = None,
) -> Tuple[np.ndarray, bool, np.ndarray]:
    """
    Proximal Newton solve of the penalized problem at one λ from a warm start.

    Args:
        A: Standardized design with a leading column of ones
        y: 0/1 labels
        lam: Penalty level (> 0)
        b_start: Warm start, intercept first
        cfg: Solver tolerances
        history: Optional list receiving the objective after each accepted step

    Returns:
        (coefficients, converged flag, gradient at the returned coefficients)
    """
    n = len(y)
    b = b_start.astype(float)
    z = A @ b
    objective = _loss(z, y) + lam * np.abs(b[1:]).sum()
    if history is not None:
        history.append(objective)
    inner_tol = 0.1 * cfg.kkt_tol * lam
    rel_change = math.inf

    for _ in range(cfg.max_iter):
        p = expit(z)
        g = A.T @ (p - y) / n
        kkt = _kkt(b, g, lam).max()
        if kkt <= cfg.kkt_tol and rel_change <= cfg.tol:
            return b, True, g

        working = (b != 0.0) | (np.abs(g) > lam)
        working[0] = True
        W = np.flatnonzero(working)
        AW = A[:, W]
        w = np.maximum(p * (1.0 - p), MIN_WEIGHT)
        H = (AW.T * w) @ AW / n
        target, _ = _quadratic_cd(H, g[W], b[W], lam, cfg.max_inner, inner_tol)
        delta = target - b[W]
        dz = AW @ delta
        pen = W != 0
        predicted = float(g[W] @ delta) + lam * (np.abs(target[pen]).sum() - np.abs(b[W][pen]).sum())

        t = 1.0
        accepted = False
        while t >= MIN_STEP:
            trial = b[W] + t * delta
            z_trial = z + t * dz
            # every non-zero penalized coefficient lies in W
            trial_objective = _loss(z_trial, y) + lam * np.abs(trial[pen]).sum()
            if trial_objective <= objective + ARMIJO * t * min(predicted, 0.0):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            return b, bool(kkt <= cfg.kkt_tol), g

        b = b.copy()
        b[W] = trial
        z = z_trial
        rel_change = abs(objective - trial_objective) / max(abs(trial_objective), 1e-300)
        objective = trial_objective
        if history is not None:
            history.append(objective)

    g = A.T @ (expit(z) - y) / n
    return b, bool(_kkt(b, g, lam).max() <= cfg.kkt_tol and rel_change <= cfg.tol), g


def fit_path(
    F,
    y,
    cfg: Optional[FitConfig] = None,
    feature_names: Optional[Sequence[str]] = None,
    lambdas: Optional[np.ndarray] = None,
) -> RegPath:
    """
    Solve the penalized logistic problem along a descending λ grid with warm starts.

    Args:
        F: Feature matrix (N x p) without an intercept column
        y: 0/1 labels
        cfg: Fit settings; defaults apply when None
        feature_names: Names of the p columns, used for the selection order
        lambdas: Explicit descending grid (the data's own grid when None)

    Returns:
        RegPath with original-scale coefficients per grid point
    """
    cfg = cfg or FitConfig()
    F, y = _check_inputs(F, y)
    N, p = F.shape
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(1, p + 1)]
    if len(names) != p:
        raise ValueError(f"{len(names)} feature names for {p} columns")

    scaling = Scaling.fit(F, cfg.standardize)
    A = scaling.design(F)
    b_null, g_null = _null_model(A, y)
    own_max = float(np.max(np.abs(g_null[1:]))) if p else 0.0
    grid = np.asarray(lambdas, dtype=float) if lambdas is not None else lambda_grid(own_max, cfg)
    if np.any(np.diff(grid) > 0) or not np.all(grid > 0):
        raise ValueError("λ grid must be positive and descending")

    K = len(grid)
    coefs = np.zeros((K, p + 1))
    objective = np.zeros(K)
    deviance = np.zeros(K)
    n_nonzero = np.zeros(K, dtype=np.int64)
    converged = np.ones(K, dtype=bool)
    order: List[str] = []
    seen = np.zeros(p, dtype=bool)

    b, g_prev = b_null, g_null
    for k, lam in enumerate(grid):
        if lam >= own_max:
            b, g, ok = b_null.copy(), g_null, True
        else:
            b, ok, g = solve_lambda(A, y, lam, b, cfg)
        converged[k] = ok
        coefs[k] = scaling.to_original(b)
        loss = _loss(A @ b, y)
        objective[k] = loss + lam * np.abs(b[1:]).sum()
        deviance[k] = 2.0 * loss
        active = b[1:] != 0.0
        n_nonzero[k] = int(active.sum())

        entering = np.flatnonzero(active & ~seen)
        if len(entering):
            ranked = sorted(entering, key=lambda j: (-abs(g_prev[j + 1]), j))
            order.extend(names[j] for j in ranked)
            seen[entering] = True
        if k and n_nonzero[k] < n_nonzero[k - 1]:
            logger.info(
                "Active set shrank from %d to %d at λ=%.3g (grid point %d)",
                n_nonzero[k - 1], n_nonzero[k], lam, k,
            )
        g_prev = g

    failed = np.flatnonzero(~converged)
    if len(failed):
        message = (
            f"solver did not converge at {len(failed)} of {K} grid points "
            f"(first λ={grid[failed[0]]:.3g}); results there are flagged"
        )
        logger.warning(message)
        warnings.warn(message, ConvergenceWarning, stacklevel=2)

    logger.debug("Path of %d λ values on %d rows x %d features, %d selected at λ_min", K, N, p, n_nonzero[-1])
    return RegPath(
        lambdas=grid,
        coefs=coefs,
        objective=objective,
        deviance=deviance,
        n_nonzero=n_nonzero,
        converged=converged,
        feature_names=names,
        selection_order=order,
    )


def stratified_folds(y: np.ndarray, k: int, seed: int) -> List[np.ndarray]:
    """Seeded k-fold split placing positives and negatives evenly across folds."""
    y = _labels(y)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos < k or n_neg < k:
        raise InsufficientDataError(
            f"cannot stratify {len(y)} rows into {k} folds with both classes in each",
            n_pos=n_pos, n_neg=n_neg,
        )
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    return [test for _, test in splitter.split(np.zeros((len(y), 1)), y)]


def chrono_folds(y: np.ndarray, k: int, seed: int) -> List[np.ndarray]:
    """Contiguous blocks in row order; falls back to stratified folds when a block lacks a class."""
    y = _labels(y)
    blocks = [test for _, test in KFold(n_splits=k, shuffle=False).split(np.zeros((len(y), 1)))]
    if all(0 < y[block].sum() < len(block) for block in blocks):
        return blocks
    logger.warning("A chronological fold lacks one class, falling back to stratified folds")
    return stratified_folds(y, k, seed)


def _held_out_deviance(path: RegPath, F_test: np.ndarray, y_test: np.ndarray) -> np.ndarray:
    Z = F_test @ path.coefs[:, 1:].T + path.coefs[:, 0]
    return 2.0 * np.mean(np.logaddexp(0.0, Z) - y_test[:, None] * Z, axis=0)


def cross_validate(
    F,
    y,
    cfg: Optional[FitConfig] = None,
    feature_names: Optional[Sequence[str]] = None,
) -> FitResult:
    """
    Choose λ by k-fold cross-validation of the held-out mean deviance.

    The full-data path fixes the grid; every fold refits on that grid. The chosen
    λ is the first minimizer of the fold-averaged deviance and β is the full-data
    solution there.
    """
    cfg = cfg or FitConfig()
    F, y = _check_inputs(F, y)
    path = fit_path(F, y, cfg, feature_names)
    make_folds = chrono_folds if cfg.cv == "chrono" else stratified_folds
    folds = make_folds(y, cfg.cv_folds, cfg.seed)
    all_rows = np.arange(len(y))

    def run_fold(test: np.ndarray) -> np.ndarray:
        train = np.setdiff1d(all_rows, test, assume_unique=True)
        sub = fit_path(F[train], y[train], cfg, path.feature_names, lambdas=path.lambdas)
        return _held_out_deviance(sub, F[test], y[test])

    if cfg.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            curves = list(pool.map(run_fold, folds))
    else:
        curves = [run_fold(test) for test in folds]

    cv_deviance = np.vstack(curves)
    best = int(np.argmin(cv_deviance.mean(axis=0)))
    if best in (0, len(path) - 1):
        logger.info("CV minimum sits on the grid boundary (index %d of %d)", best, len(path))
    logger.info(
        "CV chose λ=%.4g (index %d) with %d non-zero coefficients",
        path.lambdas[best], best, path.n_nonzero[best],
    )
    return FitResult(
        lambda_=float(path.lambdas[best]),
        lambda_index=best,
        beta=path.coefs[best].copy(),
        cv_deviance=cv_deviance,
        path=path,
        n_train=len(y),
    )


def fit_logistic(F, y, max_iter: int = 1000) -> np.ndarray:
    """
    Unpenalized maximum-likelihood logistic fit by L-BFGS.

    Args:
        F: Feature matrix without intercept
        y: 0/1 labels
        max_iter: L-BFGS iteration cap

    Returns:
        Original-scale coefficients, intercept first
    """
    F, y = _check_inputs(F, y)
    scaling = Scaling.fit(F, True)
    A = scaling.design(F)
    n = len(y)

    def objective(b):
        z = A @ b
        return _loss(z, y), A.T @ (expit(z) - y) / n

    b0, _ = _null_model(A, y)
    result = minimize(objective, b0, jac=True, method="L-BFGS-B", options={"maxiter": max_iter})
    if not result.success:
        logger.warning("Unpenalized logistic fit stopped early: %s", result.message)
    return scaling.to_original(result.x)


def path_to_frame(path: RegPath) -> pd.DataFrame:
    """One row per grid λ: lambda, deviance, nonzeros, converged, then every coefficient."""
    frame = pd.DataFrame(path.coefs, columns=["intercept"] + path.feature_names)
    frame.insert(0, "converged", path.converged.astype(np.int64))
    frame.insert(0, "nonzeros", path.n_nonzero)
    frame.insert(0, "deviance", path.deviance)
    frame.insert(0, "lambda", path.lambdas)
    return frame


def write_path(path_file: Path, path: RegPath) -> None:
    path_to_frame(path).to_csv(path_file, index=False, lineterminator="\n", float_format="%.17g")


def fit_to_dict(fit: FitResult, cfg: FitConfig, side: str) -> Dict[str, object]:
    """Flat metadata of a cross-validated fit: chosen λ, selection order and the config echo."""
    names = ["intercept"] + fit.path.feature_names
    return {
        "side": side,
        "lambda": fit.lambda_,
        "lambda_index": fit.lambda_index,
        "lambda_max": fit.path.lambda_max,
        "n_train": fit.n_train,
        "n_test": fit.n_test,
        "n_nonzero": int(fit.path.n_nonzero[fit.lambda_index]),
        "converged": bool(fit.path.converged.all()),
        "selection_order": list(fit.selection_order),
        "beta": {name: float(b) for name, b in zip(names, fit.beta) if b != 0.0 or name == "intercept"},
        "cv_mean_deviance": fit.cv_mean.tolist(),
        "seed": cfg.seed,
        "config": cfg.model_dump(),
    }
