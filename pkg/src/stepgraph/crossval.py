"""K-fold cross-validation for the stepwise thresholds.

CV(alpha_f, alpha_b) = (1/n) * sum over folds t, nodes j of
||X_j^(t) - Xhat_j^(t)||^2, where each validation column is predicted
from the neighborhoods fit on the training complement.  Empty
neighborhoods predict the training mean of the column.

select_thresholds shares one ScanCache per fold across the whole grid,
so threshold pairs that retrace the same stepwise trajectory cost little
beyond the first walk.  A grid pair whose walk fails to terminate
(cycle or iteration budget) is scored +inf and thereby disqualified
rather than aborting the sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, CycleDetected, IterationLimit
from .models import SampleSet
from .stepwise import (
    NeighborhoodSystem,
    ScanCache,
    Thresholds,
    run_gsa,
)


@dataclass(frozen=True)
class FoldPlan:
    """A balanced K-way row partition; fold sizes differ by at most 1."""

    K: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self):
        counts = np.bincount(self.assignments, minlength=self.K)
        if len(counts) != self.K or counts.min() < 2:
            raise ContractViolation("every fold must have size >= 2")
        if counts.max() - counts.min() > 1:
            raise ContractViolation("fold sizes must differ by at most 1")

    @property
    def n(self) -> int:
        return int(self.assignments.shape[0])

    def fold_indices(self, t: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == t)

    def train_indices(self, t: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != t)


@dataclass(frozen=True)
class CvGrid:
    """Candidate (alpha_f, alpha_b) pairs, each with alpha_b < alpha_f."""

    pairs: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.pairs:
            raise ContractViolation("grid must be non-empty")
        for af, ab in self.pairs:
            if not (0.0 <= ab < af <= 1.0):
                raise ContractViolation(
                    f"grid pair (alpha_f={af}, alpha_b={ab}) is not ordered in [0, 1]")

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class CvResult:
    """Score surface plus the arg-min pair under the sparsity tie-break."""

    best: Thresholds
    scores: dict[tuple[float, float], float]
    fold_plan: FoldPlan

    def best_score(self) -> float:
        return self.scores[(self.best.alpha_f, self.best.alpha_b)]


def default_grid(num: int = 20, lo: float = 0.05, hi: float = 0.95) -> CvGrid:
    """num equispaced values per axis on [lo, hi], filtered to alpha_b < alpha_f."""
    values = np.linspace(lo, hi, num)
    pairs = [(float(af), float(ab)) for af in values for ab in values if ab < af]
    return CvGrid(pairs=tuple(pairs))


def make_folds(n: int, K: int, seed: int) -> FoldPlan:
    """Uniformly random balanced partition of n rows into K folds."""
    if K < 2:
        raise ContractViolation(f"K must be >= 2, got {K}")
    if n < 2 * K:
        raise ContractViolation(f"need n >= 2K; got n={n}, K={K}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    assignments[perm] = np.arange(n) % K
    return FoldPlan(K=K, assignments=assignments, seed=seed)


def predict_validation(train: SampleSet, valid: SampleSet,
                       neighborhoods: NeighborhoodSystem) -> np.ndarray:
    """Predict every validation column from its training-fit neighborhood.

    Coefficients come from the training columns centered at training
    means; predictions add the training mean back, so an empty
    neighborhood predicts a constant column.
    """
    if train.p != valid.p or neighborhoods.p != train.p:
        raise ContractViolation("train, valid and neighborhoods must share p")
    mean = train.data.mean(axis=0)
    xc = train.data - mean
    out = np.empty((valid.n, valid.p))
    for j in range(train.p):
        preds = list(neighborhoods.neighbors_of(j))
        if not preds:
            out[:, j] = mean[j]
            continue
        beta, *_ = np.linalg.lstsq(xc[:, preds], xc[:, j], rcond=None)
        out[:, j] = mean[j] + (valid.data[:, preds] - mean[preds]) @ beta
    return out


def cv_score(data: SampleSet, folds: FoldPlan, thresholds: Thresholds,
             cap: int | None = None, max_iter: int | None = None) -> float:
    """CV error of one threshold pair; fit errors propagate to the caller."""
    if folds.n != data.n:
        raise ContractViolation("fold plan does not match the dataset size")
    total = 0.0
    for t in range(folds.K):
        tr = folds.train_indices(t)
        va = folds.fold_indices(t)
        train = SampleSet.from_matrix(data.data[tr], seed=data.seed,
                                      model_label=data.model_label)
        valid = SampleSet.from_matrix(data.data[va], seed=data.seed,
                                      model_label=data.model_label)
        fit = run_gsa(train, thresholds, cap=cap, max_iter=max_iter,
                      assemble=False)
        pred = predict_validation(train, valid, fit.neighborhoods)
        total += float(((valid.data - pred) ** 2).sum())
    return total / data.n


def _fold_sse(cache: ScanCache, valid: np.ndarray, mean: np.ndarray,
              nb: NeighborhoodSystem, col_sse: dict) -> float:
    """Validation SSE for one fitted neighborhood system, per-column memoized.

    cache is the training ScanCache from run_gsa, so cache.x is the
    centered training matrix and cache.beta holds the fitted coefficients
    keyed by (node, predictor tuple).
    """
    total = 0.0
    for j in range(nb.p):
        preds = nb.neighbors_of(j)
        key = (j, preds)
        sse = col_sse.get(key)
        if sse is None:
            if not preds:
                resid = valid[:, j] - mean[j]
            else:
                beta = cache.beta.get(key)
                if beta is None:
                    cols = list(preds)
                    try:
                        beta = np.linalg.solve(
                            cache.gram[np.ix_(cols, cols)], cache.gram[cols, j])
                    except np.linalg.LinAlgError:
                        beta, *_ = np.linalg.lstsq(
                            cache.x[:, cols], cache.x[:, j], rcond=None)
                    cache.beta[key] = beta
                pred = mean[j] + (valid[:, list(preds)] - mean[list(preds)]) @ beta
                resid = valid[:, j] - pred
            sse = float(resid @ resid)
            col_sse[key] = sse
        total += sse
    return total


def select_thresholds(data: SampleSet, K: int = 5, grid: CvGrid | None = None,
                      seed: int = 0, cap: int | None = None,
                      max_iter: int | None = None) -> CvResult:
    """Evaluate the whole grid by K-fold CV and return the arg-min pair.

    Ties break toward larger alpha_f, then larger alpha_b (sparser
    models).  Pairs whose stepwise walk cycles or exhausts its iteration
    budget on any fold score +inf; if every pair is disqualified this is
    a contract violation.
    """
    if grid is None:
        grid = default_grid()
    folds = make_folds(data.n, K, seed)
    scores: dict[tuple[float, float], float] = {
        (af, ab): 0.0 for af, ab in grid.pairs}

    for t in range(folds.K):
        tr = folds.train_indices(t)
        va = folds.fold_indices(t)
        train = SampleSet.from_matrix(data.data[tr], seed=data.seed,
                                      model_label=data.model_label)
        valid = data.data[va]
        mean = train.data.mean(axis=0)
        cache = ScanCache()
        col_sse: dict = {}
        state_sse: dict = {}
        for pair in grid.pairs:
            if math.isinf(scores[pair]):
                continue
            try:
                fit = run_gsa(train, Thresholds(*pair), cap=cap,
                              max_iter=max_iter, cache=cache, assemble=False)
            except (CycleDetected, IterationLimit):
                scores[pair] = math.inf
                continue
            state = fit.neighborhoods.state_key()
            sse = state_sse.get(state)
            if sse is None:
                sse = _fold_sse(cache, valid, mean, fit.neighborhoods, col_sse)
                state_sse[state] = sse
            scores[pair] += sse

    n = float(data.n)
    for pair in scores:
        if not math.isinf(scores[pair]):
            scores[pair] /= n

    best_pair = min(scores, key=lambda pr: (scores[pr], -pr[0], -pr[1]))
    if math.isinf(scores[best_pair]):
        raise ContractViolation(
            "no grid pair produced a finite cross-validation score")
    return CvResult(best=Thresholds(*best_pair), scores=scores, fold_plan=folds)
