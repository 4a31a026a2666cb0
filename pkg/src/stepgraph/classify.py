"""Two-class LDA pipeline driven by the stepwise precision estimate.

Workflow per repetition: hold out a fixed-size test split, screen
features by two-sample t statistics on the training split, standardize
with training statistics, estimate the precision matrix on the pooled
training data, then classify the test rows with the linear discriminant
score

    delta_r(x) = x' W mu_r - mu_r' W mu_r / 2 + log prior_r

and score the predictions with group 1 as the positive class.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .crossval import CvGrid, select_thresholds
from .errors import ContractViolation
from .linalg import invert_pd
from .metrics import ConfusionCounts, mcc, sensitivity, specificity
from .models import SampleSet, gen_bg
from .stepwise import Thresholds, run_gsa

SEED_STRIDE = 2654435761  # splitting rule shared with the bench runner


@dataclass(frozen=True)
class LabeledDataset:
    """Rows with group tags in {1, 2}; both groups must be non-empty."""

    data: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ContractViolation(f"data must be 2-dimensional, got shape {self.data.shape}")
        if self.labels.shape != (self.data.shape[0],):
            raise ContractViolation("labels must be one tag per row")
        present = set(np.unique(self.labels).tolist())
        if not present <= {1, 2}:
            raise ContractViolation(f"labels must be 1 or 2, found {sorted(present)}")
        if present != {1, 2}:
            raise ContractViolation("both groups must be non-empty")
        if self.feature_names is not None and len(self.feature_names) != self.data.shape[1]:
            raise ContractViolation("feature_names length must match columns")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    def group_rows(self, r: int) -> np.ndarray:
        return np.flatnonzero(self.labels == r)

    def subset_rows(self, rows) -> "LabeledDataset":
        rows = np.asarray(rows)
        return LabeledDataset(self.data[rows], self.labels[rows], self.feature_names)

    def subset_features(self, cols) -> "LabeledDataset":
        cols = list(cols)
        names = None
        if self.feature_names is not None:
            names = tuple(self.feature_names[c] for c in cols)
        return LabeledDataset(self.data[:, cols], self.labels, names)


@dataclass(frozen=True)
class LdaModel:
    mu: np.ndarray          # (2, p): row 0 is group 1, row 1 is group 2
    omega_hat: np.ndarray   # (p, p)
    log_priors: np.ndarray  # (2,)

    def __post_init__(self):
        p = self.mu.shape[1] if self.mu.ndim == 2 else -1
        if self.mu.shape != (2, p) or self.omega_hat.shape != (p, p):
            raise ContractViolation("LdaModel dimensions disagree")
        if self.log_priors.shape != (2,):
            raise ContractViolation("need exactly two log priors")
        if abs(float(np.exp(self.log_priors).sum()) - 1.0) > 1e-8:
            raise ContractViolation("priors must sum to 1")


def t_screen(train: LabeledDataset, m: int = 50) -> list[int]:
    """Indices of the m features with the largest |Welch t|, ties by index.

    A feature with zero variance in both groups scores t = 0.
    """
    if not (1 <= m <= train.p):
        raise ContractViolation(f"m must be in [1, p], got m={m}, p={train.p}")
    g1 = train.data[train.labels == 1]
    g2 = train.data[train.labels == 2]
    if len(g1) < 2 or len(g2) < 2:
        raise ContractViolation("each group needs >= 2 samples for the t screen")
    se2 = g1.var(axis=0, ddof=1) / len(g1) + g2.var(axis=0, ddof=1) / len(g2)
    diff = g1.mean(axis=0) - g2.mean(axis=0)
    # a numerically constant column (sd below ~1e-12 of its level) would
    # turn into an amplified 0/0; score it 0 instead
    scale = np.maximum(1.0, np.maximum(np.abs(g1).max(axis=0),
                                       np.abs(g2).max(axis=0)))
    dead = se2 <= (1e-12 * scale) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        t = diff / np.sqrt(se2)
    t[dead] = 0.0
    order = np.argsort(-np.abs(t), kind="stable")
    return [int(i) for i in order[:m]]


def standardize(train: LabeledDataset, test: LabeledDataset
                ) -> tuple[LabeledDataset, LabeledDataset]:
    """Center and scale both sets with training mean and sd per feature.

    Features with zero training sd carry no usable signal under this
    scaling and are dropped (with a warning) from both sets.
    """
    if train.p != test.p:
        raise ContractViolation("train and test must share the feature set")
    mean = train.data.mean(axis=0)
    sd = train.data.std(axis=0, ddof=1)
    scale = np.maximum(1.0, np.abs(train.data).max(axis=0))
    keep = np.flatnonzero(sd > 1e-12 * scale)
    if len(keep) < train.p:
        dropped = sorted(set(range(train.p)) - set(keep.tolist()))
        warnings.warn(f"dropping {len(dropped)} zero-variance feature(s): {dropped}")
    tr = (train.data[:, keep] - mean[keep]) / sd[keep]
    te = (test.data[:, keep] - mean[keep]) / sd[keep]
    names = None
    if train.feature_names is not None:
        names = tuple(train.feature_names[int(c)] for c in keep)
    return (LabeledDataset(tr, train.labels, names),
            LabeledDataset(te, test.labels, names))


def lda_fit(train: LabeledDataset, omega_hat) -> LdaModel:
    """Group means and empirical priors; the precision estimate is stored as given."""
    w = np.asarray(omega_hat, dtype=float)
    if w.shape != (train.p, train.p):
        raise ContractViolation(
            f"omega_hat shape {w.shape} does not match p={train.p}")
    mu = np.vstack([train.data[train.labels == r].mean(axis=0) for r in (1, 2)])
    counts = np.array([(train.labels == r).sum() for r in (1, 2)], dtype=float)
    return LdaModel(mu=mu, omega_hat=w, log_priors=np.log(counts / counts.sum()))


def _score_matrix(model: LdaModel, x: np.ndarray) -> np.ndarray:
    wm = model.omega_hat @ model.mu.T                      # (p, 2)
    quad = 0.5 * np.einsum("rp,pr->r", model.mu, wm)       # (2,)
    return x @ wm - quad + model.log_priors


def lda_score(model: LdaModel, x) -> tuple[float, float]:
    """(delta_1, delta_2) for one observation."""
    v = np.asarray(x, dtype=float)
    if v.shape != (model.mu.shape[1],):
        raise ContractViolation(f"x must have length {model.mu.shape[1]}")
    s = _score_matrix(model, v[None, :])[0]
    return float(s[0]), float(s[1])


def lda_predict(model: LdaModel, x_test) -> np.ndarray:
    """Arg-max group per row; ties go to group 2 (the larger-prior group)."""
    x = np.atleast_2d(np.asarray(x_test, dtype=float))
    s = _score_matrix(model, x)
    return np.where(s[:, 0] > s[:, 1], 1, 2).astype(np.int64)


def classification_counts(true_labels, pred_labels) -> ConfusionCounts:
    """Confusion counts with group 1 as the positive class."""
    t = np.asarray(true_labels)
    y = np.asarray(pred_labels)
    if t.shape != y.shape:
        raise ContractViolation("label arrays must share shape")
    return ConfusionCounts(
        tp=int(((t == 1) & (y == 1)).sum()),
        tn=int(((t == 2) & (y == 2)).sum()),
        fp=int(((t == 2) & (y == 1)).sum()),
        fn=int(((t == 1) & (y == 2)).sum()),
    )


def make_two_class_fixture(p: int = 50, n1: int = 40, n2: int = 100,
                           shift: float = 1.0, shifted_features: int = 5,
                           block_size: int = 5, seed: int = 0) -> LabeledDataset:
    """Synthetic stand-in for the gene-expression data.

    Both groups share the block-model covariance; group 1 gets a mean
    shift on the leading features.  Group 1 plays the positive (pCR-like)
    class.
    """
    model = gen_bg(p, block_size=block_size)
    sigma = model.sigma
    rng = np.random.default_rng(seed)
    ell = np.linalg.cholesky(sigma)
    z = rng.standard_normal((n1 + n2, p)) @ ell.T
    z[:n1, :shifted_features] += shift
    labels = np.concatenate([np.ones(n1, dtype=np.int64),
                             np.full(n2, 2, dtype=np.int64)])
    names = tuple(f"f{j}" for j in range(p))
    return LabeledDataset(z, labels, names)


@dataclass(frozen=True)
class LdaRepetition:
    """Per-repetition outcome row for the split-screen-fit-predict loop."""

    repetition: int
    seed: int
    alpha_f: float
    alpha_b: float
    edge_count: int
    counts: ConfusionCounts
    mcc: float
    sensitivity: float
    specificity: float
    screened: tuple[int, ...]


def split_train_test(data: LabeledDataset, test_counts: tuple[int, int],
                     seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    """Random test split with a fixed count per group; the rest trains."""
    rng = np.random.default_rng(seed)
    test_rows = []
    for r, want in zip((1, 2), test_counts):
        rows = data.group_rows(r)
        if want < 1 or want >= len(rows) - 1:
            raise ContractViolation(
                f"cannot hold out {want} of {len(rows)} rows in group {r}")
        test_rows.extend(rng.choice(rows, size=want, replace=False).tolist())
    test_rows = sorted(test_rows)
    train_rows = sorted(set(range(data.n)) - set(test_rows))
    return data.subset_rows(train_rows), data.subset_rows(test_rows)


def run_lda_repetitions(data: LabeledDataset, repetitions: int, seed: int,
                        screen_m: int = 50, test_counts: tuple[int, int] = (5, 16),
                        thresholds: Thresholds | None = None, K: int = 5,
                        grid: CvGrid | None = None, cap: int | None = None,
                        max_iter: int | None = None) -> list[LdaRepetition]:
    """Repeat the full protocol: split, screen, standardize, fit, score.

    Thresholds come from K-fold CV on the pooled standardized training
    data unless a fixed pair is supplied.
    """
    if repetitions < 1:
        raise ContractViolation("repetitions must be >= 1")
    out = []
    for rep in range(repetitions):
        rep_seed = (seed + rep * SEED_STRIDE) % 2**64
        train, test = split_train_test(data, test_counts, rep_seed)
        cols = t_screen(train, m=min(screen_m, train.p))
        train_s, test_s = standardize(train.subset_features(cols),
                                      test.subset_features(cols))
        pooled = SampleSet.from_matrix(train_s.data, seed=rep_seed)
        if thresholds is None:
            cv = select_thresholds(pooled, K=K, grid=grid,
                                   seed=rep_seed % 2**32, cap=cap,
                                   max_iter=max_iter)
            th = cv.best
        else:
            th = thresholds
        fit = run_gsa(pooled, th, cap=cap, max_iter=max_iter)
        model = lda_fit(train_s, fit.omega_hat)
        pred = lda_predict(model, test_s.data)
        counts = classification_counts(test_s.labels, pred)
        out.append(LdaRepetition(
            repetition=rep, seed=rep_seed, alpha_f=th.alpha_f,
            alpha_b=th.alpha_b, edge_count=len(fit.edges), counts=counts,
            mcc=mcc(counts), sensitivity=sensitivity(counts),
            specificity=specificity(counts), screened=tuple(cols)))
    return out
