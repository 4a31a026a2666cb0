"""Recovery and estimation metrics plus replicate bookkeeping.

Support recovery is scored over the C(p,2) unordered off-diagonal pairs
(MCC, sensitivity, specificity); estimation quality by the Frobenius
distance and the normalized Kullback-Leibler divergence between the
implied Gaussian models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, NotPositiveDefinite
from .linalg import _as_square_symmetric, invert_pd, log_det_pd
from .models import EdgeSet

EIG_FLOOR = 1e-6


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ContractViolation("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class ReplicateRecord:
    """One (model, replicate, method) outcome row.

    Wall time is carried here for reporting but deliberately kept out of
    the replicate CSV so result files are bit-stable across schedulers;
    it lands in a separate timings file.
    """

    model: str
    p: int
    n: int
    seed: int
    method: str
    alpha_f: float
    alpha_b: float
    counts: ConfusionCounts
    mcc: float
    sensitivity: float
    specificity: float
    m_f: float
    m_nkl: float
    wall_time: float
    edge_count: int
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if not (math.isclose(self.mcc, mcc(self.counts), abs_tol=1e-12)
                and math.isclose(self.sensitivity, sensitivity(self.counts), abs_tol=1e-12)
                and math.isclose(self.specificity, specificity(self.counts), abs_tol=1e-12)):
            raise ContractViolation("recovery metrics do not match confusion counts")


def confusion(true_edges: EdgeSet, est_edges: EdgeSet) -> ConfusionCounts:
    """TP/TN/FP/FN over all unordered node pairs."""
    if true_edges.p != est_edges.p:
        raise ContractViolation(
            f"edge sets disagree on p: {true_edges.p} vs {est_edges.p}")
    p = true_edges.p
    tp = len(true_edges.pairs & est_edges.pairs)
    fp = len(est_edges.pairs - true_edges.pairs)
    fn = len(true_edges.pairs - est_edges.pairs)
    tn = p * (p - 1) // 2 - tp - fp - fn
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def mcc(c: ConfusionCounts) -> float:
    """Matthews correlation; 0 whenever a denominator factor vanishes."""
    den = (float(c.tp + c.fp) * float(c.tp + c.fn)
           * float(c.tn + c.fp) * float(c.tn + c.fn))
    if den == 0.0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(den)


def sensitivity(c: ConfusionCounts) -> float:
    """TP/(TP+FN); 1.0 when there are no positives to find."""
    if c.tp + c.fn == 0:
        return 1.0
    return c.tp / (c.tp + c.fn)


def specificity(c: ConfusionCounts) -> float:
    """TN/(TN+FP); 1.0 when there are no negatives to protect."""
    if c.tn + c.fp == 0:
        return 1.0
    return c.tn / (c.tn + c.fp)


def frobenius_distance(omega_hat, omega) -> float:
    a = np.asarray(omega_hat, dtype=float)
    b = np.asarray(omega, dtype=float)
    if a.shape != b.shape:
        raise ContractViolation(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def repair_pd(omega_hat) -> tuple[np.ndarray, bool]:
    """Symmetrize and floor eigenvalues at EIG_FLOOR.

    Returns the (possibly repaired) matrix and whether flooring changed
    anything; the stepwise estimate carries no positive-definiteness
    guarantee, and the KL divergence needs one.
    """
    a = np.asarray(omega_hat, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"expected a square matrix, got {a.shape}")
    a = (a + a.T) / 2.0
    lam, vec = np.linalg.eigh(a)
    if lam.min() >= EIG_FLOOR:
        return a, False
    lam = np.maximum(lam, EIG_FLOOR)
    fixed = (vec * lam) @ vec.T
    return (fixed + fixed.T) / 2.0, True


def kl_divergence(omega_hat, omega) -> float:
    """D_KL = (tr(W S) - logdet(W S) - p) / 2 with W = omega_hat, S = omega^-1.

    A non-PD omega_hat is eigen-floored first (see repair_pd); a non-PD
    omega is a contract violation.
    """
    what, _ = repair_pd(omega_hat)
    w = _as_square_symmetric(omega, "omega")
    if what.shape != w.shape:
        raise ContractViolation(f"shape mismatch: {what.shape} vs {w.shape}")
    try:
        sigma = invert_pd(w)
        ld_omega = log_det_pd(w)
    except NotPositiveDefinite as exc:
        raise ContractViolation("omega must be positive definite") from exc
    p = w.shape[0]
    trace = float(np.trace(what @ sigma))
    logdet_ratio = log_det_pd(what) - ld_omega
    return 0.5 * (trace - logdet_ratio - p)


def normalized_kl(omega_hat, omega) -> float:
    """m_NKL = D_KL / (1 + D_KL), in [0, 1)."""
    d = kl_divergence(omega_hat, omega)
    return d / (1.0 + d)


def zero_frequency_matrix(fits, p: int | None = None) -> np.ndarray:
    """Count, per off-diagonal entry, how many fits declared it zero.

    Accepts EdgeSet values or anything with an ``edges`` attribute (a
    GsaFit).  Diagonal entries are 0 by convention.
    """
    edge_sets = [f if isinstance(f, EdgeSet) else f.edges for f in fits]
    if not edge_sets:
        if p is None:
            raise ContractViolation("empty fit list needs an explicit p")
        return np.zeros((p, p))
    if p is None:
        p = edge_sets[0].p
    counts = np.zeros((p, p))
    for es in edge_sets:
        if es.p != p:
            raise ContractViolation("fits disagree on p")
        absent = np.ones((p, p))
        for i, l in es.pairs:
            absent[i, l] = absent[l, i] = 0.0
        counts += absent
    counts[np.diag_indices(p)] = 0.0
    return counts


AGGREGATE_METRICS = ("mcc", "sensitivity", "specificity", "m_f", "m_nkl")


@dataclass(frozen=True)
class SummaryRow:
    model: str
    p: int
    method: str
    n_replicates: int
    stats: dict  # metric -> {"mean": float, "sd": float}
    degenerate_sd: bool


def aggregate(records) -> list[SummaryRow]:
    """Mean and sample (R-1) standard deviation per (model, p, method).

    Groups appear in first-seen order; a single-replicate group reports
    sd = 0 and is flagged degenerate.
    """
    records = list(records)
    if not records:
        raise ContractViolation("nothing to aggregate")
    groups: dict[tuple, list[ReplicateRecord]] = {}
    for rec in records:
        groups.setdefault((rec.model, rec.p, rec.method), []).append(rec)
    rows = []
    for (model, p, method), recs in groups.items():
        stats = {}
        for name in AGGREGATE_METRICS:
            vals = np.array([getattr(r, name) for r in recs], dtype=float)
            sd = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
            stats[name] = {"mean": float(vals.mean()), "sd": sd}
        edges = np.array([r.edge_count for r in recs], dtype=float)
        stats["edge_count"] = {
            "mean": float(edges.mean()),
            "sd": float(edges.std(ddof=1)) if len(edges) > 1 else 0.0,
        }
        rows.append(SummaryRow(model=model, p=p, method=method,
                               n_replicates=len(recs), stats=stats,
                               degenerate_sd=len(recs) == 1))
    return rows
