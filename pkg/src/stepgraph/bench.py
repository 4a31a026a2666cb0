"""Benchmark campaigns: simulate, CV-select, fit, score, aggregate.

Each (model, replicate) task is independent and deterministic in its own
seed, so campaigns can fan out over a process pool; results are merged
in task order, which makes the output files identical for any worker
count.  Per-replicate failures are recorded and the campaign keeps
going.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .classify import SEED_STRIDE
from .crossval import CvGrid, default_grid, select_thresholds
from .errors import (ContractViolation, CycleDetected, DegenerateResidual,
                     IterationLimit, NotPositiveDefinite)
from .metrics import (ReplicateRecord, SummaryRow, aggregate, confusion,
                      frobenius_distance, mcc, normalized_kl, repair_pd,
                      sensitivity, specificity, zero_frequency_matrix)
from .models import (EdgeSet, PrecisionModel, gen_ar1, gen_bg, gen_nn2,
                     sample_mvn, support_of)
from .serialize import (read_matrix_csv, summary_to_obj, write_json,
                        write_matrix_csv, write_replicates_csv,
                        write_timings_csv)
from .stepwise import Thresholds, run_gsa

MODEL_LABELS = ("ar1", "nn2", "bg")

_TASK_ERRORS = (ContractViolation, CycleDetected, IterationLimit,
                DegenerateResidual, NotPositiveDefinite, np.linalg.LinAlgError)


def replicate_seed(campaign_seed: int, index: int) -> int:
    return (campaign_seed + index * SEED_STRIDE) % 2**64


@dataclass(frozen=True)
class ModelSpec:
    """One model family at one size; params hold family-specific knobs."""

    label: str
    p: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in MODEL_LABELS:
            raise ContractViolation(
                f"unknown model {self.label!r}; expected one of {MODEL_LABELS}")
        if self.p < 2:
            raise ContractViolation(f"p must be >= 2, got {self.p}")

    def build(self, default_seed: int = 0) -> PrecisionModel:
        if self.label == "ar1":
            return gen_ar1(self.p, rho=float(self.params.get("rho", 0.4)))
        if self.label == "nn2":
            # fixed structure across replicates so zero-frequency maps line up
            return gen_nn2(self.p, seed=int(self.params.get("seed", default_seed)))
        return gen_bg(self.p, block_size=int(self.params.get("block_size", 5)))


@dataclass(frozen=True)
class CampaignSpec:
    models: tuple[ModelSpec, ...]
    n: int
    R: int
    K: int
    grid: CvGrid
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not self.models:
            raise ContractViolation("campaign needs at least one model")
        if self.R < 1:
            raise ContractViolation(f"R must be >= 1, got {self.R}")
        if self.n < 2 * self.K:
            raise ContractViolation(
                f"need n >= 2K; got n={self.n}, K={self.K}")
        if self.threads < 1:
            raise ContractViolation(f"threads must be >= 1, got {self.threads}")


def campaign_from_obj(obj, seed=None, threads=None) -> CampaignSpec:
    """Build a CampaignSpec from a parsed JSON dict; flags override the file."""
    try:
        models = tuple(ModelSpec(label=str(m["label"]), p=int(m["p"]),
                                 params=dict(m.get("params", {})))
                       for m in obj["models"])
        gspec = obj.get("grid")
        if gspec is None:
            grid = default_grid()
        elif "pairs" in gspec:
            grid = CvGrid(pairs=tuple((float(a), float(b))
                                      for a, b in gspec["pairs"]))
        else:
            grid = default_grid(num=int(gspec.get("num", 20)),
                                lo=float(gspec.get("lo", 0.05)),
                                hi=float(gspec.get("hi", 0.95)))
        return CampaignSpec(
            models=models,
            n=int(obj["n"]),
            R=int(obj["R"]),
            K=int(obj.get("K", 5)),
            grid=grid,
            seed=int(obj["seed"] if seed is None else seed),
            threads=int(obj.get("threads", 1) if threads is None else threads),
        )
    except KeyError as exc:
        raise ContractViolation(f"campaign spec missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ContractViolation(f"malformed campaign spec: {exc}") from exc


def score_estimate(truth: PrecisionModel, omega_hat, est_edges: EdgeSet, *,
                   n: int, seed: int, method: str, alpha_f: float,
                   alpha_b: float, wall_time: float) -> ReplicateRecord:
    """Confusion + distance metrics for one estimate against the truth."""
    counts = confusion(truth.edges, est_edges)
    _, repaired = repair_pd(omega_hat)
    flags = ("repaired_pd",) if repaired else ()
    return ReplicateRecord(
        model=truth.label, p=truth.p, n=n, seed=seed, method=method,
        alpha_f=alpha_f, alpha_b=alpha_b, counts=counts,
        mcc=mcc(counts), sensitivity=sensitivity(counts),
        specificity=specificity(counts),
        m_f=frobenius_distance(omega_hat, truth.omega),
        m_nkl=normalized_kl(omega_hat, truth.omega),
        wall_time=wall_time, edge_count=len(est_edges.pairs), flags=flags)


def _run_task(args):
    """Worker body; must stay module-level and take one picklable tuple."""
    (label, p, params, n, K, grid_pairs, campaign_seed, task_index) = args
    seed = replicate_seed(campaign_seed, task_index)
    try:
        truth = ModelSpec(label=label, p=p, params=params).build(campaign_seed)
        data = sample_mvn(truth, n, seed=seed)
        t0 = time.perf_counter()
        cv = select_thresholds(data, K=K, grid=CvGrid(pairs=grid_pairs),
                               seed=seed % 2**32)
        fit = run_gsa(data, cv.best)
        wall = time.perf_counter() - t0
        record = score_estimate(
            truth, fit.omega_hat, fit.edges, n=n, seed=seed, method="gsa",
            alpha_f=cv.best.alpha_f, alpha_b=cv.best.alpha_b, wall_time=wall)
        return ("ok", task_index, record, fit.edges)
    except _TASK_ERRORS as exc:
        return ("err", task_index,
                {"model": label, "p": p, "seed": seed,
                 "error": f"{type(exc).__name__}: {exc}"})


@dataclass
class CampaignResult:
    records: list
    failures: list
    zero_freq: dict  # (label, p) -> matrix of zero counts over replicates
    summary: list[SummaryRow]

    @property
    def ok(self) -> bool:
        return not self.failures


def run_campaign(spec: CampaignSpec, import_dir=None) -> CampaignResult:
    """Run every (model, replicate) task and merge results in task order.

    Task index runs model-major: model i, replicate r gets index i*R + r,
    which pins each replicate's seed independent of scheduling.
    """
    tasks = []
    for mi, ms in enumerate(spec.models):
        for r in range(spec.R):
            tasks.append((ms.label, ms.p, ms.params, spec.n, spec.K,
                          spec.grid.pairs, spec.seed, mi * spec.R + r))
    if spec.threads == 1:
        outcomes = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=spec.threads) as pool:
            outcomes = list(pool.map(_run_task, tasks))

    records, failures = [], []
    fitted: dict[tuple[str, int], list] = {
        (ms.label, ms.p): [] for ms in spec.models}
    for out, task in zip(outcomes, tasks):
        if out[0] == "ok":
            _, _, record, edges = out
            records.append(record)
            fitted[(task[0], task[1])].append(edges)
        else:
            failures.append(out[2])

    if import_dir is not None:
        imp_records, imp_failures = import_estimates(import_dir, spec)
        records.extend(imp_records)
        failures.extend(imp_failures)

    zero_freq = {key: zero_frequency_matrix(fits, p=key[1])
                 for key, fits in fitted.items()}
    return CampaignResult(records=records, failures=failures,
                          zero_freq=zero_freq, summary=aggregate(records))


_EST_NAME = re.compile(r"^(?P<label>[a-z0-9]+)_p(?P<p>\d+)_r(?P<r>\d+)\.csv$")


def import_estimates(import_dir, spec: CampaignSpec):
    """Score externally produced estimates laid out as
    ``import_dir/<method>/<label>_p<p>_r<replicate>.csv`` (dense omega-hat).

    Replicate numbers map onto the campaign's seed schedule, so an
    imported file is scored against the same truth as the in-house fit
    of that replicate.  Support is read off the matrix at 1e-10.
    """
    root = Path(import_dir)
    if not root.is_dir():
        raise ContractViolation(f"--import-estimates: {root} is not a directory")
    by_key = {(ms.label, ms.p): mi for mi, ms in enumerate(spec.models)}
    truths = {key: spec.models[mi].build(spec.seed)
              for key, mi in by_key.items()}
    records, failures = [], []
    for method_dir in sorted(d for d in root.iterdir() if d.is_dir()):
        method = method_dir.name
        for f in sorted(method_dir.glob("*.csv")):
            m = _EST_NAME.match(f.name)
            if m is None:
                failures.append({"model": "?", "p": 0, "seed": 0,
                                 "error": f"unrecognized estimate file {f.name}"})
                continue
            key = (m["label"], int(m["p"]))
            rep = int(m["r"])
            if key not in by_key or rep >= spec.R:
                failures.append({"model": key[0], "p": key[1], "seed": 0,
                                 "error": f"{f.name} matches no campaign task"})
                continue
            seed = replicate_seed(spec.seed, by_key[key] * spec.R + rep)
            try:
                omega_hat = read_matrix_csv(f)
                truth = truths[key]
                if omega_hat.shape != (truth.p, truth.p):
                    raise ContractViolation(
                        f"{f.name}: expected {truth.p}x{truth.p}, "
                        f"got {omega_hat.shape}")
                records.append(score_estimate(
                    truth, omega_hat, support_of(omega_hat), n=spec.n,
                    seed=seed, method=method, alpha_f=float("nan"),
                    alpha_b=float("nan"), wall_time=0.0))
            except _TASK_ERRORS as exc:
                failures.append({"model": key[0], "p": key[1], "seed": seed,
                                 "error": f"{type(exc).__name__}: {exc}"})
    return records, failures


def write_campaign(out_dir, result: CampaignResult) -> list[str]:
    """Write replicates/timings/summary/zero-frequency files; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "replicates.csv"
    write_replicates_csv(path, result.records)
    written.append(str(path))

    path = out / "timings.csv"
    write_timings_csv(path, result.records)
    written.append(str(path))

    path = out / "summary.json"
    write_json(path, summary_to_obj(result.summary))
    written.append(str(path))

    for (label, p), matrix in sorted(result.zero_freq.items()):
        path = out / f"zero_freq_{label}_p{p}.csv"
        write_matrix_csv(path, matrix)
        written.append(str(path))

    if result.failures:
        path = out / "failures.csv"
        with open(path, "w", newline="") as fh:
            fh.write("model,p,seed,error\n")
            for row in result.failures:
                err = str(row["error"]).replace('"', "'")
                fh.write(f"{row['model']},{row['p']},{row['seed']},\"{err}\"\n")
        written.append(str(path))
    return written
