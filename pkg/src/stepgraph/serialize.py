"""File formats: canonical JSON and plain CSV/TSV writers and readers.

JSON output is canonical so that artifact files are byte-stable: keys
are emitted sorted, floats with 17 significant digits (which round-trips
IEEE doubles), and re-serializing a parsed file reproduces it byte for
byte.  CSVs are comma-separated with '.' decimals; readers auto-detect
an optional single header row by trying to parse the first line as
numbers.
"""

from __future__ import annotations

import csv
import json
import math
from importlib import resources

import numpy as np

from .crossval import CvResult
from .errors import ContractViolation
from .metrics import ReplicateRecord, SummaryRow
from .models import EdgeSet, PrecisionModel, SampleSet
from .stepwise import GsaFit, Thresholds


def format_float(x: float) -> str:
    """17-significant-digit decimal form that parses back to the same double."""
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(float(x), ".17g")
    if not any(c in s for c in ".eE"):
        s += ".0"
    return s


def _emit(obj, out: list) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, dict):
        out.append("{")
        first = True
        for k in sorted(obj, key=str):
            if not isinstance(k, str):
                raise ContractViolation(f"JSON keys must be strings, got {k!r}")
            if not first:
                out.append(",")
            first = False
            out.append(json.dumps(k, ensure_ascii=True))
            out.append(":")
            _emit(obj[k], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _emit(v, out)
        out.append("]")
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), out)
    else:
        raise ContractViolation(f"cannot serialize {type(obj).__name__}")


def dumps_canonical(obj) -> str:
    out: list = []
    _emit(obj, out)
    return "".join(out)


def write_json(path, obj) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(dumps_canonical(obj))
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def num(x: float) -> str:
    """Bare CSV float form (no JSON quoting of non-finite values)."""
    s = format(float(x), ".17g")
    if s and not any(c in s for c in ".eEan"):  # leave nan/inf alone
        s += ".0"
    return s


# ---------------------------------------------------------------- models

def model_to_obj(model: PrecisionModel) -> dict:
    return {
        "p": model.p,
        "label": model.label,
        "seed": model.seed,
        "sigma": model.sigma,
        "omega": model.omega,
        "edges": [list(e) for e in model.edges.sorted_pairs()],
    }


def load_example16() -> PrecisionModel:
    """The bundled 16-node, 16-edge example model (fixed truth JSON)."""
    ref = resources.files("stepgraph").joinpath("data/example16.json")
    return model_from_obj(json.loads(ref.read_text()))


def model_from_obj(obj) -> PrecisionModel:
    edges = EdgeSet.from_pairs(int(obj["p"]), [tuple(e) for e in obj["edges"]])
    return PrecisionModel(
        p=int(obj["p"]),
        sigma=np.asarray(obj["sigma"], dtype=float),
        omega=np.asarray(obj["omega"], dtype=float),
        edges=edges,
        label=str(obj["label"]),
        seed=None if obj.get("seed") is None else int(obj["seed"]),
    )


def fit_to_obj(fit: GsaFit, thresholds: Thresholds | None = None) -> dict:
    obj = {
        "p": fit.edges.p,
        "edges": [list(e) for e in fit.edges.sorted_pairs()],
        "neighborhoods": [list(fit.neighborhoods.neighbors_of(j))
                          for j in range(fit.neighborhoods.p)],
        "omega_hat": fit.omega_hat,
        "iterations": fit.iterations,
        "stop_reason": fit.stop_reason,
        "trace": [[kind, None if pair is None else list(pair), score]
                  for kind, pair, score in fit.trace],
    }
    if thresholds is not None:
        obj["alpha_f"] = thresholds.alpha_f
        obj["alpha_b"] = thresholds.alpha_b
    return obj


def cv_to_obj(result: CvResult) -> dict:
    return {
        "best": {"alpha_f": result.best.alpha_f, "alpha_b": result.best.alpha_b},
        "best_score": result.best_score(),
        "scores": [[af, ab, sc] for (af, ab), sc in result.scores.items()],
        "folds": {
            "K": result.fold_plan.K,
            "seed": result.fold_plan.seed,
            "assignments": [int(a) for a in result.fold_plan.assignments],
        },
    }


# ---------------------------------------------------------------- samples

def write_samples_csv(path, data: SampleSet) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(data.p)])
        for row in data.data:
            w.writerow([num(v) for v in row])


def _is_numeric_row(cells) -> bool:
    try:
        [float(c) for c in cells]
        return True
    except ValueError:
        return False


def read_samples_csv(path) -> SampleSet:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ContractViolation(f"{path}: empty file")
    start = 0 if _is_numeric_row(rows[0]) else 1
    try:
        data = np.array([[float(c) for c in r] for r in rows[start:]], dtype=float)
    except ValueError as exc:
        raise ContractViolation(f"{path}: non-numeric cell ({exc})") from exc
    if data.ndim != 2 or data.size == 0:
        raise ContractViolation(f"{path}: no data rows")
    return SampleSet.from_matrix(data)


def write_matrix_csv(path, matrix) -> None:
    m = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(m):
            w.writerow([num(v) for v in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ContractViolation(f"{path}: empty file")
    start = 0 if _is_numeric_row(rows[0]) else 1
    try:
        return np.array([[float(c) for c in r] for r in rows[start:]], dtype=float)
    except ValueError as exc:
        raise ContractViolation(f"{path}: non-numeric cell ({exc})") from exc


# ---------------------------------------------------------------- labeled data

def write_labeled_csv(path, data, labels, feature_names=None,
                      label_col: str = "label") -> None:
    data = np.asarray(data, dtype=float)
    n, p = data.shape
    names = list(feature_names) if feature_names is not None else [
        f"x{j}" for j in range(p)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([label_col] + names)
        for i in range(n):
            w.writerow([int(labels[i])] + [num(v) for v in data[i]])


def read_labeled_csv(path, label_col: str = "label"):
    """Returns (data, labels, feature_names); the label column is required."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise ContractViolation(f"{path}: need a header row plus data")
    header = rows[0]
    if label_col not in header:
        raise ContractViolation(f"{path}: no column named {label_col!r}")
    li = header.index(label_col)
    names = tuple(h for k, h in enumerate(header) if k != li)
    labels, data = [], []
    for r in rows[1:]:
        try:
            labels.append(int(float(r[li])))
            data.append([float(c) for k, c in enumerate(r) if k != li])
        except (ValueError, IndexError) as exc:
            raise ContractViolation(f"{path}: bad row {r!r} ({exc})") from exc
    return np.array(data, dtype=float), np.array(labels, dtype=np.int64), names


# ---------------------------------------------------------------- edges

def write_edges_tsv(path, edges: EdgeSet) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("i\tl\n")
        for i, l in edges.sorted_pairs():
            fh.write(f"{i}\t{l}\n")


def read_edges_tsv(path, p: int) -> EdgeSet:
    pairs = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line == "i\tl":
                continue
            i, l = line.split("\t")
            pairs.append((int(i), int(l)))
    return EdgeSet.from_pairs(p, pairs)


# ---------------------------------------------------------------- records

REPLICATE_COLUMNS = (
    "model", "p", "n", "seed", "method", "alpha_f", "alpha_b",
    "tp", "tn", "fp", "fn", "mcc", "sensitivity", "specificity",
    "m_f", "m_nkl", "edge_count", "flags",
)


def write_replicates_csv(path, records) -> None:
    """Replicate rows without wall time, which would break run-to-run
    byte identity; timings go in their own file."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPLICATE_COLUMNS)
        for r in records:
            w.writerow([
                r.model, r.p, r.n, r.seed, r.method,
                num(r.alpha_f), num(r.alpha_b),
                r.counts.tp, r.counts.tn, r.counts.fp, r.counts.fn,
                num(r.mcc), num(r.sensitivity), num(r.specificity),
                num(r.m_f), num(r.m_nkl), r.edge_count,
                ";".join(r.flags),
            ])


def write_timings_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "p", "method", "seed", "wall_time_s"])
        for r in records:
            w.writerow([r.model, r.p, r.method, r.seed, f"{r.wall_time:.6f}"])


def summary_to_obj(rows: list[SummaryRow]) -> dict:
    """Nested model -> p -> method -> metric -> {mean, sd} mapping."""
    out: dict = {}
    for row in rows:
        slot = out.setdefault(row.model, {}).setdefault(str(row.p), {})
        slot[row.method] = {
            "n_replicates": row.n_replicates,
            "degenerate_sd": row.degenerate_sd,
            "metrics": row.stats,
        }
    return out


def write_lda_csv(path, reps) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["repetition", "seed", "alpha_f", "alpha_b", "edge_count",
                    "tp", "tn", "fp", "fn", "mcc", "sensitivity", "specificity"])
        for r in reps:
            w.writerow([r.repetition, r.seed, num(r.alpha_f), num(r.alpha_b),
                        r.edge_count, r.counts.tp, r.counts.tn, r.counts.fp,
                        r.counts.fn, num(r.mcc), num(r.sensitivity),
                        num(r.specificity)])
