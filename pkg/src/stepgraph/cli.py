"""Command-line entry point: simulate, fit, cv, bench, lda, heatmap.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
malformed input files), 3 numerical failure (cycles, iteration limits,
non-PD matrices, failed replicates).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .classify import (LabeledDataset, make_two_class_fixture,
                       run_lda_repetitions)
from .crossval import CvGrid, default_grid, select_thresholds
from .errors import (ContractViolation, CycleDetected, DegenerateResidual,
                     IterationLimit, NotPositiveDefinite)
from .models import EdgeSet, gen_ar1, gen_bg, gen_nn2, sample_mvn
from .serialize import (cv_to_obj, fit_to_obj, model_to_obj, num,
                        read_json, read_labeled_csv, read_matrix_csv,
                        read_samples_csv, write_edges_tsv, write_json,
                        write_lda_csv, write_matrix_csv, write_samples_csv)
from .stepwise import Thresholds, run_gsa

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract here reserves 2 for
    # data errors, so route parse failures through exit code 1 instead
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _outdir(args) -> Path:
    out = Path(args.out if args.out else ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(reader, path, *rest, **kw):
    try:
        return reader(path, *rest, **kw)
    except ContractViolation as exc:
        raise DataError(str(exc)) from exc
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON at line {exc.lineno}") from exc


def _grid_from_args(args) -> CvGrid:
    if getattr(args, "grid", None) is None:
        return default_grid()
    pairs = _load(read_matrix_csv, args.grid)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise DataError(f"{args.grid}: grid file needs two columns "
                        f"(alpha_f, alpha_b)")
    return CvGrid(pairs=tuple((float(a), float(b)) for a, b in pairs))


# ------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    if args.model == "ar1":
        model = gen_ar1(args.p, rho=args.rho)
    elif args.model == "nn2":
        mseed = args.seed if args.model_seed is None else args.model_seed
        model = gen_nn2(args.p, seed=mseed)
    else:
        model = gen_bg(args.p, block_size=args.block_size)
    data = sample_mvn(model, args.n, seed=args.seed)
    out = _outdir(args)
    write_samples_csv(out / "samples.csv", data)
    write_json(out / "truth.json", model_to_obj(model))
    print(f"wrote {out / 'samples.csv'} ({args.n}x{args.p}) and "
          f"{out / 'truth.json'} ({len(model.edges.pairs)} edges)")
    return EXIT_OK


def cmd_fit(args) -> int:
    data = _load(read_samples_csv, args.data)
    out = _outdir(args)
    fixed = args.alpha_f is not None or args.alpha_b is not None
    if fixed and args.cv:
        raise UsageError("give either --alpha-f/--alpha-b or --cv, not both")
    if fixed:
        if args.alpha_f is None or args.alpha_b is None:
            raise UsageError("--alpha-f and --alpha-b go together")
        thresholds = Thresholds(alpha_f=args.alpha_f, alpha_b=args.alpha_b)
    elif args.cv:
        result = select_thresholds(data, K=args.k, grid=_grid_from_args(args),
                                   seed=args.seed, cap=args.cap,
                                   max_iter=args.max_iter)
        thresholds = result.best
        write_json(out / "cv.json", cv_to_obj(result))
        print(f"cv: alpha_f={num(thresholds.alpha_f)} "
              f"alpha_b={num(thresholds.alpha_b)} "
              f"score={num(result.best_score())}")
    else:
        raise UsageError("need --alpha-f/--alpha-b or --cv")
    fit = run_gsa(data, thresholds, cap=args.cap, max_iter=args.max_iter)
    write_json(out / "fit.json", fit_to_obj(fit, thresholds))
    write_edges_tsv(out / "edges.tsv", fit.edges)
    print(f"fit: {len(fit.edges.pairs)} edges in {fit.iterations} iterations "
          f"({fit.stop_reason}); wrote {out / 'fit.json'}, {out / 'edges.tsv'}")
    return EXIT_OK


def cmd_cv(args) -> int:
    data = _load(read_samples_csv, args.data)
    result = select_thresholds(data, K=args.k, grid=_grid_from_args(args),
                               seed=args.seed, cap=args.cap,
                               max_iter=args.max_iter)
    out = _outdir(args)
    write_json(out / "cv.json", cv_to_obj(result))
    print(f"best alpha_f={num(result.best.alpha_f)} "
          f"alpha_b={num(result.best.alpha_b)} "
          f"score={num(result.best_score())}; wrote {out / 'cv.json'}")
    return EXIT_OK


def cmd_bench(args) -> int:
    obj = _load(read_json, args.spec)
    spec = bench_mod.campaign_from_obj(obj, seed=args.seed,
                                       threads=args.threads)
    out = args.out if args.out else obj.get("out")
    if out is None:
        raise UsageError("no output directory: pass --out or put \"out\" "
                         "in the spec file")
    result = bench_mod.run_campaign(spec, import_dir=args.import_estimates)
    written = bench_mod.write_campaign(out, result)
    for path in written:
        print(f"wrote {path}")
    if not result.ok:
        print(f"{len(result.failures)} task(s) failed; see failures.csv",
              file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_lda(args) -> int:
    if args.fixture:
        if args.data is not None:
            raise UsageError("--fixture replaces the data argument")
        data = make_two_class_fixture(seed=args.fixture_seed)
    elif args.data is not None:
        arr, labels, names = _load(read_labeled_csv, args.data,
                                   label_col=args.label_col)
        data = LabeledDataset(data=arr, labels=labels, feature_names=names)
    else:
        raise UsageError("need a labeled CSV or --fixture")
    try:
        counts = tuple(int(c) for c in args.test_counts.split(","))
        if len(counts) != 2:
            raise ValueError
    except ValueError:
        raise UsageError(f"--test-counts wants 'a,b', got {args.test_counts!r}")
    fixed = None
    if args.alpha_f is not None or args.alpha_b is not None:
        if args.alpha_f is None or args.alpha_b is None:
            raise UsageError("--alpha-f and --alpha-b go together")
        fixed = Thresholds(alpha_f=args.alpha_f, alpha_b=args.alpha_b)
    reps = run_lda_repetitions(
        data, repetitions=args.repetitions, seed=args.seed, screen_m=args.m,
        test_counts=counts, thresholds=fixed, K=args.k,
        grid=None if args.grid is None else _grid_from_args(args))
    out = _outdir(args)
    write_lda_csv(out / "lda_repetitions.csv", reps)
    summary = {}
    for name, attr in (("Sensitivity", "sensitivity"),
                       ("Specificity", "specificity"), ("MCC", "mcc"),
                       ("Number of Edges", "edge_count")):
        vals = np.array([getattr(r, attr) for r in reps], dtype=float)
        sd = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        summary[name] = {"mean": float(vals.mean()), "sd": sd}
    summary["repetitions"] = len(reps)
    summary["degenerate_sd"] = len(reps) == 1
    write_json(out / "lda_summary.json", summary)
    print(f"lda: {len(reps)} repetitions, mean MCC "
          f"{summary['MCC']['mean']:.3f}; wrote {out / 'lda_repetitions.csv'}, "
          f"{out / 'lda_summary.json'}")
    return EXIT_OK


def cmd_heatmap(args) -> int:
    edge_sets = []
    for path in args.fits:
        obj = _load(read_json, path)
        try:
            edge_sets.append(EdgeSet.from_pairs(
                int(obj["p"]), [tuple(e) for e in obj["edges"]]))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: not a fit JSON ({exc})") from exc
    from .metrics import zero_frequency_matrix
    matrix = zero_frequency_matrix(edge_sets, p=args.p)
    out = _outdir(args)
    write_matrix_csv(out / "zero_freq.csv", matrix)
    print(f"wrote {out / 'zero_freq.csv'} from {len(edge_sets)} fits")
    return EXIT_OK


# -------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", default=None, help="output directory")

    parser = _Parser(prog="stepgraph",
                     description="Stepwise graph selection toolkit")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    ps = sub.add_parser("simulate", parents=[common],
                        help="draw samples from a synthetic model")
    ps.add_argument("model", choices=("ar1", "nn2", "bg"))
    ps.add_argument("--p", type=int, required=True)
    ps.add_argument("--n", type=int, required=True)
    ps.add_argument("--rho", type=float, default=0.4)
    ps.add_argument("--block-size", type=int, default=5)
    ps.add_argument("--model-seed", type=int, default=None,
                    help="structure seed for nn2 (default: --seed)")
    ps.set_defaults(func=cmd_simulate)

    pf = sub.add_parser("fit", parents=[common],
                        help="run the stepwise selection on a sample CSV")
    pf.add_argument("data")
    pf.add_argument("--alpha-f", type=float, default=None)
    pf.add_argument("--alpha-b", type=float, default=None)
    pf.add_argument("--cv", action="store_true",
                    help="pick thresholds by K-fold cross-validation")
    pf.add_argument("--k", type=int, default=5)
    pf.add_argument("--grid", default=None,
                    help="CSV of candidate (alpha_f, alpha_b) rows")
    pf.add_argument("--cap", type=int, default=None)
    pf.add_argument("--max-iter", type=int, default=None)
    pf.set_defaults(func=cmd_fit)

    pc = sub.add_parser("cv", parents=[common],
                        help="cross-validate thresholds only")
    pc.add_argument("data")
    pc.add_argument("--k", type=int, default=5)
    pc.add_argument("--grid", default=None)
    pc.add_argument("--cap", type=int, default=None)
    pc.add_argument("--max-iter", type=int, default=None)
    pc.set_defaults(func=cmd_cv)

    pb = sub.add_parser("bench", parents=[common],
                        help="run a benchmark campaign from a spec JSON")
    pb.add_argument("spec")
    pb.add_argument("--import-estimates", default=None, metavar="DIR",
                    help="score external omega-hat CSVs as extra methods")
    pb.set_defaults(func=cmd_bench, seed=None, threads=None)

    pl = sub.add_parser("lda", parents=[common],
                        help="two-class LDA pipeline on a labeled CSV")
    pl.add_argument("data", nargs="?", default=None)
    pl.add_argument("--fixture", action="store_true",
                    help="use the built-in synthetic two-class fixture")
    pl.add_argument("--fixture-seed", type=int, default=0)
    pl.add_argument("--label-col", default="label")
    pl.add_argument("--m", type=int, default=50,
                    help="features kept by the t-statistic screen")
    pl.add_argument("--repetitions", type=int, default=100)
    pl.add_argument("--test-counts", default="5,16",
                    help="test rows per group, 'group1,group2'")
    pl.add_argument("--alpha-f", type=float, default=None)
    pl.add_argument("--alpha-b", type=float, default=None)
    pl.add_argument("--k", type=int, default=5)
    pl.add_argument("--grid", default=None)
    pl.set_defaults(func=cmd_lda)

    ph = sub.add_parser("heatmap", parents=[common],
                        help="zero-frequency matrix from fit JSONs")
    ph.add_argument("fits", nargs="+")
    ph.add_argument("--p", type=int, default=None)
    ph.set_defaults(func=cmd_heatmap)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ContractViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (CycleDetected, IterationLimit) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if getattr(exc, "trace", None):
            tail = exc.trace[-8:]
            print(f"trace tail ({len(tail)} of {len(exc.trace)} events):",
                  file=sys.stderr)
            for kind, pair, score in tail:
                shown = "-" if score is None else f"{score:.6f}"
                print(f"  {kind} {pair} score={shown}", file=sys.stderr)
        return EXIT_NUMERIC
    except (NotPositiveDefinite, DegenerateResidual,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
