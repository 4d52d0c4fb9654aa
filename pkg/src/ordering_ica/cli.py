"""Command-line front end: ``oica gen | run | sweep | fluct | compare``.

Exit codes: 0 ok, 1 compare mismatch, 2 usage, 3 I/O, 4 algorithm error.
``OICA_THREADS`` caps BLAS threads (0 or unset: library default).
"""

import argparse
import contextlib
import csv
import os
import sys
from pathlib import Path

import numpy as np

from .contrast import upsilon
from .errors import ChecksumMismatch, DimensionMismatch, FormatError, OrderingICAError
from .fast import ordering_ica_fast
from .io import (
    RunRecord,
    matrix_hash,
    read_dataset,
    read_run_record,
    write_dataset,
    write_run_record,
)
from .metrics import fluctuation, ordering_error
from .reference import ordering_ica_reference
from .signal import compose_unmixing, preprocess
from .sourcegen import SourceSpec, gen_dataset, gg_kurtosis, paper_rho_grid

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_IO, EXIT_ALGO = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def run_algorithm(Xw, algorithm, L, K=30, eps=1e-6, seed=0, *,
                  gaussianity_test=True, strict=False, init="matched"):
    if algorithm == "fast":
        return ordering_ica_fast(Xw, L, K, eps, seed,
                                 gaussianity_test=gaussianity_test, strict=strict)
    return ordering_ica_reference(Xw, L, K, eps, seed,
                                  gaussianity_test=gaussianity_test, init=init)


def _positive(kind):
    def parse(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return parse


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                             for v in row])


def _load(path):
    if not Path(path).is_dir():
        raise FileNotFoundError(f"dataset bundle {path} not found")
    dataset, _ = read_dataset(path)
    Xw, model = preprocess(dataset.observed)
    return dataset, Xw, model


def _algo_kwargs(args):
    return dict(
        gaussianity_test=not args.no_gaussianity_test,
        strict=getattr(args, "strict", False),
        init=getattr(args, "init", "matched"),
    )


def cmd_gen(args):
    if args.paper_grid:
        rhos = paper_rho_grid()
    else:
        rhos = list(args.rho or [])
    if not rhos and args.gaussian == 0:
        raise UsageError("no sources: give --paper-grid, --rho or --gaussian")
    spec = SourceSpec(rhos=rhos, gaussian_count=args.gaussian,
                      samples=args.samples, seed=args.seed)
    dataset = gen_dataset(spec)
    out = write_dataset(args.out, dataset, spec, format=args.format)
    print(f"bundle: {out}  N={dataset.n_channels} M={dataset.n_samples}")
    ranks = np.empty(dataset.n_channels, dtype=int)
    ranks[dataset.source_order()] = np.arange(1, dataset.n_channels + 1)
    print(f"{'source':>6} {'rho':>10} {'kurtosis':>12} {'upsilon':>10} {'rank':>5}")
    shapes = spec.rhos + [2.0] * spec.gaussian_count
    for j, (rho, kappa) in enumerate(zip(shapes, dataset.true_kurtoses)):
        print(f"{j:>6} {rho:>10.5f} {kappa:>12.5f} {upsilon(kappa):>10.5f} {ranks[j]:>5}")
    return EXIT_OK


def cmd_run(args):
    dataset, Xw, _ = _load(args.dataset)
    result = run_algorithm(Xw, args.algorithm, args.L, args.K, args.eps, args.seed,
                           **_algo_kwargs(args))
    record = RunRecord(
        algorithm=args.algorithm, L=args.L, K=args.K, eps=args.eps, seed=args.seed,
        dataset_path=str(Path(args.dataset).resolve()),
        dataset_hash=matrix_hash(dataset.observed),
        result=result,
        options={
            "gaussianity_test": str(not args.no_gaussianity_test).lower(),
            "strict": str(args.strict).lower(),
            "init": args.init,
        },
    )
    out = write_run_record(args.out, record, format=args.format)
    print(f"record: {out}  algorithm={args.algorithm} extracted={result.n_extracted} "
          f"stop_index={result.stop_index}")
    print(f"{'i':>4} {'upsilon':>12} {'threshold':>12} {'iters':>6} {'seconds':>10}")
    for c in result.components:
        flag = "" if c.accepted else "  (gaussian: stop)"
        print(f"{c.index:>4} {c.upsilon:>12.6g} {c.threshold:>12.6g} "
              f"{c.iterations:>6} {c.seconds:>10.4f}{flag}")
    print(f"total seconds: {result.total_seconds:.4f}")
    return EXIT_OK


def _mean_std(values):
    values = np.asarray(values, dtype=float)
    return float(values.mean()), float(values.std())


def cmd_sweep(args):
    dataset, Xw, model = _load(args.dataset)
    N = dataset.n_channels
    have_truth = dataset.mixing is not None and dataset.true_kurtoses is not None
    A_sorted = dataset.sorted_mixing() if have_truth else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    err_rows, time_rows, count_rows = [], [], []
    for L in args.L:
        errs, times, counts = [], [], []
        for t in range(args.T):
            res = run_algorithm(Xw, args.algorithm, L, args.K, args.eps,
                                args.base_seed + t, **_algo_kwargs(args))
            times.append(res.total_seconds)
            counts.append(res.n_extracted)
            if have_truth:
                W = compose_unmixing(res.W, model)
                W = np.vstack([W, np.zeros((N - W.shape[0], N))])
                errs.append(ordering_error(W, A_sorted, args.tau))
        time_rows.append((L, *_mean_std(times)))
        count_rows.append((L, *_mean_std(counts)))
        line = f"L={L:<5} time={time_rows[-1][1]:.4f}s  non-gaussian={count_rows[-1][1]:.2f}"
        if have_truth:
            err_rows.append((L, *_mean_std(errs)))
            line += f"  ordering_error={err_rows[-1][1]:.4f}"
        print(line)
    _write_csv(out / "time_vs_L.csv", ["L", "mean", "stddev"], time_rows)
    _write_csv(out / "ngauss_count_vs_L.csv", ["L", "mean", "stddev"], count_rows)
    if have_truth:
        _write_csv(out / "ordering_error_vs_L.csv", ["L", "mean", "stddev"], err_rows)
    else:
        print("no ground truth in bundle: ordering_error_vs_L.csv skipped")
    return EXIT_OK


def cmd_fluct(args):
    if args.T < 2:
        raise UsageError("fluctuation needs T >= 2 runs")
    _, Xw, _ = _load(args.dataset)
    runs = []
    for t in range(args.T):
        seed = args.base_seed if args.same_seed else args.base_seed + t
        runs.append(run_algorithm(Xw, args.algorithm, args.L, args.K, args.eps, seed,
                                  **_algo_kwargs(args)).W)
    k = min(W.shape[0] for W in runs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if k == 0:
        per_rank, groups = np.zeros(0), {}
    else:
        report = fluctuation([W[:k] for W in runs], groups=tuple(args.groups))
        per_rank, groups = report.per_component, report.group_averages
    _write_csv(out / "fluctuation_per_rank.csv", ["rank", "fluctuation"],
               [(i + 1, v) for i, v in enumerate(per_rank)])
    _write_csv(out / "fluctuation_groups.csv", ["group", "mean"], list(groups.items()))
    print(f"components compared: {k}")
    for name, value in groups.items():
        print(f"{name:>5}: {value:.6f}")
    return EXIT_OK


def cmd_compare(args):
    a = read_run_record(args.record_a, verify=not args.no_verify)
    b = read_run_record(args.record_b, verify=not args.no_verify)
    Wa, Wb = a.result.W, b.result.W
    if Wa.shape[1] != Wb.shape[1] or a.dataset_hash != b.dataset_hash:
        raise DimensionMismatch("records come from different datasets")
    k = min(Wa.shape[0], Wb.shape[0])
    dev = np.array([min(np.max(np.abs(Wa[j] - Wb[j])), np.max(np.abs(Wa[j] + Wb[j])))
                    for j in range(k)])
    print(f"rows: {Wa.shape[0]} vs {Wb.shape[0]}; stop_index: "
          f"{a.result.stop_index} vs {b.result.stop_index}")
    print(f"{'row':>4} {'max_dev':>12} {'d_upsilon':>12}")
    for j in range(k):
        print(f"{j + 1:>4} {dev[j]:>12.3e} "
              f"{a.result.upsilon[j] - b.result.upsilon[j]:>12.3e}")
    worst = float(dev.max()) if k else 0.0
    tb = b.result.total_seconds
    ratio = a.result.total_seconds / tb if tb > 0 else float("inf")
    print(f"max deviation: {worst:.3e}  speed ratio (a/b time): {ratio:.3f}")
    match = Wa.shape == Wb.shape and worst <= args.tol
    print("MATCH" if match else "MISMATCH")
    return EXIT_OK if match else EXIT_MISMATCH


def _common(p, fmt=False):
    p.add_argument("--algorithm", choices=["fast", "reference"], default="fast")
    p.add_argument("-K", type=_positive(int), default=30, help="max iterations (30)")
    p.add_argument("--eps", type=_positive(float), default=1e-6,
                   help="convergence threshold (1e-6)")
    p.add_argument("--no-gaussianity-test", action="store_true",
                   help="extract all N components")
    p.add_argument("--strict", action="store_true",
                   help="drop candidates still unconverged at K (fast only)")
    p.add_argument("--init", choices=["matched", "full"], default="matched",
                   help="reference initialization scheme")
    if fmt:
        p.add_argument("--format", choices=["binary", "text"], default="binary")


def build_parser():
    parser = argparse.ArgumentParser(prog="oica", description="Ordering ICA toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset bundle")
    p.add_argument("--paper-grid", action="store_true",
                   help="use the 20 benchmark shapes 2*2**(i/4)")
    p.add_argument("--rho", type=_positive(float), action="append",
                   help="generalized-Gaussian shape (repeatable)")
    p.add_argument("--gaussian", type=int, default=0, help="number of Gaussian rows")
    p.add_argument("--samples", type=_positive(int), default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="dataset")
    p.add_argument("--format", choices=["binary", "text"], default="binary")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="separate a dataset and write a run record")
    p.add_argument("dataset")
    p.add_argument("-L", type=_positive(int), default=100, help="candidates per component")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="record")
    _common(p, fmt=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="ordering error, time and count versus L")
    p.add_argument("dataset")
    p.add_argument("-L", type=_positive(int), nargs="+", default=[1, 5, 10, 20, 50, 100])
    p.add_argument("-T", type=_positive(int), default=10, help="repeats per L")
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--tau", type=_positive(float), default=0.1)
    p.add_argument("--out", default="sweep")
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fluct", help="run-to-run fluctuation per rank")
    p.add_argument("dataset")
    p.add_argument("-L", type=_positive(int), default=50)
    p.add_argument("-T", type=int, default=10)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--same-seed", action="store_true",
                   help="reuse base seed for every repeat")
    p.add_argument("--groups", type=int, nargs=2, default=[20, 20],
                   metavar=("TOP", "MID"))
    p.add_argument("--out", default="fluct")
    _common(p)
    p.set_defaults(func=cmd_fluct)

    p = sub.add_parser("compare", help="compare two run records")
    p.add_argument("record_a")
    p.add_argument("record_b")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--no-verify", action="store_true",
                   help="skip dataset hash verification")
    p.set_defaults(func=cmd_compare)
    return parser


def _thread_limit():
    value = os.environ.get("OICA_THREADS", "0").strip() or "0"
    n = int(value)
    if n <= 0:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _thread_limit():
            return args.func(args)
    except UsageError as exc:
        print(f"oica: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError, ChecksumMismatch) as exc:
        print(f"oica: I/O error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OrderingICAError, ValueError) as exc:
        print(f"oica: algorithm error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ALGO


if __name__ == "__main__":
    sys.exit(main())
