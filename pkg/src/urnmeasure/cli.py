"""Command-line interface.

Exit codes: 0 success or pass, 1 scientific failure or numerical
non-convergence, 2 usage error, 3 I/O error.  Randomized commands require
``--seed``.  Every output starts with the fully resolved configuration, and
wall-clock timings go to stderr so that repeated runs produce identical
files.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import kernels as K
from . import montecarlo as mc
from . import textscan as ts
from .distributions import PowerLawPmf
from .intervals import IntervalSet, parse_interval_set
from .occupancy import AT_LEAST, EXACT, Query, batch_count, batch_count_poisson, \
    dump_realization_csv, simulate_fixed, simulate_poisson, standardize

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _set_arg(text):
    try:
        return parse_interval_set(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _theta_arg(text):
    value = float(text)
    if not (0.0 < value < 1.0):
        raise argparse.ArgumentTypeError("theta must lie in (0, 1)")
    return value


def _positive_int(text):
    value = int(float(text))
    if value < 1 or value != float(text):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _seed_arg(text):
    value = int(text)
    if not (0 <= value < 2**64):
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _unit_arg(text):
    value = Fraction(text)
    if not (0 <= value <= 1):
        raise argparse.ArgumentTypeError("value must lie in [0, 1]")
    return value


# ----------------------------------------------------------------------
# output helpers


def _config_of(args) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key == "func":
            continue
        if isinstance(value, (IntervalSet, Fraction)):
            value = str(value)
        elif isinstance(value, list):
            value = [str(v) if isinstance(v, (IntervalSet, Fraction)) else v for v in value]
        out[key] = value
    return out


def _emit(args, text: str):
    if args.output:
        try:
            with open(args.output, "w", newline="\n", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {args.output}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _csv(header, rows, config) -> str:
    buf = io.StringIO(newline="")
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    # set expressions contain commas and are quoted
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([_cell(x) for x in row] for row in rows)
    return buf.getvalue()


def _cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# ----------------------------------------------------------------------
# simulate


def _queries(args):
    sets = args.set or [IntervalSet([(0, 1)])]
    ks = args.k or [1]
    if len(ks) == 1:
        ks = ks * len(sets)
    if len(ks) != len(sets):
        raise UsageError("give one --k per --set, or a single --k for all")
    try:
        return [Query(s, k, args.count_mode) for s, k in zip(sets, ks)]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args) -> int:
    if (args.n is None) == (args.t is None):
        raise UsageError("give exactly one of --n (fixed) or --t (Poissonized)")
    queries = _queries(args)
    model = PowerLawPmf(args.theta)
    rows = []
    for rep in range(args.reps):
        rng = mc.replication_rng(args.seed, rep)
        if args.n is not None:
            real = simulate_fixed(model, args.n, rng)
            counts = batch_count(real, queries)
            scale, mode = args.n, "fixed"
        else:
            bound = max(float(q.set.bounds()[1]) if q.set else 0.0 for q in queries)
            real = simulate_poisson(model, max(args.t * bound, 1e-12), rng)
            counts = batch_count_poisson(real, args.t, queries)
            scale, mode = args.t, "poissonized"
        if args.dump_realization and rep == 0:
            dump_realization_csv(real, args.dump_realization)
        for q, c in zip(queries, counts):
            res = standardize(model, int(c), scale, q, mode)
            rows.append((rep, str(q.set), q.k, q.mode, int(c), res.expectation, res.standardized))
    header = ("replication", "set", "k", "mode", "count", "expectation", "standardized")
    config = _config_of(args)
    if args.format == "json":
        text = json.dumps({"config": config,
                           "rows": [dict(zip(header, r)) for r in rows]}, sort_keys=True) + "\n"
    else:
        text = _csv(header, rows, config)
    _emit(args, text)
    return EXIT_OK


# ----------------------------------------------------------------------
# verify


def _report_out(args, report: mc.Report) -> int:
    runtime = report.metadata.pop("runtime_s", None)
    if runtime is not None:
        print(f"runtime {runtime:.2f} s", file=sys.stderr)
    report.metadata["cli"] = _config_of(args)
    if args.format == "json":
        text = report.to_json(sort_keys=True) + "\n"
    else:
        text = report.to_text() + "\n"
    _emit(args, text)
    return EXIT_OK if report.verdict else EXIT_FAIL


def cmd_verify(args) -> int:
    kind = args.experiment
    if kind == "clt":
        queries = _queries(args)
        cfg = mc.ExperimentConfig(args.theta, args.n, args.reps, tuple(queries), args.seed,
                                  args.workers, args.mode, args.threshold, args.dump_csv)
        report = mc.run_clt(cfg)
    elif kind == "fclt":
        cfg = mc.ExperimentConfig(args.theta, args.n, args.reps, (), args.seed, args.workers,
                                  threshold=args.threshold, dump_csv=args.dump_csv)
        report = mc.run_fclt_grid(cfg, args.grid)
    elif kind == "slln":
        if not args.set:
            args.set = [IntervalSet([(Fraction(1, 5), Fraction(7, 10))])]
            args.k = args.k or [2]
        queries = _queries(args)
        grid = [int(float(x)) for x in args.n_grid.split(",")]
        cfg = mc.ExperimentConfig(args.theta, grid[-1], args.reps, tuple(queries), args.seed,
                                  args.workers, threshold=args.threshold)
        report = mc.run_slln(cfg, grid, band=args.band)
    elif kind == "bounds":
        cfg = mc.ExperimentConfig(args.theta, 1, args.reps, (), args.seed, args.workers,
                                  threshold=args.threshold)
        report = mc.run_bounds(cfg)
    elif kind == "poisson-cov":
        sets = args.set or [parse_interval_set("0:0.6"), parse_interval_set("0.4:1")]
        if len(sets) != 2:
            raise UsageError("poisson-cov needs exactly two --set values")
        cfg = mc.ExperimentConfig(args.theta, args.t, args.reps,
                                  ((sets[0], 1), (sets[1], 1)), args.seed, args.workers,
                                  threshold=args.threshold, dump_csv=args.dump_csv)
        report = mc.run_poisson_cov_identity(cfg)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown experiment {kind!r}")
    return _report_out(args, report)


# ----------------------------------------------------------------------
# kernel


def _grid_points(step):
    steps = round(1 / step)
    if steps < 1 or abs(steps * step - 1) > 1e-9:
        raise UsageError("--grid must divide 1")
    return [Fraction(j, steps) for j in range(steps + 1)]


def cmd_kernel(args) -> int:
    rows = []
    header = ("s", "t", "value", "method", "est_abs_error")
    what = args.kernel
    if what == "kstar":
        v = K.kstar(args.a, args.k1, args.b, args.k2, args.theta, args.tol)
        header = ("a", "k1", "b", "k2", "value", "method", "est_abs_error")
        rows.append((str(args.a), args.k1, str(args.b), args.k2, v.value, v.method,
                     v.est_abs_error))
    elif what == "exact":
        v = K.k_exact(args.a, args.k1, args.b, args.k2, args.theta, args.tol)
        header = ("a", "i", "b", "j", "value", "method", "est_abs_error")
        rows.append((str(args.a), args.k1, str(args.b), args.k2, v.value, v.method,
                     v.est_abs_error))
    elif what == "pi":
        header = ("i", "j", "value", "method", "est_abs_error")
        if args.kmax:
            pairs = [(i, j) for i in range(1, args.kmax + 1) for j in range(1, args.kmax + 1)]
        else:
            pairs = [(args.i, args.j)]
        rows = [(i, j, K.pi_value(i, j, args.theta), K.CLOSED_FORM, 0.0) for i, j in pairs]
    elif what in ("forward", "cross"):
        fn = K.forward_kernel if what == "forward" else K.cross_kernel
        if args.grid:
            pts = _grid_points(args.grid)
            rows = [(s, t, fn(float(s), float(t), args.theta), K.CLOSED_FORM, 0.0)
                    for s in pts for t in pts]
        else:
            if args.s is None or args.t is None:
                raise UsageError("give --grid or both --s and --t")
            rows = [(args.s, args.t, fn(float(args.s), float(args.t), args.theta),
                     K.CLOSED_FORM, 0.0)]
    elif what == "ufield":
        header = ("s1", "t1", "s2", "t2", "value", "method", "est_abs_error")
        if args.grid:
            pts = _grid_points(args.grid)
            rows = [(s, t, s, t, K.u_field_kernel(s, t, s, t, args.theta), K.CLOSED_FORM, 0.0)
                    for s in pts for t in pts]
        else:
            vals = (args.s1, args.t1, args.s2, args.t2)
            if any(v is None for v in vals):
                raise UsageError("give --grid or all of --s1 --t1 --s2 --t2")
            rows = [(*vals, K.u_field_kernel(*vals, args.theta), K.CLOSED_FORM, 0.0)]
    else:  # pragma: no cover
        raise UsageError(f"unknown kernel {what!r}")
    rows = [tuple(float(x) if isinstance(x, Fraction) else x for x in r) for r in rows]
    config = _config_of(args)
    if args.format == "json":
        text = json.dumps({"config": config, "rows": [dict(zip(header, r)) for r in rows]},
                          sort_keys=True) + "\n"
    else:
        text = _csv(header, rows, config)
    _emit(args, text)
    return EXIT_OK


# ----------------------------------------------------------------------
# text


def _read_texts(paths):
    chunks = []
    for p in paths:
        try:
            with open(p, encoding="utf-8") as fh:
                chunks.append(fh.read())
        except (OSError, UnicodeDecodeError) as exc:
            raise OSError(f"cannot read {p}: {exc}") from exc
    try:
        # files are concatenated in the order given and share one vocabulary
        return ts.tokenize("\n".join(chunks))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_text(args) -> int:
    seq = _read_texts(args.files)
    config = _config_of(args)
    if args.action == "theta":
        raw = ts.theta_hat(seq, clamp=False)
        result = {"config": config, "n": seq.n, "distinct": seq.vocabulary_size,
                  "theta_hat_raw": raw, "theta_hat": ts.theta_hat(seq)}
        text = (json.dumps(result, sort_keys=True) + "\n" if args.format == "json"
                else f"theta_hat {result['theta_hat']!r} raw {raw!r} n {seq.n} "
                     f"distinct {seq.vocabulary_size}\n")
        _emit(args, text)
        return EXIT_OK
    if args.seed is None:
        raise UsageError("text scan requires --seed")
    try:
        res = ts.p_value(seq, args.grid, args.resamples, args.method, args.seed, args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(args, json.dumps({"config": config, "result": res.to_dict()}, sort_keys=True) + "\n")
    if args.csv:
        steps = round(1 / args.grid)
        u = ts.circular_field(seq, args.grid)
        fwd, bwd = ts.forward_backward(seq, args.grid)
        try:
            with open(args.csv, "w", newline="\n", encoding="utf-8") as fh:
                fh.write("kind,s,t,value\n")
                for j in range(steps + 1):
                    fh.write(f"forward,,{repr(j / steps)},{fwd[j]}\n")
                    fh.write(f"backward,,{repr(j / steps)},{bwd[j]}\n")
                for j in range(steps + 1):
                    for l in range(steps + 1):
                        fh.write(f"U,{repr(j / steps)},{repr(l / steps)},{u[j, l]}\n")
        except OSError as exc:
            raise OSError(f"cannot write {args.csv}: {exc}") from exc
    return EXIT_OK


# ----------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="urnmeasure", description=(
        "Occupancy counts of the infinite urn scheme over index sets: simulation, "
        "Monte Carlo verification, limiting kernels and text homogeneity scans."))
    sub = parser.add_subparsers(dest="command", required=True)

    def common_out(p, formats, default):
        p.add_argument("--format", choices=formats, default=default)
        p.add_argument("--output", "-o", help="write to this file instead of stdout")

    def set_flags(p):
        p.add_argument("--set", type=_set_arg, action="append",
                       help="interval union 'lo:hi,lo:hi' (repeatable)")
        p.add_argument("--k", type=_positive_int, action="append",
                       help="occupancy level (repeatable, one per --set)")
        p.add_argument("--count-mode", choices=(AT_LEAST, EXACT), default=AT_LEAST)

    p = sub.add_parser("simulate", help="simulate one or more realizations and count")
    p.add_argument("--theta", type=_theta_arg, required=True)
    p.add_argument("--n", type=_positive_int, help="number of balls (fixed-n scheme)")
    p.add_argument("--t", type=float, help="Poisson time (Poissonized scheme)")
    p.add_argument("--seed", type=_seed_arg, required=True)
    p.add_argument("--reps", type=_positive_int, default=1)
    p.add_argument("--dump-realization", help="CSV of the first realization's labels")
    set_flags(p)
    common_out(p, ("csv", "json"), "csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run a Monte Carlo verification experiment")
    p.add_argument("experiment", choices=("clt", "fclt", "slln", "bounds", "poisson-cov"))
    p.add_argument("--theta", type=_theta_arg, default=0.5)
    p.add_argument("--n", type=_positive_int, default=10**5)
    p.add_argument("--t", type=float, default=1e4)
    p.add_argument("--reps", type=_positive_int, default=None)
    p.add_argument("--seed", type=_seed_arg, required=True)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--mode", choices=("fixed", "poissonized"), default="fixed")
    p.add_argument("--grid", type=float, default=0.1)
    p.add_argument("--n-grid", default="100,1000,10000,100000,1000000")
    p.add_argument("--band", type=float, default=0.05)
    p.add_argument("--threshold", type=float, default=mc.DEFAULT_THRESHOLD)
    p.add_argument("--dump-csv", help="per-replication matrix as CSV")
    set_flags(p)
    common_out(p, ("text", "json"), "text")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("kernel", help="evaluate or tabulate limiting kernels")
    p.add_argument("kernel", choices=("kstar", "exact", "pi", "forward", "cross", "ufield"))
    p.add_argument("--theta", type=_theta_arg, required=True)
    p.add_argument("--a", type=_set_arg, default=IntervalSet([(0, 1)]))
    p.add_argument("--b", type=_set_arg, default=IntervalSet([(0, 1)]))
    p.add_argument("--k1", type=_positive_int, default=1)
    p.add_argument("--k2", type=_positive_int, default=1)
    p.add_argument("--i", type=_positive_int, default=1)
    p.add_argument("--j", type=_positive_int, default=1)
    p.add_argument("--kmax", type=_positive_int)
    p.add_argument("--s", type=_unit_arg)
    p.add_argument("--t", type=_unit_arg)
    for name in ("--s1", "--t1", "--s2", "--t2"):
        p.add_argument(name, type=_unit_arg)
    p.add_argument("--grid", type=float)
    p.add_argument("--tol", type=float, default=K.DEFAULT_TOL)
    common_out(p, ("csv", "json"), "csv")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("text", help="distinct-word statistics of UTF-8 text files")
    p.add_argument("action", choices=("scan", "theta"))
    p.add_argument("files", nargs="+")
    p.add_argument("--grid", type=float, default=ts.DEFAULT_GRID)
    p.add_argument("--resamples", type=_positive_int, default=499)
    p.add_argument("--method", choices=(ts.PERMUTATION, ts.PARAMETRIC), default=ts.PERMUTATION)
    p.add_argument("--seed", type=_seed_arg)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--csv", help="write forward/backward processes and the U grid here")
    common_out(p, ("json", "text"), "json")
    p.set_defaults(func=cmd_text)
    return parser


_DEFAULT_REPS = {"clt": 2000, "fclt": 2000, "slln": 100, "bounds": 10**4, "poisson-cov": 2 * 10**5}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code) if exc.code is not None else EXIT_OK
    if getattr(args, "experiment", None) and args.reps is None:
        args.reps = _DEFAULT_REPS[args.experiment]
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"urnmeasure: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except K.QuadratureError as exc:
        print(f"urnmeasure: quadrature failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"urnmeasure: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"urnmeasure: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
