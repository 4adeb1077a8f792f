"""Command-line interface: ``steinunif {test,critval,power,tune,field,sample}``.

Exit codes: 0 success, 2 power study with failed cells, 64 usage error,
65 malformed input data, 66 missing input file.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from functools import partial

import numpy as np

from . import statistic as st
from .alternatives import KINDS, AlternativeModel
from .exceptions import DomainError
from .fields import FIELD_KINDS, export_field, field_grid
from .harness import ExperimentConfig, emit_table, run_power_study
from .null_dist import CriticalValueTable, null_draws, order_statistic, p_value_mc, write_critical_values
from .sampleset import CSVFormatError, SampleSet, read_csv, write_csv
from .tuning import GridWeights, LambdaGrid, abar, fold_labels, kfold_scores

__all__ = ["main", "build_parser", "EX_USAGE", "EX_DATAERR", "EX_NOINPUT", "EX_PARTIAL"]

EX_PARTIAL = 2
EX_USAGE = 64
EX_DATAERR = 65
EX_NOINPUT = 66

STATISTICS = ("stein", "dksd", "softmax", "rayleigh", "bingham")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EX_USAGE)


def _evaluate(name: str, lam: float | None, sample: SampleSet) -> float:
    if name == "rayleigh":
        return st.rayleigh(sample)
    if name == "bingham":
        return st.bingham(sample)
    coeffs = st.CoefficientSequence.from_family(name, sample.p, lam)
    return st.sobolev_statistic(sample, coeffs, v_statistic=(name == "dksd"))


def _statistic_fn(args):
    if args.statistic in ("stein", "dksd", "softmax") and args.lam is None:
        raise UsageError(f"--lambda is required for --statistic {args.statistic}")
    return partial(_evaluate, args.statistic, args.lam)


def _vector(text: str, name: str) -> np.ndarray:
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"{name} must be comma-separated numbers") from exc
    norm = np.linalg.norm(v)
    if norm == 0:
        raise UsageError(f"{name} must be nonzero")
    return v / norm


def _emit(args, payload: dict, lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print("\n".join(lines))


# ---------------------------------------------------------------------------


def cmd_test(args) -> int:
    sample = read_csv(args.data, normalize=args.normalize)
    fn = _statistic_fn(args)
    observed = fn(sample)
    draws = null_draws(fn, sample.n, sample.p, args.M, args.seed, args.workers)
    cv = order_statistic(draws, args.alpha)
    pv = p_value_mc(observed, draws)
    reject = bool(observed > cv)
    payload = {
        "statistic": args.statistic,
        "lambda": args.lam,
        "n": sample.n,
        "p": sample.p,
        "value": observed,
        "critical_value": cv,
        "p_value": pv,
        "alpha": args.alpha,
        "M": args.M,
        "seed": args.seed,
        "reject": reject,
    }
    lines = [
        f"statistic      {args.statistic}" + (f"(lambda={args.lam:g})" if args.lam is not None else ""),
        f"n, p           {sample.n}, {sample.p}",
        f"value          {observed:.6g}",
        f"critical value {cv:.6g}  (alpha={args.alpha}, M={args.M}, seed={args.seed})",
        f"p-value        {pv:.4g}",
        f"decision       {'reject' if reject else 'do not reject'} uniformity",
    ]
    _emit(args, payload, lines)
    return 0


def cmd_critval(args) -> int:
    fn = _statistic_fn(args)
    draws = null_draws(fn, args.n, args.p, args.M, args.seed, args.workers)
    params = {"lambda": args.lam} if args.lam is not None else {}
    table = CriticalValueTable(args.statistic, args.n, args.p, args.alpha, args.M, args.seed, order_statistic(draws, args.alpha), params)
    if args.out:
        write_critical_values([table], args.out)
    payload = {"statistic": table.statistic, "n": table.n, "p": table.p, "lambda": args.lam, "alpha": table.alpha, "M": table.M, "seed": table.seed, "critical_value": table.value}
    _emit(args, payload, [f"critical value {table.value:.6g}"])
    return 0


def cmd_power(args) -> int:
    with open(args.config) as fh:
        raw = json.load(fh)
    if args.seed is not None:
        raw["seed"] = args.seed
    config = ExperimentConfig.from_dict(raw)
    table = run_power_study(config, workers=args.workers)
    if args.out:
        emit_table(table, args.out)
    payload = {
        "rows": [
            {"alternative": a, "n": n, **{t: (None if np.isnan(v) else round(float(v), 2)) for t, v in zip(table.tests, table.rates[i])}}
            for i, (a, n) in enumerate(table.rows)
        ],
        "errors": [{"row": k[0], "test": table.tests[k[1]], "error": v} for k, v in sorted(table.errors.items())],
        "wall_clock_seconds": round(table.wall_clock, 3),
    }
    lines = ["alternative,n," + ",".join(table.tests)]
    for i, (a, n) in enumerate(table.rows):
        lines.append(f"{a},{n}," + ",".join("ERR" if np.isnan(v) else f"{v:.1f}" for v in table.rates[i]))
    lines.append(f"wall clock {table.wall_clock:.1f}s")
    _emit(args, payload, lines)
    return EX_PARTIAL if table.errors else 0


def cmd_tune(args) -> int:
    grid = LambdaGrid(tuple(np.round(np.arange(args.grid_min, args.grid_max + args.grid_step / 2, args.grid_step), 10))) if args.grid_step else LambdaGrid()
    if (args.pilot is None) == (args.data is None):
        raise UsageError("give exactly one of --pilot (with --n) or --data (with --folds)")
    if args.pilot is not None:
        if args.n is None:
            raise UsageError("--pilot needs --n (target sample size)")
        pilot = read_csv(args.pilot, normalize=args.normalize)
        W = GridWeights.build(pilot.p, grid)
        est = abar(pilot, args.n, W.K)
        scores = W.scores(est.abar, args.n)
        mode = {"mode": "pilot", "n": args.n, "N": pilot.n}
    else:
        sample = read_csv(args.data, normalize=args.normalize)
        W = GridWeights.build(sample.p, grid)
        rng = np.random.default_rng(args.seed)
        scores = kfold_scores(sample, fold_labels(sample.n, args.folds, rng), W)
        mode = {"mode": "kfold", "folds": args.folds, "n": sample.n}
    best = grid.values[int(np.argmax(scores))]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda", "score"])
            for lam, s in zip(grid.values, scores):
                w.writerow([repr(lam), repr(float(s))])
    _emit(args, {**mode, "selected_lambda": best, "max_score": float(np.max(scores)), "seed": args.seed}, [f"selected lambda {best:g} (score {np.max(scores):.4g})"])
    return 0


def cmd_field(args) -> int:
    res = tuple(int(x) for x in args.resolution.lower().split("x"))
    if len(res) != 2:
        raise UsageError("--resolution must look like 181x91")
    fg = field_grid(
        args.kind,
        args.lam,
        args.kappa,
        n=args.n,
        mu=_vector(args.mu, "--mu"),
        t_ref=_vector(args.t_ref, "--t-ref"),
        resolution=res,
        seed=args.seed,
        M=args.M,
    )
    if args.out:
        export_field(fg, args.out)
    _emit(args, {"kind": fg.kind, "points": fg.grid.size, "min": float(fg.values.min()), "max": float(fg.values.max()), **fg.params}, [f"{fg.kind}: {fg.grid.size} points, range [{fg.values.min():.6g}, {fg.values.max():.6g}]"])
    return 0


def cmd_sample(args) -> int:
    params = {k: v for k, v in (("kappa", args.kappa), ("nu", args.nu), ("q", args.q), ("k", args.k)) if v is not None}
    mu = None if args.mu is None else _vector(args.mu, "--mu")
    model = AlternativeModel(args.kind, args.p, params, mu)
    X = model.sample(args.n, np.random.default_rng(args.seed))
    if args.out:
        write_csv(X, args.out)
    else:
        write_csv(X, sys.stdout)
    return 0


# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, workers: bool = False) -> None:
    p.add_argument("--seed", type=int, default=0, help="RNG seed; output is deterministic given it (default 0)")
    p.add_argument("--json", action="store_true", help="print a machine-readable JSON summary")
    if workers:
        p.add_argument("--workers", type=int, default=1, help="worker processes for Monte Carlo (results do not depend on it)")


def _stat_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--statistic", choices=STATISTICS, default="stein", help="test statistic (default stein)")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="tuning parameter for stein/dksd/softmax")
    p.add_argument("--M", type=int, default=5000, help="Monte Carlo null replicates (default 5000)")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level (default 0.05)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="steinunif", description="Stein-operator uniformity tests on the sphere.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", help="test a CSV sample of unit vectors for uniformity")
    p.add_argument("--data", required=True, help="CSV file, one unit vector per row (optional header)")
    p.add_argument("--normalize", action="store_true", help="project rows onto the sphere instead of rejecting non-unit rows")
    _stat_args(p)
    _common(p, workers=True)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("critval", help="Monte Carlo critical value under uniformity")
    p.add_argument("--n", type=int, required=True, help="sample size")
    p.add_argument("--p", type=int, required=True, help="ambient dimension")
    p.add_argument("--out", help="CSV output (statistic,n,p,lambda,alpha,M,seed,critical_value)")
    _stat_args(p)
    _common(p, workers=True)
    p.set_defaults(func=cmd_critval)

    p = sub.add_parser("power", help="run a power study from a JSON config")
    p.add_argument("--config", required=True, help="JSON experiment config (see README)")
    p.add_argument("--out", help="CSV table output; a .meta.json sidecar is written next to it")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--json", action="store_true", help="print a machine-readable JSON summary")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("tune", help="score the lambda grid and select lambda")
    p.add_argument("--pilot", help="pilot CSV drawn from the candidate alternative")
    p.add_argument("--n", type=int, help="target sample size for --pilot")
    p.add_argument("--data", help="observed sample CSV for k-fold selection")
    p.add_argument("--folds", type=int, default=20, help="number of folds with --data (default 20)")
    p.add_argument("--grid-min", type=float, default=0.1, help="grid start (with --grid-step)")
    p.add_argument("--grid-max", type=float, default=30.0, help="grid end (with --grid-step)")
    p.add_argument("--grid-step", type=float, default=None, help="grid step; default grid is 0.1..30 by 0.1")
    p.add_argument("--normalize", action="store_true", help="project rows onto the sphere")
    p.add_argument("--out", help="CSV output with columns lambda,score")
    _common(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("field", help="export a field on S^2 in Hammer coordinates")
    p.add_argument("--kind", choices=FIELD_KINDS, required=True, help="abs_z, rho_null or rho_alt")
    p.add_argument("--kappa", type=float, default=1.0, help="vMF concentration (0 = uniform)")
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="tuning parameter")
    p.add_argument("--mu", default="0,-1,0", help="vMF mean direction (default 0,-1,0)")
    p.add_argument("--t-ref", dest="t_ref", default="0,0,1", help="reference point for rho fields (default 0,0,1)")
    p.add_argument("--resolution", default="181x91", help="LONxLAT grid size (default 181x91)")
    p.add_argument("--n", type=int, default=1, help="sample size scaling sqrt(n) for abs_z")
    p.add_argument("--M", type=int, default=10000, help="Monte Carlo draws for rho_alt")
    p.add_argument("--out", help="CSV output lon,lat,hammer_x,hammer_y,value")
    _common(p)
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("sample", help="draw a sample from an alternative")
    p.add_argument("--kind", choices=KINDS, required=True, help="distribution kind")
    p.add_argument("--p", type=int, required=True, help="ambient dimension")
    p.add_argument("--n", type=int, required=True, help="number of points")
    p.add_argument("--kappa", type=float, help="concentration")
    p.add_argument("--nu", type=float, help="small-circle location")
    p.add_argument("--q", type=float, help="mixture weight of the -e1 component")
    p.add_argument("--k", type=int, help="number of mixture components")
    p.add_argument("--mu", help="axis, comma-separated")
    p.add_argument("--out", help="CSV output (default stdout)")
    _common(p)
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        sys.stderr.write(f"steinunif: {exc.filename}: no such file\n")
        return EX_NOINPUT
    except CSVFormatError as exc:
        sys.stderr.write(f"steinunif: {exc}\n")
        return EX_DATAERR
    except (UsageError, DomainError) as exc:
        sys.stderr.write(f"steinunif: {exc}\n")
        return EX_USAGE
    except json.JSONDecodeError as exc:
        sys.stderr.write(f"steinunif: invalid JSON config: {exc}\n")
        return EX_DATAERR


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
