"""Batch command-line driver.

Subcommands ``treelet``, ``eiv-sweep``, ``ident-demo`` and ``hier`` each write
their outputs plus a ``manifest.json`` into ``--out``. Passing that manifest
back with ``--config`` reproduces the run byte for byte.

Exit codes: 0 success, 1 failed check (``ident-demo``), 2 usage or input error.
"""
import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .eiv import EivSpec, default_c_grid, dumps_report, sweep_cp, sweep_csv, sweep_report
from .errors import DegenerateVarianceError, TreeletsError
from .factor import example2_pair, population_covariance
from .hier import SelectorConfig, run_hierarchical
from .linalg import sample_covariance
from .treelet import build_treelet, trees_match


class CsvParseError(TreeletsError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_csv(path):
    """Header row plus numeric rows; returns ``(names, data)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvParseError(1, "empty file")
    header = [h.strip() for h in rows[0]]
    if all(_is_number(h) for h in header):
        raise CsvParseError(1, "missing header row")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise CsvParseError(lineno, f"expected {len(header)} cells, got {len(row)}")
        try:
            values = [float(x) for x in row]
        except ValueError:
            raise CsvParseError(lineno, "non-numeric cell") from None
        if not all(math.isfinite(v) for v in values):
            raise CsvParseError(lineno, "non-finite cell")
        data.append(values)
    if len(data) < 2:
        raise CsvParseError(len(rows), "need at least 2 data rows")
    return header, np.array(data)


def _fmt(v):
    return format(float(v), ".17g")


def _write(out, name, text):
    with open(os.path.join(out, name), "w", newline="") as fh:
        fh.write(text)


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _manifest(args):
    params = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out", "func")}
    seed = params.pop("seed")
    return {"command": args.command, "params": params, "seed": seed, "version": __version__}


def cmd_treelet(args):
    names, X = read_csv(args.input)
    try:
        model = build_treelet(
            sample_covariance(X),
            max_level=args.max_level,
            pair_score=args.score,
            tie_tolerance=args.tie_tolerance,
        )
    except DegenerateVarianceError as exc:
        raise TreeletsError(f"degenerate column {names[exc.index]!r}") from exc
    outputs = {"model.json": _dumps(model.to_dict())}
    if args.basis_level is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        for row in model.basis(args.basis_level):
            w.writerow([_fmt(v) for v in row])
        outputs[f"basis_level_{args.basis_level}.csv"] = buf.getvalue()
    return 0, outputs


def cmd_eiv_sweep(args):
    grid = default_c_grid(args.p) if args.c_grid is None else args.c_grid
    spec = EivSpec(args.p, args.gamma, 0.0, (args.noise_var,) * args.p)
    rows = sweep_cp(spec, grid, args.n_train, args.n_test, args.reps, args.seed,
                    q=args.q, K_features=args.k_features)
    for c in grid:
        cells = [r for r in rows if r.c == float(c)]
        parts = [f"{r.method}{'[' + r.mode + ']' if r.mode else ''}={r.mse_mean:.4f}+-{r.mse_se:.4f}"
                 for r in cells]
        print(f"c={float(c):.6g} " + " ".join(parts))
    report = sweep_report(rows, spec, grid, args.n_train, args.n_test, args.reps, args.seed,
                          args.q, args.k_features)
    return 0, {"sweep.csv": sweep_csv(rows), "report.json": dumps_report(report) + "\n"}


def cmd_ident_demo(args):
    p = args.p
    v1 = np.zeros(p)
    v2 = np.zeros(p)
    v1[: p // 2] = 1.0
    v2[p // 2:] = 1.0
    rng = np.random.default_rng(args.seed)
    taus = rng.uniform(0.5, 2.0, 3)
    spec_a, spec_b = example2_pair(v1, v2, args.c1, args.c2, taus, args.sigma)
    cov_a = population_covariance(spec_a)
    cov_b = population_covariance(spec_b)
    if args.perturb:
        loadings = spec_b.loadings.copy()
        loadings[0, 0] += args.perturb
        spec_b = type(spec_b)(loadings, spec_b.factor_dists, spec_b.noise_sigma)
        cov_b = population_covariance(spec_b)
    diff = float(np.max(np.abs(cov_a - cov_b)))
    tree_a, tree_b = build_treelet(cov_a), build_treelet(cov_b)
    same = trees_match(tree_a, tree_b)
    ok = diff <= 1e-12 and same
    report = {
        "spec_a": spec_a.to_dict(),
        "spec_b": spec_b.to_dict(),
        "factor_vars": taus.tolist(),
        "max_cov_diff": diff,
        "trees_identical": same,
        "tree_a": tree_a.to_dict(),
        "tree_b": tree_b.to_dict(),
        "pass": ok,
    }
    print(f"max |cov_a - cov_b| = {diff:.3e}; trees identical: {same}")
    return (0 if ok else 1), {"report.json": _dumps(report)}


def cmd_hier(args):
    names, data = read_csv(args.input)
    if args.y_col not in names:
        raise TreeletsError(f"response column {args.y_col!r} not in header")
    yi = names.index(args.y_col)
    y = data[:, yi]
    X = np.delete(data, yi, axis=1)
    config = SelectorConfig(
        K=args.K,
        exponent=args.K_exponent,
        selector=args.selector,
        max_generations=args.max_gen,
        patience=args.patience,
        min_delta=args.min_delta,
        holdout_fraction=args.holdout,
        pool=args.pool,
    )
    result = run_hierarchical(X, y, args.op, config, args.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["expression", "coefficient"])
    w.writerow(["(intercept)", _fmt(result.intercept)])
    for expr, coef in zip(result.expressions, result.coef):
        w.writerow([expr, _fmt(coef)])
    trace = result.trace_dict()
    trace["columns"] = [n for n in names if n != args.y_col]
    return 0, {"trace.json": _dumps(trace), "selected.csv": buf.getvalue()}


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="treelets", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out")
        p.add_argument("--config", help="manifest.json of an earlier run")

    p = sub.add_parser("treelet", help="build a treelet tree from a CSV of samples")
    common(p)
    p.add_argument("input")
    p.add_argument("--max-level", type=int)
    p.add_argument("--score", choices=("correlation", "covariance"), default="correlation")
    p.add_argument("--tie-tolerance", type=float, default=1e-12)
    p.add_argument("--basis-level", type=int)
    p.set_defaults(func=cmd_treelet)

    p = sub.add_parser("eiv-sweep", help="errors-in-variables benchmark over a grid of c")
    common(p)
    p.add_argument("--p", type=int, default=50)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--c-grid", type=_float_list)
    p.add_argument("--n-train", type=int, default=200)
    p.add_argument("--n-test", type=int, default=2000)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--k-features", type=int, default=1)
    p.add_argument("--noise-var", type=float, default=1.0)
    p.set_defaults(func=cmd_eiv_sweep)

    p = sub.add_parser("ident-demo", help="two factor models with one covariance")
    common(p)
    p.add_argument("--p", type=int, default=6)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_ident_demo)

    p = sub.add_parser("hier", help="hierarchical feature construction and selection")
    common(p)
    p.add_argument("input")
    p.add_argument("--y-col", default="y")
    p.add_argument("--op", choices=("product", "pair_pca"), default="product")
    p.add_argument("--K", type=int)
    p.add_argument("--K-exponent", type=float, default=0.5)
    p.add_argument("--max-gen", type=int, default=5)
    p.add_argument("--selector", choices=("marginal_correlation", "forward_stepwise"),
                   default="marginal_correlation")
    p.add_argument("--patience", type=int, default=2)
    p.add_argument("--min-delta", type=float, default=1e-2)
    p.add_argument("--holdout", type=float, default=0.2)
    p.add_argument("--pool", choices=("union", "latest"), default="union")
    p.set_defaults(func=cmd_hier)
    return parser, sub


def _parse(argv):
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                manifest = json.load(fh)
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read config: {exc}")
        if manifest.get("command") != args.command:
            parser.error(f"config is for {manifest.get('command')!r}, not {args.command!r}")
        sub.choices[args.command].set_defaults(**manifest.get("params", {}), seed=manifest.get("seed", 0))
        # command-line flags still override the manifest
        args = parser.parse_args(argv)
    if args.command == "eiv-sweep":
        if args.reps < 2:
            parser.error("--reps must be at least 2 (standard error undefined otherwise)")
        if args.c_grid is not None and not args.c_grid:
            parser.error("--c-grid is empty")
    if args.command == "ident-demo" and args.p < 2:
        parser.error("--p must be at least 2")
    return args


def main(argv=None):
    args = _parse(argv)
    try:
        status, outputs = args.func(args)
    except TreeletsError as exc:
        print(f"treelets {args.command}: error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    outputs["manifest.json"] = _dumps(_manifest(args))
    for name in sorted(outputs):
        _write(args.out, name, outputs[name])
    return status


if __name__ == "__main__":
    sys.exit(main())
