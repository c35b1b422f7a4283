"""Command line front end.

Subcommands: regress (fit the tuning-free regression from CSV files),
denoise (matrix denoising), simulate (scenario suites vs CV-lasso), and
bounds (print the theoretical rate decomposition). Exit codes: 0 success,
2 input error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from tunefree.estimators import (
    GaussianSampler,
    matrix_fit,
    matrix_risk_bound,
    regression_fit,
    regression_risk_bound,
)
from tunefree.sim import Scenario, TABLE1_ROWS, run_scenario
from tunefree.solvers import SolverError, SolverSettings, column_space_projection


class InputError(Exception):
    pass


def read_csv_matrix(path):
    """Rectangular numeric CSV; a single non-numeric first row is a header."""
    rows = []
    try:
        with open(path) as fh:
            lines = [line.rstrip("\n") for line in fh if line.strip()]
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if not lines:
        raise InputError(f"{path}: empty file")
    start = 0
    try:
        [float(cell) for cell in lines[0].split(",")]
    except ValueError:
        start = 1
    width = None
    for i, line in enumerate(lines[start:], start=start + 1):
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise InputError(f"{path}: row {i} has {len(cells)} fields, expected {width}")
        parsed = []
        for j, cell in enumerate(cells, start=1):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise InputError(f"{path}: row {i}, column {j}: not a number: {cell!r}")
        rows.append(parsed)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows)


def write_csv_matrix(path, M):
    with open(path, "w") as fh:
        for row in np.atleast_2d(M):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_scenario_file(path):
    """Key-value scenario spec: n, p, sigma, replications, seed, beta0.

    beta0 is a whitespace-separated list of index:value pairs; '=' between
    key and value is optional.
    """
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from exc
    for i, raw in enumerate(lines, start=1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, rest = line.partition("=")
        else:
            key, _, rest = line.partition(" ")
        values[key.strip()] = rest.strip()
    try:
        beta0 = []
        for pair in values.get("beta0", "").split():
            idx, _, val = pair.partition(":")
            beta0.append((int(idx), float(val)))
        return Scenario(
            n=int(values["n"]),
            p=int(values["p"]),
            sigma=float(values["sigma"]),
            beta0=tuple(beta0),
            replications=int(values.get("replications", 50)),
            base_seed=int(values.get("seed", 0)),
        )
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path}: bad scenario spec: {exc}") from exc


def _settings(args):
    if getattr(args, "tol", None) is None:
        return SolverSettings()
    return SolverSettings(
        primal_tolerance=args.tol,
        dual_tolerance=args.tol,
        budget_root_tolerance=args.tol,
    )


def _emit(text, output):
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jsonl(records):
    return "\n".join(json.dumps(r, sort_keys=True) for r in records) + "\n"


def standardize_design(X):
    """Center and scale columns to unit Euclidean norm; constant columns are
    left untouched (centering would zero them out)."""
    X = X.copy()
    scales = np.ones(X.shape[1])
    means = np.zeros(X.shape[1])
    for j in range(X.shape[1]):
        col = X[:, j]
        if np.ptp(col) == 0:
            continue
        means[j] = col.mean()
        centered = col - means[j]
        scales[j] = np.linalg.norm(centered)
        X[:, j] = centered / scales[j]
    return X, means, scales


def cmd_regress(args):
    X = read_csv_matrix(args.design)
    y = read_csv_matrix(args.response)
    if y.shape[1] != 1:
        raise InputError(f"{args.response}: expected a single column, got {y.shape[1]}")
    y = y[:, 0]
    if y.size != X.shape[0]:
        raise InputError(
            f"dimension mismatch: design has {X.shape[0]} rows, response has {y.size}"
        )
    meta = {"kind": "meta", "command": "regress", "seed": args.seed,
            "standardized": args.standardize, "n": X.shape[0], "p": X.shape[1]}
    if args.standardize:
        X_fit, means, scales = standardize_design(X)
        meta["column_means"] = means.tolist()
        meta["column_scales"] = scales.tolist()
    else:
        X_fit = X
    fit = regression_fit(X_fit, y, GaussianSampler(args.seed), _settings(args))
    # The budget constrains the in-span residual, so diagnose against the
    # projection of y onto the column space rather than y itself.
    y_prime, _ = column_space_projection(X_fit, y)
    resid = y_prime - fit.fitted
    records = [
        meta,
        {"kind": "coefficients", "beta_hat": fit.beta_hat.tolist()},
        {
            "kind": "diagnostics",
            "sigma_hat": fit.sigma_hat,
            "gamma": fit.gamma,
            "m1": fit.m1,
            "m2": fit.m2,
            "rank_k": fit.rank_k,
            "support": fit.support.tolist(),
            "residual_sq": float(resid @ resid),
            "budget": fit.rank_k * fit.sigma_hat**2,
        },
    ]
    _emit(_jsonl(records), args.output)
    return 0


def cmd_denoise(args):
    Y = read_csv_matrix(args.matrix)
    fit = matrix_fit(Y, GaussianSampler(args.seed))
    s = np.linalg.svd(Y, compute_uv=False)
    records = [
        {"kind": "meta", "command": "denoise", "seed": args.seed,
         "rows": Y.shape[0], "cols": Y.shape[1]},
        {
            "kind": "diagnostics",
            "sigma_hat": fit.sigma_hat,
            "theta": fit.theta,
            "nuclear_y": fit.nuclear_y,
            "nuclear_z": fit.nuclear_z,
            "singular_values": s.tolist(),
            "shrunk_singular_values": np.maximum(s - fit.theta, 0.0).tolist(),
        },
    ]
    _emit(_jsonl(records), args.output)
    denoised_path = args.denoised or (
        (args.output + ".mhat.csv") if args.output else "mhat.csv"
    )
    write_csv_matrix(denoised_path, fit.m_hat)
    return 0


def cmd_simulate(args):
    if args.scenario:
        scenarios = [read_scenario_file(args.scenario)]
    elif args.preset == "table1":
        scenarios = list(TABLE1_ROWS)
    else:
        raise InputError("provide --scenario FILE or --preset table1")
    if args.rows:
        try:
            picks = [int(tok) for tok in args.rows.split(",")]
            scenarios = [scenarios[i - 1] for i in picks]
        except (ValueError, IndexError) as exc:
            raise InputError(f"bad --rows selection: {exc}") from exc
    out = []
    for sc in scenarios:
        sc = replace(sc, base_seed=args.seed if args.seed is not None else sc.base_seed)
        if args.replications is not None:
            if args.replications < 1:
                raise InputError("--replications must be >= 1")
            sc = replace(sc, replications=args.replications)
        report = run_scenario(sc, settings=_settings(args), folds=args.folds)
        if args.format == "csv":
            out.append(report.to_csv())
        elif args.format == "pretty-table":
            out.append(report.to_table())
        else:
            out.append(report.to_json_lines())
    _emit("".join(out), args.output)
    return 0


def cmd_bounds(args):
    if args.l is not None or args.m is not None:
        if args.l is None or args.m is None or args.nuclear is None:
            raise InputError("matrix bounds need --l, --m, --nuclear")
        rb = matrix_risk_bound(args.l, args.m, args.sigma, args.nuclear,
                               sampler=GaussianSampler(0, stream=2**32))
        head = {"kind": "matrix_bound", "s": rb.s}
    else:
        if args.n is None or args.p is None or args.beta0_l1 is None or args.gamma is None:
            raise InputError("regression bounds need --n, --p, --beta0-l1, --gamma")
        rb = regression_risk_bound(args.n, args.p, args.sigma, args.beta0_l1, args.gamma)
        head = {"kind": "regression_bound", "r": rb.r}
    head.update(
        {
            "a": rb.a,
            "m2_bound": rb.m2_bound,
            "m4_bound": rb.m4_bound,
            "bound_value": rb.bound_value,
            "terms": rb.terms,
        }
    )
    _emit(json.dumps(head, sort_keys=True) + "\n", args.output)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="tunefree")
    sub = parser.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("regress", help="tuning-free sparse regression from CSV files")
    pr.add_argument("design")
    pr.add_argument("response")
    pr.add_argument("--seed", type=int, required=True)
    pr.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True)
    pr.add_argument("--tol", type=float)
    pr.add_argument("--output")
    pr.set_defaults(func=cmd_regress)

    pd = sub.add_parser("denoise", help="tuning-free matrix denoising from a CSV file")
    pd.add_argument("matrix")
    pd.add_argument("--seed", type=int, required=True)
    pd.add_argument("--output")
    pd.add_argument("--denoised", help="path for the denoised matrix CSV")
    pd.set_defaults(func=cmd_denoise)

    ps = sub.add_parser("simulate", help="run simulation scenarios")
    ps.add_argument("--scenario", help="scenario spec file")
    ps.add_argument("--preset", choices=["table1"])
    ps.add_argument("--rows", help="1-based row selection, e.g. 1,5")
    ps.add_argument("--replications", type=int)
    ps.add_argument("--folds", type=int, default=10)
    ps.add_argument("--seed", type=int)
    ps.add_argument("--tol", type=float)
    ps.add_argument("--format", choices=["json-lines", "csv", "pretty-table"],
                    default="json-lines")
    ps.add_argument("--output")
    ps.set_defaults(func=cmd_simulate)

    pb = sub.add_parser("bounds", help="print risk-bound decompositions")
    pb.add_argument("--sigma", type=float, required=True)
    pb.add_argument("--n", type=int)
    pb.add_argument("--p", type=int)
    pb.add_argument("--beta0-l1", type=float, dest="beta0_l1")
    pb.add_argument("--gamma", type=float)
    pb.add_argument("--l", type=int)
    pb.add_argument("--m", type=int)
    pb.add_argument("--nuclear", type=float)
    pb.add_argument("--output")
    pb.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
