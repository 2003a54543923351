"""Command-line front end: run catalogue examples, convergence studies,
eigenvalue problems and limit cycles, with CSV/JSON output.

Exit codes: 0 success, 1 solver failure (a JSON error record is still
written when an output path is given), 2 unknown example or bad usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import examples
from .examples import ConvergenceRecord, RunResult

SCHEMA_VERSION = 1


def _fmt(x) -> str:
    return repr(float(x))


def write_solution_csv(res: RunResult, path) -> None:
    """Columns: panel, t, then one value column per component."""
    vals = np.atleast_2d(np.asarray(res.values))
    if vals.shape[0] != len(res.t):
        vals = vals.T
    ncomp = vals.shape[1] if vals.size else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["panel", "t"] + [f"y{j + 1}" for j in range(ncomp)])
        for p, t, row in zip(res.panel, res.t, vals):
            writer.writerow([int(p), _fmt(t)] + [_fmt(v) for v in row])


def summary_dict(res: RunResult) -> dict:
    out = {
        "schema": SCHEMA_VERSION,
        "example": res.name,
        "category": res.category,
        "n_total": int(res.n_total),
    }
    if res.error is not None:
        out["error"] = res.error
        out["rel_error"] = res.rel_error
    if res.cond is not None:
        out["cond"] = res.cond
    if res.newton is not None:
        out["newton"] = {
            "converged": bool(res.newton.converged),
            "iterations": [[r, d] for r, d in res.newton.iterations],
            "final_residual": res.newton.final_residual,
            "final_jacobian_cond": res.newton.final_jacobian_cond,
        }
    for key, val in res.extras.items():
        out[key] = val
    return out


def write_summary_json(payload: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_convergence_csv(records: list[ConvergenceRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "error", "cond"])
        for rec in records:
            writer.writerow([rec.n, _fmt(rec.error), _fmt(rec.cond)])


def _parse_sizes(text):
    return tuple(int(x) for x in text.split(",")) if text else None


def _out_paths(base: str | None, name: str):
    stem = base if base else name
    return f"{stem}.csv", f"{stem}.json"


def _run_and_emit(args, opts) -> int:
    try:
        spec = examples.get(args.name)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return 2
    csv_path, json_path = _out_paths(args.out, spec.name)
    try:
        res = spec.run(n=args.n, sizes=_parse_sizes(args.sizes), **opts)
    except Exception as exc:  # solver failure: emit a machine-readable record
        payload = {"schema": SCHEMA_VERSION, "example": args.name,
                   "status": "error", "message": str(exc)}
        write_summary_json(payload, json_path)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    payload = summary_dict(res)
    payload["status"] = "ok"
    if args.format in ("csv", "both"):
        write_solution_csv(res, csv_path)
    if args.format in ("json", "both"):
        write_summary_json(payload, json_path)
    brief = {k: v for k, v in payload.items()
             if k in ("example", "n_total", "error", "cond", "period",
                      "eigenvalues", "parameters")}
    print(json.dumps(brief, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ddecolloc",
        description="spectral collocation for delay and functional "
                    "differential equations")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("name")
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--sizes", type=str, default=None,
                       help="comma-separated per-panel sizes, e.g. 10,11,12,13")
        p.add_argument("--out", type=str, default=None,
                       help="output basename (writes <out>.csv / <out>.json)")
        p.add_argument("--format", choices=("csv", "json", "both"),
                       default="both")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--max-iter", type=int, default=None)

    p_solve = sub.add_parser("solve", help="run one example")
    add_common(p_solve)

    p_eig = sub.add_parser("eig", help="run an eigenvalue example")
    add_common(p_eig)
    p_eig.add_argument("--shift", type=float, default=0.0)

    p_cycle = sub.add_parser("cycle", help="compute a limit cycle")
    add_common(p_cycle)
    p_cycle.add_argument("--period-guess", type=float, default=None)

    p_conv = sub.add_parser("converge", help="error vs n study")
    p_conv.add_argument("name")
    p_conv.add_argument("--n-min", type=int, required=True)
    p_conv.add_argument("--n-max", type=int, required=True)
    p_conv.add_argument("--step", type=int, default=2)
    p_conv.add_argument("--out", type=str, default=None)

    sub.add_parser("list", help="list registered examples")

    args = parser.parse_args(argv)

    if args.command == "list":
        for name in examples.names():
            spec = examples.get(name)
            print(f"{name:24s} [{spec.category}] {spec.summary}")
        return 0

    if args.command == "converge":
        try:
            records = examples.converge(args.name, args.n_min, args.n_max,
                                        args.step)
        except KeyError as exc:
            print(exc.args[0], file=sys.stderr)
            return 2
        except Exception as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        path = (args.out or args.name) + "_convergence.csv"
        write_convergence_csv(records, path)
        for rec in records:
            print(f"n={rec.n:4d}  error={rec.error:.3e}  cond={rec.cond:.3e}")
        return 0

    opts = {}
    if args.tol is not None:
        opts["tol"] = args.tol
    if args.max_iter is not None:
        opts["max_iter"] = args.max_iter
    if args.command == "eig":
        opts["shift"] = args.shift
    if args.command == "cycle" and args.period_guess is not None:
        opts["period_guess"] = args.period_guess
    return _run_and_emit(args, opts)


if __name__ == "__main__":
    sys.exit(main())
