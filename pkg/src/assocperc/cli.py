"""Command-line interface.

Every subcommand emits one JSON document
``{command, params, results, seed, version, wall_time_ms}`` (or, with
``--format csv``, the ``results`` rows as CSV) on stdout or to ``--out``.
``--no-timing`` writes ``wall_time_ms`` as null so reruns are byte-identical.

Exit codes: 0 success, 1 a verification suite failed, 2 invalid
parameters, 3 a size guard was exceeded, 4 an I/O error.

Table files for ``verify --table`` look like::

    # 2-edge path
    edges: a b
    dist: 0 1 0
    00 0.25
    01 0.25
    10 0.25
    11 0.25

``dist: i j d`` sets the distance between edges ``i`` and ``j`` (0-based;
distinct pairs left out are infinitely far apart).  In each configuration
line, character ``k`` is the status of edge ``k``; missing configurations
have probability 0, and the listed probabilities must sum to 1 within 1e-9.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
import time
from pathlib import Path

from . import __version__
from .experiments import (branching_experiment, fig5_rows, fig6_rows, mc_survival, tree_moments,
                          verification_suites, write_rows, SUITES)
from .geometry import GuardError
from .oracle import (check_k_independence, check_lemma1_condition_ii, check_positive_association,
                     parse_joint_table)
from .renorm import iterate
from .transfer import exact_survival

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_GUARD, EXIT_IO = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def parse_sweep(text: str) -> list[float]:
    """``start:stop:step`` with ``stop`` included when hit up to rounding."""
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"--p-sweep expects start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise UsageError(f"--p-sweep needs step > 0 and stop >= start, got {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(count)]


def _p_values(args) -> list[float]:
    if args.p_sweep is not None:
        return parse_sweep(args.p_sweep)
    if args.p is None:
        raise UsageError("give --p or --p-sweep")
    return [args.p]


def _cmd_exact(args):
    rows = [{"w": args.w, "ell": args.ell, "p": p, "q": exact_survival(args.w, args.ell, p)}
            for p in _p_values(args)]
    return rows, 0


def _cmd_mc(args):
    rows = [mc_survival(args.w, args.ell, p, args.trials, args.seed, args.confidence, args.threads).as_dict()
            for p in _p_values(args)]
    return rows, 0


def _cmd_renorm(args):
    rows = []
    for p in _p_values(args):
        traj = iterate(p, args.w, args.max_iters, args.eps)
        for r in traj.as_rows() or [{"n": None, "p_n": p, "q_long": None, "q_square": None, "p_next": None}]:
            rows.append({"w": args.w, "p0": p, **r, "verdict": traj.verdict})
    return rows, 0


def _cmd_branching(args):
    rows = []
    for p in _p_values(args):
        for r in branching_experiment(args.n, p, args.i_max, args.trials, args.seed, args.threads):
            rows.append({"n": args.n, "p": p, **r})
    return rows, 0


def _cmd_tree(args):
    rows = [tree_moments(args.d, p, args.depth, args.trials, args.seed, args.kernel, args.threads).as_dict()
            for p in _p_values(args)]
    return rows, 0


def _cmd_verify(args):
    if args.table is None:
        rows = verification_suites(args.suite)
        return rows, 0 if all(r["passed"] for r in rows) else EXIT_FAILED
    try:
        text = Path(args.table).read_text()
    except OSError as exc:
        raise OSError(f"cannot read table {args.table}: {exc.strerror}") from exc
    table = parse_joint_table(text)
    rows = [{"check": "positive_association", "k": None, "result": check_positive_association(table)},
            {"check": "k_independence", "k": args.k, "result": check_k_independence(table, None, args.k)},
            {"check": "closure_correlation", "k": args.k,
             "result": check_lemma1_condition_ii(table, None, args.k)}]
    return rows, 0


def _cmd_reproduce(args):
    if args.table == "fig5":
        rows = fig5_rows(args.w or 20)
    else:
        rows = fig6_rows(args.w or 50, trials=args.trials, seed=args.seed,
                         confidence=args.confidence, threads=args.threads)
    return rows, 0


COMMANDS = {
    "exact-survival": _cmd_exact,
    "mc-survival": _cmd_mc,
    "renorm": _cmd_renorm,
    "branching": _cmd_branching,
    "tree-moments": _cmd_tree,
    "verify": _cmd_verify,
    "reproduce": _cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=float, help="parameter value")
    common.add_argument("--p-sweep", metavar="START:STOP:STEP", help="grid of parameter values")
    common.add_argument("--trials", type=int, default=10**5, help="Monte Carlo trials")
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--confidence", type=float, default=0.99, help="interval confidence level")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int, default=1, help="worker threads for trial batches")
    common.add_argument("--no-timing", action="store_true", help="write wall_time_ms as null")

    parser = argparse.ArgumentParser(prog="assocperc", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def box(sp, w=None, ell=0):
        sp.add_argument("--w", type=int, default=w, required=w is None, help="box half-width")
        sp.add_argument("--ell", type=int, default=ell, help="box length")

    box(sub.add_parser("exact-survival", parents=[common], help="transfer-matrix survival probability"))
    box(sub.add_parser("mc-survival", parents=[common], help="Monte Carlo survival with exact CI"))
    sp = sub.add_parser("renorm", parents=[common], help="iterate the renormalisation map")
    sp.add_argument("--w", type=int, default=20)
    sp.add_argument("--max-iters", type=int, default=50)
    sp.add_argument("--eps", type=float, default=1e-3)
    sp = sub.add_parser("branching", parents=[common], help="subcritical branching model on oriented Z^n")
    sp.add_argument("--n", type=int, required=True, help="dimension")
    sp.add_argument("--i-max", type=int, default=4, help="last even level is 2 * i_max")
    sp = sub.add_parser("tree-moments", parents=[common], help="moments of the normalised tree count")
    sp.add_argument("--d", type=int, default=2, help="arity")
    sp.add_argument("--depth", type=int, default=10)
    sp.add_argument("--kernel", choices=("product", "sibling_block"), default="product")
    sp = sub.add_parser("verify", parents=[common], help="exhaustive checks on tiny instances")
    sp.add_argument("--table", help="joint table file; without it the built-in suites run")
    sp.add_argument("--k", type=int, default=1, help="independence range for --table")
    sp.add_argument("--suite", action="append", choices=sorted(SUITES), help="restrict built-in suites")
    sp = sub.add_parser("reproduce", parents=[common], help="recompute a survival table")
    sp.add_argument("--table", choices=("fig5", "fig6"), required=True)
    sp.add_argument("--w", type=int, default=None, help="override the table's box width")
    return parser


def _params(args) -> dict:
    skip = {"command", "out", "format", "no_timing", "threads"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def render(command: str, params: dict, rows: list[dict], seed, wall_ms, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        if rows:
            import csv
            writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        return buf.getvalue()
    doc = {"command": command, "params": params, "results": rows, "seed": seed,
           "version": __version__, "wall_time_ms": wall_ms}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(args, rows, wall_ms):
    params = _params(args)
    text = render(args.command, params, rows, args.seed, wall_ms, args.format)
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    try:
        out.write_text(text)
        if args.command == "reproduce":
            # tables are always written in both formats
            other = "csv" if args.format == "json" else "json"
            sibling = out.with_suffix("." + other)
            if sibling != out:
                sibling.write_text(render(args.command, params, rows, args.seed, wall_ms, other))
    except OSError as exc:
        raise OSError(f"cannot write {exc.filename or out}: {exc.strerror}") from exc


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    started = time.perf_counter()
    try:
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        rows, code = COMMANDS[args.command](args)
        wall = None if args.no_timing else round((time.perf_counter() - started) * 1000.0, 3)
        _emit(args, rows, wall)
    except GuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
