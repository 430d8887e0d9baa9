"""Command-line entry point: ``patree <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 numeric failure, 3 I/O error.
Results go to stdout unless ``--out PREFIX`` is given, in which case each
subcommand writes ``PREFIX.<part>.<ext>`` files.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from pathlib import Path

from . import __version__
from .analytic import pi_table
from .errors import InvalidWeight, PATreeError
from .simulate import census, run_seed, simulate_tree, to_json_line
from .stats import (
    compare_ancestors, compare_degree, compare_subtrees, gamma_theta_check, simulate_runs,
)
from .weightfn import WeightFunction, degree_dist, solve_malthus

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"count must be >= 1, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {v}")
    return v


def _tol(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tol must be a real number, got {text!r}") from None
    if not 0 < v <= 1e-2:
        raise argparse.ArgumentTypeError(f"tol must lie in (0, 1e-2], got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return v


def _weight(text: str) -> WeightFunction:
    try:
        return WeightFunction.from_spec(text)
    except InvalidWeight as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _census_spec(text: str) -> dict:
    """``degrees,subtrees:S,ancestors:k1,k2`` -> settings dict."""
    out = {"degrees": False, "subtrees": None, "ancestors": ()}
    parts = text.split(",")
    i = 0
    while i < len(parts):
        p = parts[i]
        if p == "degrees":
            out["degrees"] = True
        elif p.startswith("subtrees:"):
            out["subtrees"] = _positive_int(p.split(":", 1)[1])
        elif p.startswith("ancestors:"):
            ks = [_nonneg_int(p.split(":", 1)[1])]
            while i + 1 < len(parts) and parts[i + 1].isdigit():
                i += 1
                ks.append(_nonneg_int(parts[i]))
            out["ancestors"] = tuple(ks)
        else:
            raise argparse.ArgumentTypeError(f"unknown census item {p!r}")
        i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--weight", type=_weight, required=True,
                        help="weight spec: linear:a,b | const:c | table:w0,...;tail=...")
    common.add_argument("--out", default=None, help="output file prefix (default: stdout)")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit the generation-time header line")

    sim = _Parser(add_help=False)
    sim.add_argument("--vertices", type=_positive_int, required=True)
    sim.add_argument("--runs", type=_positive_int, default=1)
    sim.add_argument("--seed", type=_seed, required=True)

    parser = _Parser(prog="patree", description="Preferential attachment trees: "
                     "limit laws, simulation and comparisons.")
    parser.add_argument("--version", action="version", version=f"patree {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("malthus", parents=[common], help="Malthusian parameter")
    p.add_argument("--tol", type=_tol, default=1e-12)

    p = sub.add_parser("degdist", parents=[common], help="limiting degree law")
    p.add_argument("--kmax", type=_nonneg_int, required=True)

    p = sub.add_parser("treedist", parents=[common], help="limiting subtree law")
    p.add_argument("--max-size", type=_positive_int, required=True)

    p = sub.add_parser("simulate", parents=[common, sim], help="grow trees and take censuses")
    p.add_argument("--continuous", action="store_true", help="record birth times")
    p.add_argument("--census", type=_census_spec, default=None,
                   help="e.g. degrees,subtrees:4,ancestors:1,2")

    p = sub.add_parser("compare", help="simulation against theory")
    csub = p.add_subparsers(dest="what", required=True, parser_class=_Parser)
    c = csub.add_parser("degrees", parents=[common, sim])
    c.add_argument("--kmax", type=_nonneg_int, default=20)
    c = csub.add_parser("subtrees", parents=[common, sim])
    c.add_argument("--max-size", type=_positive_int, default=4)
    c = csub.add_parser("ancestors", parents=[common, sim])
    c.add_argument("--k", type=_nonneg_int, default=1)
    c.add_argument("--max-size", type=_positive_int, default=4)

    p = sub.add_parser("theta", parents=[common], help="growth-constant Gamma check")
    p.add_argument("--vertices", type=_positive_int, required=True)
    p.add_argument("--samples", type=_positive_int, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    return parser


# ---------------------------------------------------------------------------
# output


class _Sink:
    """Collects named parts; writes files under a prefix or concatenates to stdout."""

    def __init__(self, args):
        self.prefix = args.out
        self.stamp = None if args.no_timestamp else (
            _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
        self.parts: list[tuple[str, str]] = []

    def header(self) -> str:
        return f"# generated {self.stamp}\n" if self.stamp else ""

    def add(self, name: str, text: str, stamped: bool = True):
        self.parts.append((name, (self.header() if stamped else "") + text))

    def flush(self, stdout):
        if self.prefix is None:
            for _, text in self.parts:
                stdout.write(text)
            return
        for name, text in self.parts:
            path = Path(f"{self.prefix}.{name}")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def _cmd_malthus(args, sink):
    w = args.weight
    res = solve_malthus(w, tol=args.tol)
    sink.add("txt", f"weight\t{w.to_spec()}\n"
                    f"lambda_star\t{res.lambda_star!r}\n"
                    f"lambda_under\t{res.lambda_under!r}\n"
                    f"residual\t{res.rho_hat_residual!r}\n")


def _cmd_degdist(args, sink):
    w = args.weight
    d = degree_dist(w, args.kmax)
    lines = [f"# weight={w.to_spec()} lambda_star={d.lambda_star!r}\n", "k,p\n"]
    lines += [f"{k},{float(p)!r}\n" for k, p in enumerate(d.masses)]
    lines.append(f"tail,{d.tail_mass!r}\n")
    sink.add("csv", "".join(lines))


def _cmd_treedist(args, sink):
    w = args.weight
    t = pi_table(w, args.max_size)
    sink.add("csv", f"# weight={w.to_spec()}\n" + t.to_csv()
             + f'"OTHER",{max(0.0, 1.0 - t.covered_mass)!r}\n')


def _cmd_simulate(args, sink):
    w = args.weight
    spec = args.census or {"degrees": True, "subtrees": None, "ancestors": ()}
    cap = spec["subtrees"] or 4
    dumps, deg, sub, anc = [], [], [], {k: [] for k in spec["ancestors"]}
    for i in range(args.runs):
        s = run_seed(args.seed, i)
        state = simulate_tree(w, args.vertices, s, args.continuous)
        if args.out is not None:
            dumps.append(to_json_line(state))
        rep = census(state, cap, spec["ancestors"])
        body = lambda csv: csv.split("\n", 1)[1]  # drop per-run header
        if spec["degrees"]:
            deg.append(body(rep.degree_csv()).replace("\n", f",{i},{s}\n"))
        if spec["subtrees"]:
            sub.append(body(rep.subtree_csv()).replace("\n", f",{i},{s}\n"))
        for k in spec["ancestors"]:
            anc[k].append(body(rep.ancestor_csv(k)).replace("\n", f",{i},{s}\n"))
    if dumps:
        sink.add("trees.jsonl", "\n".join(dumps) + "\n", stamped=False)
    meta = f"# weight={w.to_spec()} vertices={args.vertices} seed={args.seed}\n"
    if spec["degrees"]:
        sink.add("degrees.csv", meta + "degree,count,run,run_seed\n" + "".join(deg))
    if spec["subtrees"]:
        sink.add("subtrees.csv", meta + "canonical_code,count,run,run_seed\n" + "".join(sub))
    for k in spec["ancestors"]:
        sink.add(f"ancestors{k}.csv",
                 meta + "canonical_code,mark,count,run,run_seed\n" + "".join(anc[k]))


def _cmd_compare(args, sink):
    w = args.weight
    config = {"weight": w.to_spec(), "vertices": args.vertices, "runs": args.runs,
              "seed": args.seed, "run_seeds": [run_seed(args.seed, i) for i in range(args.runs)],
              "compare": args.what}
    if args.what == "degrees":
        config["kmax"] = args.kmax
        report = compare_degree(w, args.vertices, args.runs, args.seed, kmax=args.kmax)
    elif args.what == "subtrees":
        config["max_size"] = args.max_size
        report = compare_subtrees(w, args.vertices, args.runs, args.seed, args.max_size)
    else:
        config.update(k=args.k, max_size=args.max_size)
        cs = simulate_runs(w, args.vertices, args.runs, args.seed,
                           subtree_cap=args.max_size, ancestor_ks=(args.k,))
        report = compare_ancestors(w, args.vertices, args.runs, args.seed, args.k,
                                   args.max_size, censuses=cs)
        marginal = report.extra["marginal"]
        sink.add("marginal.csv", marginal.to_csv())
    summary = report.summary(**config)
    if args.what == "ancestors":
        summary["marginal"] = marginal.summary()
        del summary["marginal"]["config"]
    if sink.stamp:
        summary["generated"] = sink.stamp
    sink.add("csv", report.to_csv())
    sink.add("json", _json(summary), stamped=False)


def _cmd_theta(args, sink):
    w = args.weight
    a, b, exact = w.tail_line()
    if not (w.is_affine and exact and a > 0):
        raise UsageError("theta: --weight must be linear:a,b with a > 0")
    chk = gamma_theta_check(a, b, args.vertices, args.samples, args.seed)
    out = {"weight": w.to_spec(), "vertices": args.vertices, "samples": args.samples,
           "seed": args.seed, "gamma_shape": chk.shape, "gamma_rate": chk.shape,
           "ks_statistic": chk.ks_statistic, "ks_p_value": chk.p_value,
           "sample_mean": chk.sample_mean, "stderr": chk.stderr}
    if sink.stamp:
        out["generated"] = sink.stamp
    sink.add("json", _json(out), stamped=False)


_COMMANDS = {"malthus": _cmd_malthus, "degdist": _cmd_degdist, "treedist": _cmd_treedist,
             "simulate": _cmd_simulate, "compare": _cmd_compare, "theta": _cmd_theta}


def run_cli(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        sink = _Sink(args)
        _COMMANDS[args.command](args, sink)
        sink.flush(stdout)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=stderr)
        return EXIT_IO
    except (PATreeError, ArithmeticError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())
