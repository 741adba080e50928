"""Command line front end: ``adkrylov {list,fetch,run,profile,plot}``.

Exit codes: 0 success, 2 usage error, 3 fetch error, 4 parse error,
5 run finished but some matrices could not be loaded.
"""

from __future__ import annotations

import argparse
import glob
import logging
import os
import sys
from pathlib import Path

from . import manifest
from .autodiff import manufacture_problem, problem_seed
from .errors import (
    CsvFormatError,
    FetchError,
    MatrixMarketError,
    UsageError,
)
from .experiment import (
    STRATEGIES,
    TRACE_HEADER,
    data_profile,
    read_trace_csv,
    run_grid,
    write_profile_csv,
    write_trace_csv,
)
from .fetch import fetch_matrix
from .plot import plot_script
from .solvers import SOLVERS, SolverConfig
from .sparse import read_matrix_market

log = logging.getLogger("adkrylov")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FETCH = 3
EXIT_PARSE = 4
EXIT_PARTIAL = 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _fetch_args(p):
    p.add_argument("--cache-dir", help="matrix cache (default $ADKRYLOV_CACHE or ~/.cache/adkrylov)")
    p.add_argument("--base-url", help="SuiteSparse mirror (default $ADKRYLOV_BASE_URL or the public site)")


def _selection_args(p):
    p.add_argument("--matrix", action="append", default=[], metavar="NAME",
                   help="manifest matrix name (repeatable)")
    p.add_argument("--all", action="store_true", help="every manifest matrix within --max-dim")
    p.add_argument("--max-dim", type=int, default=manifest.DEFAULT_MAX_DIM,
                   help="size filter for --all; 0 disables it (default 1000)")


def build_parser():
    parser = _Parser(prog="adkrylov", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("list", help="print the bundled matrix manifest")
    p.add_argument("--max-dim", type=int, default=0, help="only matrices up to this size")

    p = sub.add_parser("fetch", help="download matrices into the cache")
    _selection_args(p)
    p.add_argument("--group", default="Bai", help="group for names not in the manifest")
    p.add_argument("--force", action="store_true", help="download again even if cached")
    _fetch_args(p)

    p = sub.add_parser("run", help="run the solver x strategy grid and write trace CSVs")
    _selection_args(p)
    p.add_argument("--mtx", action="append", default=[], metavar="PATH",
                   help="local Matrix Market file (repeatable; name = file stem)")
    p.add_argument("--group", default="Bai")
    p.add_argument("--solver", action="append", choices=SOLVERS)
    p.add_argument("--strategy", action="append", choices=STRATEGIES)
    p.add_argument("--max-iterations", type=int, default=2000)
    p.add_argument("--restart", type=int, default=10, help="GMRES restart length")
    p.add_argument("--tol", type=float, default=0.0,
                   help="relative residual tolerance; 0 runs the full budget")
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="base seed for manufactured solutions")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory for trace CSVs")
    _fetch_args(p)

    p = sub.add_parser("profile", help="data profile from a directory of trace CSVs")
    p.add_argument("trace_dir")
    p.add_argument("--tau", type=float, default=1e-2)
    p.add_argument("--which", choices=("x", "dx", "auto"), default="auto",
                   help="error measured: auto uses x for original and dx otherwise")
    p.add_argument("--max-budget", type=int, default=2000)
    p.add_argument("--out", required=True)

    p = sub.add_parser("plot", help="emit a gnuplot script for trace or profile CSVs")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", help="script path (default stdout)")
    p.add_argument("--image", default="figure.png", help="image the script writes")
    return parser


def _selected_entries(args):
    max_dim = args.max_dim or None
    if args.all:
        return manifest.select(None, max_dim)
    entries = []
    for name in args.matrix:
        entry = manifest.lookup(name)
        if entry is None:
            entry = manifest.MatrixManifestEntry(0, name, args.group, 0, 0, 0, "", 0)
        entries.append(entry)
    return entries


def cmd_list(args):
    entries = manifest.select(None, args.max_dim or None)
    print(f"{'id':>5}  {'name':<14}{'group':<6}{'rows':>7}{'cols':>7}{'nonzeros':>10}  kind")
    for e in entries:
        print(f"{e.id:>5}  {e.name:<14}{e.group:<6}{e.rows:>7}{e.cols:>7}{e.nonzeros:>10}  {e.kind}")
    return EXIT_OK


def cmd_fetch(args):
    entries = _selected_entries(args)
    if not entries:
        raise UsageError("no matrices selected; use --matrix NAME or --all")
    for e in entries:
        path = fetch_matrix(e.group, e.name, args.cache_dir, args.base_url, force=args.force)
        print(path)
    return EXIT_OK


def _load_problems(args):
    sources = [(e.name, e) for e in _selected_entries(args)]
    sources += [(Path(p).stem, Path(p)) for p in args.mtx]
    if not sources:
        raise UsageError("no matrices selected; use --matrix, --all or --mtx")
    problems, failures = [], []
    for name, src in sources:
        try:
            if isinstance(src, Path):
                A = read_matrix_market(src)
            else:
                A = read_matrix_market(
                    fetch_matrix(src.group, src.name, args.cache_dir, args.base_url))
            if A.nrows != A.ncols:
                raise MatrixMarketError(f"{name} is not square ({A.nrows}x{A.ncols})")
        except (FetchError, MatrixMarketError, OSError) as exc:
            log.error("skipping %s: %s", name, exc)
            failures.append(name)
            continue
        problems.append(manufacture_problem(A, seed=problem_seed(args.seed, name), name=name))
    return problems, failures


def cmd_run(args):
    cfg = SolverConfig(SOLVERS[0], args.max_iterations, args.restart, args.tol, args.record_every)
    problems, failures = _load_problems(args)
    os.makedirs(args.out, exist_ok=True)
    traces = run_grid(problems, args.solver or SOLVERS, args.strategy or STRATEGIES, cfg,
                      jobs=args.jobs)
    for t in traces:
        write_trace_csv(t, args.out)
        log.info("%s %s %s: %s", t.matrix_name, t.solver, t.strategy, t.termination)
    if failures:
        log.error("%d of %d matrices failed: %s", len(failures),
                  len(failures) + len(problems), ", ".join(failures))
        return EXIT_PARTIAL
    return EXIT_OK


def _is_trace_csv(path):
    with open(path, newline="") as fh:
        return fh.readline().rstrip("\r\n") == ",".join(TRACE_HEADER)


def cmd_profile(args):
    paths = sorted(p for p in glob.glob(os.path.join(args.trace_dir, "*.csv")) if _is_trace_csv(p))
    if not paths:
        raise UsageError(f"no trace CSVs found in {args.trace_dir}")
    groups = {}
    for p in paths:
        t = read_trace_csv(p)
        groups.setdefault((t.solver, t.strategy), []).append(t)
    budgets = range(1, args.max_budget + 1)
    curves = []
    for solver in SOLVERS:
        for strategy in STRATEGIES:
            traces = groups.get((solver, strategy))
            if not traces:
                continue
            if args.which == "dx" and strategy == "original":
                continue
            curves.append(data_profile(traces, args.which, args.tau, budgets))
    write_profile_csv(curves, args.out)
    return EXIT_OK


def cmd_plot(args):
    script = plot_script(args.csv, args.image)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(script)
    else:
        sys.stdout.write(script)
    return EXIT_OK


COMMANDS = {"list": cmd_list, "fetch": cmd_fetch, "run": cmd_run,
            "profile": cmd_profile, "plot": cmd_plot}


def main(argv=None):
    logging.basicConfig(format="%(levelname)s: %(message)s", level=logging.WARNING)
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"adkrylov: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FetchError as exc:
        print(f"adkrylov: fetch error: {exc}", file=sys.stderr)
        return EXIT_FETCH
    except (MatrixMarketError, CsvFormatError) as exc:
        print(f"adkrylov: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
