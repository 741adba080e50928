"""Turn trace or profile CSVs into self-contained gnuplot scripts.

Data is embedded as inline data blocks, so the script can be run with
``gnuplot script.gp`` without the CSVs next to it.
"""

from __future__ import annotations

import csv
import logging
import os
import re

from .errors import CsvFormatError
from .experiment import NONFINITE, PROFILE_HEADER, TRACE_HEADER

__all__ = ["plot_script"]

log = logging.getLogger(__name__)


def _read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvFormatError("empty file, expected a header row", 1)
    header = tuple(rows[0])
    if header not in (TRACE_HEADER, PROFILE_HEADER):
        raise CsvFormatError(f"unrecognized header {','.join(header)!r}", 1)
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CsvFormatError(f"expected {len(header)} fields, got {len(row)}", lineno)
    return header, rows[1:]


def _block_name(*parts):
    return "$" + re.sub(r"\W", "_", "_".join(parts))


def _number(s, lineno):
    try:
        return float(s)
    except ValueError:
        raise CsvFormatError(f"not a number: {s!r}", lineno) from None


def _profile_series(rows):
    series = {}
    for lineno, (solver, strategy, it, solved, total) in enumerate(rows, start=2):
        _number(it, lineno)
        _number(solved, lineno)
        series.setdefault((solver, strategy), []).append((it, solved))
    return series


def _trace_series(rows):
    series = {}
    for lineno, row in enumerate(rows, start=2):
        matrix, solver, strategy, it, ex, edx, _res, _term = row
        _number(it, lineno)
        value = ex if strategy == "original" else edx
        if value in ("", NONFINITE):
            continue
        if _number(value, lineno) <= 0:
            continue  # log axis
        series.setdefault((matrix, solver, strategy), []).append((it, value))
    return series


def plot_script(paths, output_name="figure.png") -> str:
    """Build a gnuplot script from one or more CSVs of the same kind."""
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    kind = None
    rows = []
    for path in paths:
        header, body = _read(path)
        if kind is not None and header != kind:
            raise CsvFormatError(f"{path}: cannot mix trace and profile CSVs", 1)
        kind = header
        rows.extend(body)

    out = ["# generated by adkrylov", "set terminal pngcairo size 900,600",
           f"set output '{output_name}'", "set key outside right", "set grid"]
    if kind == PROFILE_HEADER:
        series = _profile_series(rows)
        total = rows[0][4] if rows else "0"
        out += ["set xlabel 'iterations'",
                f"set ylabel 'problems solved (out of {total})'",
                "set yrange [0:*]"]
        style = "with steps"
    else:
        series = _trace_series(rows)
        out += ["set xlabel 'iterations'", "set ylabel 'error (L2 norm)'",
                "set logscale y", "set format y '10^{%L}'"]
        style = "with lines"

    if not series:
        log.warning("no data points in %s; emitting an empty plot", ", ".join(map(str, paths)))
        out += ["set label 1 'no data' at graph 0.5,0.5 center", "set xrange [0:1]",
                "set yrange [0:1]", "unset logscale y", "plot NaN notitle"]
        return "\n".join(out) + "\n"

    plots = []
    for key, points in series.items():
        name = _block_name(*key)
        out.append(f"{name} << EOD")
        out.extend(f"{it} {val}" for it, val in points)
        out.append("EOD")
        plots.append(f"{name} using 1:2 {style} title '{' '.join(key)}'")
    out.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(out) + "\n"
