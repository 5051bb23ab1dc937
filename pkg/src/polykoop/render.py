"""Text output: aligned symbolic matrices, numeric CSV, trajectory CSV and a gnuplot script."""

from __future__ import annotations

import csv
import io
from typing import Sequence

import numpy as np

from . import inputexpr as ie
from .poly_core import Monomial, ParamLinForm, format_linform
from .simulator import Trajectory

SYMBOLIC = "symbolic"
NUMERIC = "numeric"


def _fmt(v: float) -> str:
    return "%.17g" % v


def _cell(entry) -> str:
    if isinstance(entry, ParamLinForm):
        return format_linform(entry)
    if isinstance(entry, tuple) and len(entry) == 2 and isinstance(entry[1], Monomial):
        return str(ie.from_monomial(*entry))
    if isinstance(entry, str):
        return entry
    if isinstance(entry, (int, float, np.floating, np.integer)):
        return _fmt(float(entry))
    return str(entry)


def render_table(cells: Sequence[Sequence[str]]) -> str:
    """Right-align string cells in columns separated by two spaces."""
    if not cells:
        return ""
    widths = [max(len(row[c]) for row in cells) for c in range(len(cells[0]))]
    return "\n".join("  ".join(s.rjust(w) for s, w in zip(row, widths)).rstrip() for row in cells)


def render_matrix(M, fmt: str = SYMBOLIC) -> str:
    """Render a matrix of parameter forms, Jacobian entries, expressions or reals.

    ``symbolic`` gives aligned text (``3a_1``, ``a_1+a_2+a_3``, ``2alpha2_3``,
    zeros as ``0``); ``numeric`` gives one CSV line per row with 17
    significant digits and requires real entries.
    """
    if fmt == NUMERIC:
        arr = np.atleast_2d(np.asarray(M, dtype=float))
        return "".join(",".join(_fmt(v) for v in row) + "\n" for row in arr)
    if fmt != SYMBOLIC:
        raise ValueError(f"unknown matrix format {fmt!r}")
    if isinstance(M, np.ndarray):
        M = np.atleast_2d(M).tolist()
    return render_table([[_cell(e) for e in row] for row in M])


def observable_names(observables: Sequence[Monomial]) -> list[str]:
    return [str(m) for m in observables]


def write_trajectory(traj: Trajectory, names: Sequence[str]) -> str:
    """CSV with header ``t,<names>`` and one ``%.17g`` row per sample."""
    names = list(names)
    if len(names) != traj.dim:
        raise ValueError(f"{len(names)} channel names for a {traj.dim}-dimensional trajectory")
    buf = io.StringIO()
    buf.write(",".join(["t"] + names) + "\n")
    for t, row in zip(traj.times, traj.samples):
        buf.write(_fmt(t) + "," + ",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def read_trajectory(text: str) -> tuple[Trajectory, list[str]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:1] != ["t"]:
        raise ValueError("trajectory CSV must start with a 't,...' header")
    names = rows[0][1:]
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float).reshape(-1, len(names) + 1)
    if len(data) == 0:
        raise ValueError("trajectory CSV has no samples")
    t = data[:, 0]
    h = (t[-1] - t[0]) / (len(t) - 1) if len(t) > 1 else 0.0
    return Trajectory(float(t[0]), float(h), data[:, 1:]), names


def plot_script(series: Sequence[tuple[str, str, int]], error_csv: str | None = None) -> str:
    """Gnuplot script drawing each ``(csv_file, title_prefix, n_columns)`` set of states.

    States go to ``trajectories.png``; the error CSV, if any, to
    ``error.png`` on a log scale.
    """
    lines = [
        "# gnuplot -c plot.gp",
        "set datafile separator ','",
        "set terminal pngcairo size 900,600",
        "set xlabel 't [s]'",
        "set key outside right",
        "set output 'trajectories.png'",
        "set ylabel 'state'",
    ]
    plots = []
    for k, (path, prefix, ncols) in enumerate(series):
        style = "lines lw 2" if k == 0 else "lines dt 2 lw 2"
        plots.append(
            f"for [i=2:{ncols + 1}] '{path}' using 1:i with {style} title sprintf('{prefix} %d', i-1)"
        )
    lines.append("plot " + ", \\\n     ".join(plots))
    if error_csv is not None:
        lines += [
            "set output 'error.png'",
            "set ylabel '|error|'",
            "set logscale y",
            f"stats '{error_csv}' skip 1 nooutput",
            f"plot for [i=2:STATS_columns] '{error_csv}' using 1:(column(i) > 0 ? column(i) : 1e-300) "
            "with lines title columnhead(i)",
        ]
    lines.append("unset output")
    return "\n".join(lines) + "\n"
