"""Report files: CSV trajectories, JSON reports and gnuplot scripts."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .ensemble import ConvergenceTable, report_json

__all__ = ["write_trajectories_csv", "write_json", "write_sidecar", "emit_report",
           "gnuplot_fan", "gnuplot_loglog", "gnuplot_scale", "write_scale_csv"]


def write_trajectories_csv(path, trajs: Sequence) -> Path:
    """Long-format ``t,value,traj``; an empty list gives a header-only file."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("t,value,traj\n")
        for j, tr in enumerate(trajs):
            for t, v in zip(tr.times.tolist(), tr.states.tolist()):
                fh.write(f"{t!r},{v!r},{j}\n")
    return path


def write_json(path, obj) -> Path:
    """Canonical JSON (sorted keys, two-space indent); parsing and
    re-emitting the file reproduces it byte for byte."""
    path = Path(path)
    path.write_text(report_json(obj))
    return path


def write_sidecar(path, timing: dict) -> Path:
    """Wall-clock data is kept out of the primary report."""
    path = Path(path)
    path.write_text(json.dumps(timing, sort_keys=True) + "\n")
    return path


def write_table_csv(path, table: ConvergenceTable) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        fh.write("mesh,median,iqr,order\n")
        for h, m, q, o in table.rows():
            fh.write(f"{h!r},{m!r},{q!r},{'' if o is None else repr(o)}\n")
    return path


def write_scale_csv(path, xs, psi) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        fh.write("x,psi\n")
        for x, v in zip(xs, psi):
            fh.write(f"{float(x)!r},{float(v)!r}\n")
    return path


def gnuplot_fan(csv_name: str, png_name: str) -> str:
    return (
        "set datafile separator ','\n"
        f"set terminal pngcairo size 900,600\nset output '{png_name}'\n"
        "set xlabel 't'\nset ylabel 'I(t)'\nunset key\n"
        f"plot '{csv_name}' every ::1 using 1:2:3 with lines lc variable\n"
    )


def gnuplot_loglog(csv_name: str, png_name: str, title: str = "") -> str:
    return (
        "set datafile separator ','\n"
        f"set terminal pngcairo size 900,600\nset output '{png_name}'\n"
        "set logscale xy\nset xlabel 'mesh'\nset ylabel 'median strong error'\n"
        f"set title '{title}'\n"
        f"plot '{csv_name}' every ::1 using 1:2 with linespoints title 'median'\n"
    )


def gnuplot_scale(csv_name: str, png_name: str) -> str:
    return (
        "set datafile separator ','\n"
        f"set terminal pngcairo size 900,600\nset output '{png_name}'\n"
        "set xlabel 'x'\nset ylabel 'psi(x)'\nunset key\n"
        f"plot '{csv_name}' every ::1 using 1:2 with lines\n"
    )


def emit_report(report, out_dir, stem: str, fmt: str = "json", trajs: Sequence = ()) -> list:
    """Write ``report`` (an EnsembleReport or ConvergenceTable) under
    ``out_dir``. ``fmt='json'`` writes the canonical JSON; ``fmt='csv'``
    writes the trajectories (or table rows) as CSV. A gnuplot script
    referring to the CSV by its relative name is always written alongside.
    Returns the list of paths written."""
    if fmt not in ("json", "csv"):
        raise ValueError("format must be 'json' or 'csv'")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "json":
        written.append(write_json(out / f"{stem}.json", report))
    timing = getattr(report, "timing", None)
    if timing:
        written.append(write_sidecar(out / f"{stem}.timing.json", timing))
    if isinstance(report, ConvergenceTable):
        csv = write_table_csv(out / f"{stem}.csv", report)
        script = gnuplot_loglog(csv.name, f"{stem}.png", report.label)
    else:
        csv = write_trajectories_csv(out / f"{stem}.csv", trajs)
        script = gnuplot_fan(csv.name, f"{stem}.png")
    written.append(csv)
    gp = out / f"{stem}.gp"
    gp.write_text(script)
    written.append(gp)
    return written
