"""CSV and plot emission for sweep results.

CSV is the canonical output: a ``#`` metadata prologue (tool version,
timestamp, engine, every model parameter), a header row, then one data row
per sweep point in full-precision scientific notation.  Rerunning an
identical sweep reproduces the file byte for byte except for the
``# generated`` timestamp line.  Plots are conveniences and are never parsed
back.
"""

from __future__ import annotations

import csv
import io
from datetime import datetime, timezone
from pathlib import Path

from .sweep import SweepResult


def _fmt(value) -> str:
    if value is None:
        return ""
    return f"{float(value):.17e}"


def render_csv(result: SweepResult) -> str:
    """The CSV document as a string (used by emit_csv and the tests)."""
    buf = io.StringIO()
    meta = result.metadata
    buf.write(f"# atomcavity {meta['version']}\n")
    buf.write(f"# generated: {datetime.now(timezone.utc).isoformat()}\n")
    buf.write(f"# engine: {meta['engine']}\n")
    axes = meta["axis"] + (f", {meta['axis2']}" if meta.get("axis2") else "")
    buf.write(f"# axis: {axes}\n")
    for key in sorted(meta["params"]):
        buf.write(f"# param {key} = {meta['params'][key]}\n")
    writer = csv.writer(buf, lineterminator="\n")
    header = [meta["axis"]] + ([meta["axis2"]] if meta.get("axis2") else [])
    header += list(result.columns) + ["flag"]
    writer.writerow(header)
    for row in result.rows:
        record = [_fmt(row.value)]
        if meta.get("axis2"):
            record.append(_fmt(row.value2))
        record += [_fmt(row.values.get(name)) for name in result.columns]
        record.append(row.flag)
        writer.writerow(record)
    return buf.getvalue()


def emit_csv(result: SweepResult, path) -> Path:
    """Write the result table to ``path``; returns the path written."""
    path = Path(path)
    try:
        path.write_text(render_csv(result), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def emit_plot(result: SweepResult, path, logx: bool = False,
              logy: bool = False, column: str = None) -> Path:
    """Render the result as a self-contained vector graphic (SVG by default).

    One polyline per observable for 1D sweeps; a heatmap with colorbar of
    ``column`` (default: the first observable) for two-axis maps.  An empty
    result is an error and writes nothing.
    """
    if not result.rows:
        raise ValueError("empty result: nothing to plot")
    from matplotlib.figure import Figure

    path = Path(path)
    meta = result.metadata
    fig = Figure(figsize=(6.4, 4.2))
    ax = fig.subplots()

    numeric = [name for name in result.columns
               if any(isinstance(r.values.get(name), (int, float)) for r in result.rows)]
    if not numeric:
        raise ValueError("no numeric observables to plot")

    if meta.get("axis2"):
        names = [column] if column else numeric[:1]
        name = names[0]
        if name not in result.columns:
            raise ValueError(f"unknown column {name!r}")
        n1 = len(result.spec.values)
        n2 = len(result.spec.values2)
        import numpy as np

        grid = np.full((n1, n2), np.nan)
        for idx, row in enumerate(result.rows):
            v = row.values.get(name)
            grid[idx // n2, idx % n2] = np.nan if v is None else v
        mesh = ax.pcolormesh(result.spec.values2, result.spec.values,
                             grid, shading="nearest")
        fig.colorbar(mesh, ax=ax, label=name)
        ax.set_xlabel(meta["axis2"])
        ax.set_ylabel(meta["axis"])
    else:
        xs = [row.value for row in result.rows]
        for name in numeric:
            pairs = [(x, row.values.get(name)) for x, row in zip(xs, result.rows)
                     if row.values.get(name) is not None]
            if pairs:
                ax.plot([p[0] for p in pairs], [p[1] for p in pairs], label=name)
        ax.set_xlabel(meta["axis"])
        ax.legend(loc="best", fontsize="small")
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
    ax.set_title(f"engine: {meta['engine']}")
    try:
        fig.savefig(path)
    except OSError as exc:
        raise OSError(f"cannot write plot to {path}: {exc}") from exc
    return path
