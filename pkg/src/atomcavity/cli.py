"""Command-line interface.

    simulate sweep --config FILE --out DIR [--engine E] [--format F] [--threads K]
    simulate fig NAME --out DIR [--format F] [--threads K]
    simulate probe --config FILE [--out DIR]
    simulate stability --config FILE
    simulate zeros --config FILE [--out DIR] [--format F]

Exit codes: 0 success, 1 configuration/validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, parse_document
from .semiclassical import Configuration, field_zero_map, stability
from .sweep import FIGURES, SweepRow, SweepResult, fig_command, merge_results, run_sweep


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad arguments; route those through the
    # validation-error path instead.
    def error(self, message):
        raise ConfigError(message)


def _read_config(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _emit(result: SweepResult, out_dir: str, stem: str, fmt: str,
          logx: bool = False, logy: bool = False) -> list:
    from .output import emit_csv, emit_plot

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [emit_csv(result, out / f"{stem}.csv")]
    if fmt == "csv+plot":
        paths.append(emit_plot(result, out / f"{stem}.svg", logx=logx, logy=logy))
    return paths


def _cmd_sweep(args) -> int:
    doc = parse_document(_read_config(args.config), require_sweep=True)
    spec = doc.sweep
    if args.engine:
        spec = replace(spec, engine=args.engine)
    result = run_sweep(spec, threads=args.threads)
    stem = Path(args.config).stem
    logx = spec.axis in ("N", "kappa")
    paths = _emit(result, args.out, stem, args.format, logx=logx, logy=logx)
    failures = sum(1 for r in result.rows if r.flag.startswith("error:"))
    print(f"{len(result.rows)} points ({failures} failed) -> "
          + ", ".join(str(p) for p in paths))
    return 0


def _cmd_fig(args) -> int:
    result = fig_command(args.name, threads=args.threads)
    loglog = args.name.startswith("fig2")
    paths = _emit(result, args.out, args.name, args.format, logx=loglog, logy=loglog)
    print(f"{args.name}: {len(result.rows)} points -> "
          + ", ".join(str(p) for p in paths))
    return 0


def _cmd_probe(args) -> int:
    from .analytic import probe_peaks
    from .sweep import run_sweep as _run

    doc = parse_document(_read_config(args.config), require_sweep=True)
    spec = doc.sweep
    if spec.axis != "delta_p":
        raise ConfigError("[sweep] axis: probe command needs axis = delta_p")
    formula = _run(replace(spec, engine="analytic", outputs=("rate",)),
                   threads=args.threads)
    numeric = _run(replace(spec, engine="oracle", outputs=("rate",)),
                   threads=args.threads)
    result = merge_results(formula, numeric, "_formula", "_oracle")

    site = spec.base.positions[0][0] if spec.base.n_atoms else 0.0
    import warnings as _warnings

    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        lo, hi = probe_peaks(spec.base, site)
    print(f"probe peaks (dressed-state detunings): {lo:.6g}, {hi:.6g}")
    if args.out:
        paths = _emit(result, args.out, Path(args.config).stem, args.format)
        print(f"{len(result.rows)} points -> " + ", ".join(str(p) for p in paths))
    return 0


def _cmd_stability(args) -> int:
    doc = parse_document(_read_config(args.config), require_sweep=False)
    params = doc.model
    report = stability(Configuration(params, params.positions))
    print(f"atoms: {params.n_atoms}")
    print(f"max |force| on pattern: {np.max(np.abs(report.forces)):.6e}")
    print(f"stiffness spectrum, max real part: {report.max_eig_real:.6e}")
    print(f"stable: {report.stable}")
    estimate = (f"{report.eq5_estimate:.6e}" if report.eq5_applicable
                else f"{report.eq5_estimate:.6e} (configuration not near "
                     "pattern; estimate not applicable)")
    print(f"closed-form stiffness estimate: {estimate}")
    return 0


def _cmd_zeros(args) -> int:
    doc = parse_document(_read_config(args.config), require_sweep=False)
    params = doc.model
    opts = doc.map_options
    lam = params.wavelength
    zmap = field_zero_map(
        params,
        x_grid=np.linspace(0.0, lam, opts.nx, endpoint=False),
        y_grid=np.linspace(0.0, lam, opts.ny, endpoint=False),
        alpha=opts.alpha,
    )
    print(f"peak intensity: {zmap.peak_intensity:.6e}")
    print(f"zeros found: {len(zmap.zeros)}")
    for x, y in zmap.zeros[:20]:
        print(f"  ({x:.9f}, {y:.9f})")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = Path(args.config).stem
        path = out / f"{stem}_zeros.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("x,y\n")
            for x, y in zmap.zeros:
                fh.write(f"{x:.17e},{y:.17e}\n")
        print(f"-> {path}")
        if args.format == "csv+plot":
            from matplotlib.figure import Figure

            fig = Figure(figsize=(5.2, 4.4))
            ax = fig.subplots()
            mesh = ax.pcolormesh(zmap.y, zmap.x, zmap.intensity, shading="nearest")
            fig.colorbar(mesh, ax=ax, label="|E|^2")
            if len(zmap.zeros):
                ax.plot(zmap.zeros[:, 1], zmap.zeros[:, 0], "wx", ms=6)
            ax.set_xlabel("y")
            ax.set_ylabel("x")
            plot_path = out / f"{stem}_zeros.svg"
            fig.savefig(plot_path)
            print(f"-> {plot_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="simulate",
                     description="Driven atoms coupled to a lossy cavity: "
                                 "sweeps, figure presets, probe spectra, "
                                 "pattern stability, field zeros.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="configuration file")
        p.add_argument("--format", choices=("csv", "csv+plot"), default="csv")
        p.add_argument("--threads", type=int, default=1)

    p_sweep = sub.add_parser("sweep", help="run a configured parameter sweep")
    common(p_sweep)
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--engine",
                         choices=("analytic", "quantum", "oracle", "semiclassical"),
                         help="override the engine from the config")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_fig = sub.add_parser("fig", help="run a built-in figure preset")
    p_fig.add_argument("name", choices=FIGURES)
    p_fig.add_argument("--out", required=True)
    common(p_fig, config=False)
    p_fig.set_defaults(func=_cmd_fig)

    p_probe = sub.add_parser("probe", help="weak-probe spectrum (formula and oracle)")
    common(p_probe)
    p_probe.add_argument("--out", help="output directory (optional)")
    p_probe.set_defaults(func=_cmd_probe)

    p_stab = sub.add_parser("stability", help="pattern forces and stiffness")
    p_stab.add_argument("--config", required=True)
    p_stab.set_defaults(func=_cmd_stability)

    p_zeros = sub.add_parser("zeros", help="total-field intensity zeros")
    p_zeros.add_argument("--config", required=True)
    p_zeros.add_argument("--out", help="output directory (optional)")
    p_zeros.add_argument("--format", choices=("csv", "csv+plot"), default="csv")
    p_zeros.set_defaults(func=_cmd_zeros)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
