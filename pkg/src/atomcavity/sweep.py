"""Parameter-sweep engine and built-in figure presets.

Every sweep point is evaluated by a pure function of the spec, so points may
run concurrently; results are assembled in input order and are bit-for-bit
reproducible regardless of the worker count.
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from . import analytic, semiclassical
from .config import (DEFAULT_OUTPUTS, PROBE_OUTPUTS, QUANTUM_ATOM_CAP,
                     ConfigError, SweepSpec, validate_spec)
from .model import ModelParams, at_pattern, build_liouvillian
from .steady import observables, solve_steady


@dataclass
class SweepRow:
    """One evaluated point: axis value(s), observables, validity flag, wall time."""

    value: float
    value2: float
    values: dict
    flag: str
    wall_time: float


@dataclass
class SweepResult:
    """Ordered rows plus reproducibility metadata (params, engine, version)."""

    spec: SweepSpec
    columns: tuple
    rows: list
    metadata: dict


def _params_at(base: ModelParams, axis: str, value: float) -> ModelParams:
    if axis == "N":
        return at_pattern(base, n_atoms=int(round(value)))
    if axis in ("kappa", "omega", "delta_c", "delta_a"):
        return replace(base, **{axis: float(value)})
    if axis in ("x1", "x2"):
        index = 0 if axis == "x1" else 1
        pos = list(base.positions)
        pos[index] = (float(value), pos[index][1])
        return replace(base, positions=tuple(pos))
    if axis == "delta_p":
        return base
    raise ConfigError(f"[sweep] axis: unknown axis {axis!r}")


def _probe_site(params: ModelParams) -> float:
    return params.positions[0][0] if params.n_atoms else 0.0


def _analytic_values(spec: SweepSpec, params: ModelParams, value: float) -> tuple:
    if spec.axis == "delta_p":
        rate = analytic.probe_rate(params, _probe_site(params), float(value))
        return {"rate": float(rate)}, ""
    n = value if spec.axis == "N" else params.n_atoms
    result = analytic.weak_excitation(params, n_atoms=n)
    free = params.n_atoms if spec.axis != "N" else n
    available = {
        "i_cav": result.i_cav,
        "i_at": result.i_at,
        "pi": result.pi_n,
        "alpha_re": result.alpha.real,
        "alpha_im": result.alpha.imag,
        "alpha_abs": abs(result.alpha),
        "free_space_rate": free * params.gamma * analytic.free_space_population(params),
    }
    flag = "" if result.saturation_ok else "saturation: outside weak-excitation regime"
    return available, flag


def _quantum_values(spec: SweepSpec, params: ModelParams) -> tuple:
    liou = build_liouvillian(params)
    state = solve_steady(liou)
    obs = observables(state, params)
    flag = ""
    gamma_ratio = obs.i_cav / obs.i_at if obs.i_at > 0 else None
    available = {
        "i_cav": obs.i_cav,
        "i_at": obs.i_at,
        "mean_photons": obs.mean_photons,
        "g2": obs.g2,
        "field_re": obs.field.real,
        "field_im": obs.field.imag,
        "coherent_fidelity": obs.coherent_fidelity,
        "gamma_ratio": gamma_ratio,
        "inv_kappa": 1.0 / params.kappa if params.kappa else None,
    }
    if "g2" in spec.outputs and obs.g2 is None:
        flag = "g2 undefined: photon number below floor"
    if "gamma_ratio" in spec.outputs and gamma_ratio is None:
        flag = "gamma_ratio undefined: no fluorescence"
    if spec.crosscheck and params.n_atoms <= 2:
        weak = analytic.weak_excitation(params)
        available["analytic_i_cav"] = weak.i_cav
        available["analytic_i_at"] = weak.i_at
        available["dev_i_cav"] = (abs(obs.i_cav - weak.i_cav) / weak.i_cav
                                  if weak.i_cav else None)
        available["dev_i_at"] = (abs(obs.i_at - weak.i_at) / weak.i_at
                                 if weak.i_at else None)
    return available, flag


def _oracle_values(spec: SweepSpec, params: ModelParams, value: float) -> tuple:
    if spec.axis == "delta_p":
        rate = analytic.probe_response_oracle(params, _probe_site(params), [float(value)])
        return {"rate": float(rate[0])}, ""
    state = analytic.linear_response_oracle(params)
    i_cav, i_at = analytic.oracle_intensities(params, state)
    return {
        "i_cav": i_cav,
        "i_at": i_at,
        "alpha_re": state.alpha.real,
        "alpha_im": state.alpha.imag,
        "alpha_abs": abs(state.alpha),
    }, ""


def _semiclassical_values(spec: SweepSpec, params: ModelParams) -> tuple:
    config = semiclassical.pattern_configuration(params)
    report = semiclassical.stability(config)
    return {
        "max_eig_real": report.max_eig_real,
        "stable": 1.0 if report.stable else 0.0,
        "eq5_estimate": report.eq5_estimate,
        "force_max": float(np.max(np.abs(report.forces))) if report.forces.size else 0.0,
    }, ""


def _eval_point(spec: SweepSpec, point: tuple) -> SweepRow:
    value, value2 = point
    start = time.perf_counter()
    flag = ""
    picked = {}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", analytic.ValidityWarning)
            if spec.axis == "N" and spec.engine == "analytic":
                params = spec.base  # closed forms take the atom number directly
            else:
                params = _params_at(spec.base, spec.axis, value)
            if spec.axis2 is not None:
                params = _params_at(params, spec.axis2, value2)
            if spec.engine == "analytic":
                available, flag = _analytic_values(spec, params, value)
            elif spec.engine == "quantum":
                available, flag = _quantum_values(spec, params)
            elif spec.engine == "oracle":
                available, flag = _oracle_values(spec, params, value)
            else:
                available, flag = _semiclassical_values(spec, params)
        extra = tuple(k for k in available if k.startswith(("analytic_", "dev_")))
        for name in spec.outputs + extra:
            picked[name] = available[name]
    except Exception as exc:  # per-point failures stay in the row
        picked = {name: None for name in spec.outputs}
        flag = f"error: {type(exc).__name__}: {exc}"
    return SweepRow(value=value, value2=value2, values=picked, flag=flag,
                    wall_time=time.perf_counter() - start)


def run_sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Evaluate every point of the sweep, preserving input order.

    ``threads`` > 1 distributes points over worker processes; the result is
    identical to the sequential one.  Failures of individual points are
    recorded in their row's flag and never abort the sweep.
    """
    validate_spec(spec)
    if spec.axis2 is not None:
        points = [(v1, v2) for v1 in spec.values for v2 in spec.values2]
    else:
        points = [(v, None) for v in spec.values]

    worker = partial(_eval_point, spec)
    if threads > 1 and len(points) > 1:
        chunk = max(1, len(points) // (threads * 8))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(worker, points, chunksize=chunk))
    else:
        rows = [worker(p) for p in points]

    columns = list(spec.outputs)
    for row in rows:
        for name in row.values:
            if name not in columns:
                columns.append(name)
    from . import __version__

    meta = {
        "engine": spec.engine,
        "axis": spec.axis,
        "axis2": spec.axis2,
        "version": __version__,
        "params": _params_meta(spec.base),
    }
    return SweepResult(spec=spec, columns=tuple(columns), rows=rows, metadata=meta)


def _params_meta(params: ModelParams) -> dict:
    pos = ";".join(f"{x:g},{y:g}" for x, y in params.positions)
    return {
        "n_atoms": params.n_atoms,
        "g0": params.g0,
        "omega": params.omega,
        "delta_a": params.delta_a,
        "delta_c": params.delta_c,
        "gamma": params.gamma,
        "kappa": params.kappa,
        "lambda": params.wavelength,
        "n_max": params.n_max,
        "positions": pos,
    }


def merge_results(primary: SweepResult, other: SweepResult,
                  suffix_primary: str, suffix_other: str) -> SweepResult:
    """Join two sweeps over the same axis values into one table.

    Column names get the branch suffixes; shared derived columns (same name,
    same values) are kept once.  Used by the figure presets that plot two
    parameter branches in one panel.
    """
    if len(primary.rows) != len(other.rows):
        raise ValueError("cannot merge sweeps of different lengths")
    columns = []
    rows = []
    for row_a, row_b in zip(primary.rows, other.rows):
        if row_a.value != row_b.value or row_a.value2 != row_b.value2:
            raise ValueError("cannot merge sweeps over different axis values")
        merged = {}
        for name, value in row_a.values.items():
            merged[name + suffix_primary] = value
        for name, value in row_b.values.items():
            merged[name + suffix_other] = value
        flag = "; ".join(f for f in (row_a.flag, row_b.flag) if f)
        rows.append(SweepRow(value=row_a.value, value2=row_a.value2, values=merged,
                             flag=flag, wall_time=row_a.wall_time + row_b.wall_time))
        for name in merged:
            if name not in columns:
                columns.append(name)
    return SweepResult(spec=primary.spec, columns=tuple(columns), rows=rows,
                       metadata=dict(primary.metadata))


# ---------------------------------------------------------------------------
# Built-in figure presets.  Parameters are quoted in units of gamma.

def _fig2_spec(delta_c: float) -> SweepSpec:
    base = ModelParams(n_atoms=1, g0=10.0, omega=10.0, delta_a=-1000.0,
                       delta_c=delta_c, kappa=10.0)
    return SweepSpec(base=base, axis="N", engine="analytic",
                     values=tuple(np.geomspace(1.0, 1e4, 81)),
                     outputs=("i_cav", "i_at"))


def _fig3_spec(g0: float, n_max: int) -> SweepSpec:
    base = ModelParams(n_atoms=1, g0=g0, omega=1.0, delta_a=0.0, delta_c=0.0,
                       kappa=1.0, n_max=n_max)
    return SweepSpec(base=base, axis="kappa", engine="quantum",
                     values=tuple(np.geomspace(0.05, 20.0, 25)),
                     outputs=("inv_kappa", "i_cav", "i_at", "free_space_rate"))


def _fig4_branch(g0: float, n_max: int) -> SweepSpec:
    base = ModelParams(n_atoms=1, g0=g0, omega=1.0, delta_a=0.0, delta_c=0.0,
                       kappa=1.0, n_max=n_max)
    return SweepSpec(base=base, axis="kappa", engine="quantum",
                     values=tuple(np.geomspace(0.05, 20.0, 25)),
                     outputs=("inv_kappa", "mean_photons", "g2"))


def _fig5_base(kappa: float) -> ModelParams:
    return ModelParams(n_atoms=2, g0=10.0, omega=1.0, delta_a=100.0,
                       delta_c=0.0, kappa=kappa, n_max=5,
                       positions=((0.0, 0.0), (0.0, 0.0)))


def _fig5a_spec() -> SweepSpec:
    grid = tuple(np.linspace(0.0, 1.0, 40, endpoint=False))
    return SweepSpec(base=_fig5_base(0.2), axis="x1", values=grid,
                     axis2="x2", values2=grid, engine="quantum",
                     outputs=("gamma_ratio", "i_cav", "i_at"))


def _fig5b_branch(kappa: float) -> SweepSpec:
    grid = tuple(np.linspace(0.0, 1.0, 80, endpoint=False))
    return SweepSpec(base=_fig5_base(kappa), axis="x2", values=grid,
                     engine="quantum", outputs=("gamma_ratio",))


FIGURES = ("fig2a", "fig2b", "fig3a", "fig3b", "fig4", "fig5a", "fig5b")

# free_space_rate is a closed form; route those columns through the analytic
# engine alongside the quantum solve for fig3.
def _run_fig3(g0: float, n_max: int, threads: int) -> SweepResult:
    spec = _fig3_spec(g0, n_max)
    quantum = run_sweep(replace(spec, outputs=("inv_kappa", "i_cav", "i_at")),
                        threads=threads)
    free_rate = spec.base.gamma * spec.base.n_atoms \
        * analytic.free_space_population(spec.base)
    for row in quantum.rows:
        row.values["free_space_rate"] = free_rate
    columns = tuple(list(quantum.columns) + ["free_space_rate"])
    return SweepResult(spec=spec, columns=columns, rows=quantum.rows,
                       metadata=quantum.metadata)


def fig_command(name: str, threads: int = 1) -> SweepResult:
    """Run one of the built-in figure presets and return its table.

    fig2a/fig2b   cavity output and total fluorescence against atom number
                  (closed forms; resonant drive of the collective mode in b)
    fig3a/fig3b   both signals against 1/kappa for a single atom, weak and
                  strong coupling, with the free-space rate for reference
    fig4          mean photon number and g2(0) against 1/kappa, two couplings
    fig5a         ratio i_cav/i_at over the two-atom position grid
    fig5b         the same ratio along x2 at x1 = 0, for two cavity widths
    """
    if name == "fig2a":
        return run_sweep(_fig2_spec(0.0), threads=threads)
    if name == "fig2b":
        return run_sweep(_fig2_spec(-5.0), threads=threads)
    if name == "fig3a":
        return _run_fig3(1.0, 13, threads)
    if name == "fig3b":
        return _run_fig3(10.0, 8, threads)
    if name == "fig4":
        weak = run_sweep(_fig4_branch(1.0, 13), threads=threads)
        strong = run_sweep(_fig4_branch(10.0, 8), threads=threads)
        return merge_results(strong, weak, "_g10", "_g1")
    if name == "fig5a":
        return run_sweep(_fig5a_spec(), threads=threads)
    if name == "fig5b":
        narrow = run_sweep(_fig5b_branch(0.2), threads=threads)
        wide = run_sweep(_fig5b_branch(1.0), threads=threads)
        return merge_results(narrow, wide, "_k02", "_k1")
    raise ConfigError(f"unknown figure name {name!r}; choose from {', '.join(FIGURES)}")
