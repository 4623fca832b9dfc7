"""Key-value configuration documents for sweeps and the command line.

Grammar: INI-style sections with ``key = value`` pairs and ``#`` comments.

[model]    n_atoms, g0, omega, delta_a, delta_c, gamma, kappa, lambda,
           n_max, positions   (positions: atoms separated by ';', each
           'x' or 'x, y'; defaults gamma=1, lambda=1, detunings 0, y=0)
[sweep]    engine, axis, and either 'values = v1, v2, ...' or the rule
           'min / max / count / scale' with scale in {linear, log, inverse}
[output]   observables (comma list), crosscheck (bool)
[map]      nx, ny, alpha   (grid used by the field-zero command)

Unknown sections, unknown keys and invalid values are hard errors.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams

ENGINES = ("analytic", "quantum", "oracle", "semiclassical")
AXES = ("N", "kappa", "omega", "delta_c", "delta_a", "x1", "x2", "delta_p")
QUANTUM_ATOM_CAP = 4

AXES_BY_ENGINE = {
    "analytic": {"N", "kappa", "omega", "delta_c", "delta_a", "delta_p"},
    "quantum": {"N", "kappa", "omega", "delta_c", "delta_a", "x1", "x2"},
    "oracle": {"N", "kappa", "omega", "delta_c", "delta_a", "x1", "x2", "delta_p"},
    "semiclassical": {"N", "kappa", "omega", "delta_c", "delta_a"},
}

OUTPUTS_BY_ENGINE = {
    "analytic": ("i_cav", "i_at", "pi", "alpha_re", "alpha_im", "alpha_abs",
                 "free_space_rate"),
    "quantum": ("i_cav", "i_at", "mean_photons", "g2", "field_re", "field_im",
                "coherent_fidelity", "gamma_ratio", "inv_kappa"),
    "oracle": ("i_cav", "i_at", "alpha_re", "alpha_im", "alpha_abs"),
    "semiclassical": ("max_eig_real", "stable", "eq5_estimate", "force_max"),
}
PROBE_OUTPUTS = ("rate",)

DEFAULT_OUTPUTS = {
    "analytic": ("i_cav", "i_at", "pi", "alpha_re", "alpha_im"),
    "quantum": ("i_cav", "i_at", "mean_photons", "g2"),
    "oracle": ("i_cav", "i_at", "alpha_re", "alpha_im"),
    "semiclassical": ("max_eig_real", "stable", "eq5_estimate"),
}

_MODEL_KEYS = {"n_atoms", "g0", "omega", "delta_a", "delta_c", "gamma",
               "kappa", "lambda", "n_max", "positions"}
_SWEEP_KEYS = {"engine", "axis", "values", "min", "max", "count", "scale"}
_OUTPUT_KEYS = {"observables", "crosscheck"}
_MAP_KEYS = {"nx", "ny", "alpha"}


class ConfigError(ValueError):
    """Malformed or invalid configuration; message names the offending field."""


@dataclass(frozen=True)
class SweepSpec:
    """Validated description of one sweep: base model, axis, engine, outputs."""

    base: ModelParams
    axis: str
    values: tuple
    engine: str
    outputs: tuple
    axis2: str = None
    values2: tuple = None
    crosscheck: bool = False


@dataclass
class MapOptions:
    nx: int = 121
    ny: int = 121
    alpha: complex = None


@dataclass
class Document:
    """Everything a parsed configuration file can hold."""

    model: ModelParams
    sweep: SweepSpec = None
    map_options: MapOptions = field(default_factory=MapOptions)


def _to_float(section, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {raw!r}") from None


def _to_int(section, key, raw):
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not an integer: {raw!r}") from None
    if value != int(value):
        raise ConfigError(f"[{section}] {key}: not an integer: {raw!r}")
    return int(value)


def _to_bool(section, key, raw):
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key}: not a boolean: {raw!r}")


def _parse_positions(raw):
    atoms = []
    for part in raw.split(";"):
        part = part.strip()
        if not part:
            continue
        coords = [c for c in part.replace(",", " ").split() if c]
        if len(coords) not in (1, 2):
            raise ConfigError(f"[model] positions: expected 'x' or 'x, y', got {part!r}")
        try:
            atoms.append(tuple(float(c) for c in coords))
        except ValueError:
            raise ConfigError(f"[model] positions: not numbers: {part!r}") from None
    return tuple(atoms)


def _check_keys(cp, section, allowed):
    for key in cp.options(section):
        if key not in allowed:
            raise ConfigError(f"[{section}] unknown key: {key}")


def _parse_model(cp) -> ModelParams:
    if not cp.has_section("model"):
        raise ConfigError("missing [model] section")
    _check_keys(cp, "model", _MODEL_KEYS)
    get = cp["model"].get
    for required in ("n_atoms", "g0", "omega"):
        if get(required) is None:
            raise ConfigError(f"[model] {required}: required")
    kwargs = dict(
        n_atoms=_to_int("model", "n_atoms", get("n_atoms")),
        g0=_to_float("model", "g0", get("g0")),
        omega=_to_float("model", "omega", get("omega")),
    )
    for key, conv in (("delta_a", _to_float), ("delta_c", _to_float),
                      ("gamma", _to_float), ("kappa", _to_float)):
        if get(key) is not None:
            kwargs[key] = conv("model", key, get(key))
    if get("lambda") is not None:
        kwargs["wavelength"] = _to_float("model", "lambda", get("lambda"))
    if get("n_max") is not None:
        kwargs["n_max"] = _to_int("model", "n_max", get("n_max"))
    if get("positions") is not None:
        kwargs["positions"] = _parse_positions(get("positions"))
    try:
        return ModelParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[model] {exc}") from None


def _parse_values(cp) -> tuple:
    sweep = cp["sweep"]
    explicit = sweep.get("values")
    ruled = [k for k in ("min", "max", "count", "scale") if sweep.get(k) is not None]
    if explicit is not None and ruled:
        raise ConfigError("[sweep] give either 'values' or the min/max/count rule, not both")
    if explicit is not None:
        try:
            values = tuple(float(v) for v in explicit.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"[sweep] values: not numbers: {explicit!r}") from None
    else:
        for key in ("min", "max", "count"):
            if sweep.get(key) is None:
                raise ConfigError(f"[sweep] {key}: required when 'values' is absent")
        lo = _to_float("sweep", "min", sweep.get("min"))
        hi = _to_float("sweep", "max", sweep.get("max"))
        count = _to_int("sweep", "count", sweep.get("count"))
        scale = (sweep.get("scale") or "linear").strip().lower()
        if count < 1:
            raise ConfigError("[sweep] count: must be >= 1")
        if scale == "linear":
            values = tuple(np.linspace(lo, hi, count))
        elif scale == "log":
            if lo <= 0 or hi <= 0:
                raise ConfigError("[sweep] log scale needs positive min and max")
            values = tuple(np.geomspace(lo, hi, count))
        elif scale == "inverse":
            if lo == 0 or hi == 0:
                raise ConfigError("[sweep] inverse scale needs nonzero min and max")
            values = tuple(1.0 / np.linspace(1.0 / lo, 1.0 / hi, count))
        else:
            raise ConfigError(f"[sweep] scale: unknown rule {scale!r}")
    if not values:
        raise ConfigError("[sweep] values: empty")
    if not all(np.isfinite(values)):
        raise ConfigError("[sweep] values: must be finite")
    return values


def validate_spec(spec: SweepSpec) -> None:
    """Re-check a spec built in code against the same rules as parsed ones."""
    if spec.engine not in ENGINES:
        raise ConfigError(f"[sweep] engine: unknown engine {spec.engine!r}")
    for axis, values in ((spec.axis, spec.values), (spec.axis2, spec.values2)):
        if axis is None:
            if values not in (None, ()):
                raise ConfigError("[sweep] second axis values without a name")
            continue
        if axis not in AXES:
            raise ConfigError(f"[sweep] axis: unknown axis {axis!r}")
        if axis not in AXES_BY_ENGINE[spec.engine]:
            raise ConfigError(f"[sweep] axis {axis!r} not supported by engine {spec.engine!r}")
        if values is None or len(values) == 0:
            raise ConfigError("[sweep] values: empty")
        if not all(np.isfinite(values)):
            raise ConfigError("[sweep] values: must be finite")
        if axis == "N":
            if any(v < 0 for v in values):
                raise ConfigError("[sweep] values: atom numbers must be nonnegative")
            if spec.engine in ("quantum", "oracle", "semiclassical") \
                    and any(v != int(v) for v in values):
                raise ConfigError("[sweep] values: atom numbers must be integers")
            if spec.engine == "quantum" and max(values) > QUANTUM_ATOM_CAP:
                raise ConfigError(
                    f"[sweep] values: quantum engine caps N at {QUANTUM_ATOM_CAP} "
                    f"(got {int(max(values))})"
                )
        if axis == "x1" and spec.base.n_atoms < 1:
            raise ConfigError("[sweep] axis x1 needs at least one atom")
        if axis == "x2" and spec.base.n_atoms < 2:
            raise ConfigError("[sweep] axis x2 needs at least two atoms")
    if spec.engine == "quantum" and spec.base.n_atoms > QUANTUM_ATOM_CAP:
        raise ConfigError(
            f"[model] n_atoms: quantum engine caps N at {QUANTUM_ATOM_CAP}"
        )
    allowed = PROBE_OUTPUTS if spec.axis == "delta_p" else OUTPUTS_BY_ENGINE[spec.engine]
    for name in spec.outputs:
        if name not in allowed:
            raise ConfigError(
                f"[output] observables: {name!r} not available for engine "
                f"{spec.engine!r}" + (" with axis delta_p" if spec.axis == "delta_p" else "")
            )
    if not spec.outputs and spec.axis != "delta_p":
        pass  # metadata-only rows are allowed


def _parse_sweep(cp, model: ModelParams) -> SweepSpec:
    _check_keys(cp, "sweep", _SWEEP_KEYS)
    sweep = cp["sweep"]
    engine = (sweep.get("engine") or "").strip()
    if not engine:
        raise ConfigError("[sweep] engine: required")
    if engine not in ENGINES:
        raise ConfigError(f"[sweep] engine: unknown engine {engine!r}")
    axis = (sweep.get("axis") or "").strip()
    if not axis:
        raise ConfigError("[sweep] axis: required")
    values = _parse_values(cp)

    outputs = None
    crosscheck = False
    if cp.has_section("output"):
        _check_keys(cp, "output", _OUTPUT_KEYS)
        raw = cp["output"].get("observables")
        if raw is not None:
            outputs = tuple(v for v in raw.replace(",", " ").split() if v)
        if cp["output"].get("crosscheck") is not None:
            crosscheck = _to_bool("output", "crosscheck", cp["output"].get("crosscheck"))
    if outputs is None:
        outputs = PROBE_OUTPUTS if axis == "delta_p" else DEFAULT_OUTPUTS[engine]

    spec = SweepSpec(base=model, axis=axis, values=values, engine=engine,
                     outputs=outputs, crosscheck=crosscheck)
    validate_spec(spec)
    return spec


def _parse_map(cp) -> MapOptions:
    opts = MapOptions()
    if cp.has_section("map"):
        _check_keys(cp, "map", _MAP_KEYS)
        section = cp["map"]
        if section.get("nx") is not None:
            opts.nx = _to_int("map", "nx", section.get("nx"))
        if section.get("ny") is not None:
            opts.ny = _to_int("map", "ny", section.get("ny"))
        if section.get("alpha") is not None:
            try:
                opts.alpha = complex(section.get("alpha").replace(" ", ""))
            except ValueError:
                raise ConfigError(f"[map] alpha: not a complex number") from None
        if opts.nx < 2 or opts.ny < 2:
            raise ConfigError("[map] nx/ny: need at least 2 points per axis")
    return opts


def parse_document(text: str, require_sweep: bool = True) -> Document:
    """Parse a configuration document; see the module docstring for the grammar."""
    cp = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        interpolation=None,
        strict=True,
    )
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"parse error: {exc}") from None
    for section in cp.sections():
        if section not in ("model", "sweep", "output", "map"):
            raise ConfigError(f"unknown section: [{section}]")
    model = _parse_model(cp)
    sweep = None
    if cp.has_section("sweep"):
        sweep = _parse_sweep(cp, model)
    elif require_sweep:
        raise ConfigError("missing [sweep] section")
    if cp.has_section("output") and not cp.has_section("sweep"):
        raise ConfigError("[output] section without a [sweep] section")
    return Document(model=model, sweep=sweep, map_options=_parse_map(cp))


def parse_config(text: str) -> SweepSpec:
    """Parse and validate a sweep configuration document."""
    return parse_document(text, require_sweep=True).sweep
