"""Mechanical analysis of the atomic pattern: forces, stability, field zeros.

The atoms are treated as classical point particles whose internal state and
the cavity field follow the positions adiabatically (they are taken from the
linear-response steady state at the instantaneous configuration).  The dipole
force on atom n is then

    F_n = -dg/dx(x_n) * 2 Re(alpha* sig_n)

in units hbar = 1, i.e. the gradient of the coupling term of the energy
evaluated on the adiabatic amplitudes.  This is the minimal model that
carries the sign and parameter scalings of the pattern's restoring force;
the test suite measures those scalings instead of assuming them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .analytic import LinearSteadyState, ValidityWarning, linear_response_oracle
from .model import ModelParams, _normalize_positions, coupling_slope

# Central finite-difference step for position derivatives, in wavelengths.
FD_STEP_FRACTION = 1e-5


@dataclass(frozen=True)
class Configuration:
    """Atom positions under study, with the model parameters they live in."""

    params: ModelParams
    positions: tuple

    def __post_init__(self):
        pos = _normalize_positions(self.positions, self.params.n_atoms)
        if len(pos) != self.params.n_atoms:
            raise ValueError("configuration must place every atom")
        if not all(math.isfinite(c) for xy in pos for c in xy):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "positions", pos)

    @property
    def n_atoms(self) -> int:
        return self.params.n_atoms


def pattern_configuration(params: ModelParams, n_atoms: int = None,
                          site: float = 0.0) -> Configuration:
    """Regular pattern: every atom at the same mode-function site (default antinode)."""
    from .model import at_pattern

    p = at_pattern(params, n_atoms=n_atoms, site=site)
    return Configuration(p, p.positions)


@dataclass(frozen=True)
class StabilityReport:
    """Forces, stiffness matrix and the closed-form stiffness estimate.

    eq5_estimate is 2 k^2 (omega/g0)^2 delta_c / N, the leading-order
    diagonal stiffness of the perfect pattern far off resonance; it is only
    meaningful when the configuration is close to a pattern
    (``eq5_applicable``).
    """

    forces: np.ndarray
    jacobian: np.ndarray
    max_eig_real: float
    stable: bool
    eq5_estimate: float
    eq5_applicable: bool


def adiabatic_state(config: Configuration) -> LinearSteadyState:
    """Field and dipole amplitudes that follow the configuration adiabatically.

    Thin wrapper over :func:`atomcavity.analytic.linear_response_oracle`; a
    :class:`ValidityWarning` flags configurations driven too close to atomic
    resonance (|delta_a| < 10 gamma) for the adiabatic treatment to be safe.
    """
    p = config.params
    if abs(p.delta_a) < 10.0 * p.gamma:
        warnings.warn("adiabatic force model assumes far-off-resonant driving "
                      "(|delta_a| >= 10 gamma)", ValidityWarning, stacklevel=2)
    return linear_response_oracle(p, positions=config.positions)


def forces(config: Configuration) -> np.ndarray:
    """Adiabatic dipole force on every atom, -dg/dx 2 Re(alpha* sig_n)."""
    state = adiabatic_state(config)
    slopes = np.array([coupling_slope(config.params, x) for x, _ in config.positions])
    return -slopes * 2.0 * np.real(np.conj(state.alpha) * state.sigma_bar)


def force(config: Configuration, n: int) -> float:
    """Force on atom n at the configuration."""
    if not 0 <= n < config.n_atoms:
        raise IndexError(f"atom index {n} out of range")
    return float(forces(config)[n])


def _displaced(config: Configuration, m: int, dx: float) -> Configuration:
    pos = list(config.positions)
    pos[m] = (pos[m][0] + dx, pos[m][1])
    return Configuration(config.params, tuple(pos))


def force_jacobian(config: Configuration, step: float = None) -> np.ndarray:
    """Stiffness matrix dF_n/dx_m by central differences of the adiabatic force.

    The default step is 1e-5 wavelengths; the adiabatic amplitudes are
    recomputed self-consistently at each displaced configuration.
    """
    h = FD_STEP_FRACTION * config.params.wavelength if step is None else step
    n = config.n_atoms
    jac = np.zeros((n, n))
    for m in range(n):
        f_plus = forces(_displaced(config, m, +h))
        f_minus = forces(_displaced(config, m, -h))
        jac[:, m] = (f_plus - f_minus) / (2.0 * h)
    return jac


def _near_pattern(config: Configuration) -> bool:
    # all atoms strictly inside a quarter wavelength of an antinode, with the
    # couplings all of one sign (a coherent pattern, possibly the shifted one)
    lam = config.params.wavelength
    signs = set()
    for x, _ in config.positions:
        frac = math.fmod(x, lam) / lam  # in (-1, 1)
        dist = min(abs(frac - c) for c in (-1.0, -0.5, 0.0, 0.5, 1.0))
        if not dist < 0.25:
            return False
        signs.add(math.cos(2.0 * math.pi * frac) > 0)
    return len(signs) <= 1


def eq5_stiffness(params: ModelParams, n_atoms: int = None) -> float:
    """Leading-order diagonal stiffness of the pattern, 2 k^2 (omega/g0)^2 delta_c / N."""
    n = params.n_atoms if n_atoms is None else n_atoms
    if n <= 0 or params.g0 == 0:
        raise ValueError("stiffness estimate needs atoms and a finite coupling")
    return 2.0 * params.k**2 * (params.omega / params.g0) ** 2 * params.delta_c / n


def stability(config: Configuration, step: float = None) -> StabilityReport:
    """Assess mechanical stability of a configuration.

    Stability is read off the stiffness matrix in the overdamped sense: the
    configuration is stable when every eigenvalue has a negative real part.
    Any configuration is accepted; the closed-form estimate is marked
    inapplicable when the atoms are not near a coherent pattern.
    """
    f = forces(config)
    jac = force_jacobian(config, step=step)
    eigs = np.linalg.eigvals(jac)
    max_re = float(np.max(eigs.real))
    applicable = config.n_atoms > 0 and _near_pattern(config)
    estimate = (eq5_stiffness(config.params, config.n_atoms)
                if config.n_atoms > 0 and config.params.g0 != 0 else math.nan)
    return StabilityReport(
        forces=f,
        jacobian=jac,
        max_eig_real=max_re,
        stable=max_re < 0.0,
        eq5_estimate=estimate,
        eq5_applicable=applicable,
    )


@dataclass(frozen=True)
class ScalingExponents:
    """Fitted power laws of the pattern stiffness."""

    n_exponent: float
    omega_exponent: float


def _diagonal_stiffness(params: ModelParams, n_atoms: int) -> float:
    """dF_0/dx_0 of the pattern with n_atoms atoms (two oracle solves)."""
    config = pattern_configuration(params, n_atoms=n_atoms)
    h = FD_STEP_FRACTION * params.wavelength
    f_plus = forces(_displaced(config, 0, +h))[0]
    f_minus = forces(_displaced(config, 0, -h))[0]
    return (f_plus - f_minus) / (2.0 * h)


def scaling_probe(params: ModelParams, n_list, omega_list) -> ScalingExponents:
    """Fit the stiffness power laws in atom number and pump strength.

    Log-log fits of |dF/dx| on the pattern against N (at the given pump) and
    against omega (at ``params.n_atoms`` atoms).  In the interference-
    dominated regime the exponents approach -1 and +2.  Requires at least
    three values per fit.
    """
    from dataclasses import replace

    n_list = [int(n) for n in n_list]
    omega_list = [float(w) for w in omega_list]
    if len(n_list) < 3 or len(omega_list) < 3:
        raise ValueError("need at least three points per fitted axis")

    stiff_n = [abs(_diagonal_stiffness(params, n)) for n in n_list]
    stiff_w = [abs(_diagonal_stiffness(replace(params, omega=w), params.n_atoms))
               for w in omega_list]
    n_exp = np.polyfit(np.log(n_list), np.log(stiff_n), 1)[0]
    w_exp = np.polyfit(np.log(omega_list), np.log(stiff_w), 1)[0]
    return ScalingExponents(n_exponent=float(n_exp), omega_exponent=float(w_exp))


@dataclass(frozen=True)
class FieldZeroMap:
    """Total-field intensity on a grid and the refined zero locations.

    ``intensity[i, j]`` is |E(x[i], y[j])|^2.  ``zeros`` is an (m, 2) array
    sorted lexicographically; every row satisfies
    |E|^2 < zero_threshold * peak_intensity.
    """

    x: np.ndarray
    y: np.ndarray
    intensity: np.ndarray
    zeros: np.ndarray
    peak_intensity: float


def _total_field(params: ModelParams, alpha: complex, x, y):
    k = params.k
    return params.g0 * np.cos(k * np.asarray(x)) * alpha \
        + params.omega * np.exp(1j * k * np.asarray(y))


def field_zero_map(params: ModelParams, x_grid=None, y_grid=None,
                   alpha: complex = None, zero_threshold: float = 1e-16) -> FieldZeroMap:
    """Map |E_tot|^2 over the cavity/pump plane and locate its exact zeros.

    E_tot(x, y) = g0 cos(kx) alpha + omega exp(iky), the cavity field at
    amplitude ``alpha`` (default -omega/g0, the interference value) plus the
    transverse pump.  This is the two-dimensional section -- cavity axis
    times pump axis -- of the three-dimensional dark-spot lattice; with the
    interference amplitude the zeros form a checkerboard with lambda/2
    spacing between adjacent dark planes.

    Grid minima are refined with a least-squares zero search on
    (Re E, Im E); only points reaching ``zero_threshold`` times the peak
    intensity are reported.
    """
    if alpha is None:
        if params.g0 == 0:
            raise ValueError("default interference amplitude needs g0 != 0")
        alpha = -params.omega / params.g0
    lam = params.wavelength
    x = np.linspace(0.0, lam, 121, endpoint=False) if x_grid is None \
        else np.asarray(x_grid, dtype=float)
    y = np.linspace(0.0, lam, 121, endpoint=False) if y_grid is None \
        else np.asarray(y_grid, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValueError("empty grid")

    xx, yy = np.meshgrid(x, y, indexing="ij")
    field = _total_field(params, alpha, xx, yy)
    intensity = np.abs(field) ** 2
    peak = float(intensity.max())
    if peak == 0.0:
        return FieldZeroMap(x, y, intensity, np.empty((0, 2)), 0.0)

    padded = np.pad(intensity, 1, mode="edge")
    local_min = np.ones_like(intensity, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            shifted = padded[1 + di:1 + di + intensity.shape[0],
                             1 + dj:1 + dj + intensity.shape[1]]
            local_min &= intensity <= shifted
    candidates = np.argwhere(local_min & (intensity < 1e-4 * peak))

    def residuals(p):
        e = _total_field(params, alpha, p[0], p[1])
        return [e.real, e.imag]

    zeros = []
    for i, j in candidates:
        sol = least_squares(residuals, x0=[xx[i, j], yy[i, j]],
                            xtol=1e-15, ftol=1e-15, gtol=None, method="lm")
        value = abs(_total_field(params, alpha, sol.x[0], sol.x[1])) ** 2
        if value < zero_threshold * peak:
            zeros.append((sol.x[0], sol.x[1]))

    deduped = []
    tol = 1e-6 * lam
    for z in sorted(zeros):
        if all(math.hypot(z[0] - d[0], z[1] - d[1]) > tol for d in deduped):
            deduped.append(z)
    return FieldZeroMap(x, y, intensity, np.array(deduped).reshape(-1, 2), peak)
