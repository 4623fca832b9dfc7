"""Closed-form steady-state results and independent linear-response oracles.

Everything here treats the collective dipole below saturation.  Two separate
derivation routes are provided on purpose: the printed formulas
(:func:`alpha_weak`, :func:`pi_weak`, :func:`probe_rate`) and numeric
linear-response solutions of the coupled oscillator equations
(:func:`linear_response_oracle`, :func:`probe_response_oracle`) that make no
use of those formulas.  Agreement between the two routes is part of the test
suite, not an assumption.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, coupling_at, _normalize_positions

# Factor by which |gamma/2 + i delta_a| must exceed sqrt(N) max(g, omega)
# before the weak-excitation formulas are considered trustworthy.
SATURATION_MARGIN = 3.0


class ValidityWarning(UserWarning):
    """Result evaluated outside the regime where its derivation is controlled."""


class OracleError(RuntimeError):
    """Linear-response system could not be solved to tolerance."""


@dataclass(frozen=True)
class WeakExcitationResult:
    """Below-saturation steady state of the driven pattern.

    alpha            complex cavity field amplitude
    pi_n             excited-state population of each (equivalent) atom
    i_cav, i_at      kappa |alpha|^2 and N gamma pi_n, in units of gamma
    s                coupling factor g^2 / (delta_a^2 + gamma^2/4)
    saturation_ok    False when the below-saturation condition is violated
                     (values are still returned; treat them as a guide only)
    """

    alpha: complex
    pi_n: float
    i_cav: float
    i_at: float
    s: float
    saturation_ok: bool


@dataclass(frozen=True)
class DerivedScales:
    """Characteristic numbers of the interference-dominated regime."""

    alpha0: complex
    n_critical: float
    coop_c: float
    coop_c1: float
    i_at_limit: float
    i_cav_limit: float


@dataclass(frozen=True)
class LinearSteadyState:
    """Numeric steady state of the coupled linear oscillator equations."""

    alpha: complex
    sigma_bar: np.ndarray
    positions: tuple
    residual: float


def _saturation_ok(params: ModelParams, n: float, g: float) -> bool:
    lhs = math.hypot(params.gamma / 2.0, params.delta_a)
    rhs = math.sqrt(max(n, 0.0)) * max(abs(g), abs(params.omega))
    return lhs >= SATURATION_MARGIN * rhs


def weak_excitation(params: ModelParams, n_atoms: float = None,
                    g: float = None) -> WeakExcitationResult:
    """Field amplitude and excited population for atoms on the pattern.

    ``n_atoms`` may be any nonnegative real (the atom number enters the
    closed forms algebraically, which allows smooth sweeps); it defaults to
    ``params.n_atoms``.  ``g`` is the common coupling at the pattern sites
    and defaults to g0, i.e. atoms at antinodes.  Note the prefactor of the
    field amplitude is omega/g0 regardless of ``g``: the constant-field limit
    -omega/g0 and the statement "pump and cavity field cancel at the atoms"
    coincide only for antinode sites.  Off-antinode patterns are supported by
    the numeric oracle instead.
    """
    n = float(params.n_atoms if n_atoms is None else n_atoms)
    if n < 0:
        raise ValueError("n_atoms must be nonnegative")
    if params.g0 == 0:
        raise ValueError("g0 = 0: weak-excitation closed forms need a coupled pattern")
    g = params.g0 if g is None else float(g)
    gam, det_a = params.gamma, params.delta_a
    s = g * g / (det_a * det_a + gam * gam / 4.0)
    atom_term = n * s * complex(gam / 2.0, det_a)
    loss_term = complex(params.kappa / 2.0, -params.delta_c)
    denom = atom_term + loss_term
    if denom == 0:
        raise ValueError(
            "indeterminate steady state: N s = 0 with kappa = 0 and delta_c = 0"
        )
    alpha = -(params.omega / params.g0) * (atom_term / denom)

    nominator = params.omega**2 / (gam * gam / 4.0 + det_a * det_a)
    loss_sq = params.kappa**2 / 4.0 + params.delta_c**2
    response_sq = (n * s * gam + params.kappa) ** 2 / 4.0 + (n * s * det_a - params.delta_c) ** 2
    pi_n = nominator * (loss_sq / response_sq)

    return WeakExcitationResult(
        alpha=alpha,
        pi_n=pi_n,
        i_cav=params.kappa * abs(alpha) ** 2,
        i_at=n * gam * pi_n,
        s=s,
        saturation_ok=_saturation_ok(params, n, g),
    )


def alpha_weak(params: ModelParams, n_atoms: float = None, g: float = None) -> complex:
    """Stationary cavity field amplitude of the driven pattern.

    alpha = -(omega/g0) * N s (gamma/2 + i delta_a)
            / [N s (gamma/2 + i delta_a) + kappa/2 - i delta_c]

    with s = g^2/(delta_a^2 + gamma^2/4).  For kappa = delta_c = 0 the ratio
    is exactly one and alpha = -omega/g0 independent of everything else.
    A :class:`ValidityWarning` is emitted when the collective dipole is not
    safely below saturation.
    """
    result = weak_excitation(params, n_atoms, g)
    if not result.saturation_ok:
        warnings.warn("collective dipole not safely below saturation; "
                      "weak-excitation alpha is only indicative",
                      ValidityWarning, stacklevel=2)
    return result.alpha


def pi_weak(params: ModelParams, n_atoms: float = None, g: float = None) -> float:
    """Excited-state occupation of each atom on the driven pattern.

    pi = [omega^2 / ((gamma/2)^2 + delta_a^2)]
         * [(kappa^2/4 + delta_c^2)
            / ((N s gamma + kappa)^2/4 + (N s delta_a - delta_c)^2)]

    The first factor is the free-space value (g = 0 reduces to it); the
    second is the collective suppression factor, which vanishes identically
    for kappa = delta_c = 0 and falls off as 1/N^2 for large N.
    """
    result = weak_excitation(params, n_atoms, g)
    if not result.saturation_ok:
        warnings.warn("collective dipole not safely below saturation; "
                      "weak-excitation pi is only indicative",
                      ValidityWarning, stacklevel=2)
    return result.pi_n


def derived_scales(params: ModelParams, n_atoms: float = None) -> DerivedScales:
    """Limit amplitude, critical atom number, cooperativities, limit intensities.

    alpha0       -omega/g0, the N-independent field that cancels the pump
    n_critical   |delta_c delta_a| / g0^2 (an order-of-magnitude scale)
    coop_c       N g0^2 / (gamma kappa)
    coop_c1      g0^2 / (2 gamma kappa), per atom
    i_at_limit   kappa |alpha0|^2 / (8 coop_c1)
    i_cav_limit  kappa |alpha0|^2 - i_at_limit, so the two add up exactly

    The intensity limits hold for delta_a = 0 and g >> gamma >> kappa.
    """
    n = float(params.n_atoms if n_atoms is None else n_atoms)
    if params.g0 == 0:
        raise ValueError("g0 = 0: derived scales are undefined without coupling")
    if not params.kappa > 0:
        raise ValueError("kappa must be positive for cooperativity parameters")
    alpha0 = complex(-params.omega / params.g0)
    c1 = params.g0**2 / (2.0 * params.gamma * params.kappa)
    total = params.kappa * abs(alpha0) ** 2
    i_at_limit = total / (8.0 * c1)
    return DerivedScales(
        alpha0=alpha0,
        n_critical=abs(params.delta_c * params.delta_a) / params.g0**2,
        coop_c=n * params.g0**2 / (params.gamma * params.kappa),
        coop_c1=c1,
        i_at_limit=i_at_limit,
        i_cav_limit=total - i_at_limit,
    )


def free_space_population(params: ModelParams) -> float:
    """Saturated steady-state excited population of a free driven atom,
    omega^2 / (2 omega^2 + gamma^2/4 + delta_a^2)."""
    return params.omega**2 / (2.0 * params.omega**2
                              + params.gamma**2 / 4.0 + params.delta_a**2)


def probe_rate(params: ModelParams, x: float, delta_p):
    """Scattering rate of a weak probe on an atom at x inside the driven system.

    w = gamma delta_p^2 / { [delta_p (delta_p + delta_a) - g(x)^2]^2
                            + delta_p^2 gamma^2 / 4 }

    Only the shape is physical: the overall constant is fixed to one.  The
    rate vanishes exactly at delta_p = 0 and peaks at the empty-cavity
    dressed-state energies (:func:`probe_peaks`).  The expression is derived
    for delta_c = 0 and kappa = 0; calling it elsewhere emits a
    :class:`ValidityWarning`.  ``delta_p`` may be a scalar or an array.
    """
    if params.delta_c != 0 or params.kappa != 0:
        warnings.warn("probe rate formula assumes delta_c = 0 and kappa = 0",
                      ValidityWarning, stacklevel=2)
    g = coupling_at(params, x)
    dp = np.asarray(delta_p, dtype=float)
    num = params.gamma * dp**2
    den = (dp * (dp + params.delta_a) - g * g) ** 2 + dp**2 * params.gamma**2 / 4.0
    out = np.zeros_like(dp, dtype=float)
    np.divide(num, den, out=out, where=den > 0)
    return float(out) if np.isscalar(delta_p) else out


def probe_peaks(params: ModelParams, x: float):
    """Probe detunings of the two scattering maxima, sorted ascending.

    These are the real roots of delta_p (delta_p + delta_a) = g(x)^2, i.e.
    the dressed-state energies of one atom in the empty cavity.  For
    g(x) = 0 the roots degenerate to (0, -delta_a) and a
    :class:`ValidityWarning` is emitted.
    """
    g = coupling_at(params, x)
    det = params.delta_a
    if g == 0:
        warnings.warn("coupling vanishes at x: degenerate probe peaks",
                      ValidityWarning, stacklevel=2)
        return (min(0.0, -det), max(0.0, -det))
    # roots of dp^2 + delta_a dp - g^2, evaluated cancellation-free
    disc = math.sqrt(det * det + 4.0 * g * g)
    big = -(det + math.copysign(disc, det)) / 2.0 if det != 0 else -math.sqrt(g * g)
    other = -(g * g) / big
    return (min(big, other), max(big, other))


def linear_response_oracle(params: ModelParams, positions=None,
                           drive_phases=None) -> LinearSteadyState:
    """Steady state of the coupled linear equations for arbitrary positions.

    Solves the (N+1)-dimensional complex system

        (gamma/2 - i delta_a) sig_n + i g(x_n) alpha = -i Omega_n
        (kappa/2 - i delta_c) alpha + i sum_n g(x_n) sig_n = 0

    which is the below-saturation limit of the full model and generalises the
    closed forms beyond the perfect pattern.  Omega_n = omega exp(i phi_n)
    with phi_n = k y_n from the positions unless ``drive_phases`` overrides
    them.  One step of iterative refinement is applied; the remaining
    residual is stored on the result and must be below 1e-12 relative.
    """
    pos = params.positions if positions is None else _normalize_positions(positions, 0)
    n = len(pos)
    g = np.array([coupling_at(params, x) for x, _ in pos], dtype=float)
    if drive_phases is None:
        phases = np.array([params.k * y for _, y in pos], dtype=float)
    else:
        phases = np.asarray(drive_phases, dtype=float)
        if phases.shape != (n,):
            raise ValueError("drive_phases must provide one phase per atom")
    drive = params.omega * np.exp(1j * phases)

    mat = np.zeros((n + 1, n + 1), dtype=complex)
    idx = np.arange(n)
    mat[idx, idx] = params.gamma / 2.0 - 1j * params.delta_a
    mat[:n, n] = 1j * g
    mat[n, :n] = 1j * g
    mat[n, n] = params.kappa / 2.0 - 1j * params.delta_c
    rhs = np.zeros(n + 1, dtype=complex)
    rhs[:n] = -1j * drive

    try:
        z = np.linalg.solve(mat, rhs)
        z = z + np.linalg.solve(mat, rhs - mat @ z)
    except np.linalg.LinAlgError as exc:
        raise OracleError(
            "singular linear-response system (dark resonance with kappa = "
            "delta_c = 0 and a fully cancelling geometry?)"
        ) from exc
    residual = float(np.linalg.norm(mat @ z - rhs)
                     / max(1.0, float(np.linalg.norm(rhs))))
    if not residual < 1e-12:
        raise OracleError(f"linear-response residual {residual:.3e} exceeds 1e-12")
    return LinearSteadyState(alpha=complex(z[n]), sigma_bar=z[:n],
                             positions=pos, residual=residual)


def oracle_intensities(params: ModelParams, state: LinearSteadyState):
    """(i_cav, i_at) of an oracle solution: kappa |alpha|^2, gamma sum |sig_n|^2."""
    i_cav = params.kappa * abs(state.alpha) ** 2
    i_at = params.gamma * float(np.sum(np.abs(state.sigma_bar) ** 2))
    return i_cav, i_at


def probe_response_oracle(params: ModelParams, x, delta_p_grid) -> np.ndarray:
    """Numeric weak-probe spectrum from the single-excitation resolvent.

    The probe drives the atom(s); the excitation amplitudes follow from
    inverting the non-Hermitian single-excitation matrix with diagonal
    entries -(delta_p + delta_a - delta_c) - i gamma/2 for each atom and
    -delta_p - i kappa/2 for the mode, coupled by g(x_n).  The returned rate
    is gamma times the summed squared atomic amplitudes, which for
    kappa = delta_c = 0 coincides with :func:`probe_rate` including
    normalisation.  ``x`` may be one coordinate or a sequence (collective
    case, equal probe phase on every atom).
    """
    xs = [x] if np.isscalar(x) else list(x)
    m = len(xs)
    g = np.array([coupling_at(params, xi) for xi in xs], dtype=float)
    dp = np.atleast_1d(np.asarray(delta_p_grid, dtype=float))
    if dp.size == 0:
        raise ValueError("empty probe detuning grid")

    mats = np.zeros((dp.size, m + 1, m + 1), dtype=complex)
    atom_diag = -(dp + params.delta_a - params.delta_c) - 0.5j * params.gamma
    idx = np.arange(m)
    mats[:, idx, idx] = atom_diag[:, None]
    mats[:, :m, m] = g
    mats[:, m, :m] = g
    mats[:, m, m] = -dp - 0.5j * params.kappa
    rhs = np.zeros((dp.size, m + 1), dtype=complex)
    rhs[:, :m] = 1.0

    try:
        amps = np.linalg.solve(mats, rhs)
    except np.linalg.LinAlgError:
        # isolated singular grid points (kappa = 0, g = 0, delta_p = 0)
        amps = np.full((dp.size, m + 1), np.nan, dtype=complex)
        for i in range(dp.size):
            try:
                amps[i] = np.linalg.solve(mats[i], rhs[i])
            except np.linalg.LinAlgError:
                pass
    return params.gamma * np.sum(np.abs(amps[:, :m]) ** 2, axis=1)
