"""Hilbert space, operators, Hamiltonian and Lindblad generator.

Conventions used throughout the package:

* hbar = 1 and the atomic population decay rate ``gamma`` is the unit of
  rate and frequency, so every parameter is quoted in units of gamma.
* The frame rotates at the pump laser frequency; ``delta_a`` (atom) and
  ``delta_c`` (cavity) are laser detunings from the respective resonances.
* Dissipation is Lindblad form, D[c]rho = c rho c^+ - {c^+ c, rho}/2, with
  prefactor ``kappa`` on the mode and ``gamma`` on each atom separately.
  With this choice the photon number of an empty cavity decays at rate
  kappa (field amplitude at kappa/2) and the excited-state population of a
  free atom decays at rate gamma.  The closed-form steady-state results in
  :mod:`atomcavity.analytic` hold for exactly this normalisation.
* Atoms radiate into free space independently of each other (dilute
  pattern; no direct dipole-dipole coupling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

DEFAULT_DIM_CAP = 4096


class DimensionCapError(RuntimeError):
    """Requested tensor-product space exceeds the configured size cap."""


class TruncationError(RuntimeError):
    """Fock truncation too small for the state actually reached."""


def default_fock_levels(omega: float, g0: float) -> int:
    """Truncation that comfortably holds a near-coherent field of amplitude omega/g0."""
    a0 = abs(omega / g0) if g0 else 0.0
    return int(math.ceil(a0 * a0 + 6.0 * max(1.0, a0) + 4.0))


def _normalize_positions(positions, n_atoms):
    if positions is None:
        return tuple((0.0, 0.0) for _ in range(n_atoms))
    out = []
    for item in positions:
        if np.isscalar(item):
            out.append((float(item), 0.0))
        else:
            pair = tuple(float(c) for c in item)
            if len(pair) == 1:
                pair = (pair[0], 0.0)
            if len(pair) != 2:
                raise ValueError("positions entries must be x or (x, y)")
            out.append(pair)
    return tuple(out)


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the N-atom, single-mode model.

    All rates and frequencies are in units of gamma.  ``positions`` holds one
    (x, y) pair per atom: x along the cavity axis (sets the coupling through
    the mode function), y along the pump axis (sets the drive phase
    exp(i k y)).  A bare number is accepted per atom and means y = 0.
    ``n_max`` is the highest Fock level kept; when omitted a default based on
    the expected field amplitude omega/g0 is used.  The mode wavelength
    (config key ``lambda``) is stored as ``wavelength`` because of the Python
    keyword.
    """

    n_atoms: int
    g0: float
    omega: float
    delta_a: float = 0.0
    delta_c: float = 0.0
    gamma: float = 1.0
    kappa: float = 1.0
    wavelength: float = 1.0
    positions: tuple = None
    n_max: int = None

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 0:
            raise ValueError("n_atoms must be a nonnegative integer")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        for name in ("g0", "omega", "delta_a", "delta_c", "gamma", "kappa"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        pos = _normalize_positions(self.positions, self.n_atoms)
        if len(pos) != self.n_atoms:
            raise ValueError("positions length must equal n_atoms")
        if not all(math.isfinite(c) for xy in pos for c in xy):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "positions", pos)
        if self.n_max is None:
            object.__setattr__(self, "n_max", default_fock_levels(self.omega, self.g0))
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError("n_max must be an integer >= 1")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def dim(self) -> int:
        return (self.n_max + 1) * 2**self.n_atoms


def at_pattern(params: ModelParams, n_atoms: int = None, site: float = 0.0) -> ModelParams:
    """Copy of ``params`` with all atoms on the regular pattern at ``site``.

    The pattern places every atom at the same mode-function value (physical
    spacing of a whole wavelength is invisible to the model), with zero pump
    phase.
    """
    n = params.n_atoms if n_atoms is None else int(n_atoms)
    from dataclasses import replace

    return replace(params, n_atoms=n, positions=tuple((site, 0.0) for _ in range(n)))


def coupling_at(params: ModelParams, x: float) -> float:
    """Standing-wave coupling g0 cos(2 pi x / lambda).

    The position is reduced modulo the wavelength before evaluating the
    cosine, so shifting an atom by a whole wavelength reproduces the coupling
    exactly, not merely to rounding.
    """
    phase = math.fmod(x, params.wavelength) / params.wavelength
    return params.g0 * math.cos(2.0 * math.pi * phase)


def coupling_slope(params: ModelParams, x: float) -> float:
    """Spatial derivative of the coupling, -g0 k sin(2 pi x / lambda)."""
    phase = math.fmod(x, params.wavelength) / params.wavelength
    return -params.g0 * params.k * math.sin(2.0 * math.pi * phase)


@dataclass(frozen=True)
class OperatorSet:
    """Sparse mode and atom operators on the full tensor space.

    Ordering is field-first: basis index = fock_level * 2**N + atomic
    configuration, with atom bit n set when atom n is excited.  All matrices
    are CSR and must not be mutated after construction; they are safe to
    share between workers.
    """

    dim: int
    n_atoms: int
    n_max: int
    a: sp.csr_matrix
    a_dag: sp.csr_matrix
    sigma: tuple
    sigma_dag: tuple


@lru_cache(maxsize=16)
def _operator_cache(n_atoms: int, n_max: int) -> OperatorSet:
    nf = n_max + 1
    a_fock = sp.diags(np.sqrt(np.arange(1, nf, dtype=float)), 1).astype(complex)
    eye_atoms = sp.identity(2**n_atoms, format="csr", dtype=complex)
    eye_fock = sp.identity(nf, format="csr", dtype=complex)
    lower = sp.csr_matrix(np.array([[0, 1], [0, 0]], dtype=complex))
    eye2 = sp.identity(2, format="csr", dtype=complex)

    a = sp.kron(a_fock, eye_atoms, format="csr")
    sigma = []
    for n in range(n_atoms):
        op = eye_fock
        for m in range(n_atoms):
            op = sp.kron(op, lower if m == n else eye2, format="csr")
        sigma.append(op.tocsr())
    return OperatorSet(
        dim=nf * 2**n_atoms,
        n_atoms=n_atoms,
        n_max=n_max,
        a=a,
        a_dag=a.conj().T.tocsr(),
        sigma=tuple(sigma),
        sigma_dag=tuple(s.conj().T.tocsr() for s in sigma),
    )


def build_operators(params: ModelParams, max_dim: int = DEFAULT_DIM_CAP) -> OperatorSet:
    """Mode and per-atom ladder operators on the truncated tensor space.

    Raises :class:`DimensionCapError` when 2**N (n_max+1) exceeds ``max_dim``.
    """
    if params.dim > max_dim:
        raise DimensionCapError(
            f"Hilbert space dimension {params.dim} exceeds cap {max_dim} "
            f"(N={params.n_atoms}, n_max={params.n_max})"
        )
    return _operator_cache(params.n_atoms, params.n_max)


def build_hamiltonian(params: ModelParams, ops: OperatorSet = None) -> sp.csr_matrix:
    """Pump-frame Hamiltonian of the driven atoms-plus-mode system.

    H = -delta_c a^+ a + sum_n [ -delta_a sig+_n sig-_n
                                 + g(x_n) (sig+_n a + a^+ sig-_n)
                                 + (Omega_n sig+_n + Omega_n^* sig-_n) ]

    with Omega_n = omega exp(i k y_n).  Writing the atomic detuning on the
    excited-state projector rather than the ground-state one shifts the
    energy origin by a constant per atom and changes no dynamics.
    """
    if ops is None:
        ops = build_operators(params)
    h = (-params.delta_c) * (ops.a_dag @ ops.a)
    for n in range(params.n_atoms):
        x, y = params.positions[n]
        g = coupling_at(params, x)
        drive = params.omega * complex(np.exp(1j * params.k * y))
        sig = ops.sigma[n]
        sig_dag = ops.sigma_dag[n]
        h = h + (-params.delta_a) * (sig_dag @ sig)
        if g:
            h = h + g * (sig_dag @ ops.a + ops.a_dag @ sig)
        if drive:
            h = h + drive * sig_dag + np.conj(drive) * sig
    return h.tocsr()


@dataclass(frozen=True)
class Liouvillian:
    """Master-equation generator on row-major vectorised density matrices.

    ``matrix`` is dim^2 x dim^2 sparse; rho evolves as d vec(rho)/dt =
    matrix @ vec(rho) with vec = C-order flattening.  Immutable after build.
    """

    matrix: sp.csr_matrix
    params: ModelParams

    @property
    def dim(self) -> int:
        return self.params.dim


def _dissipator(c: sp.spmatrix, rate: float) -> sp.csr_matrix:
    # vec(A rho B) = (A kron B^T) vec(rho) for row-major vec
    cdc = (c.conj().T @ c).tocsr()
    eye = sp.identity(c.shape[0], format="csr", dtype=complex)
    return rate * (
        sp.kron(c, c.conj(), format="csr")
        - 0.5 * sp.kron(cdc, eye, format="csr")
        - 0.5 * sp.kron(eye, cdc.T, format="csr")
    )


def build_liouvillian(params: ModelParams, ops: OperatorSet = None,
                      hamiltonian: sp.spmatrix = None,
                      max_dim: int = DEFAULT_DIM_CAP) -> Liouvillian:
    """Generator of d rho/dt = -i[H, rho] + gamma sum_n D[sig-_n] rho + kappa D[a] rho.

    Each atom damps through its own Lindblad channel; the mode damps through
    D[a] at rate kappa.  The vectorised identity is a left null vector
    (trace preservation) by construction.
    """
    if ops is None:
        ops = build_operators(params, max_dim=max_dim)
    if hamiltonian is None:
        hamiltonian = build_hamiltonian(params, ops)
    eye = sp.identity(ops.dim, format="csr", dtype=complex)
    lmat = -1j * (sp.kron(hamiltonian, eye, format="csr")
                  - sp.kron(eye, hamiltonian.T, format="csr"))
    for sig in ops.sigma:
        lmat = lmat + _dissipator(sig, params.gamma)
    if params.kappa > 0:
        lmat = lmat + _dissipator(ops.a, params.kappa)
    return Liouvillian(matrix=lmat.tocsr(), params=params)
