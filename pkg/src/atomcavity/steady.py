"""Exact steady states and time evolution of the master equation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import Liouvillian, ModelParams, TruncationError, build_operators

# Below this photon number g2(0) is reported as undefined rather than 0/0.
G2_PHOTON_FLOOR = 1e-12

# Vectorised systems up to this size are solved densely (LAPACK); larger ones
# go through the sparse LU.
_DENSE_SOLVE_LIMIT = 4096


class SteadyStateError(RuntimeError):
    """Direct steady-state solve refused or failed."""


class EvolutionError(RuntimeError):
    """Time propagation lost accuracy (trace drift beyond tolerance)."""


@dataclass(frozen=True)
class DensityMatrix:
    """Dense density matrix plus the basis bookkeeping needed to interpret it."""

    matrix: np.ndarray
    n_atoms: int
    n_max: int

    @property
    def dim(self) -> int:
        return (self.n_max + 1) * 2**self.n_atoms

    def validate(self, herm_tol=1e-10, trace_tol=1e-10, psd_tol=1e-8):
        """Check Hermiticity, unit trace and positivity; raise ValueError if violated."""
        m = self.matrix
        if m.shape != (self.dim, self.dim):
            raise ValueError(f"density matrix shape {m.shape} does not match dim {self.dim}")
        herm = np.max(np.abs(m - m.conj().T))
        if not herm < herm_tol:
            raise ValueError(f"density matrix not Hermitian: deviation {herm:.3e}")
        tr = np.trace(m)
        if not abs(tr - 1.0) < trace_tol:
            raise ValueError(f"density matrix trace {tr} differs from 1")
        lo = float(np.linalg.eigvalsh(m)[0])
        if not lo > -psd_tol:
            raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")


def fock_vector(n_levels: int, n: int) -> np.ndarray:
    vec = np.zeros(n_levels, dtype=complex)
    vec[n] = 1.0
    return vec


def coherent_vector(n_levels: int, beta: complex) -> np.ndarray:
    """Truncated coherent-state amplitudes, renormalised on the kept levels."""
    amps = np.empty(n_levels, dtype=complex)
    amps[0] = 1.0
    for n in range(1, n_levels):
        amps[n] = amps[n - 1] * beta / math.sqrt(n)
    return amps / np.linalg.norm(amps)


def pure_density(vec: np.ndarray, n_atoms: int, n_max: int) -> DensityMatrix:
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    return DensityMatrix(np.outer(vec, vec.conj()), n_atoms, n_max)


def vacuum_density(params: ModelParams) -> DensityMatrix:
    """All atoms in the ground state, no photons."""
    vec = np.zeros(params.dim, dtype=complex)
    vec[0] = 1.0
    return pure_density(vec, params.n_atoms, params.n_max)


def top_fock_population(rho: DensityMatrix) -> float:
    """Population of the highest kept Fock level (truncation-adequacy figure)."""
    block = 2**rho.n_atoms
    return float(np.real(np.trace(rho.matrix[-block:, -block:])))


def _frobenius(mat: sp.spmatrix) -> float:
    return float(np.sqrt(np.sum(np.abs(mat.data) ** 2)))


def solve_steady(liouvillian: Liouvillian, residual_tol: float = 1e-10,
                 truncation_tol: float = 1e-8,
                 check_truncation: bool = True) -> DensityMatrix:
    """Unique steady state of the master equation (kappa > 0).

    The kernel element with unit trace is found by replacing the last row of
    the vectorised generator with the trace constraint and solving the
    resulting nonsingular system directly.  kappa = 0 is refused: the kernel
    is then degenerate and the stationary state depends on the initial one
    (use :func:`evolve`).

    Raises :class:`SteadyStateError` with the residual (and, for small
    systems, the numerically estimated kernel dimension) when the solve does
    not meet ``residual_tol`` relative to the generator's Frobenius norm, and
    :class:`TruncationError` when the top Fock level holds more than
    ``truncation_tol`` population.
    """
    params = liouvillian.params
    if params.kappa <= 0:
        raise SteadyStateError(
            "kappa = 0 has no unique kernel element; propagate with evolve() instead"
        )
    lmat = liouvillian.matrix.tocoo()
    nsq = lmat.shape[0]
    dim = params.dim

    keep = lmat.row != nsq - 1
    trace_cols = np.arange(dim) * dim + np.arange(dim)
    rows = np.concatenate([lmat.row[keep], np.full(dim, nsq - 1)])
    cols = np.concatenate([lmat.col[keep], trace_cols])
    data = np.concatenate([lmat.data[keep], np.ones(dim, dtype=complex)])
    rhs = np.zeros(nsq, dtype=complex)
    rhs[-1] = 1.0

    if nsq <= _DENSE_SOLVE_LIMIT:
        system = sp.coo_matrix((data, (rows, cols)), shape=(nsq, nsq)).toarray()
        vec = np.linalg.solve(system, rhs)
    else:
        system = sp.csc_matrix((data, (rows, cols)), shape=(nsq, nsq))
        vec = spla.spsolve(system, rhs)

    residual = float(np.linalg.norm(liouvillian.matrix @ vec))
    scale = _frobenius(liouvillian.matrix)
    if not residual < residual_tol * scale:
        detail = ""
        if nsq <= _DENSE_SOLVE_LIMIT:
            svals = np.linalg.svd(liouvillian.matrix.toarray(), compute_uv=False)
            kernel_dim = int(np.sum(svals < 1e-10 * svals[0]))
            detail = f"; estimated kernel dimension {kernel_dim}"
        raise SteadyStateError(
            f"steady-state solve failed: residual {residual:.3e} "
            f"(tolerance {residual_tol * scale:.3e}){detail}"
        )

    rho = vec.reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.real(np.trace(rho))
    state = DensityMatrix(rho, params.n_atoms, params.n_max)
    state.validate()
    if check_truncation:
        top = top_fock_population(state)
        if not top < truncation_tol:
            raise TruncationError(
                f"top Fock level n_max={params.n_max} holds population "
                f"{top:.3e} >= {truncation_tol:.1e}; increase n_max"
            )
    return state


def evolve(liouvillian: Liouvillian, rho0: DensityMatrix, t_final: float,
           dt_max: float = None, trace_tol: float = 1e-8) -> DensityMatrix:
    """Propagate ``rho0`` to ``t_final`` under the master equation.

    Uses the exact action of the generator exponential (Krylov/Taylor with
    internal step control, machine accurate).  ``dt_max`` optionally splits
    the interval so the trace drift is monitored along the way; drift beyond
    ``trace_tol`` raises :class:`EvolutionError`.  Works for kappa = 0, which
    is how the pure-state limit of the model is reached in practice.
    """
    if t_final < 0:
        raise ValueError("t_final must be nonnegative")
    vec = rho0.matrix.reshape(-1).astype(complex)
    if t_final > 0:
        n_steps = 1 if dt_max is None else max(1, math.ceil(t_final / dt_max))
        step_gen = (liouvillian.matrix * (t_final / n_steps)).tocsc()
        dim = rho0.dim
        trace_idx = np.arange(dim) * dim + np.arange(dim)
        for _ in range(n_steps):
            vec = spla.expm_multiply(step_gen, vec)
            drift = abs(vec[trace_idx].sum() - 1.0)
            if not drift < trace_tol:
                raise EvolutionError(f"trace drift {drift:.3e} exceeds {trace_tol:.1e}")
    dim = rho0.dim
    rho = vec.reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.real(np.trace(rho))
    return DensityMatrix(rho, rho0.n_atoms, rho0.n_max)


def reduced_field_state(rho: DensityMatrix) -> np.ndarray:
    """Partial trace over all atoms; returns the (n_max+1)^2 field matrix."""
    nf = rho.n_max + 1
    na = 2**rho.n_atoms
    return np.einsum("iaja->ij", rho.matrix.reshape(nf, na, nf, na))


@dataclass(frozen=True)
class Observables:
    """Steady-state signals extracted from a density matrix.

    i_cav              kappa <a^+ a>          (cavity output, units of gamma)
    i_at               gamma sum_n <sig+ sig->  (total fluorescence)
    mean_photons       <a^+ a>
    field              <a>
    g2                 <a^+ a^+ a a> / <a^+ a>^2, or None below the photon floor
    pi_n               per-atom excited populations
    coherent_fidelity  overlap of the reduced field state with |<a>>
    """

    i_cav: float
    i_at: float
    mean_photons: float
    field: complex
    g2: float | None
    pi_n: tuple
    coherent_fidelity: float


def observables(rho: DensityMatrix, params: ModelParams) -> Observables:
    """Compute every reported observable from a state.

    g2 at vanishing photon number is undefined (0/0); it is returned as
    ``None`` rather than raising, so sweeps can flag the point and continue.
    """
    ops = build_operators(params)
    rho_f = reduced_field_state(rho)
    pops = np.clip(np.real(np.diag(rho_f)), 0.0, None)
    levels = np.arange(pops.size, dtype=float)
    mean_photons = float(pops @ levels)
    pair_moment = float(pops @ (levels * (levels - 1.0)))
    a_f = np.diag(np.sqrt(np.arange(1, pops.size, dtype=float)), 1)
    field = complex(np.trace(rho_f @ a_f))

    g2 = pair_moment / mean_photons**2 if mean_photons >= G2_PHOTON_FLOOR else None

    pi_n = []
    for n in range(params.n_atoms):
        proj = (ops.sigma_dag[n] @ ops.sigma[n]).tocsr()
        pi_n.append(float(np.real(proj.multiply(rho.matrix.T).sum())))

    coh = coherent_vector(pops.size, field)
    fidelity = float(np.clip(np.real(coh.conj() @ rho_f @ coh), 0.0, 1.0))

    return Observables(
        i_cav=params.kappa * mean_photons,
        i_at=params.gamma * float(np.sum(pi_n)),
        mean_photons=mean_photons,
        field=field,
        g2=None if g2 is None else float(g2),
        pi_n=tuple(pi_n),
        coherent_fidelity=fidelity,
    )
