"""Driven two-level atoms collectively coupled to a lossy standing-wave cavity.

The package computes, for N transversally pumped atoms coupled to one cavity
mode: exact master-equation steady states and their observables, the
closed-form weak-excitation field and populations with an independent
linear-response oracle, weak-probe spectra, and the semiclassical stability
of the wavelength-spaced atomic pattern.  Units: hbar = 1 and all rates in
units of the atomic decay rate gamma.
"""

__version__ = "0.1.0"

from .analytic import (DerivedScales, LinearSteadyState, OracleError,
                       ValidityWarning, WeakExcitationResult, alpha_weak,
                       derived_scales, free_space_population,
                       linear_response_oracle, oracle_intensities, pi_weak,
                       probe_peaks, probe_rate, probe_response_oracle,
                       weak_excitation)
from .config import ConfigError, SweepSpec, parse_config, parse_document
from .model import (DimensionCapError, Liouvillian, ModelParams, OperatorSet,
                    TruncationError, at_pattern, build_hamiltonian,
                    build_liouvillian, build_operators, coupling_at,
                    coupling_slope, default_fock_levels)
from .output import emit_csv, emit_plot, render_csv
from .semiclassical import (Configuration, FieldZeroMap, ScalingExponents,
                            StabilityReport, adiabatic_state, eq5_stiffness,
                            field_zero_map, force, force_jacobian, forces,
                            pattern_configuration, scaling_probe, stability)
from .steady import (DensityMatrix, EvolutionError, Observables,
                     SteadyStateError, coherent_vector, evolve, fock_vector,
                     observables, pure_density, reduced_field_state,
                     solve_steady, top_fock_population, vacuum_density)
from .sweep import (FIGURES, SweepResult, SweepRow, fig_command,
                    merge_results, run_sweep)

__all__ = [name for name in dir() if not name.startswith("_")]
