"""
Closed-loop (Delta) coherent population trapping in warm alkali vapour.

Steady-state Lindblad solutions of a three-level system closed by a
microwave field, thermal averaging, probe propagation, spectra and
microwave sensing by spectrum inversion.
"""

__version__ = "0.1.0"

from .atomic_params import (ATOM_PRESETS, RB85_D1, RB85_D2, AtomSpec, MwFieldLab,
                            cg_coefficient, dbm_to_rabi, hyperfine_matrix_element,
                            mw_rabi_frequencies, rabi_to_dbm, vapor_density)
from .bloch import (DecayRates, FieldConfig, bloch_rhs, build_hamiltonian, build_liouvillian,
                    steady_state, time_evolve)
from .doppler import ThermalSpec, doppler_average, doppler_averaged_steady_state
from .analytic import (AnalyticParams, absorption_alpha, coherence_rho_ba,
                       propagate_closed_form, susceptibility)
from .propagation import CellSpec, propagate_svea, transmission
from .spectra import (LineshapeMetrics, Spectrum, SweepSpec, lineshape_metrics,
                      shift_vs_power, sweep)
from .sensing import FitProblem, FitResult, discriminator_slope, fit
