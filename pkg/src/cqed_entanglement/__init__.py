"""Steady-state atom-field entanglement in weakly driven cavity QED.

Closed-form weak-drive amplitudes and witnesses (:mod:`.analytics`), a
dense Lindblad steady-state solver (:mod:`.master`), a quantum-jump
unraveling (:mod:`.trajectories`) and sweep/verification tooling
(:mod:`.sweep`), all sharing the operators of :mod:`.model`.
"""

__version__ = "0.1.0"

from .model import (DressedBasis, HilbertSpace, Operators, SystemParams, build_effective_hamiltonian,
                    build_operators, hermitian_hamiltonian, jump_operators)
from .analytics import (CorrelationSet, EntanglementReport, WeakDriveAmplitudes, closed_form_array,
                        concurrence_closed_form, correlation_set, detuned_amplitudes,
                        dressed_state_projection, entanglement_report, resonant_amplitudes,
                        schwarz_test, witness_identity_check)
from .master import (DensityOperator, Liouvillian, SteadyStateObservables, build_liouvillian,
                     coherence_amplitudes, normalized_correlations, observables, solve, steady_state,
                     truncation_convergence)
from .exceptions import (DegenerateCorrelation, DimensionTooLarge, InsufficientStatistics,
                         NonUniqueSteadyState, NotFound, NotUnimodal, StepTooLarge)
