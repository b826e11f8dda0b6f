"""qcascade: steady states and dark states of driven cascaded networks."""

from .operators import (DensityMatrix, Ket, Operator, embed, eig_hermitian,
                        partial_trace)
from .lindblad import (CascadeSpec, NodeSpec, SolverError, Superoperator,
                       build_liouvillian, evolve, expectation,
                       output_intensity, spectral_gap, steady_state)
from .absorber import (AbsorberResult, DarkStateReport, build_absorber,
                       check_dark_state, correlation_identity_check,
                       negative_counterpart, purification)
from .spins import (SpinNetworkSpec, TranspositionCircuit, apply_circuit,
                    build_spin_cascade, dark_state_for_profile,
                    dimer_chain_state, interpolate_profiles, pair_dark_state,
                    transposition_circuit, verify_form_invariance)
from .kerr import (DarkStateCoefficients, KerrSpec, alpha_closed_form,
                   alpha_recursion, dark_state_fock, entropy_map,
                   hypergeom_0F2, moments_ab, moments_cminus,
                   single_cavity_steady_state)
from .measures import (block_entropy, concurrence_2qubit, fidelity,
                       linear_entropy, purity)
from .trajectories import TrajectoryRecord, ensemble_expectation, mcwf_trajectories

__version__ = "0.1.0"
