"""Qubus quantum error correction simulator.

Qubits interact only through coherent-state bus modes. States are kept as
superpositions of ``|qubit bits> (x) |coherent amplitudes>`` branches, which is
exact for the controlled rotations, displacements and Gaussian measurements
used here.
"""

from .codes import HeraldedFailure, SchemeParams, StabilizerCode, decode, encode, load_code, qec_cycle
from .noise import Fault, NoiseConfig
from .pauli import PauliFrame, PauliOperator
from .plans import SolverError, solve_homodyne_plan, solve_photon_plan
from .protocols import VerificationFailure, ft_measure_pauli, prepare_cat, run_parity_measurement, verify_cat
from .resources import ResourceTally
from .state import HybridMixedState, HybridPureState

__version__ = "0.1.0"

__all__ = [
    "Fault",
    "HeraldedFailure",
    "HybridMixedState",
    "HybridPureState",
    "NoiseConfig",
    "PauliFrame",
    "PauliOperator",
    "ResourceTally",
    "SchemeParams",
    "SolverError",
    "StabilizerCode",
    "VerificationFailure",
    "decode",
    "encode",
    "ft_measure_pauli",
    "load_code",
    "prepare_cat",
    "qec_cycle",
    "run_parity_measurement",
    "solve_homodyne_plan",
    "solve_photon_plan",
    "verify_cat",
]
