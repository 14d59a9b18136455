"""Statevector simulator and experiment harness for quantum-simulated chaos.

Subpackages map onto the major concerns: `state` (amplitudes and gates),
`circuits` (QFT, modular arithmetic, diagonal phases), `maps` (cat map and
kicked systems), `oracle` (classical ground truth), `imperfections`
(static-Hamiltonian melting), `experiments`/`cli` (reproducible runs).
"""

from .circuits import (
    Circuit,
    GateCount,
    build_diagonal_phase,
    build_modular_adder,
    build_modular_subtractor,
    build_qft,
    count_gates,
    invert_circuit,
    lower_circuit,
)
from .maps import CatMapSpec, KickedMapSpec, build_cat_step, build_kicked_step, qubits_required
from .rng import Stream
from .state import (
    GateOp,
    NoiseSpec,
    RegisterLayout,
    StateVector,
    fidelity,
    marginal_distribution,
    new_basis_state,
    prepare_uniform,
    sample_measurement,
)

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "CatMapSpec",
    "GateCount",
    "GateOp",
    "KickedMapSpec",
    "NoiseSpec",
    "RegisterLayout",
    "StateVector",
    "Stream",
    "build_cat_step",
    "build_diagonal_phase",
    "build_kicked_step",
    "build_modular_adder",
    "build_modular_subtractor",
    "build_qft",
    "count_gates",
    "fidelity",
    "invert_circuit",
    "lower_circuit",
    "marginal_distribution",
    "new_basis_state",
    "prepare_uniform",
    "qubits_required",
    "sample_measurement",
]
