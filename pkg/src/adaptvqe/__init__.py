"""Statevector ADAPT-VQE toolkit: Pauli algebra, exact and noisy simulation,
operator pools, circuit synthesis and the adaptive variational loop."""

from .chem import (
    CHEMICAL_ACCURACY,
    MolecularProblem,
    OrbitalOrdering,
    estimate_shots,
    group_commuting,
    hartree_fock_state,
    load_h2,
    load_problem,
    make_shot_plan,
)
from .circuit import NOISELESS, Circuit, NoiseSpec, compile_exponential_sum, compile_pauli_exponential
from .engine import (
    AdaptConfig,
    Ansatz,
    AnsatzElement,
    EnergyEvaluator,
    OptimizerConfig,
    RunRecord,
    adapt_run,
    fixed_ansatz_vqe,
    gradient_at_zero,
    prepare,
    vqe_minimize,
)
from .errors import ContractViolation, DimensionError, ParseError, ResourceError, StalledPoolError
from .pauli import FermionSum, PauliString, PauliSum, commutator, jordan_wigner
from .pools import Pool, PoolOperator, build_pool
from .simstate import DensityMatrix, StateVector, exact_ground, expectation

__version__ = "0.1.0"
