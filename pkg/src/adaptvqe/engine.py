"""Variational loops: fixed-ansatz VQE, the ADAPT growth loop and its
removal / conservative variants."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .chem import MolecularProblem, group_commuting, hartree_fock_state, make_shot_plan
from .circuit import NOISELESS, Circuit, NoiseSpec, compile_exponential_sum, execute_density, sample_pauli
from .errors import ContractViolation, StalledPoolError
from .pauli import PauliSum, commutator
from .pools import Pool
from .simstate import DensityMatrix, StateVector, exact_ground, expectation, expm_action

ZERO_GRADIENT = 1e-10


# ------------------------------------------------------------ ansatz


@dataclass
class AnsatzElement:
    pool_index: int
    operator: PauliSum
    parameter: float = 0.0
    added_at_iteration: int = 0
    gradient_at_selection: float = 0.0
    delta_e: float = math.nan

    @property
    def performance_ratio(self) -> float:
        if math.isnan(self.delta_e) or self.gradient_at_selection == 0:
            return math.nan
        return abs(self.delta_e / self.gradient_at_selection)


@dataclass
class Ansatz:
    """Element 0 acts first on the reference state."""

    elements: list[AnsatzElement] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def operators(self) -> list[PauliSum]:
        return [e.operator for e in self.elements]

    @property
    def parameters(self) -> np.ndarray:
        return np.array([e.parameter for e in self.elements], dtype=float)

    def with_parameters(self, params: Sequence[float]) -> "Ansatz":
        return Ansatz([replace(e, parameter=float(t)) for e, t in zip(self.elements, params, strict=True)])

    def copy(self) -> "Ansatz":
        return Ansatz([replace(e) for e in self.elements])

    def cnot_count(self) -> int:
        # ladder synthesis: 2 (w - 1) CNOTs per string
        return sum(2 * (p.weight - 1) for e in self.elements for p in e.operator.strings if p.weight)


def prepare(ansatz: Ansatz, reference: StateVector) -> StateVector:
    """``exp(t_n A_n) ... exp(t_1 A_1) |reference>``."""
    return prepare_with(ansatz.operators, ansatz.parameters, reference)


def prepare_with(operators: Sequence[PauliSum], params: Sequence[float], reference: StateVector) -> StateVector:
    vec = reference.amplitudes
    for op, theta in zip(operators, params, strict=True):
        if not np.isfinite(theta):
            raise ContractViolation("ansatz parameters must be finite")
        vec = expm_action(op, float(theta), vec)
    return StateVector(reference.n_qubits, vec)


def ansatz_circuit(operators: Sequence[PauliSum], params: Sequence[float], reference: StateVector) -> Circuit:
    """Reference preparation by X gates followed by one ladder block per element."""
    idx = int(np.argmax(np.abs(reference.amplitudes)))
    if abs(abs(reference.amplitudes[idx]) - 1) > 1e-12:
        raise ContractViolation("circuit execution needs a computational-basis reference")
    circ = Circuit(reference.n_qubits)
    for k in range(reference.n_qubits):
        if idx >> k & 1:
            circ.append("X", k)
    for op, theta in zip(operators, params, strict=True):
        circ.extend(compile_exponential_sum(op, float(theta)))
    return circ


# ------------------------------------------------------------ evaluation


class EnergyEvaluator:
    """Energies and gradients, either exact or estimated from shots.

    Sampled mode measures qubitwise-commuting groups of an observable; each
    string gets ``shots`` shots, or a share of ``plan_total`` proportional
    to its coefficient.  With gate noise the ansatz is compiled and run as
    a density matrix; otherwise the exact statevector is sampled.
    """

    def __init__(
        self,
        hamiltonian: PauliSum,
        reference: StateVector,
        mode: str = "exact",
        shots: int | None = None,
        noise: NoiseSpec = NOISELESS,
        seed: int = 0,
        plan_total: int | None = None,
    ):
        if mode not in ("exact", "sampled"):
            raise ValueError("mode must be 'exact' or 'sampled'")
        if mode == "sampled" and not (shots or plan_total):
            raise ContractViolation("sampled mode needs shots or plan_total")
        if not hamiltonian.is_hermitian():
            raise ContractViolation("Hamiltonian must be Hermitian")
        self.hamiltonian = hamiltonian
        self.reference = reference
        self.mode = mode
        self.shots = shots
        self.plan_total = plan_total
        self.noise = noise
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self.evaluations = 0
        self.shots_used = 0
        self._groups: dict[int, list] = {}

    @classmethod
    def for_problem(cls, problem: MolecularProblem, **kw) -> "EnergyEvaluator":
        return cls(problem.hamiltonian, hartree_fock_state(problem), **kw)

    @property
    def n_qubits(self) -> int:
        return self.hamiltonian.n_qubits

    def state(self, operators: Sequence[PauliSum], params: Sequence[float]) -> StateVector | DensityMatrix:
        if self.mode == "sampled" and self.noise.has_gate_noise:
            return execute_density(ansatz_circuit(operators, params, self.reference), self.noise)
        return prepare_with(operators, params, self.reference)

    def expect(self, observable: PauliSum, state: StateVector | DensityMatrix) -> float:
        if self.mode == "exact":
            return expectation(observable, state)
        return self._sample(observable, state)

    def _sample(self, observable: PauliSum, state) -> float:
        key = id(observable)
        if key not in self._groups:
            groups = group_commuting(observable, "qubitwise")
            if self.plan_total:
                alloc = make_shot_plan(observable, self.plan_total).per_string
            else:
                alloc = {p: self.shots for g in groups for p in g}
            self._groups[key] = (observable, [(g, max(1, max(alloc.get(p, 0) for p in g))) for g in groups])
        _, groups = self._groups[key]
        total = observable.identity_coefficient().real
        for strings, shots in groups:
            seed = int(self._rng.integers(2**63))
            est = sample_pauli(strings, state, shots, self.noise, seed)
            total += sum(observable.coefficient(p).real * est[p].value for p in strings)
            self.shots_used += shots
        return float(total)

    def energy(self, operators: Sequence[PauliSum], params: Sequence[float]) -> float:
        self.evaluations += 1
        return self.expect(self.hamiltonian, self.state(operators, params))

    def exact_energy(self, operators: Sequence[PauliSum], params: Sequence[float]) -> float:
        return expectation(self.hamiltonian, prepare_with(operators, params, self.reference))


def gradient_at_zero(
    op: PauliSum, state: StateVector | DensityMatrix, h: PauliSum, evaluator: EnergyEvaluator | None = None
) -> float:
    """``dE/dt`` at ``t = 0`` for appending ``exp(t op)``.

    Exact: ``2 Re <psi|H A|psi>``.  Sampled: the commutator ``[H, A]`` is
    expanded into Pauli strings and estimated like an energy.
    """
    if evaluator is None or evaluator.mode == "exact":
        if isinstance(state, DensityMatrix):
            return float(np.real(np.trace(state.matrix @ commutator(h, op).to_dense())))
        psi = state.amplitudes
        return float(2 * np.real(np.vdot(h.sparse @ psi, op.sparse @ psi)))
    return evaluator.expect(commutator(h, op), state)


# ------------------------------------------------------------ optimization


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "quasi_newton_fd"  # or "nelder_mead"
    max_evaluations: int = 20000
    x_tolerance: float = 1e-8
    f_tolerance: float = 1e-12
    initial_simplex_scale: float = 0.1
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.kind not in ("nelder_mead", "quasi_newton_fd"):
            raise ValueError(f"unknown optimizer {self.kind!r}")
        if min(self.x_tolerance, self.f_tolerance, self.initial_simplex_scale, self.fd_step) <= 0:
            raise ValueError("optimizer tolerances must be positive")


@dataclass
class VQEResult:
    params: np.ndarray
    energy: float
    evaluations: int
    converged: bool


class _Budget(Exception):
    pass


def minimize_function(fun: Callable[[np.ndarray], float], x0: Sequence[float], cfg: OptimizerConfig) -> VQEResult:
    """Minimize ``fun`` and keep the best point seen."""
    x0 = np.asarray(x0, dtype=float)
    best = [math.inf, x0.copy()]
    count = [0]

    def wrapped(x):
        if count[0] >= cfg.max_evaluations:
            raise _Budget
        count[0] += 1
        f = fun(x)
        if f < best[0]:
            best[0], best[1] = f, np.array(x, dtype=float)
        return f

    if x0.size == 0:
        f = wrapped(x0)
        return VQEResult(x0, f, 1, True)
    converged = True
    try:
        if cfg.kind == "nelder_mead":
            simplex = np.vstack([x0, x0 + cfg.initial_simplex_scale * np.eye(x0.size)])
            res = optimize.minimize(
                wrapped,
                x0,
                method="Nelder-Mead",
                options={
                    "initial_simplex": simplex,
                    "xatol": cfg.x_tolerance,
                    "fatol": cfg.f_tolerance,
                    "maxfev": cfg.max_evaluations,
                    "maxiter": cfg.max_evaluations,
                },
            )
        else:
            h = cfg.fd_step

            def jac(x):
                # central differences: O(h^2) error keeps gradients usable near 1e-8
                g = np.empty_like(x)
                for k in range(x.size):
                    e = np.zeros_like(x)
                    e[k] = h
                    g[k] = (wrapped(x + e) - wrapped(x - e)) / (2 * h)
                return g

            res = optimize.minimize(
                wrapped,
                x0,
                jac=jac,
                method="BFGS",
                options={"gtol": max(cfg.f_tolerance, 1e-10), "maxiter": cfg.max_evaluations},
            )
        converged = bool(res.success) or cfg.kind == "quasi_newton_fd" and res.status == 2
    except _Budget:
        converged = False
    return VQEResult(best[1], best[0], count[0], converged)


def vqe_minimize(
    ansatz: Ansatz | Sequence[PauliSum],
    initial_params: Sequence[float],
    evaluator: EnergyEvaluator,
    optimizer: OptimizerConfig = OptimizerConfig(),
) -> VQEResult:
    """Optimize all parameters of ``ansatz`` starting at ``initial_params``."""
    ops = ansatz.operators if isinstance(ansatz, Ansatz) else list(ansatz)
    return minimize_function(lambda x: evaluator.energy(ops, x), initial_params, optimizer)


# ------------------------------------------------------------ ADAPT


@dataclass(frozen=True)
class AdaptConfig:
    pool: Pool
    epsilon: float = 0.01
    max_iterations: int = 50
    growth: str = "plain"  # plain | removal | conservative
    r: float = 0.5
    t: float = 1.5
    window: int = 10
    n_candidates: int = 5
    optimizer: OptimizerConfig = OptimizerConfig()

    def __post_init__(self):
        if self.growth not in ("plain", "removal", "conservative"):
            raise ValueError(f"unknown growth strategy {self.growth!r}")
        if not 0 < self.r < 1 or self.t <= 1 or self.window < 1 or self.n_candidates < 1:
            raise ValueError("need 0 < r < 1, t > 1, window >= 1 and n_candidates >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


PLAIN_COLUMNS = (
    "iteration",
    "energy",
    "error",
    "gradient_norm",
    "selected",
    "delta_e",
    "n_parameters",
    "evaluations",
    "cumulative_optimizations",
    "cnot_count",
)
REMOVAL_COLUMNS = ("removal_attempts", "removed")
CONSERVATIVE_COLUMNS = ("candidates",)


@dataclass
class RunRecord:
    growth: str
    fci_energy: float
    reference_energy: float
    rows: list[dict] = field(default_factory=list)
    ansatz: Ansatz = field(default_factory=Ansatz)
    converged: bool = False
    final_energy: float = math.nan
    final_exact_energy: float = math.nan

    @property
    def columns(self) -> tuple[str, ...]:
        extra = {"removal": REMOVAL_COLUMNS, "conservative": CONSERVATIVE_COLUMNS}.get(self.growth, ())
        return PLAIN_COLUMNS + extra

    @property
    def final_error(self) -> float:
        """Quality of the prepared state: noiseless energy of the final
        parameters minus the FCI energy."""
        return self.final_exact_energy - self.fci_energy

    @property
    def estimate_error(self) -> float:
        """Error of the evaluator's own (possibly sampled) final estimate."""
        return self.final_energy - self.fci_energy

    @property
    def cumulative_optimizations(self) -> int:
        return self.rows[-1]["cumulative_optimizations"] if self.rows else 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.columns, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow({k: _fmt(row[k]) for k in self.columns})
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(str(x) for x in v)
    return str(v)


class _Run:
    """Mutable state of one ADAPT run."""

    def __init__(self, problem: MolecularProblem, cfg: AdaptConfig, evaluator: EnergyEvaluator):
        self.cfg = cfg
        self.ev = evaluator
        self.h = problem.hamiltonian
        self.ansatz = Ansatz()
        self.penalties: dict[int, float] = {}
        self.ratios: list[float] = []
        self.optimizations = 0
        self.energy = evaluator.energy([], [])

    def optimize(self, ansatz: Ansatz) -> tuple[Ansatz, float, int]:
        self.optimizations += 1
        res = vqe_minimize(ansatz, ansatz.parameters, self.ev, self.cfg.optimizer)
        return ansatz.with_parameters(res.params), res.energy, res.evaluations

    def penalty(self, index: int) -> float:
        if index not in self.penalties:
            return 1.0
        recent = [x for x in self.ratios[-self.cfg.window :] if np.isfinite(x)]
        standard = float(np.mean(recent)) if recent else 0.0
        if standard <= 0:
            return 1.0
        return min(1.0, self.penalties[index] / standard)

    def append(self, ansatz: Ansatz, index: int, iteration: int, gradient: float) -> Ansatz:
        grown = ansatz.copy()
        op = self.cfg.pool[index].operator
        grown.elements.append(AnsatzElement(index, op, 0.0, iteration, gradient))
        return grown

    def removal_hook(self, delta_j: float) -> tuple[int, list[int]]:
        """Try dropping earlier elements whose energy gain is small next to the
        newest one; keep a deletion only if the energy rises by at most
        ``t |dE_i|``.  Returns (attempts, removed pool indices)."""
        cfg = self.cfg
        attempts, removed = 0, []
        newest = self.ansatz.elements[-1]
        for key in [e.added_at_iteration for e in self.ansatz.elements[:-1]]:
            pos = next(k for k, e in enumerate(self.ansatz.elements) if e.added_at_iteration == key)
            elem = self.ansatz.elements[pos]
            if not abs(elem.delta_e) < cfg.r * abs(delta_j):
                continue
            attempts += 1
            trial = Ansatz([replace(e) for k, e in enumerate(self.ansatz.elements) if k != pos])
            trial, e_without, evals = self.optimize(trial)
            if e_without - self.energy <= cfg.t * abs(elem.delta_e):
                self.ansatz, self.energy = trial, e_without
                self.penalties[elem.pool_index] = elem.performance_ratio
                removed.append(elem.pool_index)
        assert self.ansatz.elements[-1].pool_index == newest.pool_index
        return attempts, removed


def adapt_run(
    problem: MolecularProblem,
    config: AdaptConfig,
    evaluator: EnergyEvaluator | None = None,
    fci_energy: float | None = None,
) -> RunRecord:
    """Grow an ansatz operator by operator until the pool-gradient norm drops
    below ``epsilon``.

    Each iteration measures every pool gradient at the current state, picks
    the operator with the largest (penalty-weighted) magnitude, appends it
    with a zero parameter and re-optimizes all parameters from the previous
    values.  The convergence norm always uses raw gradients.
    """
    ev = evaluator or EnergyEvaluator.for_problem(problem)
    if fci_energy is None:
        fci_energy = exact_ground(problem.hamiltonian)[0]
    run = _Run(problem, config, ev)
    rec = RunRecord(config.growth, fci_energy, run.energy)
    pool = config.pool

    for iteration in range(1, config.max_iterations + 1):
        state = ev.state(run.ansatz.operators, run.ansatz.parameters)
        grads = np.array([gradient_at_zero(op.operator, state, run.h, ev) for op in pool])
        norm = float(np.linalg.norm(grads))
        if not run.ansatz.elements and np.all(np.abs(grads) < ZERO_GRADIENT):
            raise StalledPoolError(f"every {pool.name} gradient vanishes at the reference state")
        if norm < config.epsilon:
            rec.converged = True
            break
        effective = np.abs(grads) * np.array([run.penalty(i) for i in range(len(pool))])
        before = run.energy
        ev_before = ev.evaluations
        row: dict = {}

        if config.growth == "conservative":
            order = np.argsort(-effective, kind="stable")[: config.n_candidates]
            best = None
            for idx in order:
                trial, e, _ = run.optimize(run.append(run.ansatz, int(idx), iteration, float(grads[idx])))
                if best is None or e < best[1] - 1e-15 or (abs(e - best[1]) <= 1e-15 and idx < best[2]):
                    best = (trial, e, int(idx))
            run.ansatz, run.energy, chosen = best
            row["candidates"] = [int(i) for i in order]
        else:
            chosen = int(np.argmax(effective))
            run.ansatz, run.energy, _ = run.optimize(run.append(run.ansatz, chosen, iteration, float(grads[chosen])))

        newest = run.ansatz.elements[-1]
        newest.delta_e = run.energy - before
        run.penalties.pop(chosen, None)
        run.ratios.append(newest.performance_ratio)
        if config.growth == "removal":
            attempts, removed = run.removal_hook(newest.delta_e)
            row["removal_attempts"] = attempts
            row["removed"] = removed

        row.update(
            iteration=iteration,
            energy=float(run.energy),
            error=float(run.energy - fci_energy),
            gradient_norm=norm,
            selected=chosen,
            delta_e=float(newest.delta_e),
            n_parameters=len(run.ansatz),
            evaluations=ev.evaluations - ev_before,
            cumulative_optimizations=run.optimizations,
            cnot_count=run.ansatz.cnot_count(),
        )
        rec.rows.append(row)

    rec.ansatz = run.ansatz
    ops, params = run.ansatz.operators, run.ansatz.parameters
    rec.final_energy = run.energy if ev.mode == "exact" else ev.energy(ops, params)
    rec.final_exact_energy = ev.exact_energy(ops, params)
    return rec


def fixed_ansatz_vqe(
    pool: Pool,
    evaluator: EnergyEvaluator,
    optimizer: OptimizerConfig = OptimizerConfig(),
    initial_params: Sequence[float] | None = None,
) -> VQEResult:
    """VQE with every pool operator in the ansatz, in pool order (e.g. UCCSD)."""
    ops = [op.operator for op in pool]
    x0 = np.zeros(len(ops)) if initial_params is None else initial_params
    return vqe_minimize(ops, x0, evaluator, optimizer)
