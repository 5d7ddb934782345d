"""Exact statevector and density-matrix utilities.

Basis index ``b`` encodes qubit ``k`` as bit ``k`` of ``b`` (qubit 0 is the
least significant bit).  Kets written as bit strings put qubit 0 last, so
``|0011>`` is index 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractViolation, DimensionError, ResourceError
from .pauli import PauliString, PauliSum, pauli_matrix

NORM_TOL = 1e-10
TAYLOR_TAIL = 1e-14
TAYLOR_MAX_TERMS = 200
DENSE_LIMIT = 14


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise DimensionError(f"expected {1 << self.n_qubits} amplitudes, got {self.amplitudes.shape}")

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_occupied(cls, n_qubits: int, occupied: Sequence[int]) -> "StateVector":
        return cls.basis(n_qubits, sum(1 << k for k in occupied))

    @classmethod
    def random(cls, n_qubits: int, rng: np.random.Generator, real: bool = False) -> "StateVector":
        v = rng.normal(size=1 << n_qubits)
        if not real:
            v = v + 1j * rng.normal(size=1 << n_qubits)
        return cls(n_qubits, v / np.linalg.norm(v))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm**2 - 1.0) <= tol

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def to_density(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(self.n_qubits, np.outer(a, a.conj()))


@dataclass
class DensityMatrix:
    n_qubits: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = 1 << self.n_qubits
        if self.matrix.shape != (d, d):
            raise DimensionError(f"expected a {d}x{d} matrix, got {self.matrix.shape}")

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        d = 1 << n_qubits
        return cls(n_qubits, np.eye(d, dtype=complex) / d)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def validate(self, tol: float = 1e-9) -> None:
        if abs(self.trace - 1.0) > tol:
            raise ContractViolation(f"trace {self.trace} differs from 1")
        if np.max(np.abs(self.matrix - self.matrix.conj().T)) > 10 * NORM_TOL:
            raise ContractViolation("density matrix is not Hermitian")
        if np.linalg.eigvalsh(self.matrix).min() < -tol:
            raise ContractViolation("density matrix has a negative eigenvalue")

    def probabilities(self) -> np.ndarray:
        return np.clip(np.diag(self.matrix).real, 0.0, None)


def _check_dims(n: int, state) -> None:
    if state.n_qubits != n:
        raise DimensionError(f"operator acts on {n} qubits, state has {state.n_qubits}")


def apply_string(p: PauliString, s: StateVector) -> StateVector:
    """``P|s>`` via a signed permutation of amplitudes."""
    _check_dims(p.n_qubits, s)
    return StateVector(s.n_qubits, pauli_matrix(p) @ s.amplitudes)


def apply_sum(h: PauliSum, s: StateVector) -> StateVector:
    """``H|s>`` (not normalized)."""
    _check_dims(h.n_qubits, s)
    return StateVector(s.n_qubits, h.sparse @ s.amplitudes)


def _single_string(a: PauliSum):
    if len(a) != 1:
        return None
    ((p, c),) = a
    return p, c


def expm_action(a: PauliSum, theta: float, vec: np.ndarray) -> np.ndarray:
    """``exp(theta * a) @ vec`` for an antihermitian Pauli sum.

    Truncated Taylor recurrence ``v_{m+1} = theta a v_m / (m + 1)``, summed
    until ``|v_m| < 1e-14``.  Long arguments are split into equal steps with
    ``|theta| * |a|_1 <= 1`` each so the series never cancels badly.
    """
    if theta == 0.0 or a.is_zero:
        return vec.copy()
    single = _single_string(a)
    if single is not None:
        p, c = single
        # a = i b P with b real; exp(theta i b P) = cos(theta b) + i sin(theta b) P
        b = c.imag
        return math.cos(theta * b) * vec + 1j * math.sin(theta * b) * (pauli_matrix(p) @ vec)
    mat = a.sparse
    steps = max(1, math.ceil(abs(theta) * a.one_norm(include_identity=True)))
    dt = theta / steps
    out = vec
    for _ in range(steps):
        term = out
        acc = out.copy()
        for m in range(TAYLOR_MAX_TERMS):
            term = (dt / (m + 1)) * (mat @ term)
            acc += term
            if np.linalg.norm(term) < TAYLOR_TAIL:
                break
        else:
            raise ResourceError("Taylor series did not converge within the term cap")
        out = acc
    return out


def apply_exponential(a: PauliSum, theta: float, s: StateVector) -> StateVector:
    """``exp(theta * a)|s>`` for antihermitian ``a``."""
    _check_dims(a.n_qubits, s)
    if not a.is_antihermitian():
        raise ContractViolation("exponent generator must be antihermitian")
    return StateVector(s.n_qubits, expm_action(a, float(theta), s.amplitudes))


def expectation(h: PauliSum, s: StateVector | DensityMatrix) -> float:
    """``<s|H|s>`` (or ``tr(rho H)``) for Hermitian ``h``."""
    _check_dims(h.n_qubits, s)
    if not h.is_hermitian():
        raise ContractViolation("observable must be Hermitian")
    if isinstance(s, DensityMatrix):
        val = complex((h.sparse.multiply(s.matrix.T)).sum())
    else:
        val = complex(np.vdot(s.amplitudes, h.sparse @ s.amplitudes))
    scale = max(1.0, h.one_norm(include_identity=True))
    if abs(val.imag) > 1e-9 * scale:
        raise ContractViolation(f"expectation has imaginary residue {val.imag:.3e}")
    return val.real


def exact_ground(h: PauliSum) -> tuple[float, StateVector]:
    """Lowest eigenpair of ``h`` by dense diagonalization."""
    n = h.n_qubits
    if n > DENSE_LIMIT:
        raise ResourceError(f"{n} qubits exceeds the {DENSE_LIMIT}-qubit diagonalization limit")
    w, v = np.linalg.eigh(h.to_dense())
    vec = v[:, 0] / np.linalg.norm(v[:, 0])
    return float(w[0]), StateVector(n, vec)


def trotter_apply(terms: Sequence[PauliSum], t: float, reps: int, s: StateVector) -> StateVector:
    """``(prod_k exp(-i H_k t / reps))**reps |s>``, each factor applied exactly."""
    if reps < 1:
        raise ValueError("reps must be positive")
    gens = []
    for hk in terms:
        if not hk.is_hermitian():
            raise ContractViolation("Trotter terms must be Hermitian")
        gens.append(hk * -1j)
    out = s
    dt = t / reps
    for _ in range(reps):
        for g in gens:
            out = apply_exponential(g, dt, out)
    return out


def purity(rho: DensityMatrix) -> float:
    m = rho.matrix
    return float(np.einsum("ij,ji->", m, m).real)


def fidelity_pure(rho: DensityMatrix, psi: StateVector) -> float:
    a = psi.amplitudes
    return float(np.vdot(a, rho.matrix @ a).real)


@dataclass
class CompositionReport:
    """Basis-state populations grouped by particle number and S_z."""

    n_correct: int
    n_altered_number: int
    n_altered_sz: int
    p_correct: float
    p_altered_number: float
    p_altered_sz: float

    @property
    def p_altered(self) -> float:
        return self.p_altered_number + self.p_altered_sz


def determinant_composition(
    s: StateVector, ordering, n_electrons: int, threshold: float = 1e-8
) -> CompositionReport:
    from .chem import OrbitalOrdering

    ordering = OrbitalOrdering(ordering)
    n = s.n_qubits
    alpha_mask = sum(1 << k for k in range(n) if ordering.is_alpha(k, n))
    beta_mask = ((1 << n) - 1) & ~alpha_mask
    target_sz2 = (n_electrons + 1) // 2 - n_electrons // 2

    probs = s.probabilities()
    idx = np.nonzero(probs > threshold)[0]
    n_a = np.bitwise_count(idx & alpha_mask).astype(int)
    n_b = np.bitwise_count(idx & beta_mask).astype(int)
    wrong_n = (n_a + n_b) != n_electrons
    wrong_sz = ~wrong_n & ((n_a - n_b) != target_sz2)
    ok = ~wrong_n & ~wrong_sz
    return CompositionReport(
        int(ok.sum()),
        int(wrong_n.sum()),
        int(wrong_sz.sum()),
        float(probs[idx[ok]].sum()),
        float(probs[idx[wrong_n]].sum()),
        float(probs[idx[wrong_sz]].sum()),
    )
