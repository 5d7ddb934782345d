"""Gate-level circuits: Pauli-exponential synthesis, two-qubit state
preparation, noiseless and noisy execution, and sampled measurement."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractViolation, DimensionError, ResourceError
from .pauli import PauliString, PauliSum, commutes
from .simstate import DensityMatrix, StateVector

DENSITY_LIMIT = 8
DEFAULT_GATE_TIME_1Q = 35e-9
DEFAULT_GATE_TIME_2Q = 550e-9
SPAM_RATIO = 5.0

_SQ2 = 1 / math.sqrt(2)
_FIXED = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=complex),
}
_ROTATIONS = ("RX", "RY", "RZ")
KINDS = tuple(_FIXED) + _ROTATIONS + ("CNOT",)


def rx(a: float) -> np.ndarray:
    c, s = math.cos(a / 2), math.sin(a / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(a: float) -> np.ndarray:
    c, s = math.cos(a / 2), math.sin(a / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(a: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        arity = 2 if self.kind == "CNOT" else 1
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind} takes {arity} qubit(s)")
        if self.kind == "CNOT" and self.qubits[0] == self.qubits[1]:
            raise ValueError("CNOT control and target must differ")
        if (self.kind in _ROTATIONS) != (self.angle is not None):
            raise ValueError(f"{self.kind} angle mismatch")

    def matrix(self) -> np.ndarray:
        """2x2 matrix of a single-qubit gate."""
        if self.kind in _FIXED:
            return _FIXED[self.kind]
        return {"RX": rx, "RY": ry, "RZ": rz}[self.kind](self.angle)

    def __str__(self) -> str:
        args = " ".join(str(q) for q in self.qubits)
        if self.angle is None:
            return f"{self.kind} {args}"
        return f"{self.kind} {args} {self.angle:.8g}"


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def append(self, kind: str, *qubits: int, angle: float | None = None) -> "Circuit":
        g = Gate(kind, tuple(qubits), angle)
        if max(g.qubits) >= self.n_qubits or min(g.qubits) < 0:
            raise DimensionError(f"gate {g} outside a {self.n_qubits}-qubit register")
        self.gates.append(g)
        return self

    def extend(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise DimensionError("circuits act on different registers")
        self.gates.extend(other.gates)
        return self

    @property
    def cnot_count(self) -> int:
        return sum(g.kind == "CNOT" for g in self.gates)

    def __len__(self) -> int:
        return len(self.gates)

    def dump(self) -> str:
        return "\n".join(str(g) for g in self.gates)

    @classmethod
    def parse(cls, n_qubits: int, text: str) -> "Circuit":
        c = cls(n_qubits)
        for line in text.splitlines():
            parts = line.split()
            if not parts:
                continue
            kind = parts[0]
            if kind in _ROTATIONS:
                c.append(kind, int(parts[1]), angle=float(parts[2]))
            else:
                c.append(kind, *(int(q) for q in parts[1:]))
        return c


# ------------------------------------------------------------ synthesis


def _basis_change(circ: Circuit, p: PauliString, inverse: bool) -> None:
    for k in p.support:
        letter = p.letter(k)
        if letter == "X":
            circ.append("H", k)
        elif letter == "Y":
            circ.append("RX", k, angle=-math.pi / 2 if inverse else math.pi / 2)


def compile_pauli_exponential(p: PauliString, theta: float) -> Circuit:
    """Circuit for ``exp(-i theta P)``.

    Rotate each support qubit into the Z basis, accumulate parity onto the
    highest support qubit with a CNOT ladder, apply ``RZ(2 theta)`` there and
    undo everything.  Uses ``2 (weight - 1)`` CNOTs.
    """
    if p.is_identity:
        raise ContractViolation("identity string has no support to rotate")
    circ = Circuit(p.n_qubits)
    sup = p.support
    _basis_change(circ, p, inverse=False)
    ladder = list(zip(sup[:-1], sup[1:]))
    for c, t in ladder:
        circ.append("CNOT", c, t)
    circ.append("RZ", sup[-1], angle=2 * theta)
    for c, t in reversed(ladder):
        circ.append("CNOT", c, t)
    _basis_change(circ, p, inverse=True)
    return circ


def compile_exponential_sum(a: PauliSum, theta: float) -> Circuit:
    """First-order product circuit for ``exp(theta * a)``.

    With ``a = sum_k i b_k P_k`` each factor is ``exp(i theta b_k P_k)``,
    i.e. ``compile_pauli_exponential(P_k, -theta * b_k)``.  Strings are
    taken in lexicographic order.
    """
    if not a.is_antihermitian():
        raise ContractViolation("exponent generator must be antihermitian")
    circ = Circuit(a.n_qubits)
    for p, c in a.sorted_terms():
        if p.is_identity:
            raise ContractViolation("identity term would only contribute a global phase")
        circ.extend(compile_pauli_exponential(p, -theta * c.imag))
    return circ


def decompose_su2(u: np.ndarray) -> tuple[float, float, float]:
    """Angles with ``u = e^{i phi} RZ(t1) RY(t2) RZ(t3)``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, np.eye(2), atol=1e-9):
        raise ContractViolation("expected a 2x2 unitary")
    v = u / np.sqrt(np.linalg.det(u))
    c, s = abs(v[0, 0]), abs(v[1, 0])
    t2 = 2 * math.atan2(s, c)
    # v00 = e^{-i(t1+t3)/2} cos, v10 = e^{i(t1-t3)/2} sin
    plus = -2 * np.angle(v[0, 0]) if c > 1e-12 else 0.0
    minus = 2 * np.angle(v[1, 0]) if s > 1e-12 else 0.0
    t1 = (plus + minus) / 2
    t3 = (plus - minus) / 2
    return float(t1), float(t2), float(t3)


def two_qubit_coordinates(params: Sequence[float]) -> np.ndarray:
    """Amplitudes of the six-parameter two-qubit state, indexed ``2a + b``."""
    t0, t1, t2, w0, w1, w2 = params
    c0, s0 = math.cos(t0 / 2), math.sin(t0 / 2)
    return np.array(
        [
            c0 * math.cos(t1 / 2),
            c0 * math.sin(t1 / 2) * np.exp(1j * w1),
            s0 * np.exp(1j * w0) * math.cos(t2 / 2),
            s0 * np.exp(1j * w0) * math.sin(t2 / 2) * np.exp(1j * w2),
        ]
    )


def prepare_two_qubit(params: Sequence[float]) -> Circuit:
    """Circuit preparing ``two_qubit_coordinates(params)`` from ``|00>``.

    Qubit A is qubit 1, qubit B is qubit 0.  The coordinate matrix
    ``M[a, b]`` has a Schmidt form ``U diag(l) V``: prepare
    ``l0|00> + l1|11>`` with one RY and a CNOT, then rotate A by ``U`` and B
    by ``V^T``.  The first RZ of each rotation acts identically on
    ``|00>``/``|11>``, so the two are merged into one.
    """
    if len(params) != 6:
        raise ContractViolation("expected six parameters")
    thetas, omegas = params[:3], params[3:]
    if any(not -1e-12 <= t <= math.pi + 1e-12 for t in thetas):
        raise ContractViolation("polar angles must lie in [0, pi]")
    if any(not -1e-12 <= w <= 2 * math.pi + 1e-12 for w in omegas):
        raise ContractViolation("azimuthal angles must lie in [0, 2 pi]")
    m = two_qubit_coordinates(params).reshape(2, 2)
    u, lam, v = np.linalg.svd(m)
    a1, a2, a3 = decompose_su2(u)
    b1, b2, b3 = decompose_su2(v.T)
    A, B = 1, 0
    circ = Circuit(2)
    circ.append("RY", A, angle=2 * math.acos(min(1.0, lam[0])))
    circ.append("CNOT", A, B)
    circ.append("RZ", A, angle=a3 + b3)
    circ.append("RY", A, angle=a2)
    circ.append("RZ", A, angle=a1)
    circ.append("RY", B, angle=b2)
    circ.append("RZ", B, angle=b1)
    return circ


# ------------------------------------------------------------ execution


def _apply_1q(psi: np.ndarray, n: int, q: int, m: np.ndarray) -> np.ndarray:
    t = psi.reshape(1 << (n - q - 1), 2, 1 << q)
    return np.einsum("ij,ajb->aib", m, t).reshape(-1)


def _cnot_perm(n: int, c: int, t: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return idx ^ (((idx >> c) & 1) << t)


def execute_statevector(c: Circuit) -> StateVector:
    """Apply the gates in order to ``|0...0>``."""
    psi = np.zeros(1 << c.n_qubits, dtype=complex)
    psi[0] = 1.0
    return StateVector(c.n_qubits, run_gates(c, psi))


def run_gates(c: Circuit, psi: np.ndarray) -> np.ndarray:
    n = c.n_qubits
    for g in c.gates:
        if g.kind == "CNOT":
            psi = psi[_cnot_perm(n, *g.qubits)]
        else:
            psi = _apply_1q(psi, n, g.qubits[0], g.matrix())
    return psi


@dataclass(frozen=True)
class NoiseSpec:
    """Gate noise (thermal relaxation, CNOT depolarizing) and readout flips.

    Times are in seconds; ``math.inf`` disables relaxation.
    """

    t1: float = math.inf
    t2: float = math.inf
    gate_time_1q: float = DEFAULT_GATE_TIME_1Q
    gate_time_2q: float = DEFAULT_GATE_TIME_2Q
    cnot_depolarizing_error: float = 0.0
    p_meas0_prep1: float = 0.0
    p_meas1_prep0: float = 0.0

    def __post_init__(self):
        for name in ("cnot_depolarizing_error", "p_meas0_prep1", "p_meas1_prep0"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ContractViolation(f"{name}={v} is not a probability")
        if self.t1 <= 0 or self.t2 <= 0:
            raise ContractViolation("T1 and T2 must be positive")
        if self.t2 > 2 * self.t1 * (1 + 1e-12):
            raise ContractViolation("T2 cannot exceed 2 T1")

    @classmethod
    def spam(cls, p_meas0_prep1: float, ratio: float = SPAM_RATIO, **kw) -> "NoiseSpec":
        """Readout error with the 0-given-1 rate ``ratio`` times the 1-given-0 rate."""
        return cls(p_meas0_prep1=p_meas0_prep1, p_meas1_prep0=p_meas0_prep1 / ratio, **kw)

    @property
    def has_gate_noise(self) -> bool:
        return self.cnot_depolarizing_error > 0 or math.isfinite(self.t1) or math.isfinite(self.t2)

    def relaxation(self, duration: float) -> tuple[float, float]:
        """(amplitude damping gamma, phase damping lambda) for one gate."""
        gamma = 0.0 if math.isinf(self.t1) else 1 - math.exp(-duration / self.t1)
        inv_tphi = (0.0 if math.isinf(self.t2) else 1 / self.t2) - (
            0.0 if math.isinf(self.t1) else 1 / (2 * self.t1)
        )
        lam = 1 - math.exp(-2 * duration * max(inv_tphi, 0.0))
        return gamma, lam

    @property
    def depolarizing_weight(self) -> float:
        """Weight of the fully mixed part after a CNOT, ``e (d+1)/d`` with d = 4, capped at 1."""
        return min(1.0, self.cnot_depolarizing_error * 5 / 4)


NOISELESS = NoiseSpec()


def _channel_1q(rho: np.ndarray, n: int, q: int, kraus: Sequence[np.ndarray]) -> np.ndarray:
    """``sum_k K rho K^dagger`` on qubit ``q``, applied as one 4x4 superoperator."""
    d = 1 << n
    sup = sum(np.einsum("ki,lj->klij", k, k.conj()) for k in kraus)
    hi, lo = 1 << (n - q - 1), 1 << q
    t = rho.reshape(hi, 2, lo, hi, 2, lo)
    return np.einsum("klij,aibcjd->akbcld", sup, t).reshape(d, d)


def _conj_1q(rho: np.ndarray, n: int, q: int, m: np.ndarray) -> np.ndarray:
    """``m rho m^dagger`` on qubit ``q`` of a (2^n, 2^n) matrix."""
    return _channel_1q(rho, n, q, [m])


def _amplitude_damping(gamma: float) -> list[np.ndarray]:
    return [np.array([[1, 0], [0, math.sqrt(1 - gamma)]]), np.array([[0, math.sqrt(gamma)], [0, 0]])]


def _phase_damping(lam: float) -> list[np.ndarray]:
    return [np.array([[1, 0], [0, math.sqrt(1 - lam)]]), np.array([[0, 0], [0, math.sqrt(lam)]])]


def _relaxation_kraus(gamma: float, lam: float) -> list[np.ndarray]:
    # amplitude damping followed by phase damping, as one channel
    ops = _amplitude_damping(gamma) if gamma > 0 else [np.eye(2)]
    if lam > 0:
        ops = [p @ a for p in _phase_damping(lam) for a in ops]
    return ops


def _depolarize_pair(rho: np.ndarray, n: int, a: int, b: int, weight: float) -> np.ndarray:
    """``(1 - w) rho + w tr_ab(rho) (x) I/4`` on qubits ``a`` and ``b``."""
    if weight == 0.0:
        return rho
    d = 1 << n
    # axis k of the row (column) tensor is qubit n - 1 - k
    rows = [chr(ord("A") + k) for k in range(n)]
    cols = [chr(ord("a") + k) for k in range(n)]
    ra, rb = rows[n - 1 - a], rows[n - 1 - b]
    ca, cb = cols[n - 1 - a], cols[n - 1 - b]
    traced_cols = [r if c in (ca, cb) else c for r, c in zip(rows, cols)]
    kept = "".join(x for x in rows + cols if x not in (ra, rb, ca, cb))
    reduced = np.einsum("".join(rows + traced_cols) + "->" + kept, rho.reshape((2,) * (2 * n)))
    half = np.eye(2) / 2
    mixed = np.einsum(f"{kept},{ra}{ca},{rb}{cb}->" + "".join(rows + cols), reduced, half, half)
    return (1 - weight) * rho + weight * mixed.reshape(d, d)


def execute_density(c: Circuit, noise: NoiseSpec = NOISELESS) -> DensityMatrix:
    """Noisy execution from ``|0...0><0...0|``.

    After each gate the touched qubits undergo amplitude and phase damping for
    the gate's duration; a CNOT is first followed by two-qubit depolarizing
    noise.  Idle qubits do not decay.
    """
    n = c.n_qubits
    if n > DENSITY_LIMIT:
        raise ResourceError(f"density simulation is limited to {DENSITY_LIMIT} qubits")
    d = 1 << n
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    for g in c.gates:
        if g.kind == "CNOT":
            perm = _cnot_perm(n, *g.qubits)
            rho = rho[np.ix_(perm, perm)]
            rho = _depolarize_pair(rho, n, *g.qubits, noise.depolarizing_weight)
            duration = noise.gate_time_2q
        else:
            rho = _conj_1q(rho, n, g.qubits[0], g.matrix())
            duration = noise.gate_time_1q
        gamma, lam = noise.relaxation(duration)
        if gamma > 0 or lam > 0:
            kraus = _relaxation_kraus(gamma, lam)
            for q in g.qubits:
                rho = _channel_1q(rho, n, q, kraus)
    return DensityMatrix(n, rho)


# ------------------------------------------------------------ measurement


@dataclass(frozen=True)
class MeasurementEstimate:
    value: float
    shots_used: int
    standard_error: float


def measurement_basis(strings: Sequence[PauliString]) -> Circuit:
    """Rotations taking every string of a qubitwise-commuting group to Z type."""
    if not strings:
        raise ContractViolation("empty measurement group")
    n = strings[0].n_qubits
    for i, a in enumerate(strings):
        for b in strings[i + 1 :]:
            if not commutes(a, b, mode="qubitwise"):
                raise ContractViolation(f"{a} and {b} do not commute qubitwise")
    letters: dict[int, str] = {}
    for p in strings:
        for k in p.support:
            letters[k] = p.letter(k)
    circ = Circuit(n)
    for k in sorted(letters):
        if letters[k] == "X":
            circ.append("H", k)
        elif letters[k] == "Y":
            circ.append("RX", k, angle=math.pi / 2)
    return circ


def _readout_probabilities(probs: np.ndarray, n: int, noise: NoiseSpec) -> np.ndarray:
    p10, p01 = noise.p_meas1_prep0, noise.p_meas0_prep1
    if p10 == 0 and p01 == 0:
        return probs
    conf = np.array([[1 - p10, p01], [p10, 1 - p01]])  # conf[measured, prepared]
    for q in range(n):
        probs = _apply_1q(probs.astype(complex), n, q, conf).real
    return probs


def sample_pauli(
    strings: Sequence[PauliString],
    state: StateVector | DensityMatrix,
    shots: int,
    noise: NoiseSpec = NOISELESS,
    rng_seed: int = 0,
) -> dict[PauliString, MeasurementEstimate]:
    """Shot estimates of a qubitwise-commuting group from one shared basis.

    Outcome frequencies are drawn from the rotated distribution passed through
    the per-qubit readout confusion matrix, which is the same law as flipping
    each sampled bit independently.
    """
    if shots < 1:
        raise ContractViolation("shots must be positive")
    rot = measurement_basis(strings)
    n = state.n_qubits
    if rot.n_qubits != n:
        raise DimensionError("group and state sizes differ")
    if isinstance(state, DensityMatrix):
        # rotate rho and read its diagonal
        rho = state.matrix
        for g in rot.gates:
            rho = _conj_1q(rho, n, g.qubits[0], g.matrix())
        probs = np.clip(np.diag(rho).real, 0.0, None)
    else:
        probs = np.abs(run_gates(rot, state.amplitudes)) ** 2
    probs = _readout_probabilities(probs, n, noise)
    probs = probs / probs.sum()
    rng = np.random.default_rng(rng_seed)
    counts = rng.multinomial(shots, probs)
    idx = np.arange(1 << n)
    out = {}
    for p in strings:
        mask = p.x | p.z
        signs = 1 - 2 * (np.bitwise_count(idx & mask) & 1).astype(np.int64)
        value = float(counts @ signs) / shots
        se = math.sqrt(max(0.0, 1 - value * value) / shots)
        out[p] = MeasurementEstimate(value, shots, se)
    return out


def exact_pauli_values(strings: Sequence[PauliString], state: StateVector) -> Mapping[PauliString, float]:
    """Noiseless expectation of each string (infinite-shot limit)."""
    from .simstate import expectation

    return {p: expectation(PauliSum.from_string(p), state) for p in strings}
