import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adaptvqe.circuit import (
    NOISELESS,
    Circuit,
    NoiseSpec,
    compile_exponential_sum,
    compile_pauli_exponential,
    decompose_su2,
    execute_density,
    execute_statevector,
    prepare_two_qubit,
    ry,
    rz,
    run_gates,
    sample_pauli,
    two_qubit_coordinates,
)
from adaptvqe.errors import ContractViolation, DimensionError, ResourceError
from adaptvqe.pauli import PauliString, PauliSum
from adaptvqe.pools import build_eight_pool
from adaptvqe.simstate import DensityMatrix, StateVector, apply_exponential, expectation, fidelity_pure, purity
from oracles import dense_expm, word_matrix

P = PauliString.from_letters
nontrivial_word = st.integers(1, 4).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n)).filter(
    lambda w: set(w) != {"I"}
)


def circuit_unitary(c: Circuit) -> np.ndarray:
    d = 1 << c.n_qubits
    return np.column_stack([run_gates(c, np.eye(d, dtype=complex)[:, k]) for k in range(d)])


def test_zzzz_ladder():
    c = compile_pauli_exponential(P("ZZZZ"), 0.4)
    assert c.cnot_count == 6
    rzs = [g for g in c.gates if g.kind == "RZ"]
    assert len(rzs) == 1 and rzs[0].angle == pytest.approx(0.8) and rzs[0].qubits == (3,)


def test_xyzx_basis_changes():
    c = compile_pauli_exponential(P("XYZX"), 0.4)
    head = [(g.kind, g.qubits) for g in c.gates[:3]]
    assert head == [("H", (0,)), ("RX", (1,)), ("H", (3,))]
    assert c.gates[1].angle == pytest.approx(math.pi / 2)
    assert [(g.kind, g.qubits) for g in c.gates[-3:]] == [("H", (0,)), ("RX", (1,)), ("H", (3,))]
    assert c.gates[-2].angle == pytest.approx(-math.pi / 2)
    assert c.cnot_count == 6


def test_identity_string_rejected():
    with pytest.raises(ContractViolation):
        compile_pauli_exponential(PauliString.identity(3), 0.1)


@given(nontrivial_word, st.floats(-3, 3))
def test_pauli_exponential_matches_dense(word, theta):
    c = compile_pauli_exponential(P(word), theta)
    p = P(word)
    assert c.cnot_count == 2 * (p.weight - 1)
    u = circuit_unitary(c)
    assert np.allclose(u, dense_expm(-1j * word_matrix(word), theta), atol=1e-10)


def test_eight_pool_operator_48_cnots():
    pool = build_eight_pool(8)
    doubles = [op for op in pool if op.n_strings == 8]
    assert doubles
    for op in doubles[:5]:
        assert compile_exponential_sum(op.operator, 0.2).cnot_count == 48


def test_single_string_sum_delegates():
    a = PauliSum.from_words([(0.5j, "XZY")])
    c = compile_exponential_sum(a, 0.3)
    d = compile_pauli_exponential(P("XZY"), -0.15)
    assert [str(g) for g in c.gates] == [str(g) for g in d.gates]


def test_commuting_strings_sum_matches_apply_exponential():
    a = PauliSum.from_words([(0.5j, "XXYZ"), (-0.25j, "YYYZ")])
    s = StateVector.random(4, np.random.default_rng(2))
    out = run_gates(compile_exponential_sum(a, 0.7), s.amplitudes)
    assert np.allclose(out, apply_exponential(a, 0.7, s).amplitudes, atol=1e-9)


def test_decompose_su2_examples():
    t1, t2, t3 = decompose_su2(np.eye(2))
    assert t2 == pytest.approx(0, abs=1e-12)
    assert math.remainder(t1 + t3, 2 * math.pi) == pytest.approx(0, abs=1e-12)
    t1, t2, t3 = decompose_su2(ry(0.7))
    assert t2 == pytest.approx(0.7)
    assert math.remainder(t1, 2 * math.pi) == pytest.approx(0, abs=1e-12)
    assert math.remainder(t3, 2 * math.pi) == pytest.approx(0, abs=1e-12)
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    t1, t2, t3 = decompose_su2(h)
    rec = rz(t1) @ ry(t2) @ rz(t3)
    phase = h[0, 0] / rec[0, 0] if abs(rec[0, 0]) > 1e-9 else h[1, 0] / rec[1, 0]
    assert np.allclose(phase * rec, h, atol=1e-10)
    with pytest.raises(ContractViolation):
        decompose_su2(np.array([[1, 1], [0, 1]]))


@given(st.lists(st.floats(-math.pi, math.pi), min_size=4, max_size=4))
def test_decompose_su2_recomposes(angles):
    a, b, c, phi = angles
    u = np.exp(1j * phi) * rz(a) @ ry(b) @ rz(c)
    t1, t2, t3 = decompose_su2(u)
    rec = rz(t1) @ ry(t2) @ rz(t3)
    k = np.argmax(np.abs(u.ravel()))
    phase = u.ravel()[k] / rec.ravel()[k]
    assert abs(abs(phase) - 1) < 1e-9
    assert np.allclose(phase * rec, u, atol=1e-9)


def test_two_qubit_prep_examples():
    out = execute_statevector(prepare_two_qubit([0, 0, 0, 0, 0, 0]))
    assert abs(out.amplitudes[0]) == pytest.approx(1)
    out = execute_statevector(prepare_two_qubit([math.pi, 0, math.pi, 0, 0, 0]))
    assert abs(out.amplitudes[3]) == pytest.approx(1)
    with pytest.raises(ContractViolation):
        prepare_two_qubit([4.0, 0, 0, 0, 0, 0])


def test_two_qubit_prep_random_draws():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        params = list(rng.uniform(0, math.pi, 3)) + list(rng.uniform(0, 2 * math.pi, 3))
        circ = prepare_two_qubit(params)
        assert circ.cnot_count == 1
        got = execute_statevector(circ).amplitudes
        # amplitude index 2a + b with A = qubit 1 and B = qubit 0
        want = two_qubit_coordinates(params)
        overlap = np.vdot(want, got)
        assert abs(overlap) == pytest.approx(1, abs=1e-8)
        assert np.allclose(got, overlap * want, atol=1e-8)


def test_execute_statevector_basics():
    assert execute_statevector(Circuit(3)).amplitudes[0] == 1
    c = Circuit(4).append("X", 0).append("X", 1)
    assert abs(execute_statevector(c).amplitudes[3]) == 1


@given(nontrivial_word, st.floats(-2, 2))
def test_compiled_matches_exponential_of_minus_i_theta_p(word, theta):
    p = P(word)
    s = StateVector.random(p.n_qubits, np.random.default_rng(0))
    out = run_gates(compile_pauli_exponential(p, theta), s.amplitudes)
    ref = apply_exponential(PauliSum.from_string(p, -1j), theta, s)
    assert np.allclose(out, ref.amplitudes, atol=1e-9)
    assert abs(np.linalg.norm(out) - 1) < 1e-10


def test_gate_validation():
    with pytest.raises((ContractViolation, DimensionError, ValueError)):
        Circuit(2).append("CNOT", 1, 1)
    with pytest.raises((ContractViolation, DimensionError, ValueError)):
        Circuit(2).append("X", 2)


def test_circuit_dump_parse_roundtrip():
    c = compile_pauli_exponential(P("XYZX"), 0.25)
    back = Circuit.parse(4, c.dump())
    assert np.allclose(circuit_unitary(back), circuit_unitary(c), atol=1e-7)


# ------------------------------------------------------------ noise


def test_noise_spec_validation():
    with pytest.raises(ContractViolation):
        NoiseSpec(t1=10e-6, t2=30e-6)
    with pytest.raises(ContractViolation):
        NoiseSpec(p_meas0_prep1=1.5)
    spam = NoiseSpec.spam(0.05)
    assert spam.p_meas1_prep0 == pytest.approx(0.01)
    assert NoiseSpec(cnot_depolarizing_error=0.9).depolarizing_weight == 1.0


def test_noiseless_density_equals_pure():
    c = compile_exponential_sum(PauliSum.from_words([(0.3j, "XXYZ"), (0.2j, "ZYII")]), 0.8)
    psi = execute_statevector(c)
    rho = execute_density(c, NOISELESS)
    assert np.allclose(rho.matrix, psi.to_density().matrix, atol=1e-12)
    assert fidelity_pure(rho, psi) == pytest.approx(1, abs=1e-9)


def test_full_depolarizing_pair():
    c = Circuit(2).append("H", 0).append("CNOT", 0, 1)
    rho = execute_density(c, NoiseSpec(cnot_depolarizing_error=0.8))
    assert purity(rho) == pytest.approx(0.25)
    assert np.allclose(rho.matrix, np.eye(4) / 4)


def test_purity_decreases_with_cnot_error():
    c = compile_pauli_exponential(P("XYZX"), 0.6)
    purities = [purity(execute_density(c, NoiseSpec(cnot_depolarizing_error=e))) for e in (0, 1e-3, 1e-2, 5e-2, 0.2)]
    assert all(a > b for a, b in zip(purities, purities[1:]))


def test_relaxation_decays_excited_state():
    c = Circuit(1).append("X", 0)
    for _ in range(20):
        c.append("RZ", 0, angle=0.0)
    rho = execute_density(c, NoiseSpec(t1=1e-6, t2=1e-6))
    gamma = 1 - math.exp(-21 * 35e-9 / 1e-6)
    assert rho.matrix[1, 1].real == pytest.approx(1 - gamma, rel=1e-9)
    rho.validate()


def test_density_size_limit():
    with pytest.raises(ResourceError):
        execute_density(Circuit(9), NoiseSpec(cnot_depolarizing_error=0.01))


def test_sample_examples():
    z = sample_pauli([P("Z")], StateVector.basis(1, 0), 100)
    assert z[P("Z")].value == 1.0
    zz = sample_pauli([P("ZZ")], StateVector.basis(2, 1), 50)
    assert zz[P("ZZ")].value == -1.0
    noisy = sample_pauli([P("Z")], StateVector.basis(1, 0), 10**6, NoiseSpec(p_meas1_prep0=0.1), rng_seed=3)
    assert noisy[P("Z")].value == pytest.approx(0.8, abs=0.003)
    with pytest.raises(ContractViolation):
        sample_pauli([P("XI"), P("ZI")], StateVector.basis(2), 10)


def test_sample_shared_basis_density():
    rho = DensityMatrix.maximally_mixed(2)
    est = sample_pauli([P("XI"), P("XX")], rho, 4000, rng_seed=1)
    assert abs(est[P("XI")].value) < 0.1


def test_sample_converges():
    s = StateVector.random(3, np.random.default_rng(5))
    strings = [P("XIZ"), P("XYZ"), P("IYI")]
    exact = {p: expectation(PauliSum.from_string(p), s) for p in strings}
    shots = 2000
    runs = [sample_pauli(strings, s, shots, rng_seed=k) for k in range(100)]
    for p in strings:
        vals = np.array([r[p].value for r in runs])
        se = max(r[p].standard_error for r in runs)
        assert se <= 1 / math.sqrt(shots) + 1e-12
        assert abs(vals.mean() - exact[p]) <= 5 * se / math.sqrt(len(runs)) + 1e-12


def _embed(m, q, n):
    from oracles import kron_qubits

    return kron_qubits([m if k == q else np.eye(2) for k in range(n)])


def test_depolarizing_pair_matches_pauli_twirl():
    from adaptvqe.circuit import _depolarize_pair

    n, a, b, w = 3, 2, 0, 0.3
    psi = StateVector.random(n, np.random.default_rng(4)).amplitudes
    rho = np.outer(psi, psi.conj())
    paulis = [word_matrix(x) for x in "IXYZ"]
    twirl = sum(
        _embed(pa, a, n) @ _embed(pb, b, n) @ rho @ (_embed(pa, a, n) @ _embed(pb, b, n)).conj().T
        for pa in paulis
        for pb in paulis
    )
    want = (1 - w) * rho + w * twirl / 16
    assert np.allclose(_depolarize_pair(rho, n, a, b, w), want, atol=1e-12)


def test_relaxation_channel_matches_dense_kraus():
    from adaptvqe.circuit import _amplitude_damping, _channel_1q, _phase_damping, _relaxation_kraus

    n, q = 3, 1
    psi = StateVector.random(n, np.random.default_rng(8)).amplitudes
    rho = np.outer(psi, psi.conj())
    step = lambda r, ks: sum(_embed(k, q, n) @ r @ _embed(k, q, n).conj().T for k in ks)
    want = step(step(rho, _amplitude_damping(0.2)), _phase_damping(0.1))
    assert np.allclose(_channel_1q(rho, n, q, _relaxation_kraus(0.2, 0.1)), want, atol=1e-12)
