import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adaptvqe.chem import MolecularProblem, OrbitalOrdering, hartree_fock_state
from adaptvqe.engine import (
    CONSERVATIVE_COLUMNS,
    PLAIN_COLUMNS,
    REMOVAL_COLUMNS,
    AdaptConfig,
    Ansatz,
    AnsatzElement,
    EnergyEvaluator,
    OptimizerConfig,
    _Run,
    adapt_run,
    fixed_ansatz_vqe,
    gradient_at_zero,
    minimize_function,
    prepare,
    prepare_with,
)
from adaptvqe.errors import ContractViolation, StalledPoolError
from adaptvqe.pauli import PauliSum
from adaptvqe.pools import Pool, PoolOperator, build_eight_pool, build_min_g, build_pool, build_uccsd
from adaptvqe.simstate import StateVector, expectation
from oracles import central_difference

NOZ = "QUBIT_NO_Z"


def element(op, theta=0.0, it=0, grad=0.0, de=math.nan, idx=0):
    return AnsatzElement(idx, op, theta, it, grad, de)


def custom_pool(*words):
    ops = [PoolOperator(PauliSum.from_words([(1j, w)]), (), "single", "custom", w) for w in words]
    return Pool("custom", ops, len(words[0]))


# ------------------------------------------------------------ preparation


def test_prepare_trivial(h2):
    ref = hartree_fock_state(h2)
    assert np.array_equal(prepare(Ansatz(), ref).amplitudes, ref.amplitudes)
    ops = [op.operator for op in build_pool(NOZ, 4)[:3]]
    out = prepare(Ansatz([element(o) for o in ops]), ref)
    assert np.allclose(out.amplitudes, ref.amplitudes)
    with pytest.raises(ContractViolation):
        prepare_with(ops[:1], [math.inf], ref)


def test_prepare_eight_pool_two_determinant_state(h2):
    (tau,) = [op for op in build_eight_pool(4) if op.label == "0^ 1^ 2 3"]
    out = prepare(Ansatz([element(tau.operator, 0.1)]), hartree_fock_state(h2)).amplitudes
    assert np.flatnonzero(np.abs(out) > 1e-12).tolist() == [3, 12]
    assert out[3] == pytest.approx(math.cos(0.8)) and out[12] == pytest.approx(math.sin(0.8))


def test_ansatz_order_is_first_element_first():
    a, b = PauliSum.from_words([(1j, "YI")]), PauliSum.from_words([(1j, "XY")])
    ref = StateVector.basis(2, 0)
    out = prepare(Ansatz([element(a, 0.3), element(b, 0.5)]), ref)
    from oracles import dense_expm

    expected = dense_expm(b.to_dense(), 0.5) @ dense_expm(a.to_dense(), 0.3) @ ref.amplitudes
    assert np.allclose(out.amplitudes, expected)


# ------------------------------------------------------------ gradients


def test_gradient_matches_central_difference(h2):
    rng = np.random.default_rng(2024)
    pool = build_pool("GSD", 4).operators + build_pool(NOZ, 4).operators
    h = h2.hamiltonian
    worst = 0.0
    for _ in range(100):
        psi = StateVector.random(4, rng)
        op = pool[rng.integers(len(pool))].operator
        analytic = gradient_at_zero(op, psi, h)
        fd = central_difference(lambda t: expectation(h, prepare_with([op], t, psi)), np.zeros(1), 0, h=1e-4)
        worst = max(worst, abs(analytic - fd))
    assert worst <= 1e-6


def test_min_g_stalls(h2):
    ev = EnergyEvaluator.for_problem(h2)
    state = ev.state([], [])
    assert all(abs(gradient_at_zero(op.operator, state, h2.hamiltonian)) < 1e-10 for op in build_min_g(4))
    with pytest.raises(StalledPoolError):
        adapt_run(h2, AdaptConfig(build_min_g(4)))


def test_gradient_vanishes_at_optimum(h2, fci):
    ev = EnergyEvaluator.for_problem(h2)
    pool = build_uccsd(h2)
    res = fixed_ansatz_vqe(pool, ev)
    state = ev.state([op.operator for op in pool], res.params)
    for op in pool:
        assert abs(gradient_at_zero(op.operator, state, h2.hamiltonian)) < 1e-6


def test_sampled_gradient_unbiased(h2):
    op = build_pool(NOZ, 4)[4].operator
    ref = hartree_fock_state(h2)
    psi = prepare_with([build_pool(NOZ, 4)[0].operator], [0.2], ref)
    exact = gradient_at_zero(op, psi, h2.hamiltonian)
    vals = []
    for seed in range(100):
        ev = EnergyEvaluator(h2.hamiltonian, ref, mode="sampled", shots=500, seed=seed)
        vals.append(gradient_at_zero(op, psi, h2.hamiltonian, ev))
    vals = np.array(vals)
    assert vals.std() > 0
    assert abs(vals.mean() - exact) <= 5 * vals.std(ddof=1) / math.sqrt(len(vals))


# ------------------------------------------------------------ optimizers


@pytest.mark.parametrize("kind", ["nelder_mead", "quasi_newton_fd"])
def test_quadratic(kind):
    cfg = OptimizerConfig(kind=kind, x_tolerance=1e-8, f_tolerance=1e-14)
    res = minimize_function(lambda x: float((x[0] - 0.3) ** 2), [0.0], cfg)
    assert res.converged and abs(res.params[0] - 0.3) < 1e-6


def test_budget_exhaustion_returns_best_so_far():
    calls = []

    def f(x):
        calls.append(x.copy())
        return float(np.sum((x - 1) ** 2))

    res = minimize_function(f, [0.0, 0.0, 0.0], OptimizerConfig(kind="nelder_mead", max_evaluations=15))
    assert not res.converged and res.evaluations == 15 == len(calls)
    assert res.energy == min(float(np.sum((c - 1) ** 2)) for c in calls)


def test_optimizer_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(kind="bogus")
    with pytest.raises(ValueError):
        OptimizerConfig(x_tolerance=0)


def test_nelder_mead_initial_simplex(monkeypatch):
    import adaptvqe.engine as eng

    seen = {}
    real = eng.optimize.minimize

    def spy(fun, x0, **kw):
        seen["simplex"] = kw["options"]["initial_simplex"]
        return real(fun, x0, **kw)

    monkeypatch.setattr(eng.optimize, "minimize", spy)
    minimize_function(lambda x: float(x @ x), [1.0, 2.0], OptimizerConfig(kind="nelder_mead", initial_simplex_scale=0.25))
    assert np.allclose(seen["simplex"], [[1, 2], [1.25, 2], [1, 2.25]])


def test_uccsd_vqe(h2, fci):
    res = fixed_ansatz_vqe(build_uccsd(h2), EnergyEvaluator.for_problem(h2))
    assert res.energy - fci <= 1e-6


def test_adapt_config_validation():
    pool = build_pool(NOZ, 4)
    for kw in ({"r": 1.0}, {"t": 1.0}, {"window": 0}, {"n_candidates": 0}, {"growth": "greedy"}, {"epsilon": 0}):
        with pytest.raises(ValueError):
            AdaptConfig(pool, **kw)


# ------------------------------------------------------------ ADAPT


def test_single_iteration(h2, fci):
    rec = adapt_run(h2, AdaptConfig(build_pool(NOZ, 4), max_iterations=1))
    assert len(rec.rows) == 1 and rec.final_error <= 1.59e-3
    assert rec.rows[0]["n_parameters"] == 1 and rec.rows[0]["cnot_count"] == 6


@pytest.mark.parametrize("family", ["SGSD", "GSD", NOZ, "EIGHT"])
def test_energy_monotone_and_variational(h2, fci, family):
    rec = adapt_run(h2, AdaptConfig(build_pool(family, 4), epsilon=1e-6, max_iterations=8))
    energies = [rec.reference_energy] + [r["energy"] for r in rec.rows]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
    assert min(energies) >= fci - 1e-10
    counts = [r["cumulative_optimizations"] for r in rec.rows]
    assert counts == sorted(counts) and counts[-1] == len(rec.rows)
    assert rec.converged and rec.final_error <= 1e-6


def test_tie_breaks_to_lowest_index(h2):
    # duplicating the pool puts every gradient twice; the first copy must win
    pool = build_pool(NOZ, 4)
    doubled = Pool("x", pool.operators + pool.operators, 4)
    rec = adapt_run(h2, AdaptConfig(doubled, max_iterations=1))
    assert rec.rows[0]["selected"] < len(pool)


def _strip(rows, extra=()):
    return [{k: v for k, v in r.items() if k not in extra} for r in rows]


def test_conservative_one_matches_plain(h2):
    pool = build_pool(NOZ, 4)
    plain = adapt_run(h2, AdaptConfig(pool, epsilon=1e-6))
    cons = adapt_run(h2, AdaptConfig(pool, epsilon=1e-6, growth="conservative", n_candidates=1))
    assert _strip(cons.rows, CONSERVATIVE_COLUMNS) == plain.rows


@pytest.mark.parametrize("n", [2, 3])
def test_conservative_counts_and_energy(h2, n):
    pool = build_pool("GSD", 4)
    plain = adapt_run(h2, AdaptConfig(pool, epsilon=1e-6, max_iterations=3))
    cons = adapt_run(h2, AdaptConfig(pool, epsilon=1e-6, max_iterations=3, growth="conservative", n_candidates=n))
    for k, row in enumerate(cons.rows, 1):
        assert row["cumulative_optimizations"] == n * k
        assert len(row["candidates"]) == n
    assert cons.rows[0]["energy"] <= plain.rows[0]["energy"] + 1e-12


def test_removal_counter_consistency(h2):
    rec = adapt_run(h2, AdaptConfig(build_pool("GSD", 4), epsilon=1e-6, growth="removal"))
    attempts = 0
    for k, row in enumerate(rec.rows, 1):
        attempts += row["removal_attempts"]
        assert row["cumulative_optimizations"] == k + attempts


# -------------------------------------------- constructed removal instances


def _removal_setup(a=5e-6, b=5e-4, recorded_a=None, grad_a=None):
    """Two independent qubits: exp(t iY_k) takes an X_k term from 0 down to -coeff."""
    h = PauliSum.from_words([(a, "XIII"), (b, "IXII")])
    problem = MolecularProblem("toy", 4, 0, OrbitalOrdering.ALTERNATING, h)
    pool = custom_pool("YIII", "IYII")
    cfg = AdaptConfig(pool, growth="removal", optimizer=OptimizerConfig(f_tolerance=1e-14))
    run = _Run(problem, cfg, EnergyEvaluator.for_problem(problem))
    e0 = run.energy
    # A first, then B, each optimized with bookkeeping by hand
    anz = run.append(run.ansatz, 0, 1, 2 * a)
    anz, e1, _ = run.optimize(anz)
    anz.elements[-1].delta_e = e1 - e0 if recorded_a is None else recorded_a
    if grad_a is not None:
        anz.elements[-1].gradient_at_selection = grad_a
    anz = run.append(anz, 1, 2, 2 * b)
    anz, e2, _ = run.optimize(anz)
    anz.elements[-1].delta_e = e2 - e1
    run.ansatz, run.energy = anz, e2
    run.ratios = [e.performance_ratio for e in anz.elements]
    return run


def test_removal_commits_small_contributor():
    run = _removal_setup(grad_a=1e-4)
    before = run.optimizations
    e_before = run.energy
    delta_j = run.ansatz.elements[-1].delta_e
    attempts, removed = run.removal_hook(delta_j)
    assert (attempts, removed) == (1, [0])
    assert run.optimizations == before + 1
    assert [e.pool_index for e in run.ansatz.elements] == [1]
    # the energy rose by |dE_A| = 5e-6, which is within t |dE_A|
    assert run.energy - e_before == pytest.approx(5e-6, abs=1e-10)
    assert run.penalty(0) < 1 and run.penalty(1) == 1


def test_removal_restores_bit_exact():
    # pretend A gained almost nothing, so dropping it costs far more than t |dE_A|
    run = _removal_setup(recorded_a=-1e-8)
    snapshot = [(e.pool_index, e.parameter) for e in run.ansatz.elements]
    energy = run.energy
    attempts, removed = run.removal_hook(run.ansatz.elements[-1].delta_e)
    assert (attempts, removed) == (1, [])
    assert [(e.pool_index, e.parameter) for e in run.ansatz.elements] == snapshot
    assert run.energy == energy and not run.penalties


def test_removal_vacuous_when_criterion_fails():
    run = _removal_setup(a=5e-4, b=5e-4)
    before = run.optimizations
    assert run.removal_hook(run.ansatz.elements[-1].delta_e) == (0, [])
    assert run.optimizations == before


@given(st.floats(1e-6, 1e-3), st.floats(1e-4, 1e-2), st.floats(1e-9, 1e-3))
def test_removal_commit_rule(a, b, recorded):
    run = _removal_setup(a=a, b=b, recorded_a=-recorded)
    energy = run.energy
    delta_j = run.ansatz.elements[-1].delta_e
    attempts, removed = run.removal_hook(delta_j)
    attempted = recorded < 0.5 * abs(delta_j)
    assert attempts == int(attempted)
    # removing A raises the energy by exactly a
    if attempted and abs(a - 1.5 * recorded) > 1e-9:
        assert bool(removed) == (a < 1.5 * recorded)
    assert run.energy <= energy + 1.5 * recorded + 1e-12


# ------------------------------------------------------------ records


def test_csv_schema_and_determinism(h2):
    pool = build_pool(NOZ, 4)
    plain = adapt_run(h2, AdaptConfig(pool, epsilon=1e-6))
    removal = adapt_run(h2, AdaptConfig(pool, epsilon=1e-6, growth="removal"))
    assert set(plain.columns) < set(removal.columns)
    assert plain.columns == PLAIN_COLUMNS and removal.columns == PLAIN_COLUMNS + REMOVAL_COLUMNS
    header = removal.to_csv().splitlines()[0].split(",")
    assert header == list(removal.columns)
    again = adapt_run(h2, AdaptConfig(pool, epsilon=1e-6, growth="removal"))
    assert again.to_csv() == removal.to_csv()


def test_sampled_run_deterministic_given_seed(h2):
    pool = build_pool(NOZ, 4)
    cfg = AdaptConfig(pool, max_iterations=1, optimizer=OptimizerConfig(kind="nelder_mead", max_evaluations=60))

    def run(seed):
        ev = EnergyEvaluator.for_problem(h2, mode="sampled", shots=256, seed=seed)
        return adapt_run(h2, cfg, ev).to_csv()

    assert run(5) == run(5)
    assert run(5) != run(6)
