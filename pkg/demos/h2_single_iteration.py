"""H2 at 0.74 A: one ADAPT iteration with the no-Z qubit pool already lands
on the exact ground state, while UCCSD needs three parameters for the same."""

from adaptvqe import AdaptConfig, EnergyEvaluator, adapt_run, build_pool, fixed_ansatz_vqe, load_h2
from adaptvqe.chem import CHEMICAL_ACCURACY, hartree_fock_state
from adaptvqe.pools import build_uccsd
from adaptvqe.simstate import exact_ground, expectation

h2 = load_h2()
fci = exact_ground(h2.hamiltonian)[0]
hf = expectation(h2.hamiltonian, hartree_fock_state(h2))
print(f"FCI energy        {fci:.8f} Ha")
print(f"Hartree-Fock      {hf:.8f} Ha  (error {hf - fci:.2e})")

pool = build_pool("QUBIT_NO_Z", 4)
print(f"\nno-Z pool: {len(pool)} single-string operators")

# the gradient of every pool operator at the HF state decides the first pick
rec = adapt_run(h2, AdaptConfig(pool, max_iterations=1))
row = rec.rows[0]
chosen = pool[row["selected"]]
print(f"iteration 1 picks #{row['selected']} ({chosen.label}), gradient norm {row['gradient_norm']:.4f}")
print(f"energy after one parameter: {row['energy']:.10f} Ha, error {rec.final_error:.1e}")
print(f"circuit cost: {row['cnot_count']} CNOTs")

ev = EnergyEvaluator.for_problem(h2)
res = fixed_ansatz_vqe(build_uccsd(h2), ev)
ucc_cnots = sum(2 * (p.weight - 1) for op in build_uccsd(h2) for p in op.operator.strings)
print(f"\nUCCSD: error {res.energy - fci:.1e} with 3 parameters and {ucc_cnots} CNOTs")
print(f"chemical accuracy is {CHEMICAL_ACCURACY:.2e} Ha")
