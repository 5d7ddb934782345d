"""How many shots does H2 need?  One-operator ADAPT against UCCSD under pure
shot noise, a handful of seeds per point (raise RUNS for smoother medians).

Each run optimizes with Nelder-Mead on the sampled energy; the error shown
is that of the prepared state (noiseless energy of the final parameters)."""

import numpy as np

from adaptvqe import AdaptConfig, EnergyEvaluator, OptimizerConfig, adapt_run, build_pool, fixed_ansatz_vqe, load_h2
from adaptvqe.chem import CHEMICAL_ACCURACY
from adaptvqe.pools import build_uccsd
from adaptvqe.simstate import exact_ground

RUNS = 6
h2 = load_h2()
fci = exact_ground(h2.hamiltonian)[0]
nm = OptimizerConfig(kind="nelder_mead", max_evaluations=300, x_tolerance=1e-3, f_tolerance=1e-5)
no_z = build_pool("QUBIT_NO_Z", 4)
uccsd = build_uccsd(h2)

print(f"{'shots':>7}  {'ADAPT median':>13}  {'UCCSD median':>13}")
for shots in (256, 1024, 4096, 16384):
    adapt_err, ucc_err = [], []
    for seed in range(RUNS):
        ev = EnergyEvaluator.for_problem(h2, mode="sampled", shots=shots, seed=seed)
        adapt_err.append(abs(adapt_run(h2, AdaptConfig(no_z, max_iterations=1, optimizer=nm), ev, fci).final_error))
        ev = EnergyEvaluator.for_problem(h2, mode="sampled", shots=shots, seed=100 + seed)
        res = fixed_ansatz_vqe(uccsd, ev, nm)
        ucc_err.append(abs(ev.exact_energy([op.operator for op in uccsd], res.params) - fci))
    a, u = np.median(adapt_err), np.median(ucc_err)
    mark = "*" if a <= CHEMICAL_ACCURACY else " "
    print(f"{shots:>7}  {a:>12.2e}{mark}  {u:>13.2e}")
print("* ADAPT median within chemical accuracy")
