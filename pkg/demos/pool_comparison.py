"""Pool sizes, string counts and symmetry behaviour side by side.

Fermionic pools (SGSD, SCGSD, GSD) and the Eight/Four hybrids keep particle
number and S_z; the qubit-level pools do not, which is what lets them reach
the ground state with fewer, cheaper operators."""

import numpy as np

from adaptvqe import build_pool, load_h2
from adaptvqe.chem import OrbitalOrdering
from adaptvqe.engine import AdaptConfig, adapt_run

FAMILIES = ["SGSD", "SCGSD", "GSD", "EIGHT", "FOUR", "TWO", "ONE", "QUBIT_NO_Z", "MIN_G"]


def breaks_symmetry(op, n=4):
    """Does exp(0.3 A) mix basis states with different (N, S_z)?"""
    from scipy.linalg import expm

    alt = OrbitalOrdering.ALTERNATING
    u = expm(0.3 * op.to_dense())
    sector = lambda i: (bin(i).count("1"), sum(1 for k in range(n) if i >> k & 1 and alt.is_alpha(k, n)))
    return any(
        sector(int(i)) != sector(j) for j in range(2**n) for i in np.flatnonzero(np.abs(u[:, j]) > 1e-10)
    )


print(f"{'pool':<12}{'n=4':>6}{'n=8':>6}  {'strings per operator (n=8)':<54} symmetry")
for fam in FAMILIES:
    p4, p8 = build_pool(fam, 4), build_pool(fam, 8)
    hist = p8.string_histogram()
    sym = "breaks" if any(breaks_symmetry(op.operator) for op in p4) else "keeps"
    print(f"{fam:<12}{len(p4):>6}{len(p8):>6}  {str(hist):<54} {sym}")

h2 = load_h2()
print("\nADAPT on H2 to eps = 1e-6:")
for fam in ["SGSD", "EIGHT", "QUBIT_NO_Z"]:
    rec = adapt_run(h2, AdaptConfig(build_pool(fam, 4), epsilon=1e-6))
    print(f"  {fam:<11} {len(rec.ansatz)} operators, {rec.ansatz.cnot_count():>3} CNOTs, error {rec.final_error:.1e}")
