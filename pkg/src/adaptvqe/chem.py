"""Molecular problems: the ``.ham`` file format, Hartree-Fock references,
spin-orbital orderings, shot budgets and commuting-group partitioning.

File format (UTF-8, ``#`` starts a comment)::

    name=H2
    n_qubits=4
    n_electrons=2
    ordering=alternating        # or block
    geometry=0.74               # optional free-form tag
    [qubit]
    -0.0970662681676 IIII       # <real> [<imag>] <pauli word, qubit 0 first>
    0.0453026155038 XYYX
    [fermionic]                 # optional
    0.337377963407 : 0^ 1^ 1 0  # <real> [<imag>] : <ladder tokens>

If only a ``[fermionic]`` section is given, the qubit Hamiltonian is its
Jordan-Wigner image.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ContractViolation, DimensionError, ParseError
from .pauli import FermionSum, PauliString, PauliSum, commutes, jordan_wigner
from .simstate import StateVector

CHEMICAL_ACCURACY = 1.59e-3  # Hartree, 1 kcal/mol
BUNDLED_H2 = "h2_0.74.ham"


class OrbitalOrdering(str, enum.Enum):
    ALTERNATING = "alternating"  # a, b, a, b, ...
    BLOCK = "block"  # all alpha, then all beta

    def is_alpha(self, k: int, n: int) -> bool:
        if self is OrbitalOrdering.ALTERNATING:
            return k % 2 == 0
        return k < n // 2

    def spatial(self, k: int, n: int) -> int:
        if self is OrbitalOrdering.ALTERNATING:
            return k // 2
        return k % (n // 2)

    def spin_orbital(self, spatial: int, alpha: bool, n: int) -> int:
        if self is OrbitalOrdering.ALTERNATING:
            return 2 * spatial + (0 if alpha else 1)
        return spatial + (0 if alpha else n // 2)

    def sz2(self, orbitals, n: int) -> int:
        """Twice the S_z carried by a set of occupied orbitals."""
        return sum(1 if self.is_alpha(k, n) else -1 for k in orbitals)


@dataclass(frozen=True)
class MolecularProblem:
    name: str
    n_spin_orbitals: int
    n_electrons: int
    ordering: OrbitalOrdering
    hamiltonian: PauliSum
    fermionic_hamiltonian: FermionSum | None = None
    geometry_tag: str | None = None

    def __post_init__(self):
        if self.hamiltonian.n_qubits != self.n_spin_orbitals:
            raise DimensionError(
                f"Hamiltonian acts on {self.hamiltonian.n_qubits} qubits, expected {self.n_spin_orbitals}"
            )
        if not 0 <= self.n_electrons <= self.n_spin_orbitals:
            raise ContractViolation("electron count outside [0, n_spin_orbitals]")
        if not self.hamiltonian.is_hermitian():
            raise ContractViolation("Hamiltonian is not Hermitian")

    @property
    def n_qubits(self) -> int:
        return self.n_spin_orbitals


_HEADER_KEYS = {"name", "n_qubits", "n_electrons", "ordering", "geometry"}


def parse_problem(text: str, path: str | None = None) -> MolecularProblem:
    header: dict[str, str] = {}
    qubit_lines: list[tuple[int, str]] = []
    fermion_lines: list[str] = []
    fermion_start = 0
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if section == "fermionic" and not line.startswith("["):
            fermion_lines.append(line)
            continue
        if not line:
            continue
        if line.startswith("["):
            if line not in ("[qubit]", "[fermionic]"):
                raise ParseError(f"unknown section {line}", lineno, path)
            section = line[1:-1]
            fermion_start = lineno + 1 if section == "fermionic" else fermion_start
            continue
        if section is None:
            key, eq, value = line.partition("=")
            key = key.strip()
            if not eq or key not in _HEADER_KEYS:
                raise ParseError(f"bad header line {line!r}", lineno, path)
            header[key] = value.strip()
        else:
            qubit_lines.append((lineno, line))

    for key in ("n_qubits", "n_electrons"):
        if key not in header:
            raise ParseError(f"missing header {key}=", None, path)
    try:
        n = int(header["n_qubits"])
        n_e = int(header["n_electrons"])
        ordering = OrbitalOrdering(header.get("ordering", "alternating"))
    except ValueError as exc:
        raise ParseError(str(exc), None, path) from None

    terms = []
    for lineno, line in qubit_lines:
        parts = line.split()
        try:
            if len(parts) == 2:
                coeff = complex(float(parts[0]))
            elif len(parts) == 3:
                coeff = complex(float(parts[0]), float(parts[1]))
            else:
                raise ValueError(f"expected '<coeff> [<imag>] <word>', got {line!r}")
            word = parts[-1]
            if len(word) != n:
                raise ValueError(f"word {word!r} has {len(word)} letters, expected {n}")
            terms.append((PauliString.from_letters(word), coeff))
        except ValueError as exc:
            raise ParseError(str(exc), lineno, path) from None

    fermionic = None
    if any(fermion_lines):
        try:
            fermionic = FermionSum.parse("\n".join(fermion_lines), first_line=fermion_start)
        except ParseError as exc:
            raise ParseError(str(exc).split(": ", 1)[-1], exc.line, path) from None
    if terms:
        h = PauliSum(n, terms)
    elif fermionic is not None:
        h = jordan_wigner(fermionic, n)
    else:
        raise ParseError("no [qubit] or [fermionic] terms", None, path)
    if not h.is_hermitian():
        raise ContractViolation(f"{path or 'input'}: Hamiltonian is not Hermitian")
    return MolecularProblem(
        name=header.get("name", "molecule"),
        n_spin_orbitals=n,
        n_electrons=n_e,
        ordering=ordering,
        hamiltonian=h.real() if all(abs(c.imag) < 1e-15 for _, c in h) else h,
        fermionic_hamiltonian=fermionic,
        geometry_tag=header.get("geometry"),
    )


def load_problem(path: str | Path) -> MolecularProblem:
    path = Path(path)
    return parse_problem(path.read_text(encoding="utf-8"), str(path))


def load_h2() -> MolecularProblem:
    """The bundled 4-qubit H2 Hamiltonian at 0.74 Angstrom."""
    text = resources.files("adaptvqe.data").joinpath(BUNDLED_H2).read_text(encoding="utf-8")
    return parse_problem(text, BUNDLED_H2)


def format_problem(p: MolecularProblem) -> str:
    lines = [
        f"name={p.name}",
        f"n_qubits={p.n_spin_orbitals}",
        f"n_electrons={p.n_electrons}",
        f"ordering={p.ordering.value}",
    ]
    if p.geometry_tag is not None:
        lines.append(f"geometry={p.geometry_tag}")
    lines.append("[qubit]")
    for s, c in p.hamiltonian.sorted_terms():
        if c.imag == 0:
            lines.append(f"{c.real!r} {s.letters}")
        else:
            lines.append(f"{c.real!r} {c.imag!r} {s.letters}")
    return "\n".join(lines) + "\n"


def save_problem(p: MolecularProblem, path: str | Path) -> None:
    Path(path).write_text(format_problem(p), encoding="utf-8")


def occupied_orbitals(n: int, n_electrons: int, ordering: OrbitalOrdering) -> list[int]:
    ordering = OrbitalOrdering(ordering)
    if ordering is OrbitalOrdering.ALTERNATING:
        return list(range(n_electrons))
    n_alpha = (n_electrons + 1) // 2
    n_beta = n_electrons // 2
    return [ordering.spin_orbital(i, True, n) for i in range(n_alpha)] + [
        ordering.spin_orbital(i, False, n) for i in range(n_beta)
    ]


def hartree_fock_state(p: MolecularProblem) -> StateVector:
    return StateVector.from_occupied(p.n_qubits, occupied_orbitals(p.n_qubits, p.n_electrons, p.ordering))


# ------------------------------------------------------------ measurement budget


def estimate_shots(h: PauliSum, epsilon: float) -> int:
    """Shots for standard error ``epsilon``: ``ceil((sum |h_i|)^2 / eps^2)``.

    The identity coefficient is excluded since it is never measured.
    """
    if epsilon <= 0:
        raise ContractViolation("precision must be positive")
    # rounding first keeps exact squares such as 100.00000000000001 at 100
    return math.ceil(round((h.one_norm() / epsilon) ** 2, 9))


@dataclass(frozen=True)
class ShotPlan:
    total_shots: int
    per_string: dict[PauliString, int]


def make_shot_plan(h: PauliSum, total: int) -> ShotPlan:
    """Split ``total`` shots over the non-identity strings in proportion to
    ``|h_i|`` (largest-remainder rounding, ties to the first sorted string)."""
    terms = [(p, abs(c)) for p, c in h.without_identity().sorted_terms()]
    norm = sum(w for _, w in terms)
    if not terms or norm == 0:
        return ShotPlan(0, {})
    quotas = [total * w / norm for _, w in terms]
    base = [math.floor(q) for q in quotas]
    order = sorted(range(len(terms)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[: total - sum(base)]:
        base[i] += 1
    return ShotPlan(sum(base), {p: k for (p, _), k in zip(terms, base)})


def _first_fit(items, fits) -> list[list]:
    groups: list[list] = []
    for item in items:
        for g in groups:
            if fits(g, item):
                g.extend(item)
                break
        else:
            groups.append(list(item))
    return groups


def group_commuting(h: PauliSum, mode: str = "qubitwise") -> list[list[PauliString]]:
    """Greedy first-fit partition of the non-identity strings.

    Strings are visited by decreasing ``|h_i|`` (ties keep the Hamiltonian's
    term order) and put in the first group whose members all qubitwise
    commute with them.  ``mode="general"`` then merges whole qubitwise
    groups first-fit under general commutation, so it never needs more
    groups than the qubitwise partition.
    """
    if mode not in ("qubitwise", "general"):
        raise ValueError(f"unknown commutation mode {mode!r}")
    order = [p for p, _ in sorted(h.without_identity(), key=lambda t: -abs(t[1]))]
    groups = _first_fit([[p] for p in order], lambda g, new: all(commutes(new[0], q, "qubitwise") for q in g))
    if mode == "general":
        groups = _first_fit(groups, lambda g, new: all(commutes(a, b, "general") for a in new for b in g))
    return groups
