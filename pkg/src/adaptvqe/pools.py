"""Operator pools for adaptive ansatz growth.

Every pool operator is an antihermitian ``PauliSum`` scaled so that its
largest coefficient has magnitude 1.  Fermionic families are built from
ladder-operator excitations and mapped with Jordan-Wigner; qubit families
are derived from their Pauli strings.

Index conventions: spin-orbitals follow an ``OrbitalOrdering``.  Hybrid
pools label a pair as ``q < p`` and a quadruple as ``q < p < s < r``; the
letters of a format string such as ``"XXYX"`` refer to ``q, p, s, r`` in that
order, which is also how Pauli words are written (qubit 0 first).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .chem import MolecularProblem, OrbitalOrdering, occupied_orbitals
from .errors import ContractViolation
from .pauli import FermionSum, LadderOp, PauliString, PauliSum, jordan_wigner, strip_z_chain

FAMILIES = (
    "SGSD",
    "SCGSD",
    "GSD",
    "QUBIT",
    "QUBIT_NO_Z",
    "ONE",
    "TWO",
    "FOUR",
    "EIGHT",
    "MIN_G",
    "UCCSD",
)
DEFAULT_FORMAT = "XXYX"


@dataclass(frozen=True)
class PoolOperator:
    operator: PauliSum
    source_orbitals: tuple[int, ...]
    kind: str  # "single" or "double"
    family: str
    label: str = ""

    @property
    def n_strings(self) -> int:
        return len(self.operator)


@dataclass
class Pool:
    family: str
    operators: list[PoolOperator]
    n_spin_orbitals: int
    format: str | None = None

    def __len__(self) -> int:
        return len(self.operators)

    def __iter__(self) -> Iterator[PoolOperator]:
        return iter(self.operators)

    def __getitem__(self, i: int) -> PoolOperator:
        return self.operators[i]

    @property
    def name(self) -> str:
        return f"{self.family}({self.format})" if self.format else self.family

    def string_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for op in self.operators:
            hist[op.n_strings] = hist.get(op.n_strings, 0) + 1
        return dict(sorted(hist.items()))


# ------------------------------------------------------------ helpers


def _ladder(*ops: tuple[int, bool], coeff: complex = 1.0) -> FermionSum:
    return FermionSum([(coeff, [LadderOp(o, d) for o, d in ops])])


def _single(p: int, q: int, coeff: complex = 1.0) -> FermionSum:
    """``a_p^dagger a_q``."""
    return _ladder((p, True), (q, False), coeff=coeff)


def _double(a: int, b: int, c: int, d: int, coeff: complex = 1.0) -> FermionSum:
    """``a_a^dagger a_b a_c^dagger a_d`` (the pairing used by spin-adapted pools)."""
    return _ladder((a, True), (b, False), (c, True), (d, False), coeff=coeff)


def _word(f: FermionSum) -> str:
    return " ".join(str(op) for op in f.terms[0][1])


def _antihermitian(f: FermionSum, n: int) -> PauliSum:
    return jordan_wigner(f - f.dagger(), n)


def dedup_key(op: PauliSum) -> frozenset:
    """Operators equal up to a positive scale factor share a key.

    Coefficients are divided by the magnitude of the leading term, so an
    operator and its negative stay distinct.
    """
    terms = op.sorted_terms()
    lead = abs(terms[0][1])
    return frozenset((p, complex(round((c / lead).real, 9), round((c / lead).imag, 9))) for p, c in terms)


class _Collector:
    def __init__(self, family: str, n: int, fmt: str | None = None):
        self.pool = Pool(family, [], n, fmt)
        self._seen: set = set()

    def add(self, op: PauliSum, source: Iterable[int], kind: str, label: str = "") -> None:
        if op.is_zero:
            return
        op = op.normalized()
        key = dedup_key(op)
        if key in self._seen:
            return
        self._seen.add(key)
        label = label or op.sorted_terms()[0][0].letters
        self.pool.operators.append(PoolOperator(op, tuple(source), kind, self.pool.family, label))


def _check_n(n: int) -> None:
    if n < 2 or n % 2:
        raise ContractViolation("pools need an even number (>= 2) of spin-orbitals")


def _spatial_pairs(n_spatial: int) -> list[tuple[int, int]]:
    return [(p, q) for p in range(n_spatial) for q in range(p, n_spatial)]


# ------------------------------------------------------------ spin-adapted pools


def _spin_adapted_terms(n: int, ordering: OrbitalOrdering):
    """Yield ``(kind, label, {class: [(fermion component, orbitals)]})`` over
    generalized spatial-orbital singles and doubles.

    Singles pair ``a_pa^ a_qa`` with its spin complement.  Doubles cover the
    three spin classes ``A`` (all same spin), ``B`` (mixed, direct) and ``C``
    (mixed, exchanged) of ``a_r^ a_p a_s^ a_q``.
    """
    ordering = OrbitalOrdering(ordering)
    so = lambda k, alpha: ordering.spin_orbital(k, alpha, n)  # noqa: E731
    pairs = _spatial_pairs(n // 2)
    for p, q in pairs:
        pa, pb, qa, qb = so(p, True), so(p, False), so(q, True), so(q, False)
        yield "single", f"{p}->{q}", {"S": [(_single(pa, qa), (pa, qa)), (_single(pb, qb), (pb, qb))]}
    for i, (p, q) in enumerate(pairs):
        pa, pb, qa, qb = so(p, True), so(p, False), so(q, True), so(q, False)
        for r, s in pairs[i:]:
            ra, rb, sa, sb = so(r, True), so(r, False), so(s, True), so(s, False)
            classes = {
                "A": [((ra, pa, sa, qa)), ((rb, pb, sb, qb))],
                "B": [((ra, pa, sb, qb)), ((rb, pb, sa, qa))],
                "C": [((ra, pb, sb, qa)), ((rb, pa, sa, qb))],
            }
            yield "double", f"{p}{q}->{r}{s}", {k: [(_double(*ix), ix) for ix in v] for k, v in classes.items()}


def build_scgsd(n: int, ordering: OrbitalOrdering = OrbitalOrdering.ALTERNATING) -> Pool:
    """Spin-complemented generalized singles and doubles."""
    _check_n(n)
    out = _Collector("SCGSD", n)
    for kind, label, classes in _spin_adapted_terms(n, ordering):
        for cls, comps in classes.items():
            f = FermionSum([t for fc, _ in comps for t in fc.terms])
            src = sorted({k for _, ix in comps for k in ix})
            out.add(_antihermitian(f, n), src, kind, f"{label}:{cls}")
    return out.pool


def build_sgsd(n: int, ordering: OrbitalOrdering = OrbitalOrdering.ALTERNATING) -> Pool:
    """Singlet generalized singles and doubles.

    Doubles are the two singlet couplings of each spatial quadruple: the
    first weights the same-spin class by ``2/sqrt(12)`` and both mixed
    classes by ``1/sqrt(12)``; the second takes the mixed classes with
    weights ``+1/2`` and ``-1/2``.
    """
    _check_n(n)
    out = _Collector("SGSD", n)
    k = 1 / math.sqrt(12)
    for kind, label, classes in _spin_adapted_terms(n, ordering):
        src = sorted({o for comps in classes.values() for _, ix in comps for o in ix})
        if kind == "single":
            f = FermionSum([t for fc, _ in classes["S"] for t in fc.terms])
            out.add(_antihermitian(f, n), src, kind, label)
            continue
        weighted = [("A", 2 * k), ("B", k), ("C", k)], [("B", 0.5), ("C", -0.5)]
        for tag, weights in zip(("t", "s"), weighted):
            f = FermionSum(
                [(w * c, ops) for cls, w in weights for fc, _ in classes[cls] for c, ops in fc.terms]
            )
            out.add(_antihermitian(f, n), src, kind, f"{label}:{tag}")
    return out.pool


# ------------------------------------------------------------ spin-orbital pools


def _same_spin(ordering: OrbitalOrdering, n: int, *orbitals: int) -> bool:
    return len({ordering.is_alpha(k, n) for k in orbitals}) == 1


def _gsd_terms(n: int, ordering: OrbitalOrdering):
    """Yield ``(kind, fermion excitation, orbitals)`` for generalized
    spin-conserving singles ``a_q^ a_p`` (p < q) and doubles
    ``a_p^ a_q^ a_r a_s`` (p < q, r < s, (p, q) before (r, s))."""
    ordering = OrbitalOrdering(ordering)
    for p, q in itertools.combinations(range(n), 2):
        if _same_spin(ordering, n, p, q):
            yield "single", _single(q, p), (p, q)
    pairs = list(itertools.combinations(range(n), 2))
    for i, (p, q) in enumerate(pairs):
        for r, s in pairs[i + 1 :]:
            if ordering.sz2((p, q), n) != ordering.sz2((r, s), n):
                continue
            f = _ladder((p, True), (q, True), (r, False), (s, False))
            yield "double", f, tuple(sorted({p, q, r, s}))


def build_gsd(n: int, ordering: OrbitalOrdering = OrbitalOrdering.ALTERNATING) -> Pool:
    """Generalized spin-orbital singles and doubles (not spin-adapted)."""
    _check_n(n)
    out = _Collector("GSD", n)
    for kind, f, src in _gsd_terms(n, ordering):
        out.add(_antihermitian(f, n), src, kind, _word(f))
    return out.pool


def build_eight_pool(n: int, ordering: OrbitalOrdering = OrbitalOrdering.ALTERNATING) -> Pool:
    """GSD operators with the Jordan-Wigner strings removed (qubit excitations)."""
    _check_n(n)
    out = _Collector("EIGHT", n)
    for kind, f, src in _gsd_terms(n, ordering):
        out.add(strip_z_chain(_antihermitian(f, n), src), src, kind, _word(f))
    return out.pool


def build_qubit_pool(
    n: int,
    ordering: OrbitalOrdering = OrbitalOrdering.ALTERNATING,
    keep_z_chain: bool = False,
    strip: str = "support",
) -> Pool:
    """One operator ``i P`` per distinct Pauli string of the SCGSD pool.

    With ``keep_z_chain=False`` the Z letters of each SCGSD operator on
    qubits outside its source orbitals are removed before deduplication.
    ``strip="all"`` removes every Z letter instead, leaving X/Y strings only.
    """
    _check_n(n)
    if strip not in ("support", "all"):
        raise ValueError("strip must be 'support' or 'all'")
    family = "QUBIT" if keep_z_chain else "QUBIT_NO_Z"
    out = _Collector(family, n)
    for src in build_scgsd(n, ordering):
        op = src.operator
        if not keep_z_chain:
            op = strip_z_chain(op, src.source_orbitals if strip == "support" else ())
        for p, _ in op.sorted_terms():
            out.add(PauliSum.from_string(p, 1j), p.support, src.kind, p.letters)
    return out.pool


# ------------------------------------------------------------ hybrid pools


def _spin_valid_quads(n: int, ordering: OrbitalOrdering) -> list[tuple[int, int, int, int]]:
    """``(q, p, s, r)`` with ``q < p < s < r`` and an even number of alpha orbitals."""
    quads = []
    for q, p, s, r in itertools.combinations(range(n), 4):
        if sum(ordering.is_alpha(k, n) for k in (q, p, s, r)) % 2 == 0:
            quads.append((q, p, s, r))
    return quads


def _spin_valid_pairs(n: int, ordering: OrbitalOrdering) -> list[tuple[int, int]]:
    """``(q, p)`` with ``q < p`` of equal spin."""
    return [(q, p) for q, p in itertools.combinations(range(n), 2) if _same_spin(ordering, n, p, q)]


def _string(n: int, letters: dict[int, str]) -> PauliString:
    return PauliString.from_ops(letters, n)


def _zz(n: int, *qubits: int) -> PauliSum:
    return PauliSum.from_string(_string(n, {k: "Z" for k in qubits}))


def _check_format(fmt: str) -> str:
    fmt = fmt.upper()
    if len(fmt) != 4 or set(fmt) - {"X", "Y"}:
        raise ContractViolation(f"format {fmt!r} must be four X/Y letters")
    if fmt.count("Y") % 2 == 0:
        raise ContractViolation(f"format {fmt!r} needs an odd number of Y letters")
    return fmt


def _one_ops(n: int, ordering: OrbitalOrdering, fmt: str):
    ordering = OrbitalOrdering(ordering)
    for q, p in _spin_valid_pairs(n, ordering):
        yield "single", (q, p), PauliSum.from_string(_string(n, {q: "Y", p: "X"}), 1j)
    for quad in _spin_valid_quads(n, ordering):
        yield "double", quad, PauliSum.from_string(_string(n, dict(zip(quad, fmt))), 1j)


def build_one_pool(
    n: int, ordering: OrbitalOrdering = OrbitalOrdering.ALTERNATING, format: str = DEFAULT_FORMAT
) -> Pool:
    """One string per excitation: ``i Y_q X_p`` for singles, ``i <format>`` for doubles."""
    _check_n(n)
    fmt = _check_format(format)
    out = _Collector("ONE", n, fmt)
    for kind, idx, op in _one_ops(n, ordering, fmt):
        out.add(op, sorted(idx), kind)
    return out.pool


def _two_op(n: int, kind: str, idx: tuple[int, ...], op: PauliSum) -> PauliSum:
    ident = PauliSum.identity(n)
    if kind == "single":
        return op * (ident - _zz(n, *idx))
    return op * (ident + _zz(n, *idx))


def build_two_pool(
    n: int, ordering: OrbitalOrdering = OrbitalOrdering.ALTERNATING, format: str = DEFAULT_FORMAT
) -> Pool:
    """One-pool operators times a parity check: ``(1 - Z_q Z_p)`` for singles,
    ``(1 + Z_q Z_p Z_s Z_r)`` for doubles."""
    _check_n(n)
    fmt = _check_format(format)
    out = _Collector("TWO", n, fmt)
    for kind, idx, op in _one_ops(n, ordering, fmt):
        out.add(_two_op(n, kind, idx, op), sorted(idx), kind)
    return out.pool


def four_pool_factors(quad: tuple[int, int, int, int], ordering: OrbitalOrdering, n: int) -> list[tuple[int, int]]:
    """Qubit pairs ``(a, b)`` of the ``(1 - Z_a Z_b)`` factors for a spin pattern.

    Alternating spins use ``Z_p Z_r``, paired spins ``Z_s Z_r``, nested spins
    ``Z_q Z_r``; a single-spin quadruple gets all three.
    """
    q, p, s, r = quad
    up = [ordering.is_alpha(k, n) for k in quad]
    if up[0] == up[2] and up[1] == up[3] and up[0] != up[1]:
        return [(p, r)]
    if up[0] == up[1] and up[2] == up[3] and up[0] != up[2]:
        return [(s, r)]
    if up[0] == up[3] and up[1] == up[2] and up[0] != up[1]:
        return [(q, r)]
    return [(s, r), (p, r), (q, r)]


def build_four_pool(
    n: int, ordering: OrbitalOrdering = OrbitalOrdering.ALTERNATING, format: str = DEFAULT_FORMAT
) -> Pool:
    """Two-pool operators whose doubles are also multiplied by a spin-pattern
    factor ``(1 - Z_a Z_b)``, so that particle number and S_z are conserved."""
    _check_n(n)
    ordering = OrbitalOrdering(ordering)
    fmt = _check_format(format)
    out = _Collector("FOUR", n, fmt)
    ident = PauliSum.identity(n)
    for kind, idx, op in _one_ops(n, ordering, fmt):
        two = _two_op(n, kind, idx, op)
        if kind == "single":
            out.add(two, sorted(idx), kind)
            continue
        for a, b in four_pool_factors(idx, ordering, n):
            out.add(two * (ident - _zz(n, a, b)), sorted(idx), kind, f"Z{a}Z{b}")
    return out.pool


# ------------------------------------------------------------ minimal and fixed pools


def build_min_g(n: int) -> Pool:
    """The ``2n - 2`` operators ``i Z_k Y_{k+1}`` and ``i Y_k`` (k < n - 1)."""
    if n < 2:
        raise ContractViolation("the minimal pool needs at least two qubits")
    out = _Collector("MIN_G", n)
    for k in range(n - 1):
        out.add(PauliSum.from_string(_string(n, {k: "Z", k + 1: "Y"}), 1j), (k, k + 1), "single")
    for k in range(n - 1):
        out.add(PauliSum.from_string(_string(n, {k: "Y"}), 1j), (k,), "single")
    return out.pool


def build_uccsd(problem: MolecularProblem) -> Pool:
    """Occupied-to-virtual spin-conserving singles and doubles."""
    n, ordering = problem.n_qubits, problem.ordering
    occ = occupied_orbitals(n, problem.n_electrons, ordering)
    virt = [k for k in range(n) if k not in occ]
    out = _Collector("UCCSD", n)
    for i in occ:
        for a in virt:
            if _same_spin(ordering, n, i, a):
                out.add(_antihermitian(_single(a, i), n), sorted((i, a)), "single", f"{i}->{a}")
    for i, j in itertools.combinations(occ, 2):
        for a, b in itertools.combinations(virt, 2):
            if ordering.sz2((i, j), n) == ordering.sz2((a, b), n):
                f = _ladder((a, True), (b, True), (j, False), (i, False))
                out.add(_antihermitian(f, n), sorted((i, j, a, b)), "double", f"{i}{j}->{a}{b}")
    return out.pool


def build_pool(
    family: str,
    n: int,
    ordering: OrbitalOrdering = OrbitalOrdering.ALTERNATING,
    format: str = DEFAULT_FORMAT,
    problem: MolecularProblem | None = None,
) -> Pool:
    """Dispatch on a family name (case-insensitive)."""
    fam = family.upper().replace("-", "_")
    if fam == "SGSD":
        return build_sgsd(n, ordering)
    if fam == "SCGSD":
        return build_scgsd(n, ordering)
    if fam == "GSD":
        return build_gsd(n, ordering)
    if fam == "QUBIT":
        return build_qubit_pool(n, ordering, keep_z_chain=True)
    if fam in ("QUBIT_NO_Z", "NO_Z"):
        return build_qubit_pool(n, ordering, keep_z_chain=False)
    if fam == "ONE":
        return build_one_pool(n, ordering, format)
    if fam == "TWO":
        return build_two_pool(n, ordering, format)
    if fam == "FOUR":
        return build_four_pool(n, ordering, format)
    if fam == "EIGHT":
        return build_eight_pool(n, ordering)
    if fam == "MIN_G":
        return build_min_g(n)
    if fam == "UCCSD":
        if problem is None:
            raise ContractViolation("the UCCSD pool needs a molecular problem")
        return build_uccsd(problem)
    raise ContractViolation(f"unknown pool family {family!r}; choose from {', '.join(FAMILIES)}")
