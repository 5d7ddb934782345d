"""Pauli-string and fermionic-operator algebra.

A :class:`PauliString` stores one letter per qubit in the two-bit
symplectic form: bit ``k`` of ``x`` is set for X or Y on qubit ``k`` and
bit ``k`` of ``z`` is set for Z or Y.  ``Y = i X Z`` so the string with
masks ``(x, z)`` equals ``i**popcount(x & z) * X**x Z**z``.

Text form is one character per qubit, character ``k`` addressing qubit
``k`` (``"ZIXY"`` is Z0 X2 Y3).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ContractViolation, DimensionError, ParseError

DROP_TOL = 1e-12
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
_I_POW = (1, 1j, -1, -1j)


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DimensionError("a Pauli string needs at least one qubit")
        full = (1 << self.n_qubits) - 1
        if self.x & ~full or self.z & ~full:
            raise DimensionError("bit mask addresses qubits beyond n_qubits")

    @classmethod
    def from_letters(cls, letters: str) -> "PauliString":
        x = z = 0
        for k, ch in enumerate(letters.strip().upper()):
            try:
                bx, bz = _LETTER_BITS[ch]
            except KeyError:
                raise ParseError(f"unknown Pauli letter {ch!r} in {letters!r}") from None
            x |= bx << k
            z |= bz << k
        return cls(len(letters.strip()), x, z)

    @classmethod
    def from_ops(cls, ops: Mapping[int, str], n_qubits: int) -> "PauliString":
        """Build from a sparse ``{qubit: letter}`` mapping."""
        x = z = 0
        for q, ch in ops.items():
            if not 0 <= q < n_qubits:
                raise DimensionError(f"qubit {q} out of range for {n_qubits} qubits")
            bx, bz = _LETTER_BITS[ch.upper()]
            x |= bx << q
            z |= bz << q
        return cls(n_qubits, x, z)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, 0, 0)

    def letter(self, k: int) -> str:
        return _BITS_LETTER[((self.x >> k) & 1, (self.z >> k) & 1)]

    @property
    def letters(self) -> str:
        return "".join(self.letter(k) for k in range(self.n_qubits))

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def support(self) -> tuple[int, ...]:
        m = self.x | self.z
        return tuple(k for k in range(self.n_qubits) if (m >> k) & 1)

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def y_count(self) -> int:
        return _popcount(self.x & self.z)

    def __str__(self) -> str:
        return self.letters

    def __repr__(self) -> str:
        return f"PauliString({self.letters!r})"

    def __lt__(self, other: "PauliString") -> bool:
        return (self.n_qubits, self.letters) < (other.n_qubits, other.letters)

    def to_dense(self) -> np.ndarray:
        return pauli_matrix(self).toarray()


def _check_same(a, b) -> None:
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"qubit-count mismatch: {a.n_qubits} vs {b.n_qubits}")


def multiply_strings(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Return ``(phase, product)`` with ``a @ b == phase * product``."""
    _check_same(a, b)
    x3, z3 = a.x ^ b.x, a.z ^ b.z
    k = (
        _popcount(a.x & a.z)
        + _popcount(b.x & b.z)
        - _popcount(x3 & z3)
        + 2 * _popcount(a.z & b.x)
    ) % 4
    return _I_POW[k], PauliString(a.n_qubits, x3, z3)


def commutes(a: PauliString, b: PauliString, mode: str = "general") -> bool:
    """Commutation test.

    ``general``: the number of positions holding anticommuting letters is even.
    ``qubitwise``: every position commutes on its own.
    """
    _check_same(a, b)
    # positions where the single-qubit letters anticommute
    anti = (a.x & b.z) ^ (a.z & b.x)
    if mode == "general":
        return _popcount(anti) % 2 == 0
    if mode == "qubitwise":
        return anti == 0
    raise ValueError(f"unknown commutation mode {mode!r}")


def pauli_matrix(p: PauliString, coeff: complex = 1.0) -> sp.csr_matrix:
    """Sparse ``2**n`` matrix of ``coeff * p`` in little-endian basis order."""
    dim = 1 << p.n_qubits
    idx = np.arange(dim, dtype=np.int64)
    signs = 1 - 2 * (np.bitwise_count(idx & p.z) & 1).astype(np.int64)
    data = coeff * _I_POW[p.y_count % 4] * signs
    return sp.csr_matrix((data.astype(complex), (idx ^ p.x, idx)), shape=(dim, dim))


class PauliSum:
    """Complex-weighted sum of Pauli strings on a fixed register.

    Instances are immutable; every constructor path simplifies, merging
    duplicate strings and dropping coefficients below ``DROP_TOL``.
    """

    def __init__(self, n_qubits: int, terms: Mapping[PauliString, complex] | Iterable[tuple[PauliString, complex]] = ()):
        if n_qubits < 1:
            raise DimensionError("a Pauli sum needs at least one qubit")
        self.n_qubits = n_qubits
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[PauliString, complex] = {}
        for p, c in items:
            if p.n_qubits != n_qubits:
                raise DimensionError(f"string {p} does not act on {n_qubits} qubits")
            acc[p] = acc.get(p, 0.0) + complex(c)
        self._terms = {p: c for p, c in acc.items() if abs(c) >= DROP_TOL}

    # construction helpers
    @classmethod
    def from_string(cls, p: PauliString, coeff: complex = 1.0) -> "PauliSum":
        return cls(p.n_qubits, [(p, coeff)])

    @classmethod
    def from_words(cls, pairs: Iterable[tuple[complex, str]]) -> "PauliSum":
        """``PauliSum.from_words([(0.5, "XZ"), (-1, "II")])``."""
        pairs = [(c, PauliString.from_letters(w)) for c, w in pairs]
        if not pairs:
            raise ValueError("cannot infer qubit count from an empty list")
        n = pairs[0][1].n_qubits
        return cls(n, [(p, c) for c, p in pairs])

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, [(PauliString.identity(n_qubits), coeff)])

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits)

    # container protocol
    @property
    def terms(self) -> dict[PauliString, complex]:
        return dict(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[PauliString, complex]]:
        return iter(self._terms.items())

    def __contains__(self, p: PauliString) -> bool:
        return p in self._terms

    def coefficient(self, p: PauliString | str) -> complex:
        if isinstance(p, str):
            p = PauliString.from_letters(p)
        return self._terms.get(p, 0.0)

    @property
    def strings(self) -> list[PauliString]:
        return list(self._terms)

    def sorted_terms(self) -> list[tuple[PauliString, complex]]:
        return sorted(self._terms.items(), key=lambda t: t[0].letters)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    # algebra
    def __add__(self, other):
        if isinstance(other, PauliSum):
            _check_same(self, other)
            return PauliSum(self.n_qubits, list(self) + list(other))
        if isinstance(other, (int, float, complex)):
            return self + PauliSum.identity(self.n_qubits, other)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return PauliSum(self.n_qubits, [(p, -c) for p, c in self])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return PauliSum(self.n_qubits, [(p, c * other) for p, c in self])
        if isinstance(other, PauliSum):
            _check_same(self, other)
            out = []
            for pa, ca in self:
                for pb, cb in other:
                    phase, prod = multiply_strings(pa, pb)
                    out.append((prod, phase * ca * cb))
            return PauliSum(self.n_qubits, out)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        return self * other

    def dagger(self) -> "PauliSum":
        return PauliSum(self.n_qubits, [(p, c.conjugate()) for p, c in self])

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def is_antihermitian(self, tol: float = 1e-10) -> bool:
        return all(abs(c.real) <= tol for c in self._terms.values())

    def allclose(self, other: "PauliSum", atol: float = 1e-9) -> bool:
        if self.n_qubits != other.n_qubits:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.coefficient(k) - other.coefficient(k)) <= atol for k in keys)

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    __hash__ = None

    def identity_coefficient(self) -> complex:
        return self._terms.get(PauliString.identity(self.n_qubits), 0.0)

    def without_identity(self) -> "PauliSum":
        return PauliSum(self.n_qubits, [(p, c) for p, c in self if not p.is_identity])

    def one_norm(self, include_identity: bool = False) -> float:
        return sum(abs(c) for p, c in self if include_identity or not p.is_identity)

    def normalized(self) -> "PauliSum":
        """Scale so the largest coefficient magnitude is 1."""
        if self.is_zero:
            return self
        return self / max(abs(c) for c in self._terms.values())

    def real(self) -> "PauliSum":
        """Drop imaginary parts (after checking hermiticity elsewhere)."""
        return PauliSum(self.n_qubits, [(p, c.real) for p, c in self])

    # matrices
    @cached_property
    def sparse(self) -> sp.csr_matrix:
        dim = 1 << self.n_qubits
        if not self._terms:
            return sp.csr_matrix((dim, dim), dtype=complex)
        idx = np.arange(dim, dtype=np.int64)
        rows, cols, vals = [], [], []
        for p, c in self:
            signs = 1 - 2 * (np.bitwise_count(idx & p.z) & 1).astype(np.int64)
            rows.append(idx ^ p.x)
            cols.append(idx)
            vals.append(c * _I_POW[p.y_count % 4] * signs)
        m = sp.csr_matrix(
            (np.concatenate(vals).astype(complex), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        )
        m.sum_duplicates()
        return m

    def to_dense(self) -> np.ndarray:
        return self.sparse.toarray()

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for p, c in self.sorted_terms():
            if abs(c.imag) < DROP_TOL:
                cs = f"{c.real:+.12g}"
            elif abs(c.real) < DROP_TOL:
                cs = f"{c.imag:+.12g}i"
            else:
                cs = f"({c.real:.12g}{c.imag:+.12g}i)"
            parts.append(f"{cs} {p.letters}")
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"PauliSum({self.n_qubits}, {len(self)} terms: {self})"


def commutator(h: PauliSum, a: PauliSum) -> PauliSum:
    """``h a - a h``.  Only anticommuting string pairs contribute (twice)."""
    _check_same(h, a)
    out = []
    for ph, ch in h:
        for pa, ca in a:
            if commutes(ph, pa):
                continue
            phase, prod = multiply_strings(ph, pa)
            out.append((prod, 2 * phase * ch * ca))
    return PauliSum(h.n_qubits, out)


def strip_z_chain(p: PauliSum, support: Iterable[int]) -> PauliSum:
    """Replace every Z letter on a qubit outside ``support`` by I."""
    mask = 0
    for q in support:
        mask |= 1 << q
    out = []
    for s, c in p:
        # Z-only positions are z bits without an x bit
        drop = s.z & ~s.x & ~mask
        out.append((PauliString(s.n_qubits, s.x, s.z & ~drop), c))
    return PauliSum(p.n_qubits, out)


# ---------------------------------------------------------------- fermions


class LadderOp(NamedTuple):
    orbital: int
    dagger: bool

    def __str__(self) -> str:
        return f"{self.orbital}^" if self.dagger else f"{self.orbital}"


def parse_ladder_word(word: str) -> tuple[LadderOp, ...]:
    """Parse ``"3^ 1"`` into ``(a3_dagger, a1)``."""
    ops = []
    for tok in word.split():
        dag = tok.endswith("^")
        body = tok[:-1] if dag else tok
        if not body.isdigit():
            raise ParseError(f"bad ladder-operator token {tok!r}")
        ops.append(LadderOp(int(body), dag))
    return tuple(ops)


class FermionSum:
    """Linear combination of ordered products of ladder operators.

    No normal ordering is applied: ``terms`` keeps products exactly as
    given.  The empty sum is zero.
    """

    def __init__(self, terms: Iterable[tuple[complex, Sequence[LadderOp]]] = ()):
        self.terms: list[tuple[complex, tuple[LadderOp, ...]]] = [
            (complex(c), tuple(LadderOp(int(o.orbital), bool(o.dagger)) for o in ops)) for c, ops in terms
        ]

    @classmethod
    def term(cls, word: str, coeff: complex = 1.0) -> "FermionSum":
        return cls([(coeff, parse_ladder_word(word))])

    @classmethod
    def parse(cls, text: str, first_line: int = 1) -> "FermionSum":
        """Parse ``"<coeff> [<imag>] : <word>"`` lines.  Words may be empty (constants).

        ``first_line`` is the number reported for the first line in errors.
        """
        out = []
        for lineno, raw in enumerate(text.splitlines(), first_line):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head, _, word = line.partition(":")
            nums = head.split()
            try:
                vals = [float(v) for v in nums]
            except ValueError:
                raise ParseError(f"bad coefficient in {raw!r}", line=lineno) from None
            if len(vals) not in (1, 2):
                raise ParseError(f"expected 1 or 2 numbers before ':' in {raw!r}", line=lineno)
            coeff = complex(vals[0], vals[1] if len(vals) == 2 else 0.0)
            try:
                ops = parse_ladder_word(word)
            except ParseError as exc:
                raise ParseError(str(exc), line=lineno) from None
            out.append((coeff, ops))
        return cls(out)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "FermionSum") -> "FermionSum":
        return FermionSum(self.terms + other.terms)

    def __neg__(self) -> "FermionSum":
        return FermionSum([(-c, ops) for c, ops in self.terms])

    def __sub__(self, other: "FermionSum") -> "FermionSum":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, FermionSum):
            return FermionSum([(ca * cb, oa + ob) for ca, oa in self.terms for cb, ob in other.terms])
        return FermionSum([(c * other, ops) for c, ops in self.terms])

    def __rmul__(self, other):
        return FermionSum([(c * other, ops) for c, ops in self.terms])

    def dagger(self) -> "FermionSum":
        return FermionSum(
            [(c.conjugate(), tuple(LadderOp(o.orbital, not o.dagger) for o in reversed(ops))) for c, ops in self.terms]
        )

    def max_orbital(self) -> int:
        return max((o.orbital for _, ops in self.terms for o in ops), default=-1)

    def __str__(self) -> str:
        return " + ".join(f"({c:.12g}) [{' '.join(map(str, ops))}]" for c, ops in self.terms) or "0"


def _jw_ladder(op: LadderOp, n_qubits: int) -> PauliSum:
    chain = (1 << op.orbital) - 1
    bit = 1 << op.orbital
    xs = PauliString(n_qubits, bit, chain)
    ys = PauliString(n_qubits, bit, chain | bit)
    # creation: (X - iY)/2, annihilation: (X + iY)/2
    sign = -1 if op.dagger else 1
    return PauliSum(n_qubits, [(xs, 0.5), (ys, 0.5j * sign)])


def jordan_wigner(f: FermionSum, n_qubits: int) -> PauliSum:
    """Map a fermionic sum to qubits.

    ``a_i^dagger -> 1/2 Z_0..Z_{i-1} (X_i - i Y_i)`` and
    ``a_i -> 1/2 Z_0..Z_{i-1} (X_i + i Y_i)``; products map to products.
    """
    cache: dict[LadderOp, PauliSum] = {}
    total: list[tuple[PauliString, complex]] = []
    ident = PauliSum.identity(n_qubits)
    for coeff, ops in f.terms:
        prod = ident
        for op in ops:
            if not 0 <= op.orbital < n_qubits:
                raise DimensionError(f"orbital {op.orbital} out of range for {n_qubits} qubits")
            if op not in cache:
                cache[op] = _jw_ladder(op, n_qubits)
            prod = prod * cache[op]
            if prod.is_zero:
                break
        total.extend((p, coeff * c) for p, c in prod)
    return PauliSum(n_qubits, total)


def number_operator(n_qubits: int, orbitals: Iterable[int] | None = None) -> PauliSum:
    """``sum_k (I - Z_k) / 2`` over the given orbitals (all by default)."""
    orbitals = range(n_qubits) if orbitals is None else orbitals
    out = PauliSum.zero(n_qubits)
    for k in orbitals:
        out = out + PauliSum(n_qubits, [(PauliString.identity(n_qubits), 0.5), (PauliString(n_qubits, 0, 1 << k), -0.5)])
    return out

