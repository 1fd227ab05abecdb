"""Pauli-string algebra and Jordan-Wigner images of fermion operators.

Conventions
-----------
A string label is read left to right from the highest qubit down to qubit 1,
so ``"IIXZ"`` acts with ``Z`` on qubit 1 and ``X`` on qubit 2.  Matrices follow
the Kronecker order of the label, so qubit ``q`` is bit ``q - 1`` of the basis
index.

For a cluster of ``L`` sites the spin-up orbital of site ``i`` is qubit ``i``
and the spin-down orbital is qubit ``L + i``.  The ladder matrices are
``sigma+ = (X + iY)/2 = |0><1|`` and ``sigma_n = sigma+ sigma- = |0><0|``, so an
occupied orbital is a qubit in ``|0>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

ZERO_TOL = 1e-12

# (a, b) -> (phase, c) with a * b = phase * c
_PRODUCT_TABLE = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}

# ladder symbols expanded in the Pauli basis
_SYMBOL_EXPANSION = {
    "I": {"I": 1.0},
    "X": {"X": 1.0},
    "Y": {"Y": 1.0},
    "Z": {"Z": 1.0},
    "+": {"X": 0.5, "Y": 0.5j},
    "-": {"X": 0.5, "Y": -0.5j},
    "n": {"I": 0.5, "Z": 0.5},
}

SYMBOL_ALIASES = {"σ+": "+", "σ-": "-", "σ−": "-", "σn": "n", "s+": "+", "s-": "-", "sn": "n",
                  "σx": "X", "σy": "Y", "σz": "Z"}


class DomainError(ValueError):
    """Raised when an index or argument lies outside its allowed domain."""


def _normalize_symbol(sym: str) -> str:
    sym = SYMBOL_ALIASES.get(sym, sym)
    if sym not in _SYMBOL_EXPANSION:
        raise DomainError(f"unknown single-qubit symbol {sym!r}")
    return sym


@dataclass(frozen=True)
class PauliString:
    """Signed tensor product of single-qubit Pauli matrices.

    Parameters
    ----------
    label : str
        Characters from ``IXYZ``, leftmost = highest qubit.
    phase : complex
        Scalar prefactor.
    """

    label: str
    phase: complex = 1.0

    def __post_init__(self):
        if not self.label or any(c not in "IXYZ" for c in self.label):
            raise DomainError(f"invalid Pauli label {self.label!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.label)

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n_qubits != other.n_qubits:
            raise DomainError("qubit count mismatch")
        phase = self.phase * other.phase
        out = []
        for a, b in zip(self.label, other.label):
            p, c = _PRODUCT_TABLE[(a, b)]
            phase *= p
            out.append(c)
        return PauliString("".join(out), phase)

    def commutes_with(self, other: "PauliString") -> bool:
        clashes = sum(1 for a, b in zip(self.label, other.label)
                      if a != "I" and b != "I" and a != b)
        return clashes % 2 == 0

    def to_matrix(self) -> np.ndarray:
        return self.phase * _label_matrix(self.label)


def _masks(label: str) -> tuple[int, int, int]:
    n = len(label)
    xmask = zmask = ny = 0
    for k, c in enumerate(label):
        bit = 1 << (n - 1 - k)
        if c in "XY":
            xmask |= bit
        if c in "YZ":
            zmask |= bit
        if c == "Y":
            ny += 1
    return xmask, zmask, ny


def _popcount_parity(values: np.ndarray) -> np.ndarray:
    v = values.copy()
    parity = np.zeros_like(v)
    while np.any(v):
        parity ^= v & 1
        v >>= 1
    return parity


def _label_matrix(label: str) -> np.ndarray:
    """Dense matrix of a Pauli label as a signed permutation."""
    n = len(label)
    dim = 1 << n
    xmask, zmask, ny = _masks(label)
    cols = np.arange(dim, dtype=np.int64)
    rows = cols ^ xmask
    signs = 1 - 2 * _popcount_parity(cols & zmask)
    mat = np.zeros((dim, dim), dtype=complex)
    mat[rows, cols] = (1j ** ny) * signs
    return mat


@dataclass(frozen=True)
class PauliOperator:
    """Weighted sum of Pauli strings in canonical form.

    Terms are stored as a mapping ``label -> coefficient``.  Identical labels
    are merged and coefficients of magnitude below ``1e-12`` are dropped.
    """

    n_qubits: int
    terms: Mapping[str, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for label, coef in self.terms.items():
            if len(label) != self.n_qubits:
                raise DomainError(f"label {label!r} does not act on {self.n_qubits} qubits")
            if any(c not in "IXYZ" for c in label):
                raise DomainError(f"invalid Pauli label {label!r}")
            coef = complex(coef)
            if abs(coef) > ZERO_TOL:
                clean[label] = coef
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, n_qubits: int) -> "PauliOperator":
        return cls(n_qubits, {})

    @classmethod
    def identity(cls, n_qubits: int, coef: complex = 1.0) -> "PauliOperator":
        return cls(n_qubits, {"I" * n_qubits: coef})

    @classmethod
    def from_string(cls, string: PauliString) -> "PauliOperator":
        return cls(string.n_qubits, {string.label: string.phase})

    @classmethod
    def from_symbols(cls, symbols: Sequence[str] | str, coef: complex = 1.0) -> "PauliOperator":
        """Tensor product of single-qubit symbols, ladder symbols included.

        ``symbols`` may contain ``I X Y Z + - n`` (or the aliases ``σ+``,
        ``σ-``, ``σn``); leftmost acts on the highest qubit.
        """
        syms = [_normalize_symbol(s) for s in symbols]
        pieces = [_SYMBOL_EXPANSION[s] for s in syms]
        terms: dict[str, complex] = {}
        for combo in product(*[list(p.items()) for p in pieces]):
            label = "".join(c for c, _ in combo)
            w = coef
            for _, v in combo:
                w *= v
            terms[label] = terms.get(label, 0.0) + w
        return cls(len(syms), terms)

    # algebra -----------------------------------------------------------
    def __add__(self, other: "PauliOperator") -> "PauliOperator":
        self._check(other)
        terms = dict(self.terms)
        for label, coef in other.terms.items():
            terms[label] = terms.get(label, 0.0) + coef
        return PauliOperator(self.n_qubits, terms)

    def __neg__(self) -> "PauliOperator":
        return PauliOperator(self.n_qubits, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "PauliOperator") -> "PauliOperator":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, PauliOperator):
            self._check(other)
            terms: dict[str, complex] = {}
            for la, ca in self.terms.items():
                for lb, cb in other.terms.items():
                    s = PauliString(la) * PauliString(lb)
                    terms[s.label] = terms.get(s.label, 0.0) + ca * cb * s.phase
            return PauliOperator(self.n_qubits, terms)
        if np.isscalar(other):
            return PauliOperator(self.n_qubits, {k: v * other for k, v in self.terms.items()})
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return self * other
        return NotImplemented

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliOperator):
            return NotImplemented
        return self.n_qubits == other.n_qubits and (self - other).is_zero()

    __hash__ = None

    def _check(self, other: "PauliOperator"):
        if self.n_qubits != other.n_qubits:
            raise DomainError(f"qubit count mismatch: {self.n_qubits} vs {other.n_qubits}")

    def adjoint(self) -> "PauliOperator":
        return PauliOperator(self.n_qubits, {k: np.conj(v) for k, v in self.terms.items()})

    def is_zero(self, tol: float = ZERO_TOL) -> bool:
        return all(abs(v) <= tol for v in self.terms.values())

    def is_hermitian(self, tol: float = ZERO_TOL) -> bool:
        return all(abs(v.imag) <= tol for v in self.terms.values())

    def commutator(self, other: "PauliOperator") -> "PauliOperator":
        return self * other - other * self

    def anticommutator(self, other: "PauliOperator") -> "PauliOperator":
        return self * other + other * self

    def strings(self) -> list[PauliString]:
        return [PauliString(k, v) for k, v in self.terms.items()]

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        mat = np.zeros((dim, dim), dtype=complex)
        for label, coef in self.terms.items():
            mat += coef * _label_matrix(label)
        return mat

    def embed(self, n_high: int = 0, n_low: int = 0) -> "PauliOperator":
        """Pad with identities on extra high and low qubits."""
        return PauliOperator(self.n_qubits + n_high + n_low,
                             {"I" * n_high + k + "I" * n_low: v for k, v in self.terms.items()})

    def __repr__(self) -> str:
        body = " + ".join(f"({v:.6g})*{k}" for k, v in self.terms.items()) or "0"
        return f"PauliOperator[{self.n_qubits}]({body})"


def total_operator(ops: Iterable[PauliOperator], n_qubits: int) -> PauliOperator:
    acc = PauliOperator.zero(n_qubits)
    for op in ops:
        acc = acc + op
    return acc


# Jordan-Wigner --------------------------------------------------------------

SPINS = ("up", "down")


def _check_site(site: int, spin: str, L_c: int):
    if L_c < 1:
        raise DomainError("L_c must be a positive integer")
    if not 1 <= site <= L_c:
        raise DomainError(f"site {site} outside 1..{L_c}")
    if spin not in SPINS:
        raise DomainError(f"spin must be 'up' or 'down', got {spin!r}")


def orbital_qubit(site: int, spin: str, L_c: int) -> int:
    """Qubit (1-based, counted from the right) carrying the orbital."""
    _check_site(site, spin, L_c)
    return site if spin == "up" else L_c + site


def jw_create(site: int, spin: str, L_c: int) -> PauliOperator:
    """Jordan-Wigner image of the creation operator of ``(site, spin)``.

    Examples
    --------
    >>> jw_create(1, "up", 2) == PauliOperator.from_symbols("III+")
    True
    """
    p = orbital_qubit(site, spin, L_c)
    n = 2 * L_c
    symbols = ["I"] * (n - p) + ["+"] + ["Z"] * (p - 1)
    return PauliOperator.from_symbols(symbols)


def jw_annihilate(site: int, spin: str, L_c: int) -> PauliOperator:
    return jw_create(site, spin, L_c).adjoint()


def jw_number(site: int, spin: str, L_c: int) -> PauliOperator:
    return jw_create(site, spin, L_c) * jw_annihilate(site, spin, L_c)


def jw_hermitian_pair(site: int, spin: str, L_c: int) -> tuple[PauliOperator, PauliOperator]:
    """Hermitian combinations ``X = c + c^dagger`` and ``Y = -i (c - c^dagger)``.

    Both square to the identity.
    """
    c = jw_annihilate(site, spin, L_c)
    cd = jw_create(site, spin, L_c)
    return c + cd, (c - cd) * (-1j)


def orbitals(L_c: int) -> list[tuple[int, str]]:
    """All orbitals in Nambu order: spin-up sites first, then spin-down."""
    return [(i, "up") for i in range(1, L_c + 1)] + [(i, "down") for i in range(1, L_c + 1)]


def pauli_strings_T_D(i: int, j: int | None, L_c: int, kind: str) -> PauliOperator:
    """Block strings used to write the cluster terms.

    ``hop`` (needs ``i > j``) acts on ``L_c`` qubits::

        I^(L_c-i) (s+ Z^(i-j-1) s- + s- Z^(i-j-1) s+) I^(j-1)

    ``local`` acts on ``L_c`` qubits as ``I^(L_c-i) s_n I^(i-1)`` (``j`` is
    ignored or must equal ``i``).  ``pair`` acts on ``2 L_c`` qubits::

        I^(L_c-j) (s+ Z^(L_c-i+j-1) s+ + s- Z^(L_c-i+j-1) s-) I^(i-1)

    With the standard matrices these strings are the negatives of the
    fermion bilinears ``c_i^dag c_j + h.c.`` and
    ``c_{i up}^dag c_{j down}^dag + h.c.``; number operators map exactly.
    """
    if kind == "hop":
        if j is None or not (1 <= j < i <= L_c):
            raise DomainError("hop strings need 1 <= j < i <= L_c")
        mid = ["Z"] * (i - j - 1)
        left = ["I"] * (L_c - i)
        right = ["I"] * (j - 1)
        return (PauliOperator.from_symbols(left + ["+"] + mid + ["-"] + right)
                + PauliOperator.from_symbols(left + ["-"] + mid + ["+"] + right))
    if kind == "local":
        if not 1 <= i <= L_c or (j is not None and j != i):
            raise DomainError("local strings need 1 <= i <= L_c")
        return PauliOperator.from_symbols(["I"] * (L_c - i) + ["n"] + ["I"] * (i - 1))
    if kind == "pair":
        if j is None or not (1 <= i <= L_c and 1 <= j <= L_c):
            raise DomainError("pair strings need 1 <= i, j <= L_c")
        mid = ["Z"] * (L_c - i + j - 1)
        left = ["I"] * (L_c - j)
        right = ["I"] * (i - 1)
        return (PauliOperator.from_symbols(left + ["+"] + mid + ["+"] + right)
                + PauliOperator.from_symbols(left + ["-"] + mid + ["-"] + right))
    raise DomainError(f"unknown string kind {kind!r}")


def total_number(L_c: int) -> PauliOperator:
    return total_operator((jw_number(i, s, L_c) for i, s in orbitals(L_c)), 2 * L_c)
