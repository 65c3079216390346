"""Pauli strings, the normalized Pauli basis and Pauli-Liouville conversion.

Basis ordering: index ``i`` of an n-qubit Pauli is its base-4 expansion with
digits (I, X, Y, Z) = (0, 1, 2, 3) and qubit 0 as the most significant digit,
so index 0 is the identity.  Two-copy objects use the same rule on 2n qubits,
which coincides with ``np.kron`` of single-copy Liouville vectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

SYMBOLS = "IXYZ"
MAX_QUBITS = 5

_SINGLE = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
# digit -> (x bit, z bit) of the Hermitian form i^{x.z} X^x Z^z
_DIGIT_XZ = ((0, 0), (1, 0), (1, 1), (0, 1))


class InvalidDimensionError(ValueError):
    """Raised when an operator dimension is not a supported power of two."""


@dataclass(frozen=True)
class PauliString:
    """Signed, unnormalized n-qubit Pauli word such as ``-XZI``."""

    word: str
    sign: int = 1

    def __post_init__(self):
        if not self.word or any(c not in SYMBOLS for c in self.word):
            raise ValueError(f"invalid Pauli word {self.word!r}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    @property
    def n(self) -> int:
        return len(self.word)

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        text = text.strip()
        sign = 1
        if text[:1] in "+-":
            sign = -1 if text[0] == "-" else 1
            text = text[1:]
        return cls(text, sign)

    @classmethod
    def from_index(cls, index: int, n: int, sign: int = 1) -> "PauliString":
        digits = []
        for _ in range(n):
            digits.append(SYMBOLS[index % 4])
            index //= 4
        return cls("".join(reversed(digits)), sign)

    @classmethod
    def single(cls, n: int, site: int, symbol: str) -> "PauliString":
        """``symbol`` on qubit ``site`` (0-based), identity elsewhere."""
        word = ["I"] * n
        word[site] = symbol
        return cls("".join(word))

    @property
    def index(self) -> int:
        out = 0
        for c in self.word:
            out = 4 * out + SYMBOLS.index(c)
        return out

    @property
    def is_identity(self) -> bool:
        return set(self.word) == {"I"}

    @property
    def weight(self) -> int:
        return sum(c != "I" for c in self.word)

    def xz(self) -> tuple[int, int]:
        """Bitmasks (bit q <-> qubit q) of the Hermitian form i^{x.z} X^x Z^z."""
        x = z = 0
        for q, c in enumerate(self.word):
            bx, bz = _DIGIT_XZ[SYMBOLS.index(c)]
            x |= bx << q
            z |= bz << q
        return x, z

    def commutes(self, other: "PauliString") -> bool:
        x1, z1 = self.xz()
        x2, z2 = other.xz()
        return bin((x1 & z2) ^ (z1 & x2)).count("1") % 2 == 0

    def unsigned(self) -> "PauliString":
        return PauliString(self.word)

    def __neg__(self) -> "PauliString":
        return PauliString(self.word, -self.sign)

    def __str__(self) -> str:
        return ("+" if self.sign > 0 else "-") + self.word


def check_dim(dim: int) -> int:
    """Return n for ``dim == 2**n`` with 1 <= n <= MAX_QUBITS."""
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim or n > MAX_QUBITS:
        raise InvalidDimensionError(f"dimension {dim} is not 2**n with 1 <= n <= {MAX_QUBITS}")
    return n


def pauli_dense(p: PauliString) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for c in p.word:
        out = np.kron(out, _SINGLE[SYMBOLS.index(c)])
    return p.sign * out


@lru_cache(maxsize=None)
def pauli_basis(n: int) -> np.ndarray:
    """Normalized Paulis sigma_i / sqrt(d), shape (d**2, d, d), read-only."""
    mats = np.array([[[1.0 + 0j]]])
    for _ in range(n):
        mats = np.einsum("aij,bkl->abikjl", mats, np.array(_SINGLE)).reshape(
            len(mats) * 4, mats.shape[1] * 2, mats.shape[2] * 2
        )
    mats = mats / np.sqrt(2**n)
    mats.setflags(write=False)
    return mats


@lru_cache(maxsize=None)
def xz_tables(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lookup tables ``(x_of, z_of, index_of)`` between basis index and bitmasks."""
    d2 = 4**n
    x_of = np.zeros(d2, dtype=np.int64)
    z_of = np.zeros(d2, dtype=np.int64)
    index_of = np.zeros((2**n, 2**n), dtype=np.int64)
    for i in range(d2):
        x, z = PauliString.from_index(i, n).xz()
        x_of[i], z_of[i] = x, z
        index_of[x, z] = i
    for a in (x_of, z_of, index_of):
        a.setflags(write=False)
    return x_of, z_of, index_of


@lru_cache(maxsize=None)
def commutation_signs(p: PauliString) -> np.ndarray:
    """c[i] = +1 if basis Pauli i commutes with p, else -1 (the diagonal of conjugation by p)."""
    n = p.n
    x_of, z_of, _ = xz_tables(n)
    px, pz = p.xz()
    parity = np.array([bin(v).count("1") % 2 for v in range(2**n)])
    anti = parity[(x_of & pz)] ^ parity[(z_of & px)]
    out = 1 - 2 * anti
    out.setflags(write=False)
    return out


def vectorize(op: np.ndarray) -> np.ndarray:
    """Pauli-Liouville coefficients Tr(sigma_i^dagger O) in the normalized basis."""
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {op.shape}")
    n = check_dim(op.shape[0])
    # sigma_i are Hermitian: Tr(sigma_i O) = sum_ab sigma_i[b, a] O[a, b]
    return np.einsum("iba,ab->i", pauli_basis(n), op)


def devectorize(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec)
    d = int(round(np.sqrt(vec.shape[0])))
    n = check_dim(d)
    return np.einsum("i,iab->ab", vec, pauli_basis(n))


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product Tr(A^dagger B)."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.sum(a.conj() * b))


def channel_to_liouville(apply: Callable[[np.ndarray], np.ndarray], n: int) -> np.ndarray:
    """Pauli transfer matrix with entries Tr(sigma_i apply(sigma_j)).

    Returned as a real array when every entry is real to 1e-12, which holds for
    any Hermiticity-preserving map.
    """
    basis = pauli_basis(n)
    cols = np.array([vectorize(apply(s)) for s in basis]).T
    if np.max(np.abs(cols.imag), initial=0.0) < 1e-12:
        return np.ascontiguousarray(cols.real)
    return cols


def liouville_of_unitary(u: np.ndarray) -> np.ndarray:
    """Transfer matrix of rho -> U rho U^dagger (real orthogonal)."""
    u = np.asarray(u, dtype=complex)
    n = check_dim(u.shape[0])
    basis = pauli_basis(n)
    conj = np.einsum("ab,jbc,dc->jad", u, basis, u.conj())
    return np.einsum("iba,jab->ij", basis, conj).real


def two_copy_vectorize(op: np.ndarray) -> np.ndarray:
    """Liouville vector of an operator on C^d (x) C^d, ordered like kron of single copies."""
    return vectorize(op)


def swap_operator(d: int) -> np.ndarray:
    f = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            f[i * d + j, j * d + i] = 1.0
    return f


def computational_povm(n: int) -> list[np.ndarray]:
    d = 2**n
    out = []
    for x in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[x, x] = 1.0
        out.append(e)
    return out


def zero_state(n: int) -> np.ndarray:
    d = 2**n
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    return rho
