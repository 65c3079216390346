"""Clifford group elements as signed symplectic tableaux.

A Clifford ``g`` is stored through the Heisenberg images g(P) = U_g^dagger P U_g
of the generators X_0..X_{n-1}, Z_0..Z_{n-1}.  Composition follows
U_{gh} = U_g U_h, so (gh)(P) = h(g(P)) and omega(gh) = omega(g) omega(h), where
omega(g) is the Pauli-Liouville matrix of rho -> U_g rho U_g^dagger.

Internally Paulis are bitmask pairs (x, z) with bit q <-> qubit q, and the
Hermitian Pauli with masks (x, z) is i^{|x & z|} X^x Z^z.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .pauli import MAX_QUBITS, PauliString, pauli_dense, xz_tables


@lru_cache(maxsize=None)
def _parity_table(bits: int) -> np.ndarray:
    v = np.arange(2**bits)
    out = np.zeros(2**bits, dtype=np.int64)
    while np.any(v):
        out ^= v & 1
        v = v >> 1
    return out


def _popcount(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    out = np.zeros_like(a)
    while np.any(a):
        out += a & 1
        a = a >> 1
    return out


def _parity(a: np.ndarray) -> np.ndarray:
    return _popcount(a) & 1


def symplectic_product(x1, z1, x2, z2):
    """0 if the Paulis commute, 1 if they anticommute (vectorized)."""
    return _parity(np.bitwise_and(x1, z2) ^ np.bitwise_and(z1, x2))


def _check_n(n: int):
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")


def full_images(gen_x: np.ndarray, gen_z: np.ndarray, gen_sign: np.ndarray, n: int):
    """Images of every basis Pauli from generator images.

    Inputs have shape (..., 2n).  Returns ``(perm, sign)`` of shape (..., 4**n)
    with g(sigma_i) = sign[i] * sigma_{perm[i]}.
    """
    x_of, z_of, index_of = xz_tables(n)
    shape = gen_x.shape[:-1] + (4**n,)
    acc_e = np.broadcast_to(_popcount(x_of & z_of), shape).copy()  # i^{|a.b|} of the input
    acc_x = np.zeros(shape, dtype=np.int64)
    acc_z = np.zeros(shape, dtype=np.int64)
    gen_e = (_popcount(gen_x & gen_z) + np.where(gen_sign < 0, 2, 0)) % 4
    for k in range(2 * n):
        q = k % n
        bits = (x_of >> q) & 1 if k < n else (z_of >> q) & 1
        use = bits.astype(bool)
        gx = gen_x[..., k : k + 1]
        gz = gen_z[..., k : k + 1]
        ge = gen_e[..., k : k + 1]
        new_e = acc_e + ge + 2 * _parity(acc_z & gx)
        acc_e = np.where(use, new_e, acc_e)
        acc_x = np.where(use, acc_x ^ gx, acc_x)
        acc_z = np.where(use, acc_z ^ gz, acc_z)
    phase = (acc_e - _popcount(acc_x & acc_z)) % 4
    if np.any(phase % 2):
        raise ValueError("tableau is not symplectic: image is not Hermitian")
    return index_of[acc_x, acc_z], 1 - phase


@dataclass(frozen=True)
class CliffordElement:
    """Clifford unitary modulo global phase, given by its generator images.

    ``gen_x``, ``gen_z``, ``gen_sign`` hold the images of X_0..X_{n-1} followed
    by Z_0..Z_{n-1} as bitmasks and signs.
    """

    n: int
    gen_x: tuple
    gen_z: tuple
    gen_sign: tuple

    @classmethod
    def from_images(cls, images) -> "CliffordElement":
        """Build from 2n signed words (images of X_0.., then Z_0..)."""
        paulis = [p if isinstance(p, PauliString) else PauliString.parse(p) for p in images]
        if len(paulis) % 2 or not paulis:
            raise ValueError("need an even, nonzero number of images")
        n = len(paulis) // 2
        if any(p.n != n for p in paulis):
            raise ValueError("image word lengths must equal the qubit count")
        xs, zs = zip(*(p.xz() for p in paulis))
        out = cls(n, tuple(xs), tuple(zs), tuple(p.sign for p in paulis))
        if not out.is_symplectic():
            raise ValueError("images do not satisfy the symplectic condition")
        return out

    @classmethod
    def identity(cls, n: int) -> "CliffordElement":
        return cls(n, tuple(1 << q for q in range(n)) + (0,) * n, (0,) * n + tuple(1 << q for q in range(n)), (1,) * (2 * n))

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "CliffordElement":
        """Read the tableau off a dense Clifford unitary by conjugating the generators."""
        u = np.asarray(u, dtype=complex)
        n = int(np.log2(u.shape[0]))
        images = []
        for k in range(2 * n):
            gen = PauliString.single(n, k % n, "X" if k < n else "Z")
            images.append(_decompose_signed(u.conj().T @ pauli_dense(gen) @ u, n))
        return cls.from_images(images)

    def images(self) -> list[PauliString]:
        return [self.image_of_index(k) for k in range(2 * self.n)]

    def image_of_index(self, k: int) -> PauliString:
        _, _, index_of = xz_tables(self.n)
        return PauliString.from_index(int(index_of[self.gen_x[k], self.gen_z[k]]), self.n, self.gen_sign[k])

    def is_symplectic(self) -> bool:
        n = self.n
        x, z = np.array(self.gen_x), np.array(self.gen_z)
        prod = symplectic_product(x[:, None], z[:, None], x[None, :], z[None, :])
        target = np.zeros((2 * n, 2 * n), dtype=np.int64)
        target[np.arange(n), np.arange(n) + n] = 1
        target[np.arange(n) + n, np.arange(n)] = 1
        return bool(np.array_equal(prod, target))

    @cached_property
    def _tables(self):
        perm, sign = full_images(
            np.array(self.gen_x, dtype=np.int64), np.array(self.gen_z, dtype=np.int64), np.array(self.gen_sign), self.n
        )
        inv_perm = np.empty_like(perm)
        inv_perm[perm] = np.arange(len(perm))
        inv_sign = np.empty_like(sign)
        inv_sign[perm] = sign
        for a in (perm, sign, inv_perm, inv_sign):
            a.setflags(write=False)
        return perm, sign, inv_perm, inv_sign

    @property
    def perm(self) -> np.ndarray:
        return self._tables[0]

    @property
    def sign(self) -> np.ndarray:
        return self._tables[1]

    def conjugate(self, p: PauliString) -> PauliString:
        """g(p) = U^dagger p U."""
        if p.n != self.n:
            raise ValueError(f"dimension mismatch: {p.n} vs {self.n} qubits")
        perm, sign, _, _ = self._tables
        i = p.index
        return PauliString.from_index(int(perm[i]), self.n, int(sign[i]) * p.sign)

    def conjugate_inverse(self, p: PauliString) -> PauliString:
        """g^{-1}(p) = U p U^dagger."""
        if p.n != self.n:
            raise ValueError(f"dimension mismatch: {p.n} vs {self.n} qubits")
        _, _, inv_perm, inv_sign = self._tables
        i = p.index
        return PauliString.from_index(int(inv_perm[i]), self.n, int(inv_sign[i]) * p.sign)

    def compose(self, other: "CliffordElement") -> "CliffordElement":
        """Element with unitary U_self U_other."""
        _, _, index_of = xz_tables(self.n)
        x_of, z_of, _ = xz_tables(self.n)
        idx = index_of[np.array(self.gen_x), np.array(self.gen_z)]
        new_idx = other.perm[idx]
        new_sign = np.array(self.gen_sign) * other.sign[idx]
        return CliffordElement(
            self.n, tuple(int(v) for v in x_of[new_idx]), tuple(int(v) for v in z_of[new_idx]), tuple(int(s) for s in new_sign)
        )

    def inverse(self) -> "CliffordElement":
        _, _, inv_perm, inv_sign = self._tables
        x_of, z_of, index_of = xz_tables(self.n)
        gens = index_of[np.array(self.identity(self.n).gen_x), np.array(self.identity(self.n).gen_z)]
        idx = inv_perm[gens]
        return CliffordElement(
            self.n, tuple(int(v) for v in x_of[idx]), tuple(int(v) for v in z_of[idx]), tuple(int(s) for s in inv_sign[gens])
        )

    def liouville(self) -> np.ndarray:
        """omega(g): the transfer matrix of rho -> U rho U^dagger, a signed permutation."""
        perm, sign, _, _ = self._tables
        out = np.zeros((len(perm), len(perm)))
        out[np.arange(len(perm)), perm] = sign
        return out

    @cached_property
    def unitary(self) -> np.ndarray:
        """Dense U_g, fixed up to global phase, built column by column from stabilizers."""
        n, d = self.n, 2**self.n
        _, _, inv_perm, inv_sign = self._tables
        zero_proj = np.eye(d, dtype=complex)
        for q in range(n):
            z = PauliString.single(n, q, "Z")
            zero_proj = zero_proj @ (np.eye(d) + inv_sign[z.index] * _dense_index(int(inv_perm[z.index]), n)) / 2
        col = int(np.argmax(np.linalg.norm(zero_proj, axis=0)))
        psi0 = zero_proj[:, col] / np.linalg.norm(zero_proj[:, col])
        x_ops = []
        for q in range(n):
            x = PauliString.single(n, q, "X")
            x_ops.append(inv_sign[x.index] * _dense_index(int(inv_perm[x.index]), n))
        u = np.zeros((d, d), dtype=complex)
        for b in range(d):
            v = psi0
            # basis state |b> with qubit 0 as the most significant bit: X^b applied in qubit order
            for q in reversed(range(n)):
                if (b >> (n - 1 - q)) & 1:
                    v = x_ops[q] @ v
            u[:, b] = v
        u.setflags(write=False)
        return u

    def __eq__(self, other):
        if not isinstance(other, CliffordElement):
            return NotImplemented
        return (self.n, self.gen_x, self.gen_z, self.gen_sign) == (other.n, other.gen_x, other.gen_z, other.gen_sign)

    def __hash__(self):
        return hash((self.n, self.gen_x, self.gen_z, self.gen_sign))


def _dense_index(i: int, n: int) -> np.ndarray:
    return pauli_dense(PauliString.from_index(i, n))


def _decompose_signed(op: np.ndarray, n: int) -> PauliString:
    """Identify ``op`` as +-P for a Pauli string P; raises if it is not one."""
    d = 2**n
    for i in range(4**n):
        p = _dense_index(i, n)
        c = np.trace(p @ op) / d
        if abs(abs(c) - 1) < 1e-9:
            if abs(c.imag) > 1e-9 or not np.allclose(op, c.real * p, atol=1e-9):
                break
            return PauliString.from_index(i, n, 1 if c.real > 0 else -1)
    raise ValueError("operator is not a signed Pauli string")


def conjugate_pauli(g: CliffordElement, p: PauliString, inverse: bool = False) -> PauliString:
    """U^dagger p U, or U p U^dagger when ``inverse``."""
    return g.conjugate_inverse(p) if inverse else g.conjugate(p)


def compose(g: CliffordElement, h: CliffordElement) -> CliffordElement:
    return g.compose(h)


def adjoint_rep(g: CliffordElement) -> np.ndarray:
    """omega(g) restricted to the traceless Paulis."""
    return g.liouville()[1:, 1:]


def irrep_projectors(n: int) -> tuple[np.ndarray, np.ndarray]:
    """(P_tr, P_ad) in the normalized Pauli-Liouville basis."""
    d2 = 4**n
    p_tr = np.zeros((d2, d2))
    p_tr[0, 0] = 1.0
    return p_tr, np.eye(d2) - p_tr


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PHASE = np.diag([1, 1j])


@lru_cache(maxsize=None)
def _single_qubit_group() -> tuple:
    gens = [CliffordElement.from_unitary(HADAMARD), CliffordElement.from_unitary(PHASE)]
    found = {CliffordElement.identity(1)}
    frontier = list(found)
    while frontier:
        nxt = []
        for a in frontier:
            for b in gens:
                c = a.compose(b)
                if c not in found:
                    found.add(c)
                    nxt.append(c)
        frontier = nxt
    return tuple(sorted(found, key=lambda c: (c.gen_x, c.gen_z, c.gen_sign)))


def enumerate_single_qubit_clifford() -> list[CliffordElement]:
    """All 24 single-qubit Cliffords modulo phase, in a fixed order."""
    return list(_single_qubit_group())


@dataclass(frozen=True)
class CliffordBatch:
    """A stack of Clifford elements held as arrays of shape (count, 2n)."""

    n: int
    gen_x: np.ndarray
    gen_z: np.ndarray
    gen_sign: np.ndarray

    def __len__(self):
        return self.gen_x.shape[0]

    def __getitem__(self, i) -> CliffordElement:
        return CliffordElement(
            self.n,
            tuple(int(v) for v in self.gen_x[i]),
            tuple(int(v) for v in self.gen_z[i]),
            tuple(int(v) for v in self.gen_sign[i]),
        )

    @classmethod
    def stack(cls, elements) -> "CliffordBatch":
        elements = list(elements)
        n = elements[0].n
        return cls(
            n,
            np.array([e.gen_x for e in elements], dtype=np.int64).reshape(-1, 2 * n),
            np.array([e.gen_z for e in elements], dtype=np.int64).reshape(-1, 2 * n),
            np.array([e.gen_sign for e in elements], dtype=np.int64).reshape(-1, 2 * n),
        )

    @cached_property
    def tables(self) -> tuple[np.ndarray, np.ndarray]:
        """(perm, sign) of shape (count, 4**n)."""
        return full_images(self.gen_x, self.gen_z, self.gen_sign, self.n)


def _project_out(u_x, u_z, vx, vz, wx, wz):
    """Remove from u its components along previously chosen symplectic pairs."""
    for j in range(len(vx)):
        a = symplectic_product(u_x, u_z, wx[j], wz[j]).astype(bool)
        b = symplectic_product(u_x, u_z, vx[j], vz[j]).astype(bool)
        u_x = np.where(a, u_x ^ vx[j], u_x)
        u_z = np.where(a, u_z ^ vz[j], u_z)
        u_x = np.where(b, u_x ^ wx[j], u_x)
        u_z = np.where(b, u_z ^ wz[j], u_z)
    return u_x, u_z


def random_clifford_batch(n: int, count: int, rng: np.random.Generator) -> CliffordBatch:
    """``count`` independent uniformly random n-qubit Cliffords (modulo phase).

    Builds a uniformly random symplectic basis qubit by qubit, each new vector
    drawn uniformly from the symplectic complement of the previous pairs, and
    attaches uniform sign bits.
    """
    _check_n(n)
    mask = (1 << n) - 1
    vx, vz, wx, wz = [], [], [], []

    def draw(size):
        u = rng.integers(0, 1 << (2 * n), size=size, dtype=np.int64)
        return u & mask, u >> n

    for _ in range(n):
        cx = np.zeros(count, dtype=np.int64)
        cz = np.zeros(count, dtype=np.int64)
        todo = np.ones(count, dtype=bool)
        while np.any(todo):
            ux, uz = draw(int(todo.sum()))
            ux, uz = _project_out(ux, uz, [v[todo] for v in vx], [v[todo] for v in vz], [w[todo] for w in wx], [w[todo] for w in wz])
            ok = (ux | uz) != 0
            idx = np.flatnonzero(todo)[ok]
            cx[idx], cz[idx] = ux[ok], uz[ok]
            todo[idx] = False
        dx = np.zeros(count, dtype=np.int64)
        dz = np.zeros(count, dtype=np.int64)
        todo = np.ones(count, dtype=bool)
        while np.any(todo):
            ux, uz = draw(int(todo.sum()))
            ux, uz = _project_out(ux, uz, [v[todo] for v in vx], [v[todo] for v in vz], [w[todo] for w in wx], [w[todo] for w in wz])
            ok = symplectic_product(cx[todo], cz[todo], ux, uz) == 1
            idx = np.flatnonzero(todo)[ok]
            dx[idx], dz[idx] = ux[ok], uz[ok]
            todo[idx] = False
        vx.append(cx)
        vz.append(cz)
        wx.append(dx)
        wz.append(dz)
    gen_x = np.stack(vx + wx, axis=1)
    gen_z = np.stack(vz + wz, axis=1)
    gen_sign = 1 - 2 * rng.integers(0, 2, size=(count, 2 * n), dtype=np.int64)
    return CliffordBatch(n, gen_x, gen_z, gen_sign)


def random_clifford(n: int, rng: np.random.Generator) -> CliffordElement:
    return random_clifford_batch(n, 1, rng)[0]
