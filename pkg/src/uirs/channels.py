"""Channels in Pauli-Liouville form, the disordered Ising model, exact unitarity and OTOC."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliString, channel_to_liouville, check_dim, devectorize, liouville_of_unitary, pauli_dense, vectorize

TOL = 1e-10


class NotTracePreservingError(ValueError):
    pass


@dataclass(frozen=True)
class Channel:
    """A linear map on n-qubit operators held as its d^2 x d^2 transfer matrix."""

    n: int
    liouville: np.ndarray
    trace_preserving: bool = True

    def __post_init__(self):
        mat = np.asarray(self.liouville)
        d2 = 4**self.n
        if mat.shape != (d2, d2):
            raise ValueError(f"expected a {d2}x{d2} matrix, got {mat.shape}")
        if self.trace_preserving:
            first = np.zeros(d2)
            first[0] = 1.0
            if not np.allclose(mat[0], first, atol=1e-12):
                raise NotTracePreservingError("first row of a trace-preserving map must be (1, 0, ..., 0)")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "liouville", mat)

    @classmethod
    def identity(cls, n: int) -> "Channel":
        return cls(n, np.eye(4**n))

    @property
    def dim(self) -> int:
        return 2**self.n

    def compose(self, first: "Channel") -> "Channel":
        """The map ``self`` applied after ``first``."""
        return Channel(self.n, self.liouville @ first.liouville, self.trace_preserving and first.trace_preserving)

    def apply(self, op: np.ndarray) -> np.ndarray:
        return devectorize(self.liouville @ vectorize(op))


def depolarizing(p: float, n: int) -> Channel:
    """rho -> (1 - p) rho + p Tr(rho) 1/d."""
    if not 0 <= p <= 1:
        raise ValueError(f"depolarizing probability must lie in [0, 1], got {p}")
    diag = np.full(4**n, 1 - p)
    diag[0] = 1.0
    return Channel(n, np.diag(diag))


def unitary_channel(u: np.ndarray) -> Channel:
    u = np.asarray(u, dtype=complex)
    n = check_dim(u.shape[0])
    if not np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=TOL):
        raise ValueError("matrix is not unitary")
    return Channel(n, liouville_of_unitary(u))


def random_channel(n: int, rng: np.random.Generator, kraus: int = 3) -> Channel:
    """A random CPTP map from a Haar-ish Stiefel isometry with ``kraus`` operators."""
    d = 2**n
    z = rng.normal(size=(kraus * d, d)) + 1j * rng.normal(size=(kraus * d, d))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    ks = q.reshape(kraus, d, d)
    mat = channel_to_liouville(lambda a: sum(k @ a @ k.conj().T for k in ks), n)
    mat = np.real_if_close(mat)
    mat[0] = 0.0
    mat[0, 0] = 1.0
    return Channel(n, mat)


@dataclass(frozen=True)
class NoiseModel:
    """Gate-independent noise: each gate acts as left . omega(g) . right; SPAM channels wrap the circuit."""

    left: Channel
    right: Channel
    spam_prep: Channel
    spam_meas: Channel

    def __post_init__(self):
        for name in ("left", "right", "spam_prep", "spam_meas"):
            if not getattr(self, name).trace_preserving:
                raise NotTracePreservingError(f"noise component {name} must be trace preserving")

    @classmethod
    def ideal(cls, n: int) -> "NoiseModel":
        ident = Channel.identity(n)
        return cls(ident, ident, ident, ident)

    @classmethod
    def depolarizing(cls, n: int, left: float = 0.0, right: float = 0.0, spam_prep: float = 0.0, spam_meas: float = 0.0) -> "NoiseModel":
        return cls(depolarizing(left, n), depolarizing(right, n), depolarizing(spam_prep, n), depolarizing(spam_meas, n))


def unitarity_exact(c: Channel, removal: str = "input") -> float:
    """Average purity of the identity-removed channel over Haar-random pure inputs, times d/(d-1).

    The Haar average of psi (x) psi is replaced by the symmetric projector
    (1 + SWAP)/(d(d+1)).  ``removal="input"`` removes the identity component of
    the input state, which yields the standard unitarity ||unital block||^2/(d^2-1).
    ``removal="output"`` subtracts Tr(Lambda(psi)) 1/d from the output instead,
    which additionally picks up the nonunital part for non-unital maps.
    """
    if not c.trace_preserving:
        raise NotTracePreservingError("unitarity needs a trace-preserving channel")
    d = c.dim
    mat = np.asarray(c.liouville)
    proj = np.eye(d * d)
    proj[0, 0] = 0.0
    if removal == "input":
        reduced = mat @ proj
    elif removal == "output":
        reduced = proj @ mat
    else:
        raise ValueError(f"unknown removal {removal!r}")
    # Liouville form of (1 (x) 1 + SWAP) is d e0 e0^T + I on the doubled index
    sym = np.eye(d * d)
    sym[0, 0] += d
    average_purity = np.trace(reduced @ sym @ reduced.conj().T).real / (d * (d + 1))
    return float(d / (d - 1) * average_purity)


def _check_observables(v: PauliString, w: PauliString):
    if v.is_identity or w.is_identity:
        raise ValueError("V and W must be nontrivial Pauli strings")


def otoc_exact(u_t: np.ndarray, v: PauliString, w: PauliString) -> float:
    """Re (1/d) Tr(W V(t) W V(t)) with V(t) = U_t^dagger V U_t."""
    _check_observables(v, w)
    u_t = np.asarray(u_t, dtype=complex)
    d = u_t.shape[0]
    if v.n != w.n or 2**v.n != d:
        raise ValueError("observable size does not match the evolution")
    vt = u_t.conj().T @ pauli_dense(v) @ u_t
    wd = pauli_dense(w)
    return float(np.trace(wd @ vt @ wd @ vt).real / d)


def scrambling(u_t: np.ndarray, v: PauliString, w: PauliString) -> float:
    """Squared-commutator scrambling measure C(t) = 2 (1 - Re O(t))."""
    return 2.0 * (1.0 - otoc_exact(u_t, v, w))


@dataclass(frozen=True)
class IsingParams:
    n: int
    J0: float = 1.0
    alpha: float = 1.5
    B: float = 1.0
    Dmax: float = 1.0
    disorder_seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("Ising chain needs at least one site")
        if self.Dmax < 0:
            raise ValueError("Dmax must be nonnegative")

    def disorder(self) -> np.ndarray:
        """Fixed realization of the on-site fields D_i, uniform on [-Dmax, Dmax]."""
        rng = np.random.Generator(np.random.Philox(self.disorder_seed))
        return rng.uniform(-self.Dmax, self.Dmax, size=self.n)


def _site_op(n: int, site: int, symbol: str) -> np.ndarray:
    return pauli_dense(PauliString.single(n, site, symbol))


def build_ising(params: IsingParams) -> np.ndarray:
    """H = sum_{i<j} J0/|i-j|^alpha X_i X_j + (B/2) sum Z_i + sum (D_i/2) Z_i."""
    n = params.n
    d = 2**n
    h = np.zeros((d, d), dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            coupling = params.J0 / abs(i - j) ** params.alpha
            h += coupling * _site_op(n, i, "X") @ _site_op(n, j, "X")
    fields = params.B / 2 + params.disorder() / 2
    for i in range(n):
        h += fields[i] * _site_op(n, i, "Z")
    return h


def evolve(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t) by Hermitian eigendecomposition."""
    h = np.asarray(h, dtype=complex)
    if not np.allclose(h, h.conj().T, atol=TOL):
        raise ValueError("Hamiltonian is not Hermitian")
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * vals * t)) @ vecs.conj().T


def default_observables(n: int) -> tuple[PauliString, PauliString]:
    """V = Y on the last qubit, W = X on the last-but-one (on the only qubit when n = 1)."""
    v = PauliString.single(n, n - 1, "Y")
    w = PauliString.single(n, max(n - 2, 0), "X")
    return v, w
