"""Closed-form predictions and brute-force group averages used as ground truth.

Two-copy objects live on the doubled Pauli-Liouville space of dimension d^4,
ordered as ``np.kron`` of single-copy vectors.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .channels import Channel, NoiseModel, depolarizing, evolve, otoc_exact, random_channel, unitarity_exact, unitary_channel
from .clifford import enumerate_single_qubit_clifford, irrep_projectors
from .correlators import OtocObservables, OutcomeWeights, otoc_A, otoc_boundary
from .pauli import PauliString, computational_povm, pauli_basis, pauli_dense, swap_operator, vectorize, zero_state
from .simulate import SequenceSpec, outcome_distribution

TOL = 1e-10


@dataclass(frozen=True)
class DecayModel:
    theta: np.ndarray
    phi: np.ndarray

    @property
    def scalar(self) -> bool:
        return np.asarray(self.phi).size == 1

    def predict(self, m: int) -> float:
        theta = np.atleast_2d(self.theta)
        phi = np.atleast_2d(self.phi)
        return float(np.trace(theta @ np.linalg.matrix_power(phi, m - 1)).real)


def _rank(p: np.ndarray) -> int:
    return int(round(np.trace(p).real))


def _check_projector(p: np.ndarray):
    if not np.allclose(p @ p, p, atol=TOL) or not np.allclose(p, p.conj().T, atol=TOL):
        raise ValueError("not an orthogonal projector")


def phi_independent_clifford(A: np.ndarray, lam: Channel, projectors=None) -> float:
    """Tr(P A^T P Lambda^(x)2) / (|P1| |P2|) with P = P1 (x) P2 (default adjoint (x) adjoint)."""
    if projectors is None:
        _, p_ad = irrep_projectors(lam.n)
        projectors = (p_ad, p_ad)
    p = np.kron(*projectors)
    if not np.allclose(p @ A @ p, A, atol=TOL):
        raise ValueError("A is not supported on the irrep product block")
    lam2 = np.kron(lam.liouville, lam.liouville)
    val = np.trace(p @ A.T @ p @ lam2) / (_rank(projectors[0]) * _rank(projectors[1]))
    return float(np.real(val))


def otoc_decay_parameter(lam: Channel, obs: OtocObservables) -> float:
    """Same value as phi_independent_clifford on the OTOC operator, without forming d^4 matrices.

    Equals sum_{sigma traceless} Tr(W sigma W sigma) <<sigma|Lambda|V>>^2.
    """
    d = lam.dim
    col = np.asarray(lam.liouville)[:, obs.V.index].real * np.sqrt(d)
    return float(np.sum(obs.w_signs()[1:] * col[1:] ** 2))


def decay_otoc(u_t: np.ndarray, v: PauliString, w: PauliString) -> float:
    """d O(t), checked against the decay parameter of the Heisenberg map sigma -> U_t^dagger sigma U_t.

    A forward interleave rho -> U_t rho U_t^dagger yields d O evaluated at U_t^dagger
    instead; the two agree whenever H is real symmetric (the Ising model).
    """
    u_t = np.asarray(u_t, dtype=complex)
    val = u_t.shape[0] * otoc_exact(u_t, v, w)
    check = otoc_decay_parameter(unitary_channel(u_t.conj().T), OtocObservables(v, w))
    if abs(val - check) > TOL:
        raise AssertionError(f"OTOC decay parameter mismatch: {val} vs {check}")
    return val


def effective_channel(noise: NoiseModel, interleave: Optional[Channel] = None) -> Channel:
    """Lambda_R . interleave . Lambda_L: what sits between consecutive ideal gates."""
    mat = noise.right.liouville
    if interleave is not None:
        mat = mat @ interleave.liouville
    return Channel(noise.left.n, mat @ noise.left.liouville)


def spam_boundary(noise: NoiseModel, rho=None, povm=None):
    """(rho', [e'_x]): the noisy state after Lambda_R and the effects pulled back through Lambda_L."""
    n = noise.left.n
    rho = zero_state(n) if rho is None else rho
    povm = computational_povm(n) if povm is None else povm
    rho_p = noise.right.liouville @ noise.spam_prep.liouville @ vectorize(rho).real
    back = (noise.spam_meas.liouville @ noise.left.liouville).T
    effects = [back @ vectorize(e).real for e in povm]
    return np.real(rho_p), [np.real(e) for e in effects]


def otoc_theta(noise: NoiseModel, rho=None, povm=None) -> float:
    """k(1) of the OTOC correlator: [sum_x <<E_x|P_ad|e'_x>> <<rho|P_ad|rho'>>]^2 / (d^2-1)^2."""
    n = noise.left.n
    d2 = 4**n
    rho = zero_state(n) if rho is None else rho
    povm = computational_povm(n) if povm is None else povm
    rho_p, effects = spam_boundary(noise, rho, povm)
    r = vectorize(rho).real
    factor = sum(vectorize(e).real[1:] @ ep[1:] for e, ep in zip(povm, effects)) * (r[1:] @ rho_p[1:]) / (d2 - 1)
    return float(factor**2)


def otoc_decay_model(obs: OtocObservables, noise: NoiseModel, interleave: Optional[Channel] = None, rho=None, povm=None) -> DecayModel:
    phi = otoc_decay_parameter(effective_channel(noise, interleave), obs)
    return DecayModel(np.array([[otoc_theta(noise, rho, povm)]]), np.array([[phi]]))


@dataclass(frozen=True)
class TrivialPair:
    B1: np.ndarray
    B2: np.ndarray
    P_tau: np.ndarray

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        return vectorize(self.B1).real, vectorize(self.B2).real


@lru_cache(maxsize=None)
def trivial_pair(n: int) -> TrivialPair:
    """Orthonormal invariant pair B1 = 1/d, B2 = (SWAP - B1)/sqrt(d^2-1) of omega (x) omega."""
    d = 2**n
    b1 = np.eye(d * d) / d
    b2 = (swap_operator(d) - b1) / np.sqrt(d * d - 1)
    v1, v2 = vectorize(b1).real, vectorize(b2).real
    p_tau = np.outer(v1, v1) + np.outer(v2, v2)
    return TrivialPair(b1, b2, p_tau)


def _two_copy_form(mat: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """<<a| mat (x) mat |b>> for a, b given as d^2 x d^2 coefficient matrices."""
    return float(np.sum(a * (mat @ b @ mat.T)))


def trivial_sector_transfer(lam: Channel) -> np.ndarray:
    """Full 2x2 restriction M[i, j] = <<B_i| Lambda^(x)2 |B_j>> to the trivial pair.

    Unlike the per-projector decay matrix this keeps the cross term
    <<B_2|Lambda^(x)2|B_1>>, which is nonzero for nonunital maps.
    """
    d2 = 4**lam.n
    mat = np.asarray(lam.liouville).real
    b1 = np.zeros((d2, d2))
    b1[0, 0] = 1.0
    b2 = np.eye(d2)
    b2[0, 0] = 0.0
    b2 /= np.sqrt(d2 - 1)
    basis = (b1, b2)
    return np.array([[_two_copy_form(mat, basis[i], basis[j]) for j in range(2)] for i in range(2)])


def unitarity_phi(lam: Channel) -> np.ndarray:
    """[[1, <<B1|Lambda^(x)2|B2>>], [0, u]] with u = <<B2|Lambda^(x)2|B2>> the unitarity."""
    if not lam.trace_preserving:
        raise ValueError("unitarity_phi needs a trace-preserving channel")
    full = trivial_sector_transfer(lam)
    phi = np.array([[1.0, full[0, 1]], [0.0, full[1, 1]]])
    if abs(phi[1, 1] - unitarity_exact(lam)) > TOL:
        raise AssertionError("trivial-pair unitarity disagrees with the Haar-average formula")
    return phi


def phi_identical(A: np.ndarray, lam: Channel, projectors: Sequence[np.ndarray]) -> np.ndarray:
    """Matrix with entries Tr(P_i A^T P_j Lambda^(x)2) / |P_j|."""
    for p in projectors:
        _check_projector(p)
    for i, p in enumerate(projectors):
        for q in projectors[i + 1 :]:
            if not np.allclose(p @ q, 0, atol=TOL):
                raise ValueError("projectors are not mutually orthogonal")
    lam2 = np.kron(lam.liouville, lam.liouville)
    k = len(projectors)
    out = np.zeros((k, k))
    for i, pi in enumerate(projectors):
        for j, pj in enumerate(projectors):
            out[i, j] = np.real(np.trace(pi @ A.T @ pj @ lam2)) / _rank(pj)
    return out


def trivial_projector_list(n: int) -> list[np.ndarray]:
    v1, v2 = trivial_pair(n).vectors()
    return [np.outer(v1, v1), np.outer(v2, v2)]


def unitarity_correlator(
    noise: NoiseModel, interleave: Optional[Channel], weights: OutcomeWeights, m_values, rho=None, povm=None
) -> np.ndarray:
    """Exact E_g (sum_x w_x p(x|g))^2 for each m, via the 2x2 trivial-pair reduction."""
    n = noise.left.n
    d2 = 4**n
    povm = computational_povm(n) if povm is None else povm
    rho_p, effects = spam_boundary(noise, rho, povm)
    ew = sum(w * e for w, e in zip(weights.array(), effects))
    left = np.array([ew[0] ** 2, np.sum(ew[1:] ** 2) / np.sqrt(d2 - 1)])
    right = np.array([rho_p[0] ** 2, np.sum(rho_p[1:] ** 2) / np.sqrt(d2 - 1)])
    full = trivial_sector_transfer(effective_channel(noise, interleave))
    return np.array([left @ np.linalg.matrix_power(full, m - 1) @ right for m in m_values])


def _embedded_tau(label: str, omega: np.ndarray) -> np.ndarray:
    p_tr, p_ad = irrep_projectors(int(round(np.log(omega.shape[0]) / np.log(4))))
    if label == "ad":
        return p_ad @ omega @ p_ad
    if label == "tr":
        return np.ones((1, 1))
    if label == "omega":
        return omega
    raise ValueError(f"unknown irrep label {label!r}")


def _single_qubit_omegas() -> list[np.ndarray]:
    return [g.liouville() for g in enumerate_single_qubit_clifford()]


def exhaustive_layer_twirl(n: int, A: np.ndarray, lam: Channel, mode: str = "independent", irreps=("ad", "ad")) -> np.ndarray:
    """E_g[(tau (x) tau (x) omega (x) omega)(g-layer)] (A (x) Lambda (x) Lambda) by literal summation over the group.

    ``independent`` averages over all 24^2 pairs (g1, g2) with irreps
    ``irreps``; ``identical`` averages over g with tau(g) (x) omega(g) (x) omega(g)
    and ``irreps[0]`` as tau.
    """
    return layer_average(n, mode, irreps) @ np.kron(A, np.kron(lam.liouville, lam.liouville))


@lru_cache(maxsize=None)
def _layer_average_cached(mode: str, irreps: tuple) -> np.ndarray:
    omegas = _single_qubit_omegas()
    if mode == "independent":
        total = 0
        for o1 in omegas:
            t1 = _embedded_tau(irreps[0], o1)
            for o2 in omegas:
                t2 = _embedded_tau(irreps[1], o2)
                total = total + np.kron(np.kron(t1, t2), np.kron(o1, o2))
        out = total / len(omegas) ** 2
    elif mode == "identical":
        out = sum(np.kron(_embedded_tau(irreps[0], o), np.kron(o, o)) for o in omegas) / len(omegas)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    out.setflags(write=False)
    return out


def layer_average(n: int, mode: str, irreps=("ad", "ad")) -> np.ndarray:
    if n != 1:
        raise ValueError("exhaustive group averages are only available for one qubit")
    return _layer_average_cached(mode, tuple(irreps))


def exhaustive_correlator(
    A: np.ndarray,
    B_of,
    noise: NoiseModel,
    interleave: Optional[Channel],
    m_values,
    mode: str = "independent",
    irreps=("ad", "ad"),
    rho=None,
    povm=None,
) -> np.ndarray:
    """Exact k(m) = sum_xy Tr(X_xy Tbar (A Tbar)^(m-1)) with Tbar the averaged layer (one qubit).

    ``B_of(x, y)`` gives the correlation-function boundary on the tau space;
    the SPAM boundary terms carry the noise.
    """
    n = 1
    lam = effective_channel(noise, interleave)
    rho_p, effects = spam_boundary(noise, rho, povm)
    tbar = layer_average(n, mode, irreps)
    big_a = np.kron(A, np.kron(lam.liouville, lam.liouville))
    d = len(effects)
    X = 0
    for x in range(d):
        for y in range(d):
            X = X + np.kron(B_of(x, y), np.kron(np.outer(rho_p, effects[x]), np.outer(rho_p, effects[y])))
    out = []
    step = tbar.copy()
    for m in range(1, max(m_values) + 1):
        if m in m_values:
            out.append(float(np.real(np.trace(X @ step))))
        step = tbar @ big_a @ step
    return np.array(out)


def exhaustive_otoc_correlator(obs: OtocObservables, noise: NoiseModel, interleave: Optional[Channel], m_values, rho=None, povm=None):
    return exhaustive_correlator(
        otoc_A(obs), lambda x, y: otoc_boundary(x, y, rho, povm, n=1), noise, interleave, list(m_values), rho=rho, povm=povm
    )


def exhaustive_identical_correlator(weights: OutcomeWeights, noise: NoiseModel, interleave: Optional[Channel], m_values, rho=None, povm=None):
    w = weights.array()
    return exhaustive_correlator(
        np.ones((1, 1)), lambda x, y: np.array([[w[x] * w[y]]]), noise, interleave, list(m_values), "identical", ("tr",), rho, povm
    )


def exhaustive_pair_average(f, m: int, noise: NoiseModel, interleave: Optional[Channel] = None, rho=None, povm=None) -> float:
    """Literal average of sum_xy f p p over all (24^m)^2 sequence pairs (one qubit, small m)."""
    group = enumerate_single_qubit_clifford()
    spec = SequenceSpec(1, m, noise, interleave, rho, tuple(povm) if povm is not None else None)
    seqs = list(itertools.product(group, repeat=m))
    probs = [outcome_distribution(spec, s) for s in seqs]
    total = 0.0
    for s1, p1 in zip(seqs, probs):
        for s2, p2 in zip(seqs, probs):
            total += sum(f(x, y, s1, s2) * p1[x] * p2[y] for x in range(2) for y in range(2))
    return total / len(seqs) ** 2


# ---------------------------------------------------------------- invariants


def check_projectors_complete(n: int) -> float:
    p_tr, p_ad = irrep_projectors(n)
    return float(np.max(np.abs(p_tr + p_ad - np.eye(4**n))))


def check_schur_twirl(rng: np.random.Generator) -> float:
    """Max deviation of the exhaustive one-qubit twirl of a random M from its Schur form."""
    p_tr, p_ad = irrep_projectors(1)
    M = rng.normal(size=(4, 4))
    omegas = _single_qubit_omegas()
    twirl = sum(o @ M @ o.T for o in omegas) / len(omegas)
    expected = p_tr @ M @ p_tr + np.trace(p_ad @ M) / 3 * p_ad
    return float(np.max(np.abs(twirl - expected)))


def check_swap_expansion(n: int) -> float:
    """Max deviation of <<s1 (x) s2 | SWAP (W (x) W)>> from Tr(W s1 W s1) delta over all Paulis and W."""
    d = 2**n
    basis = pauli_basis(n)
    F = swap_operator(d)
    worst = 0.0
    for wi in range(1, 4**n):
        W = pauli_dense(PauliString.from_index(wi, n))
        FW = F @ np.kron(W, W)
        for i in range(4**n):
            for j in range(4**n):
                lhs = np.sum(np.kron(basis[i], basis[j]).conj() * FW)
                rhs = np.trace(W @ basis[i] @ W @ basis[i]) if i == j else 0.0
                worst = max(worst, abs(lhs - rhs))
    return float(worst)


def check_head_relations() -> float:
    """P_tr(x)P_tr, P_ad(x)P_tr and P_tr(x)P_ad are fixed by the doubled one-qubit twirl."""
    p_tr, p_ad = irrep_projectors(1)
    omegas = [np.kron(o, o) for o in _single_qubit_omegas()]
    worst = 0.0
    for X in (np.kron(p_tr, p_tr), np.kron(p_ad, p_tr), np.kron(p_tr, p_ad)):
        twirl = sum(o @ X @ o.T for o in omegas) / len(omegas)
        worst = max(worst, float(np.max(np.abs(twirl - X))))
    return worst


def invariant_suite(seed: int = 0) -> list[tuple[str, bool, float]]:
    """(name, passed, deviation) for every theory invariant; used by the oracle-check command."""
    rng = np.random.default_rng(seed)
    results = []

    def record(name, deviation, tol=TOL):
        results.append((name, bool(deviation <= tol), float(deviation)))

    record("projectors complete n=1", check_projectors_complete(1))
    record("projectors complete n=2", check_projectors_complete(2))
    record("schur twirl n=1", check_schur_twirl(rng))
    record("swap expansion n=1", check_swap_expansion(1))
    record("swap expansion n=2", check_swap_expansion(2))
    record("head relations n=1", check_head_relations())

    obs = OtocObservables(PauliString("Y"), PauliString("X"))
    h = pauli_dense(PauliString("Z")) + 0.3 * pauli_dense(PauliString("X"))
    u_t = evolve(h, 0.7)
    ks = exhaustive_otoc_correlator(obs, NoiseModel.ideal(1), unitary_channel(u_t), [1, 2, 3, 4])
    target = decay_otoc(u_t, obs.V, obs.W)
    record("otoc decay ratio n=1", max(abs(ks[i] / ks[i - 1] - target) for i in range(1, 4)))

    worst = 0.0
    for _ in range(5):
        lam = random_channel(1, rng)
        ks = exhaustive_otoc_correlator(obs, NoiseModel.ideal(1), lam, [1, 2])
        worst = max(worst, abs(ks[1] / ks[0] - phi_independent_clifford(otoc_A(obs), lam)))
        worst = max(worst, abs(otoc_decay_parameter(lam, obs) - phi_independent_clifford(otoc_A(obs), lam)))
    record("independent decay formula n=1", worst)

    base = None
    worst = 0.0
    lam = random_channel(1, rng)
    for p in (0.0, 0.2, 0.4):
        noise = NoiseModel.depolarizing(1, spam_prep=p, spam_meas=p)
        ks = exhaustive_otoc_correlator(obs, noise, lam, [1, 2])
        ratio = ks[1] / ks[0]
        base = ratio if base is None else base
        worst = max(worst, abs(ratio - base))
    record("spam cancellation n=1", worst)

    worst = 0.0
    weights = OutcomeWeights.z_on_first_qubit(1)
    for lam in (depolarizing(0.2, 1), random_channel(1, rng)):
        noise = NoiseModel(random_channel(1, rng), Channel.identity(1), random_channel(1, rng), random_channel(1, rng))
        brute = exhaustive_identical_correlator(weights, noise, lam, [1, 2, 3])
        closed = unitarity_correlator(noise, lam, weights, [1, 2, 3])
        worst = max(worst, float(np.max(np.abs(brute - closed))))
        phi = unitarity_phi(lam)
        worst = max(worst, float(np.max(np.abs(phi - phi_identical(np.eye(16), lam, trivial_projector_list(1))))))
    record("identical decay formula n=1", worst)
    return results
