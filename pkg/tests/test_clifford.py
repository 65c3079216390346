import numpy as np
import pytest
from scipy.stats import chisquare

from uirs.clifford import (
    HADAMARD,
    PHASE,
    CliffordElement,
    adjoint_rep,
    compose,
    conjugate_pauli,
    enumerate_single_qubit_clifford,
    irrep_projectors,
    random_clifford,
    random_clifford_batch,
)
from uirs.pauli import PauliString, liouville_of_unitary, pauli_dense


def _dense_conj(u, p):
    return u.conj().T @ pauli_dense(p) @ u


def test_hadamard_maps_x_to_z():
    assert conjugate_pauli(CliffordElement.from_unitary(HADAMARD), PauliString("X")) == PauliString("Z")


def test_phase_maps_x_to_minus_y():
    assert conjugate_pauli(CliffordElement.from_unitary(PHASE), PauliString("X")) == PauliString("Y", -1)
    s = np.diag([1, 1j])
    assert np.allclose(_dense_conj(s, PauliString("X")), -pauli_dense(PauliString("Y")))


def test_identity_conjugation():
    g = CliffordElement.identity(3)
    for w in ("XYZ", "IZI", "YYX"):
        assert conjugate_pauli(g, PauliString(w)) == PauliString(w)


def test_inverse_direction(rng):
    g = random_clifford(2, rng)
    p = PauliString("XY")
    assert conjugate_pauli(g, conjugate_pauli(g, p), inverse=True) == p


def test_enumeration_has_24_signed_elements():
    group = enumerate_single_qubit_clifford()
    assert len(group) == 24
    assert len(set(group)) == 24
    for g in group:
        assert g.is_symplectic()
        for p in g.images():
            assert p.sign in (1, -1) and not p.is_identity


def test_enumeration_closed_under_composition():
    group = set(enumerate_single_qubit_clifford())
    for g in group:
        for h in group:
            assert compose(g, h) in group


def test_adjoint_average_vanishes():
    group = enumerate_single_qubit_clifford()
    assert np.allclose(sum(adjoint_rep(g) for g in group) / 24, 0)


def test_random_clifford_uniform_on_one_qubit():
    group = enumerate_single_qubit_clifford()
    index = {g: i for i, g in enumerate(group)}
    batch = random_clifford_batch(1, 24000, np.random.default_rng(5))
    counts = np.zeros(24)
    for i in range(len(batch)):
        counts[index[batch[i]]] += 1
    assert chisquare(counts).pvalue > 1e-3


def test_random_draws_are_symplectic(rng):
    for n in (1, 2, 3, 4, 5):
        assert random_clifford(n, rng).is_symplectic()


def test_random_clifford_rejects_bad_n(rng):
    with pytest.raises(ValueError):
        random_clifford(0, rng)
    with pytest.raises(ValueError):
        random_clifford(6, rng)


def test_two_design_moment():
    p_tr, p_ad = irrep_projectors(2)
    rng = np.random.default_rng(3)
    M = rng.normal(size=(16, 16))
    batch = random_clifford_batch(2, 100000, rng)
    perm, sign = batch.tables
    # omega M omega^T for a signed permutation omega[i, perm[i]] = sign[i]
    acc = np.zeros((16, 16))
    for k in range(len(batch)):
        acc += np.outer(sign[k], sign[k]) * M[np.ix_(perm[k], perm[k])]
    twirl = acc / len(batch)
    expected = p_tr @ M @ p_tr + np.trace(p_ad @ M) / 15 * p_ad
    assert np.max(np.abs(twirl - expected)) < 5e-3 * np.max(np.abs(M)) * 5


def test_adjoint_rep_identity():
    assert np.array_equal(adjoint_rep(CliffordElement.identity(2)), np.eye(15))


def test_adjoint_rep_signed_permutation(rng):
    a = adjoint_rep(random_clifford(2, rng))
    assert np.allclose(a @ a.T, np.eye(15))
    assert np.all(np.sum(np.abs(a), axis=0) == 1) and np.all(np.sum(np.abs(a), axis=1) == 1)


def test_adjoint_rep_homomorphism(rng):
    for _ in range(10):
        g, h = random_clifford(2, rng), random_clifford(2, rng)
        assert np.allclose(adjoint_rep(compose(g, h)), adjoint_rep(g) @ adjoint_rep(h))


def test_liouville_matches_dense_unitary(rng):
    for n in (1, 2, 3):
        g = random_clifford(n, rng)
        lam = liouville_of_unitary(g.unitary)
        # omega(g) is the transfer matrix of rho -> U rho U^dagger
        assert np.allclose(g.liouville(), lam.real)
        q = PauliString.from_index(int(rng.integers(1, 4**n)), n)
        assert np.allclose(_dense_conj(g.unitary, q), pauli_dense(g.conjugate(q)))


def test_composition_matches_unitary_product(rng):
    g, h = random_clifford(2, rng), random_clifford(2, rng)
    u = compose(g, h).unitary
    v = g.unitary @ h.unitary
    phase = np.vdot(u.ravel(), v.ravel())
    assert np.isclose(abs(phase), 4)
    assert np.allclose(u * phase / abs(phase), v)


def test_inverse(rng):
    g = random_clifford(3, rng)
    assert compose(g, g.inverse()) == CliffordElement.identity(3)


def test_from_unitary_roundtrip(rng):
    g = random_clifford(2, rng)
    assert CliffordElement.from_unitary(g.unitary) == g


def test_from_images_rejects_non_symplectic():
    with pytest.raises(ValueError):
        CliffordElement.from_images(["X", "X"])


def test_projectors():
    for n in (1, 2):
        p_tr, p_ad = irrep_projectors(n)
        assert np.allclose(p_tr + p_ad, np.eye(4**n))
        assert np.linalg.matrix_rank(p_ad) == 4**n - 1


def test_exhaustive_schur_twirl(rng):
    p_tr, p_ad = irrep_projectors(1)
    M = rng.normal(size=(4, 4))
    group = enumerate_single_qubit_clifford()
    twirl = sum(g.liouville() @ M @ g.liouville().T for g in group) / 24
    assert np.allclose(twirl, p_tr @ M @ p_tr + np.trace(p_ad @ M) / 3 * p_ad)
