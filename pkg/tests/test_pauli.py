import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_hermitian
from uirs.channels import depolarizing
from uirs.pauli import (
    InvalidDimensionError,
    PauliString,
    channel_to_liouville,
    check_dim,
    devectorize,
    hs_inner,
    pauli_basis,
    pauli_dense,
    swap_operator,
    two_copy_vectorize,
    vectorize,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0 + 0j, -1.0])


def test_pauli_dense_x():
    assert np.array_equal(pauli_dense(PauliString("X")), X)


def test_pauli_dense_identity_two_qubits():
    assert np.array_equal(pauli_dense(PauliString("II")), np.eye(4))


def test_pauli_dense_signed_product():
    assert np.allclose(pauli_dense(PauliString("YZ", -1)), -np.kron(Y, Z))


def test_parse_and_str_roundtrip():
    p = PauliString.parse("-XZI")
    assert p.sign == -1 and p.word == "XZI"
    assert str(p) == "-XZI"
    assert PauliString.parse(str(p)) == p


def test_invalid_words_rejected():
    with pytest.raises(ValueError):
        PauliString("XQ")
    with pytest.raises(ValueError):
        PauliString("X", 2)


def test_index_ordering_qubit0_most_significant():
    assert PauliString("I").index == 0
    assert PauliString("XI").index == 4
    assert PauliString("IZ").index == 3
    assert PauliString.from_index(27, 3).word == "XYZ"


@given(st.integers(0, 4**3 - 1))
def test_index_roundtrip(k):
    assert PauliString.from_index(k, 3).index == k


def test_basis_is_orthonormal():
    for n in (1, 2):
        b = pauli_basis(n)
        gram = np.einsum("iab,jab->ij", b.conj(), b)
        assert np.allclose(gram, np.eye(4**n))


def test_vectorize_normalized_identity():
    assert np.allclose(vectorize(np.eye(2) / np.sqrt(2)), [1, 0, 0, 0])


def test_vectorize_sigma_x():
    assert np.allclose(vectorize(X), [0, np.sqrt(2), 0, 0])


def test_vectorize_roundtrip(rng):
    o = random_hermitian(rng, 4)
    assert np.allclose(devectorize(vectorize(o)), o)


def test_vectorize_rejects_bad_dimension():
    with pytest.raises(InvalidDimensionError):
        vectorize(np.eye(3))
    with pytest.raises(InvalidDimensionError):
        check_dim(2**6)


def test_hs_inner_examples(rng):
    assert np.isclose(hs_inner(X / np.sqrt(2), X / np.sqrt(2)), 1)
    assert np.isclose(hs_inner(X, Y), 0)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.isclose(hs_inner(a, b), np.sum(a.conj() * b))


def test_channel_to_liouville_identity():
    assert np.allclose(channel_to_liouville(lambda o: o, 1), np.eye(4))


def test_channel_to_liouville_depolarizing():
    lam = channel_to_liouville(lambda o: 0.7 * o + 0.3 * np.trace(o) * np.eye(2) / 2, 1)
    assert np.allclose(lam, np.diag([1, 0.7, 0.7, 0.7]))
    assert np.allclose(depolarizing(0.3, 1).liouville, lam)


def test_channel_to_liouville_x_conjugation():
    assert np.allclose(channel_to_liouville(lambda o: X @ o @ X, 1), np.diag([1, 1, -1, -1]))


def test_two_copy_vectorize_of_product(rng):
    a, b = random_hermitian(rng, 2), random_hermitian(rng, 2)
    assert np.allclose(two_copy_vectorize(np.kron(a, b)), np.kron(vectorize(a), vectorize(b)))


def test_swap_operator():
    F = swap_operator(2)
    a, b = np.array([1, 0]), np.array([0, 1])
    assert np.allclose(F @ np.kron(a, b), np.kron(b, a))
    assert np.isclose(np.trace(F), 2)


@settings(max_examples=50)
@given(st.text(alphabet="IXYZ", min_size=1, max_size=3), st.text(alphabet="IXYZ", min_size=1, max_size=3))
def test_commutes_matches_dense(a, b):
    if len(a) != len(b):
        return
    p, q = PauliString(a), PauliString(b)
    P, Q = pauli_dense(p), pauli_dense(q)
    assert p.commutes(q) == np.allclose(P @ Q, Q @ P)
