import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from uirs.channels import (
    Channel,
    IsingParams,
    NotTracePreservingError,
    build_ising,
    default_observables,
    depolarizing,
    evolve,
    otoc_exact,
    random_channel,
    scrambling,
    unitarity_exact,
    unitary_channel,
)
from uirs.pauli import PauliString, pauli_dense

# independent expm + explicit Kronecker evaluation, n=3, J0=1, alpha=1.5, B=1, Dmax=0, t=1
ISING_N3_OTOC_T1 = 0.43217915656141215


def test_depolarizing_limits():
    assert np.allclose(depolarizing(0, 2).liouville, np.eye(16))
    assert np.allclose(depolarizing(1, 1).liouville, np.diag([1, 0, 0, 0]))
    assert np.allclose(depolarizing(0.3, 1).liouville, np.diag([1, 0.7, 0.7, 0.7]))


def test_depolarizing_rejects_bad_probability():
    with pytest.raises(ValueError):
        depolarizing(1.5, 1)


def test_channel_requires_trace_preservation():
    bad = np.eye(4)
    bad[0, 1] = 0.2
    with pytest.raises(NotTracePreservingError):
        Channel(1, bad)


def test_unitary_channel_examples():
    assert np.allclose(unitary_channel(np.eye(2)).liouville, np.eye(4))
    assert np.allclose(unitary_channel(pauli_dense(PauliString("X"))).liouville, np.diag([1, 1, -1, -1]))


def test_unitary_channel_orthogonal_block():
    u = unitary_group.rvs(4, random_state=1)
    block = np.asarray(unitary_channel(u).liouville)[1:, 1:]
    assert np.allclose(block @ block.T, np.eye(15))


def test_compose_order(rng):
    a, b = random_channel(1, rng), random_channel(1, rng)
    rho = np.array([[0.7, 0.1], [0.1, 0.3]])
    assert np.allclose(b.compose(a).apply(rho), b.apply(a.apply(rho)))


def test_random_channel_is_cptp(rng):
    lam = random_channel(2, rng)
    # Choi matrix positivity through the dense action on a maximally entangled input
    d = 4
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d))
            e[i, j] = 1
            choi += np.kron(e, lam.apply(e))
    assert np.linalg.eigvalsh(choi).min() > -1e-10


def test_unitarity_examples(rng):
    assert np.isclose(unitarity_exact(Channel.identity(2)), 1)
    assert np.isclose(unitarity_exact(depolarizing(0.1, 2)), 0.81)
    assert np.isclose(unitarity_exact(unitary_channel(unitary_group.rvs(4, random_state=2))), 1)
    assert unitarity_exact(random_channel(1, rng)) <= 1 + 1e-12


@settings(max_examples=25)
@given(st.floats(0, 1))
def test_unitarity_depolarizing_property(p):
    assert np.isclose(unitarity_exact(depolarizing(p, 1)), (1 - p) ** 2)


def test_unitarity_removal_variants_agree_when_unital():
    lam = depolarizing(0.2, 1).compose(unitary_channel(unitary_group.rvs(2, random_state=4)))
    assert np.isclose(unitarity_exact(lam, "input"), unitarity_exact(lam, "output"))


def test_otoc_trivial_cases():
    v, w = PauliString("IY"), PauliString("XI")
    assert np.isclose(otoc_exact(np.eye(4), v, w), 1)
    assert np.isclose(otoc_exact(np.eye(2), PauliString("Y"), PauliString("X")), -1)
    assert np.isclose(scrambling(np.eye(2), PauliString("Y"), PauliString("X")), 4)


def test_otoc_identity_observable_rejected():
    with pytest.raises(ValueError):
        otoc_exact(np.eye(2), PauliString("I"), PauliString("X"))


def test_otoc_ising_n3():
    v, w = default_observables(3)
    u = evolve(build_ising(IsingParams(3, Dmax=0)), 1.0)
    assert abs(otoc_exact(u, v, w) - ISING_N3_OTOC_T1) < 1e-10


def test_ising_zero_and_hermitian():
    assert np.allclose(build_ising(IsingParams(3, J0=0, B=0, Dmax=0)), 0)
    h = build_ising(IsingParams(4))
    assert np.allclose(h, h.conj().T)


def test_ising_single_coupling():
    h = build_ising(IsingParams(2, J0=1, alpha=2, B=0, Dmax=0))
    assert np.allclose(h, pauli_dense(PauliString("XX")))


def test_ising_disorder_reproducible():
    a, b = IsingParams(3, disorder_seed=4).disorder(), IsingParams(3, disorder_seed=4).disorder()
    assert np.array_equal(a, b) and np.all(np.abs(a) <= 1)
    with pytest.raises(ValueError):
        IsingParams(3, Dmax=-1)


def test_evolve_examples(rng):
    h = build_ising(IsingParams(2))
    assert np.allclose(evolve(h, 0), np.eye(4))
    z = pauli_dense(PauliString("Z"))
    assert np.allclose(evolve(z, 0.4), np.diag([np.exp(-0.4j), np.exp(0.4j)]))
    assert np.allclose(evolve(h, 0.8) @ evolve(h, -0.8), np.eye(4))


def test_evolve_rejects_non_hermitian():
    with pytest.raises(ValueError):
        evolve(np.array([[0, 1], [0, 0]]), 1.0)
