"""Sequence correlation functions and their estimators.

Post-processing always uses the nominal state and POVM: the noise model only
enters through the recorded outcome statistics.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .channels import NoiseModel
from .clifford import CliffordElement, irrep_projectors, random_clifford_batch
from .pauli import PauliString, commutation_signs, computational_povm, liouville_of_unitary, pauli_dense, vectorize, zero_state
from .simulate import EXACT, SHOTS, ShadowBatch, as_batch


class DegenerateDenominatorError(ZeroDivisionError):
    pass


class SupportError(ValueError):
    pass


@dataclass(frozen=True)
class OtocObservables:
    V: PauliString
    W: PauliString

    def __post_init__(self):
        if self.V.is_identity or self.W.is_identity:
            raise ValueError("V and W must be nontrivial Pauli strings")
        if self.V.n != self.W.n:
            raise ValueError("V and W act on different qubit counts")

    @property
    def n(self) -> int:
        return self.V.n

    def w_signs(self) -> np.ndarray:
        """Tr(W sigma W sigma) for every normalized basis Pauli sigma (each is +-1)."""
        return commutation_signs(self.W.unsigned()).astype(float)


@dataclass(frozen=True)
class OutcomeWeights:
    """Real weight per outcome; the identical-sequence protocol measures sum_x w_x E_x."""

    w: tuple

    def __post_init__(self):
        arr = np.asarray(self.w, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("weights must be finite")

    @classmethod
    def z_on_first_qubit(cls, n: int) -> "OutcomeWeights":
        """w_x = +1 when the first qubit reads 0, -1 otherwise."""
        return cls(tuple(1.0 - 2.0 * ((x >> (n - 1)) & 1) for x in range(2**n)))

    @property
    def degenerate(self) -> bool:
        return len(set(self.w)) <= 1

    def array(self) -> np.ndarray:
        return np.asarray(self.w, dtype=float)


@dataclass
class EstimateSeries:
    points: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    fit: Optional[object] = None

    def add(self, m: int, value: float, stderr: float):
        if self.points and m <= self.points[-1][0]:
            raise ValueError("m must be strictly increasing")
        if stderr < 0:
            raise ValueError("stderr must be nonnegative")
        self.points.append((m, float(value), float(stderr)))


def _check_sequences(g1, g2, m):
    if len(g1) != m or len(g2) != m:
        raise ValueError(f"both sequences must have length {m}")


def _conj_dense(g: CliffordElement, op: np.ndarray) -> np.ndarray:
    u = g.unitary
    return u.conj().T @ op @ u


def f_otoc_fast(x, y, g1, g2, m, obs: OtocObservables, rho=None, povm=None) -> float:
    """OTOC sequence correlation function evaluated layer by layer on Pauli images."""
    _check_sequences(g1, g2, m)
    n = obs.n
    d = 2**n
    rho = zero_state(n) if rho is None else np.asarray(rho)
    povm = computational_povm(n) if povm is None else povm
    ex, ey = povm[x], povm[y]
    if m == 1:
        a = np.trace(ex @ g1[0].unitary @ rho @ g1[0].unitary.conj().T).real - np.trace(ex).real / d
        b = np.trace(ey @ g2[0].unitary @ rho @ g2[0].unitary.conj().T).real - np.trace(ey).real / d
        return float(a * b)
    w = pauli_dense(obs.W)
    v1, v2 = g1[0].conjugate(obs.V), g2[0].conjugate(obs.V)
    first = np.trace(pauli_dense(v1) @ rho).real * np.trace(pauli_dense(v2) @ rho).real
    middle = 1.0
    for i in range(1, m - 1):
        p1, p2 = g1[i].conjugate(obs.V), g2[i].conjugate(obs.V)
        if p1.word != p2.word:
            return 0.0
        # Tr(W P W P) = +-d with the commutation sign
        middle *= p1.sign * p2.sign * d * (1 if p1.commutes(obs.W) else -1)
    last = np.trace(w @ _conj_dense(g1[-1], ex) @ w @ _conj_dense(g2[-1], ey)).real - np.trace(ex).real * np.trace(ey).real / d
    return float((d * d - 1) ** (2 * (m - 1)) * middle * last * first)


def otoc_A(obs: OtocObservables) -> np.ndarray:
    """(d^2-1)^2 sum_{sigma traceless} Tr(W sigma W sigma) |sigma sigma>><<V V| on the doubled Liouville space."""
    n = obs.n
    d = 2**n
    d2 = d * d
    c = obs.w_signs()
    left = np.zeros(d2 * d2)
    for i in range(1, d2):
        left[i * d2 + i] = c[i]
    vvec = vectorize(pauli_dense(obs.V)).real
    return (d2 - 1) ** 2 * np.outer(left, np.kron(vvec, vvec))


def otoc_boundary(x: int, y: int, rho=None, povm=None, n: int = 1) -> np.ndarray:
    """B_xy = |rho>><<E_x| (x) |rho>><<E_y|."""
    rho = zero_state(n) if rho is None else rho
    povm = computational_povm(n) if povm is None else povm
    r = vectorize(rho)
    return np.kron(np.outer(r, vectorize(povm[x]).conj()), np.outer(r, vectorize(povm[y]).conj()))


def f_general_trace(x, y, g1, g2, m, A: np.ndarray, B: np.ndarray, projectors=None) -> complex:
    """Literal Tr(B T_m A T_{m-1} ... A T_1) with T_i = tau(g1_i) (x) tau(g2_i).

    ``projectors`` = (P1, P2) selects the irreps (default adjoint (x) adjoint);
    A must be supported on P1 (x) P2.  ``x`` and ``y`` are carried by ``B``.
    """
    _check_sequences(g1, g2, m)
    n = g1[0].n
    if projectors is None:
        _, p_ad = irrep_projectors(n)
        projectors = (p_ad, p_ad)
    proj = np.kron(projectors[0], projectors[1])
    if not np.allclose(proj @ A @ proj, A, atol=1e-10):
        raise SupportError("A is not supported on the chosen irrep product")

    def layer(i):
        return np.kron(projectors[0] @ g1[i].liouville() @ projectors[0], projectors[1] @ g2[i].liouville() @ projectors[1])

    prod = layer(0)
    for i in range(1, m):
        prod = layer(i) @ A @ prod
    return complex(np.trace(B @ prod))


class OtocCorrelation:
    """The OTOC correlation function with its nominal boundary objects.

    Calling it evaluates the single-pair function; estimators recognise it and
    switch to the grouped exact U-statistic.
    """

    def __init__(self, obs: OtocObservables, rho=None, povm=None):
        n = obs.n
        self.obs = obs
        self.n = n
        self.d = 2**n
        self.rho = zero_state(n) if rho is None else np.asarray(rho)
        self.povm = computational_povm(n) if povm is None else list(povm)
        self.rho_vec = vectorize(self.rho).real
        self.povm_mat = np.array([vectorize(e).real for e in self.povm])
        self.povm_trace = np.array([np.trace(e).real for e in self.povm])
        self.c = obs.w_signs()

    def __call__(self, x, y, g1, g2):
        return f_otoc_fast(x, y, g1, g2, len(g1), self.obs, self.rho, self.povm)

    def record_terms(self, batch: ShadowBatch, weights: np.ndarray):
        """Per-record factors (keys, group factor, vector b, diagonal C) of the pair kernel.

        The pair value is D * G(key) * b_k^T C b_l when the keys agree and 0 otherwise.
        """
        m, d = batch.m, self.d
        S = len(batch)
        if m == 1:
            perm, sign = batch.layers[0].tables
            state = sign * self.rho_vec[perm]
            u = np.einsum("sx,xi,si->s", weights, self.povm_mat, state) - weights @ self.povm_trace / d
            return np.zeros((S, 0), dtype=np.int64), np.ones(S), u[:, None], np.ones(1)
        iv = self.obs.V.index
        vsign = self.obs.V.sign
        perm, sign = batch.layers[0].tables
        scale = vsign * sign[:, iv] * np.sqrt(d) * self.rho_vec[perm[:, iv]]
        keys = np.zeros((S, m - 2), dtype=np.int64)
        group = np.ones(S)
        for l in range(1, m - 1):
            perm, sign = batch.layers[l].tables
            keys[:, l - 1] = perm[:, iv]
            scale = scale * sign[:, iv]
            group = group * d * self.c[perm[:, iv]]
        perm, sign = batch.layers[-1].tables
        effect = weights @ self.povm_mat
        back = np.zeros_like(effect)
        np.put_along_axis(back, perm, sign * effect, axis=1)
        return keys, group, scale[:, None] * back[:, 1:], self.c[1:]

    def prefactor(self, m: int) -> float:
        return float((self.d**2 - 1) ** (2 * (m - 1))) if m > 1 else 1.0


def outcome_weights(batch: ShadowBatch, mode: Optional[str] = None) -> np.ndarray:
    """Per-record outcome distribution: exact probabilities or empirical shot frequencies."""
    if mode is None:
        mode = EXACT if batch.probs is not None else SHOTS
    if mode == EXACT:
        if batch.probs is None:
            raise ValueError("EXACT mode needs records with exact probabilities")
        return np.asarray(batch.probs, dtype=float)
    if mode != SHOTS:
        raise ValueError(f"unknown mode {mode!r}")
    d = 2**batch.n
    counts = np.zeros((len(batch), d))
    np.add.at(counts, (np.repeat(np.arange(len(batch)), batch.shots), batch.outcomes.ravel()), 1.0)
    return counts / batch.shots


def _grouped_ustat(keys, group, b, c):
    """Sum over ordered pairs k != l with equal keys of G b_k^T C b_l, plus leave-one-out sums."""
    S = len(b)
    if keys.shape[1]:
        _, gid = np.unique(keys, axis=0, return_inverse=True)
        gid = gid.ravel()
    else:
        gid = np.zeros(S, dtype=np.int64)
    sums = np.zeros((gid.max() + 1, b.shape[1]))
    np.add.at(sums, gid, b)
    gfac = np.zeros(len(sums))
    gfac[gid] = group
    self_terms = np.einsum("si,i,si->s", b, c, b)
    total = float(np.sum(gfac * np.einsum("gi,i,gi->g", sums, c, sums)) - np.sum(group * self_terms))
    loo = total - 2 * group * (np.einsum("si,i,si->s", b, c, sums[gid]) - self_terms)
    return total, loo


def _jackknife(loo_values: np.ndarray) -> float:
    S = len(loo_values)
    if S < 2:
        return float("nan")
    return float(np.sqrt((S - 1) / S * np.sum((loo_values - loo_values.mean()) ** 2)))


def khat_independent(records, m: int, f, mode: Optional[str] = None) -> tuple[float, float]:
    """Two-sample U-statistic (1/(S(S-1))) sum_{i != j} sum_{x,y} f p_i(x) p_j(y) and its jackknife stderr.

    ``p_i`` is the exact outcome distribution (EXACT) or the shot frequencies
    (SHOTS).  An ``OtocCorrelation`` uses the grouped O(S d^2) evaluation, any
    other callable ``f(x, y, gates1, gates2)`` is summed pair by pair.
    """
    batch = as_batch(records)
    S = len(batch)
    if S < 2:
        raise ValueError("need at least two records")
    if batch.m != m:
        raise ValueError(f"records have length {batch.m}, expected {m}")
    weights = outcome_weights(batch, mode)
    if isinstance(f, OtocCorrelation):
        keys, group, b, c = f.record_terms(batch, weights)
        total, loo = _grouped_ustat(keys, group, b, c)
        pref = f.prefactor(m)
        est = pref * total / (S * (S - 1))
        err = _jackknife(pref * loo / ((S - 1) * (S - 2))) if S > 2 else float("nan")
        return est, err
    return _brute_ustat(batch, weights, f)


def _brute_ustat(batch: ShadowBatch, weights: np.ndarray, f) -> tuple[float, float]:
    S = len(batch)
    d = weights.shape[1]
    recs = batch.records()
    pair = np.zeros((S, S))
    for i in range(S):
        for j in range(S):
            if i == j:
                continue
            val = 0.0
            for x in np.flatnonzero(weights[i]):
                for y in np.flatnonzero(weights[j]):
                    val += f(int(x), int(y), recs[i].gates, recs[j].gates) * weights[i, x] * weights[j, y]
            pair[i, j] = val
    total = pair.sum()
    est = total / (S * (S - 1))
    if S < 3:
        return float(est), float("nan")
    loo = (total - pair.sum(axis=0) - pair.sum(axis=1)) / ((S - 1) * (S - 2))
    return float(est), _jackknife(loo)


def otoc_ratio_estimate(records_m1, records_m2, N: int, f: OtocCorrelation, mode: Optional[str] = None):
    """Batch ratios x_i = khat(2) / (d khat(1)); returns (mean, stderr over batches, batch values)."""
    b1, b2 = as_batch(records_m1), as_batch(records_m2)
    if len(b1) == 0 or len(b2) == 0:
        raise ValueError("both record sets must be nonempty")
    if N < 1:
        raise ValueError("need at least one batch")
    values = []
    for i, (s1, s2) in enumerate(zip(np.array_split(np.arange(len(b1)), N), np.array_split(np.arange(len(b2)), N))):
        k1, _ = khat_independent(b1.subset(s1), 1, f, mode)
        k2, _ = khat_independent(b2.subset(s2), b2.m, f, mode)
        if abs(k1) < 1e-14:
            raise DegenerateDenominatorError(f"batch {i}: khat(1) = {k1:.3e} is too small")
        values.append(k2 / (f.d * k1))
    values = np.array(values)
    err = float(values.std(ddof=1) / np.sqrt(N)) if N > 1 else float("nan")
    return float(values.mean()), err, values


def khat_identical_unitarity(records, m: int, weights: OutcomeWeights, mode: Optional[str] = None) -> tuple[float, float]:
    """Mean over sequences of an unbiased estimate of (sum_x w_x p(x|g))^2."""
    batch = as_batch(records)
    if batch.m != m:
        raise ValueError(f"records have length {batch.m}, expected {m}")
    if mode is None:
        mode = EXACT if batch.probs is not None else SHOTS
    w = weights.array()
    if mode == EXACT:
        if batch.probs is None:
            raise ValueError("EXACT mode needs records with exact probabilities")
        per = (batch.probs @ w) ** 2
    elif mode == SHOTS:
        r = batch.shots
        if r < 2:
            raise ValueError("SHOTS mode needs at least two shots per sequence")
        vals = w[batch.outcomes]
        per = (vals.sum(axis=1) ** 2 - (vals**2).sum(axis=1)) / (r * (r - 1))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    err = float(per.std(ddof=1) / np.sqrt(len(per))) if len(per) > 1 else float("nan")
    return float(per.mean()), err


def khat_linear(records, m: int, f_linear: Callable, mode: Optional[str] = None) -> tuple[float, float]:
    """Sample mean of f(x, gates) with outcomes integrated exactly (EXACT) or over shots (SHOTS)."""
    batch = as_batch(records)
    if len(batch) == 0:
        raise ValueError("no records")
    weights = outcome_weights(batch, mode)
    recs = batch.records()
    per = np.array(
        [sum(weights[i, x] * f_linear(int(x), recs[i].gates) for x in np.flatnonzero(weights[i])) for i in range(len(recs))]
    )
    err = float(per.std(ddof=1) / np.sqrt(len(per))) if len(per) > 1 else 0.0
    return float(per.mean()), err


def linear_correlation(A: np.ndarray, B_of: Callable[[int], np.ndarray], projector: np.ndarray) -> Callable:
    """f_A(x, g) = Tr(B_x tau(g_m) A tau(g_{m-1}) ... A tau(g_1)) for a single-copy irrep."""

    def f(x, gates):
        prod = projector @ gates[0].liouville() @ projector
        for g in gates[1:]:
            prod = projector @ g.liouville() @ projector @ A @ prod
        return float(np.trace(B_of(x) @ prod).real)

    return f


def baseline_statistical_otoc(
    u_t: np.ndarray, obs: OtocObservables, noise: NoiseModel, S: int, rng: np.random.Generator, rho=None
) -> float:
    """OTOC from correlating <W> and <V^dagger W V> over random Clifford-rotated states.

    For each random g the noisy state g(spam_prep(rho)) is evolved by U_t (the
    second series applies V first) and W is read out after spam_meas.  The mean
    product is divided by its ideal value per unit OTOC for the nominal state.
    """
    if S < 2:
        raise ValueError("need at least two random states")
    n = obs.n
    d = 2**n
    rho = zero_state(n) if rho is None else np.asarray(rho)
    prep = np.real(noise.spam_prep.liouville) @ vectorize(rho).real
    batch = random_clifford_batch(n, S, rng)
    perm, sign = batch.tables
    states = sign * prep[perm]
    evo = liouville_of_unitary(u_t)
    readout = vectorize(pauli_dense(obs.W)).real @ np.real(noise.spam_meas.liouville) @ evo
    vdiag = commutation_signs(obs.V.unsigned())
    a = states @ readout
    b = (states * vdiag) @ readout
    purity = np.trace(rho @ rho).real
    scale = d * (d * purity - 1) / (d * (d * d - 1))
    return float(np.mean(a * b) / scale)
