"""Noisy random-sequence circuits: outcome distributions and shadow records.

A sequence of m Cliffords acts as

    Lambda_L omega(g_m) Lambda_R . I . ... . I . Lambda_L omega(g_1) Lambda_R

on spam_prep(rho), where I is the optional interleaved channel, and is read out
with the POVM after spam_meas.  Two paths are provided: a dense density-matrix
propagation for single sequences and a batched Pauli-Liouville propagation for
bulk sampling.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channels import Channel, NoiseModel
from .clifford import CliffordBatch, CliffordElement, random_clifford_batch
from .pauli import PauliString, computational_povm, vectorize, xz_tables, zero_state
from .rng import chunks, substream

EXACT = "EXACT"
SHOTS = "SHOTS"
MODES = (EXACT, SHOTS)


class SimulationIntegrityError(RuntimeError):
    pass


@dataclass(frozen=True)
class SequenceSpec:
    n: int
    m: int
    noise: NoiseModel
    interleave: Optional[Channel] = None
    rho: np.ndarray = None
    povm: tuple = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("sequence length must be at least 1")
        if self.rho is None:
            object.__setattr__(self, "rho", zero_state(self.n))
        if self.povm is None:
            object.__setattr__(self, "povm", tuple(computational_povm(self.n)))
        d = 2**self.n
        rho = np.asarray(self.rho)
        if rho.shape != (d, d) or abs(np.trace(rho) - 1) > 1e-10 or np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("rho must be a d x d positive unit-trace matrix")
        total = sum(self.povm)
        if not np.allclose(total, np.eye(d), atol=1e-10):
            raise ValueError("POVM elements must sum to the identity")
        if any(np.linalg.eigvalsh(e).min() < -1e-10 for e in self.povm):
            raise ValueError("POVM elements must be positive")

    @property
    def d(self) -> int:
        return 2**self.n

    def with_length(self, m: int) -> "SequenceSpec":
        return SequenceSpec(self.n, m, self.noise, self.interleave, self.rho, self.povm)

    def rho_vector(self) -> np.ndarray:
        return vectorize(self.rho).real

    def povm_matrix(self) -> np.ndarray:
        """Rows are the Liouville vectors of the nominal POVM elements."""
        return np.array([vectorize(e).real for e in self.povm])


@dataclass(frozen=True)
class ShadowRecord:
    gates: tuple
    outcomes: tuple
    exact_probs: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.exact_probs is not None:
            p = np.asarray(self.exact_probs)
            if np.any(p < 0) or abs(p.sum() - 1) > 1e-10:
                raise ValueError("exact_probs must be a probability vector")
            d = len(p)
            if any(not 0 <= x < d for x in self.outcomes):
                raise ValueError("outcome out of range")


@dataclass(frozen=True)
class ShadowBatch:
    """Column-wise storage of S records: one CliffordBatch per layer."""

    n: int
    layers: tuple
    outcomes: np.ndarray
    probs: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.outcomes.shape[0]

    @property
    def m(self) -> int:
        return len(self.layers)

    @property
    def shots(self) -> int:
        return self.outcomes.shape[1]

    def record(self, i: int) -> ShadowRecord:
        probs = None if self.probs is None else self.probs[i]
        return ShadowRecord(tuple(layer[i] for layer in self.layers), tuple(int(x) for x in self.outcomes[i]), probs)

    def records(self) -> list[ShadowRecord]:
        return [self.record(i) for i in range(len(self))]

    def subset(self, index) -> "ShadowBatch":
        index = np.asarray(index) if not isinstance(index, slice) else index
        layers = tuple(
            CliffordBatch(self.n, layer.gen_x[index], layer.gen_z[index], layer.gen_sign[index]) for layer in self.layers
        )
        probs = None if self.probs is None else self.probs[index]
        return ShadowBatch(self.n, layers, self.outcomes[index], probs, dict(self.meta))

    @classmethod
    def from_records(cls, records: Sequence[ShadowRecord]) -> "ShadowBatch":
        records = list(records)
        if not records:
            raise ValueError("no records")
        m = len(records[0].gates)
        if any(len(r.gates) != m for r in records):
            raise ValueError("records have different sequence lengths")
        n = records[0].gates[0].n
        layers = tuple(CliffordBatch.stack([r.gates[k] for r in records]) for k in range(m))
        outcomes = np.array([r.outcomes for r in records], dtype=np.int64)
        probs = None
        if all(r.exact_probs is not None for r in records):
            probs = np.array([r.exact_probs for r in records], dtype=float)
        return cls(n, layers, outcomes, probs)


def as_batch(records) -> ShadowBatch:
    return records if isinstance(records, ShadowBatch) else ShadowBatch.from_records(records)


def _real(mat: np.ndarray) -> np.ndarray:
    mat = np.asarray(mat)
    if np.iscomplexobj(mat):
        if np.max(np.abs(mat.imag), initial=0.0) > 1e-12:
            raise ValueError("transfer matrix is not Hermiticity preserving")
        mat = mat.real
    return mat


def _check_probs(p: np.ndarray) -> np.ndarray:
    if np.any(p < -1e-12):
        raise SimulationIntegrityError(f"negative probability {p.min():.3e}")
    if np.any(np.abs(p.sum(axis=-1) - 1) > 1e-10):
        raise SimulationIntegrityError("outcome distribution is not normalized")
    return np.clip(p, 0.0, None)


def outcome_distribution(spec: SequenceSpec, gates: Sequence[CliffordElement]) -> np.ndarray:
    """p(x | g) by propagating the density matrix through the noisy circuit."""
    if len(gates) != spec.m:
        raise ValueError(f"expected {spec.m} gates, got {len(gates)}")
    noise = spec.noise
    state = noise.spam_prep.apply(spec.rho)
    for k, g in enumerate(gates):
        state = noise.right.apply(state)
        u = g.unitary
        state = u @ state @ u.conj().T
        state = noise.left.apply(state)
        if spec.interleave is not None and k < spec.m - 1:
            state = spec.interleave.apply(state)
    state = noise.spam_meas.apply(state)
    p = np.array([np.trace(e @ state).real for e in spec.povm])
    return _check_probs(p)


def _gather(v: np.ndarray, perm: np.ndarray, sign: np.ndarray) -> np.ndarray:
    """Apply omega(g) row-wise: out[b, i] = sign[b, i] v[b, perm[b, i]]."""
    return sign * np.take_along_axis(v, perm, axis=1)


def batch_outcome_distribution(spec: SequenceSpec, layers: Sequence[CliffordBatch]) -> np.ndarray:
    """p(x | g) for a whole batch of sequences in Pauli-Liouville form, shape (count, d)."""
    if len(layers) != spec.m:
        raise ValueError(f"expected {spec.m} layers, got {len(layers)}")
    noise = spec.noise
    left, right = _real(noise.left.liouville), _real(noise.right.liouville)
    inter = None if spec.interleave is None else _real(spec.interleave.liouville)
    start = _real(noise.spam_prep.liouville) @ spec.rho_vector()
    readout = spec.povm_matrix() @ _real(noise.spam_meas.liouville)
    v = np.tile(start, (len(layers[0]), 1))
    ident = np.eye(len(start))
    for k, layer in enumerate(layers):
        perm, sign = layer.tables
        if not np.array_equal(right, ident):
            v = v @ right.T
        v = _gather(v, perm, sign)
        if not np.array_equal(left, ident):
            v = v @ left.T
        if inter is not None and k < spec.m - 1:
            v = v @ inter.T
    return _check_probs(v @ readout.T)


def _draw_outcomes(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random((probs.shape[0], shots))
    out = (u[:, :, None] >= cdf[:, None, :]).sum(axis=2)
    return np.minimum(out, probs.shape[1] - 1)


def _sample_chunk(args):
    spec, size, shots, seed, tag, index, gate_set = args
    rng = substream(seed, tag, index)
    if gate_set is None:
        layers = [random_clifford_batch(spec.n, size, rng) for _ in range(spec.m)]
    else:
        table = CliffordBatch.stack(gate_set)
        layers = []
        for _ in range(spec.m):
            pick = rng.integers(0, len(gate_set), size=size)
            layers.append(CliffordBatch(spec.n, table.gen_x[pick], table.gen_z[pick], table.gen_sign[pick]))
    probs = batch_outcome_distribution(spec, layers)
    outcomes = _draw_outcomes(probs, shots, rng)
    return [(l.gen_x, l.gen_z, l.gen_sign) for l in layers], outcomes, probs


def sample_shadows(
    spec: SequenceSpec,
    S: int,
    r: int,
    seed: int,
    mode: str = EXACT,
    tag: str = "shadows",
    workers: int = 1,
    gate_set: Optional[Sequence[CliffordElement]] = None,
) -> ShadowBatch:
    """Draw S independent sequences, each measured r times.

    Randomness is keyed by (seed, tag, chunk) with fixed-size chunks, so the
    result does not depend on ``workers``.  ``gate_set`` replaces the uniform
    Clifford draw with a uniform draw from the given list.
    """
    if S < 1 or r < 1:
        raise ValueError("need S >= 1 and r >= 1")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    jobs = [(spec, stop - start, r, seed, tag, i, gate_set) for i, (start, stop) in enumerate(chunks(S))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sample_chunk, jobs))
    else:
        parts = [_sample_chunk(job) for job in jobs]
    layers = tuple(
        CliffordBatch(
            spec.n,
            np.concatenate([p[0][k][0] for p in parts]),
            np.concatenate([p[0][k][1] for p in parts]),
            np.concatenate([p[0][k][2] for p in parts]),
        )
        for k in range(spec.m)
    )
    outcomes = np.concatenate([p[1] for p in parts])
    probs = np.concatenate([p[2] for p in parts]) if mode == EXACT else None
    return ShadowBatch(spec.n, layers, outcomes, probs, {"mode": mode, "S": S, "r": r})


def _words(n: int, gx, gz, gs) -> list[str]:
    _, _, index_of = xz_tables(n)
    return [str(PauliString.from_index(int(index_of[x, z]), n, int(s))) for x, z, s in zip(gx, gz, gs)]


def write_shadows(path, batch: ShadowBatch):
    """One JSON object per line: gates (per layer, 2n signed words), outcomes, optional probs."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(len(batch)):
            row = {
                "gates": [_words(batch.n, l.gen_x[i], l.gen_z[i], l.gen_sign[i]) for l in batch.layers],
                "outcomes": [int(x) for x in batch.outcomes[i]],
            }
            if batch.probs is not None:
                row["probs"] = [float(p) for p in batch.probs[i]]
            fh.write(json.dumps(row) + "\n")


def read_shadows(path) -> ShadowBatch:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            unknown = set(row) - {"gates", "outcomes", "probs"}
            if unknown:
                raise ValueError(f"unknown record fields {sorted(unknown)}")
            gates = tuple(CliffordElement.from_images(words) for words in row["gates"])
            probs = np.array(row["probs"]) if "probs" in row else None
            records.append(ShadowRecord(gates, tuple(row["outcomes"]), probs))
    return ShadowBatch.from_records(records)


def dense_state_trajectory(spec: SequenceSpec, gates: Sequence[CliffordElement]) -> list[np.ndarray]:
    """Density matrices after every layer (before readout), for positivity checks."""
    noise = spec.noise
    state = noise.spam_prep.apply(spec.rho)
    out = [state]
    for k, g in enumerate(gates):
        state = noise.left.apply(g.unitary @ noise.right.apply(state) @ g.unitary.conj().T)
        if spec.interleave is not None and k < spec.m - 1:
            state = spec.interleave.apply(state)
        out.append(state)
    return out


def liouville_outcome_distribution(spec: SequenceSpec, gates: Sequence[CliffordElement]) -> np.ndarray:
    """Reference evaluation as an explicit product of d^2 x d^2 transfer matrices."""
    noise = spec.noise
    total = noise.spam_prep.liouville
    for k, g in enumerate(gates):
        total = noise.left.liouville @ g.liouville() @ noise.right.liouville @ total
        if spec.interleave is not None and k < spec.m - 1:
            total = spec.interleave.liouville @ total
    total = noise.spam_meas.liouville @ total
    v = total @ vectorize(spec.rho)
    return np.array([np.vdot(vectorize(e), v).real for e in spec.povm])

