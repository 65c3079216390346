"""Configured experiments: JSON config in, CSV out.

Protocols
---------
otoc-converge   S sweep of the OTOC ratio estimate        -> S,xbar,stderr,exact
otoc-vs-time    t sweep at fixed S and N                  -> t,xbar,stderr,exact
spam-compare    SPAM depolarizing sweep vs the baseline   -> p,uirs,baseline,exact
unitarity       identical-sequence decay and offset fit   -> m,khat,stderr (+ fit.json)
oracle-check    theory invariant suite                    -> name,passed,deviation

For the OTOC protocols each of the N ratio estimates x_i(S) uses its own S
fresh sequences per length, and xbar(S) is their mean.
"""
from __future__ import annotations

import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .channels import IsingParams, NoiseModel, build_ising, evolve, otoc_exact, unitary_channel
from .correlators import (
    DegenerateDenominatorError,
    OtocCorrelation,
    OtocObservables,
    OutcomeWeights,
    baseline_statistical_otoc,
    khat_identical_unitarity,
    khat_independent,
)
from .fitting import fit_offset_decay
from .oracles import invariant_suite
from .pauli import PauliString
from .rng import substream
from .simulate import EXACT, MODES, SequenceSpec, sample_shadows

PROTOCOLS = ("otoc-converge", "otoc-vs-time", "spam-compare", "unitarity", "oracle-check")
HEADERS = {
    "otoc-converge": ["S", "xbar", "stderr", "exact"],
    "otoc-vs-time": ["t", "xbar", "stderr", "exact"],
    "spam-compare": ["p", "uirs", "baseline", "exact"],
    "unitarity": ["m", "khat", "stderr"],
    "oracle-check": ["name", "passed", "deviation"],
}
NOISE_KEYS = ("gate_left", "gate_right", "spam_prep", "spam_meas")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    protocol: str
    n: int = 3
    m_list: list = field(default_factory=lambda: [1, 2])
    S: object = 20000
    N: int = 50
    r: int = 1
    mode: str = EXACT
    ising: dict = field(default_factory=dict)
    t: float = 1.0
    t_list: Optional[list] = None
    V: object = None
    W: object = None
    noise: dict = field(default_factory=dict)
    p_list: Optional[list] = None
    baseline_S: Optional[int] = None
    master_seed: int = 0
    output_path: str = "out.csv"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        if "protocol" not in data:
            raise ConfigError("missing required key: protocol")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data)

    def validate(self):
        def bad(path, msg):
            raise ConfigError(f"{path}: {msg}")

        if self.protocol not in PROTOCOLS:
            bad("protocol", f"must be one of {', '.join(PROTOCOLS)}")
        if not isinstance(self.n, int) or not 1 <= self.n <= 5:
            bad("n", "must be an integer in [1, 5]")
        if not self.m_list or any(not isinstance(m, int) or m < 1 for m in self.m_list):
            bad("m_list", "must be a nonempty list of positive integers")
        if sorted(set(self.m_list)) != list(self.m_list):
            bad("m_list", "must be strictly increasing")
        for S in self.S_values():
            if not isinstance(S, int) or S < 2:
                bad("S", "sequence counts must be integers >= 2")
        if not isinstance(self.N, int) or self.N < 1:
            bad("N", "must be a positive integer")
        if not isinstance(self.r, int) or self.r < 1:
            bad("r", "must be a positive integer")
        if self.mode not in MODES:
            bad("mode", f"must be one of {', '.join(MODES)}")
        unknown = sorted(set(self.ising) - {"J0", "alpha", "B", "Dmax", "disorder_seed"})
        if unknown:
            bad("ising", f"unknown key(s) {', '.join(unknown)}")
        if self.ising.get("Dmax", 0) < 0:
            bad("ising.Dmax", "must be nonnegative")
        unknown = sorted(set(self.noise) - set(NOISE_KEYS))
        if unknown:
            bad("noise", f"unknown key(s) {', '.join(unknown)}")
        for key, p in self.noise.items():
            if not 0 <= p <= 1:
                bad(f"noise.{key}", "probability must lie in [0, 1]")
        for i, p in enumerate(self.p_list or []):
            if not 0 <= p <= 1:
                bad(f"p_list[{i}]", "probability must lie in [0, 1]")
        if self.protocol == "otoc-vs-time" and not self.t_list:
            bad("t_list", "required for otoc-vs-time")
        if self.protocol == "spam-compare" and not self.p_list:
            bad("p_list", "required for spam-compare")
        if self.protocol in ("otoc-converge", "otoc-vs-time", "spam-compare") and list(self.m_list) != [1, 2]:
            bad("m_list", "OTOC protocols use the ratio of m = 1 and m = 2")
        if self.protocol == "unitarity" and len(self.m_list) < 3:
            bad("m_list", "the offset fit needs at least three lengths")
        if self.protocol == "unitarity" and self.mode != EXACT and self.r < 2:
            bad("r", "SHOTS unitarity needs at least two shots per sequence")
        try:
            self.observables()
        except ValueError as exc:
            bad("V/W", str(exc))

    def S_values(self) -> list:
        return list(self.S) if isinstance(self.S, (list, tuple)) else [self.S]

    def ising_params(self) -> IsingParams:
        return IsingParams(self.n, **self.ising)

    def observables(self) -> OtocObservables:
        return OtocObservables(_parse_pauli(self.V, self.n, "Y", self.n - 1), _parse_pauli(self.W, self.n, "X", max(self.n - 2, 0)))

    def noise_model(self, **override) -> NoiseModel:
        vals = {k: self.noise.get(k, 0.0) for k in NOISE_KEYS}
        vals.update(override)
        return NoiseModel.depolarizing(
            self.n, left=vals["gate_left"], right=vals["gate_right"], spam_prep=vals["spam_prep"], spam_meas=vals["spam_meas"]
        )


def _parse_pauli(spec, n: int, default_symbol: str, default_site: int) -> PauliString:
    """A Pauli given as a word ("IXY", optional sign) or as {"pauli": "Y", "site": k} (0-based)."""
    if spec is None:
        return PauliString.single(n, default_site, default_symbol)
    if isinstance(spec, str):
        p = PauliString.parse(spec)
        if p.n != n:
            raise ValueError(f"Pauli word {spec!r} does not have {n} qubits")
        return p
    if isinstance(spec, dict) and set(spec) == {"pauli", "site"}:
        if not 0 <= spec["site"] < n:
            raise ValueError(f"site {spec['site']} out of range for {n} qubits")
        return PauliString.single(n, spec["site"], spec["pauli"])
    raise ValueError(f"cannot read Pauli operator {spec!r}")


# ---------------------------------------------------------------- workers


def _otoc_replicate(args):
    """khat(1) and khat(2) from S fresh sequences each; one ratio estimate x_i(S)."""
    spec, obs, S, r, mode, seed, tag = args
    f = OtocCorrelation(obs)
    ks = []
    for m in (1, 2):
        batch = sample_shadows(spec.with_length(m), S, r, seed, mode, tag=f"{tag}/m{m}")
        ks.append(khat_independent(batch, m, f, mode)[0])
    return ks


def _map(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


def otoc_estimate(spec: SequenceSpec, obs: OtocObservables, S: int, N: int, r: int, mode: str, seed: int, tag: str, workers: int = 1):
    """(xbar, stderr, values) from N independent ratio estimates with S sequences each."""
    jobs = [(spec, obs, S, r, mode, seed, f"{tag}/rep{i}") for i in range(N)]
    ks = np.array(_map(_otoc_replicate, jobs, workers))
    for i, k1 in enumerate(ks[:, 0]):
        if abs(k1) < 1e-14:
            raise DegenerateDenominatorError(f"replicate {i}: khat(1) = {k1:.3e} is too small")
    values = ks[:, 1] / (spec.d * ks[:, 0])
    err = float(values.std(ddof=1) / np.sqrt(N)) if N > 1 else float("nan")
    return float(values.mean()), err, values


def _otoc_spec(cfg: ExperimentConfig, t: float, noise: NoiseModel) -> tuple[SequenceSpec, np.ndarray]:
    u_t = evolve(build_ising(cfg.ising_params()), t)
    return SequenceSpec(cfg.n, 1, noise, interleave=unitary_channel(u_t)), u_t


# ---------------------------------------------------------------- protocols


def run_otoc_converge(cfg: ExperimentConfig, workers: int):
    obs = cfg.observables()
    spec, u_t = _otoc_spec(cfg, cfg.t, cfg.noise_model())
    exact = otoc_exact(u_t, obs.V, obs.W)
    rows = []
    for S in cfg.S_values():
        xbar, err, _ = otoc_estimate(spec, obs, S, cfg.N, cfg.r, cfg.mode, cfg.master_seed, f"converge/S{S}", workers)
        rows.append([S, xbar, err, exact])
    return rows


def run_otoc_vs_time(cfg: ExperimentConfig, workers: int):
    obs = cfg.observables()
    S = cfg.S_values()[0]
    rows = []
    for i, t in enumerate(cfg.t_list):
        spec, u_t = _otoc_spec(cfg, t, cfg.noise_model())
        xbar, err, _ = otoc_estimate(spec, obs, S, cfg.N, cfg.r, cfg.mode, cfg.master_seed, f"time/{i}", workers)
        rows.append([t, xbar, err, otoc_exact(u_t, obs.V, obs.W)])
    return rows


def run_spam_compare(cfg: ExperimentConfig, workers: int):
    """Both estimators reuse the same random draws at every p, so only the noise changes along the sweep."""
    obs = cfg.observables()
    S = cfg.S_values()[0]
    baseline_S = cfg.baseline_S or S * cfg.N
    rows = []
    for p in cfg.p_list:
        noise = cfg.noise_model(spam_prep=p, spam_meas=p)
        spec, u_t = _otoc_spec(cfg, cfg.t, noise)
        xbar, _, _ = otoc_estimate(spec, obs, S, cfg.N, cfg.r, cfg.mode, cfg.master_seed, "spam", workers)
        base = baseline_statistical_otoc(u_t, obs, noise, baseline_S, substream(cfg.master_seed, "spam/baseline"))
        rows.append([p, xbar, base, otoc_exact(u_t, obs.V, obs.W)])
    return rows


def _unitarity_point(args):
    spec, S, r, mode, seed, m, weights = args
    batch = sample_shadows(spec.with_length(m), S, r, seed, mode, tag=f"unitarity/m{m}")
    return khat_identical_unitarity(batch, m, weights, mode)


def run_unitarity(cfg: ExperimentConfig, workers: int):
    S = cfg.S_values()[0]
    spec = SequenceSpec(cfg.n, 1, cfg.noise_model())
    weights = OutcomeWeights.z_on_first_qubit(cfg.n)
    jobs = [(spec, S, cfg.r, cfg.mode, cfg.master_seed, m, weights) for m in cfg.m_list]
    points = _map(_unitarity_point, jobs, workers)
    rows = [[m, k, e] for m, (k, e) in zip(cfg.m_list, points)]
    fit = fit_offset_decay([(m, k, e) for m, k, e in rows])
    return rows, fit


def run_oracle_check(cfg: Optional[ExperimentConfig] = None, workers: int = 1):
    seed = cfg.master_seed if cfg is not None else 0
    return [[name, "pass" if ok else "FAIL", dev] for name, ok, dev in invariant_suite(seed)]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    if path.parent and not path.parent.exists():
        raise OSError(f"output directory {path.parent} does not exist")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def default_workers() -> int:
    return int(os.environ.get("UIRS_WORKERS", "1"))


def run(cfg: ExperimentConfig, workers: Optional[int] = None) -> dict:
    """Run a configured protocol and write its CSV; returns rows and any fit."""
    workers = default_workers() if workers is None else workers
    fit = None
    if cfg.protocol == "otoc-converge":
        rows = run_otoc_converge(cfg, workers)
    elif cfg.protocol == "otoc-vs-time":
        rows = run_otoc_vs_time(cfg, workers)
    elif cfg.protocol == "spam-compare":
        rows = run_spam_compare(cfg, workers)
    elif cfg.protocol == "unitarity":
        rows, fit = run_unitarity(cfg, workers)
    else:
        rows = run_oracle_check(cfg, workers)
    write_csv(cfg.output_path, HEADERS[cfg.protocol], rows)
    if fit is not None:
        sidecar = Path(cfg.output_path).with_name("fit.json")
        payload = {"a": fit["a"], "b": fit["b"], "u": fit["u"], "residual": fit.residual}
        if not fit.identifiable:
            print(f"warning: offset fit is not identifiable ({fit.diagnostics.get('message', 'constant series')})", file=sys.stderr)
        with open(sidecar, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return {"rows": rows, "fit": fit}
