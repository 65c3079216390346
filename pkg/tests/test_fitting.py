import numpy as np
import pytest

from uirs.channels import NoiseModel
from uirs.correlators import OutcomeWeights
from uirs.fitting import FitError, fit_decay, fit_offset_decay
from uirs.oracles import unitarity_correlator

M = np.arange(1, 9)


def test_decay_exact_recovery():
    fit = fit_decay([(m, 2 * 0.5 ** (m - 1), 0.01) for m in range(1, 6)])
    assert abs(fit["a"] - 2) < 1e-10 and abs(fit["p"] - 0.5) < 1e-10


def test_decay_negative_rate():
    fit = fit_decay([(m, (-1.5) ** (m - 1), 0.01) for m in range(1, 6)])
    assert np.isclose(fit["a"], 1) and np.isclose(fit["p"], -1.5)


def test_decay_noisy():
    rng = np.random.default_rng(0)
    pts = [(m, 0.8 ** (m - 1) + rng.normal(0, 1e-3), 1e-3) for m in range(1, 9)]
    assert abs(fit_decay(pts)["p"] - 0.8) <= 5e-3


def test_decay_needs_two_lengths():
    with pytest.raises(FitError):
        fit_decay([(1, 1.0, 0.1)])


def test_offset_exact_recovery():
    fit = fit_offset_decay([(m, 0.1 + 0.8 * 0.9 ** (m - 1), 0.01) for m in M])
    assert all(abs(fit[k] - v) < 1e-8 for k, v in (("a", 0.1), ("b", 0.8), ("u", 0.9)))


def test_offset_constant_series_unidentifiable():
    fit = fit_offset_decay([(m, 0.3, 0.01) for m in M])
    assert not fit.identifiable
    assert np.isclose(fit["a"] + fit["b"], 0.3) and fit.residual < 1e-15


def test_offset_unitarity_series_with_noise():
    noise = NoiseModel.depolarizing(2, left=0.1)
    exact = unitarity_correlator(noise, None, OutcomeWeights.z_on_first_qubit(2), M)
    rng = np.random.default_rng(1)
    pts = [(m, k + rng.normal(0, 2e-4), 2e-4) for m, k in zip(M, exact)]
    assert abs(fit_offset_decay(pts)["u"] - 0.81) <= 0.02


def test_offset_order_independent():
    pts = [(m, 0.2 + 0.5 * 0.7 ** (m - 1), 0.01) for m in M]
    a, b = fit_offset_decay(pts), fit_offset_decay(pts[::-1])
    assert np.isclose(a["u"], b["u"])


def test_offset_linear_series_flagged():
    fit = fit_offset_decay([(m, 0.32 - 0.065 * (m - 1), 0.02) for m in range(1, 5)])
    assert not fit.identifiable
    assert fit.residual < 1e-3
