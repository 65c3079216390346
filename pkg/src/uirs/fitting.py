"""Weighted nonlinear fits of a p^(m-1) and a + b u^(m-1) decays."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

MAX_ITER = 200
GRAD_TOL = 1e-12


class FitError(RuntimeError):
    pass


@dataclass
class FitResult:
    params: dict
    residual: float
    covariance: np.ndarray
    identifiable: bool = True
    diagnostics: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]


def _unpack(points):
    arr = np.array([(p[0], p[1], p[2] if len(p) > 2 and p[2] is not None else np.nan) for p in points], dtype=float)
    order = np.argsort(arr[:, 0])
    m, y, err = arr[order].T
    if np.all(np.isfinite(err)) and np.all(err > 0):
        w = 1.0 / err
    else:
        w = np.ones_like(y)
    return m, y, w


def _ratio_guess(m, y):
    ratios = []
    for i in range(len(m) - 1):
        if y[i] != 0 and m[i + 1] > m[i]:
            r = y[i + 1] / y[i]
            ratios.append(np.sign(r) * abs(r) ** (1.0 / (m[i + 1] - m[i])))
    return float(np.mean(ratios)) if ratios else 0.5


def _solve(residuals, x0, n_points):
    sol = least_squares(residuals, x0, method="lm", gtol=GRAD_TOL, xtol=1e-15, ftol=1e-15, max_nfev=MAX_ITER * (len(x0) + 1))
    # status 0 (evaluation budget spent) is reported through ``identifiable``
    if sol.status < 0:
        raise FitError(f"fit did not converge: {sol.message} (cost {sol.cost:.3e}, nfev {sol.nfev})")
    jac = sol.jac
    dof = max(n_points - len(x0), 1)
    scale = 2 * sol.cost / dof if n_points > len(x0) else 1.0
    try:
        cov = np.linalg.inv(jac.T @ jac) * scale
    except np.linalg.LinAlgError:
        cov = np.full((len(x0), len(x0)), np.inf)
    return sol, cov


def fit_decay(points) -> FitResult:
    """Fit value = a p^(m-1); p may be negative."""
    m, y, w = _unpack(points)
    if len(np.unique(m)) < 2:
        raise FitError("need at least two distinct m")
    p0 = _ratio_guess(m, y)
    if p0 == 0:
        p0 = 0.5
    a0 = y[0] / p0 ** (m[0] - 1)

    def res(x):
        return w * (x[0] * x[1] ** (m - 1) - y)

    sol, cov = _solve(res, np.array([a0, p0]), len(m))
    a, p = sol.x
    rms = float(np.sqrt(np.mean((a * p ** (m - 1) - y) ** 2)))
    return FitResult({"a": float(a), "p": float(p)}, rms, cov, sol.status > 0, {"nfev": sol.nfev, "status": sol.status})


def fit_offset_decay(points) -> FitResult:
    """Fit value = a + b u^(m-1) with u kept in [-1, 1] through u = cos(theta)."""
    m, y, w = _unpack(points)
    if len(np.unique(m)) < 3:
        raise FitError("need at least three distinct m")
    scale = max(np.max(np.abs(y)), 1e-300)
    if np.max(np.abs(y - y.mean())) <= 1e-13 * scale:
        return FitResult(
            {"a": float(y.mean()), "b": 0.0, "u": float("nan")},
            float(np.sqrt(np.mean((y - y.mean()) ** 2))),
            np.full((3, 3), np.nan),
            identifiable=False,
        )
    diffs = np.diff(y)
    ratios = [diffs[i + 1] / diffs[i] for i in range(len(diffs) - 1) if diffs[i] != 0]
    u0 = float(np.clip(np.mean(ratios) if ratios else 0.5, -0.99, 0.999))
    a0 = y[-1]
    basis = u0 ** (m - 1)
    b0 = float(np.sum((y - a0) * basis) / np.sum(basis**2))

    def res(x):
        return w * (x[0] + x[1] * np.cos(x[2]) ** (m - 1) - y)

    sol, cov_t = _solve(res, np.array([a0, b0, np.arccos(u0)]), len(m))
    a, b, theta = sol.x
    u = float(np.cos(theta))
    # covariance in (a, b, u) by the chain rule du = -sin(theta) dtheta
    jac = np.diag([1.0, 1.0, -np.sin(theta)])
    cov = jac @ cov_t @ jac.T
    rms = float(np.sqrt(np.mean((a + b * u ** (m - 1) - y) ** 2)))
    # a nearly linear series drives the optimum to u -> 1 with diverging a and b
    identifiable = sol.status > 0 and abs(u) < 1 - 1e-6
    return FitResult({"a": float(a), "b": float(b), "u": u}, rms, cov, identifiable, {"nfev": sol.nfev, "status": sol.status, "message": sol.message})
