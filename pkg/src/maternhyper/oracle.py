"""Dense, slow reference implementations used for validation and baselines.

Everything here trades speed for transparency: dense factorisations,
closed-form Gaussian conditionals and the analytic Matern covariance.
Size guards keep accidental large allocations out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.special import gamma as gamma_fn
from scipy.special import kv

from .grid import Field
from .spde import PrecisionFactor, assemble_precision_factor

__all__ = [
    "DenseGaussian",
    "matern_cov",
    "stationary_amplitude",
    "power_spectrum",
    "dense_covariance",
    "dense_logdet",
    "conditional_gaussian",
    "constant_ell_baseline",
    "BaselineResult",
    "metrics",
]

DENSE_GUARD = 4096


@dataclass
class DenseGaussian:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        c = self.covariance
        if not np.allclose(c, c.T, atol=1e-12 * max(1.0, np.abs(c).max())):
            raise ValueError("covariance is not symmetric")
        sla.cholesky(c)  # raises if not positive definite


def matern_cov(r, nu: float, ell: float):
    """Matern correlation: (2^{1-nu}/Gamma(nu)) (r/ell)^nu K_nu(r/ell).

    Normalised to 1 at zero lag.
    """
    if nu <= 0 or ell <= 0:
        raise ValueError("nu and ell must be > 0")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("distance must be >= 0")
    s = r / ell
    with np.errstate(invalid="ignore"):
        out = (2.0 ** (1.0 - nu) / gamma_fn(nu)) * s**nu * kv(nu, s)
    return np.where(s == 0.0, 1.0, out)


def stationary_amplitude(sigma: float, d: int) -> float:
    """Variance of the stationary field generated by
    ``(1 - ell^2 Lap) v = sigma ell^{d/2} w`` at ``nu = 2 - d/2``.

    The elliptic-equation normalisation differs from the unit-variance
    Matern formula by this factor: sigma^2 Gamma(nu) / (2^d pi^{d/2}).
    """
    nu = 2.0 - d / 2.0
    return sigma**2 * gamma_fn(nu) / (2.0**d * np.pi ** (d / 2.0))


def power_spectrum(xi, nu: float, ell: float, d: int):
    """Matern power spectrum S(xi) for the unit-variance covariance."""
    if ell <= 0:
        raise ValueError("ell must be > 0")
    xi = np.asarray(xi, dtype=float)
    pref = 2.0**d * np.pi ** (d / 2.0) * gamma_fn(nu + d / 2.0) / (
        gamma_fn(nu) * ell ** (2.0 * nu)
    )
    return pref * (ell**-2.0 + np.abs(xi) ** 2) ** (-(nu + d / 2.0))


def _dense(L: PrecisionFactor) -> np.ndarray:
    n = L.grid.n_nodes
    if n > DENSE_GUARD:
        raise ValueError(f"dense guard exceeded: N={n} > {DENSE_GUARD}")
    return L.matrix().toarray()


def dense_covariance(L: PrecisionFactor) -> np.ndarray:
    """(L^T L)^{-1} via dense factorisation (test-scale only)."""
    Ld = _dense(L)
    prec = Ld.T @ Ld
    cho = sla.cho_factor(prec)
    return sla.cho_solve(cho, np.eye(len(prec)))


def dense_logdet(L: PrecisionFactor) -> float:
    """log |det L| via dense factorisation."""
    sign, logdet = np.linalg.slogdet(_dense(L))
    if sign == 0:
        raise ValueError("singular factor")
    return float(logdet)


def conditional_gaussian(A, noise_std: float, y: np.ndarray,
                         L: PrecisionFactor) -> DenseGaussian:
    """Closed-form Gaussian conditional of v given the length-scales and data.

    Q = A^T A / noise_std^2 + L^T L; mean = Q^{-1} A^T y / noise_std^2.
    """
    n = L.grid.n_nodes
    if n > DENSE_GUARD:
        raise ValueError(f"dense guard exceeded: N={n} > {DENSE_GUARD}")
    Ad = np.asarray(A.todense()) if hasattr(A, "todense") else np.asarray(A)
    Ld = _dense(L)
    Q = Ad.T @ Ad / noise_std**2 + Ld.T @ Ld
    cho = sla.cho_factor(Q)
    mean = sla.cho_solve(cho, Ad.T @ np.asarray(y) / noise_std**2)
    cov = sla.cho_solve(cho, np.eye(n))
    cov = 0.5 * (cov + cov.T)
    return DenseGaussian(mean=mean, covariance=cov)


def metrics(estimate, truth) -> tuple[float, float]:
    """(max absolute error, root mean square error)."""
    if isinstance(estimate, Field) and isinstance(truth, Field):
        if estimate.grid != truth.grid:
            raise ValueError("estimate and truth live on different grids")
        a, b = estimate.values, truth.values
    else:
        a = np.asarray(getattr(estimate, "values", estimate), dtype=float)
        b = np.asarray(getattr(truth, "values", truth), dtype=float)
        if a.shape != b.shape:
            raise ValueError("shape mismatch")
    diff = a - b
    return float(np.max(np.abs(diff))), float(np.sqrt(np.mean(diff**2)))


@dataclass
class BaselineResult:
    """Constant length-scale sweep: error table plus the two minimisers."""

    ells: np.ndarray
    max_abs_error: np.ndarray
    rmse: np.ndarray
    estimates: np.ndarray  # (n_ell, N) closed-form conditional means
    idx_min_mae: int
    idx_min_rmse: int

    def to_csv(self) -> str:
        lines = ["ell,max_abs_error,rmse,is_min_mae,is_min_rmse"]
        for i, (l, m, r) in enumerate(zip(self.ells, self.max_abs_error, self.rmse)):
            lines.append(
                f"{l:.17g},{m:.17g},{r:.17g},"
                f"{int(i == self.idx_min_mae)},{int(i == self.idx_min_rmse)}"
            )
        return "\n".join(lines) + "\n"


def constant_ell_baseline(problem, ell_grid, truth: Field,
                          sigma: float = 1.0) -> BaselineResult:
    """Closed-form conditional means for each constant length-scale.

    For each ell the prior factor is assembled on the problem's unknown
    grid and the exact posterior mean is computed; errors are reported
    against the supplied truth.
    """
    ells = np.asarray(ell_grid, dtype=float)
    if np.any(ells <= 0):
        raise ValueError("length-scale grid must be positive")
    grid = problem.unknown_grid
    ests = np.empty((len(ells), grid.n_nodes))
    maes = np.empty(len(ells))
    rmses = np.empty(len(ells))
    for i, ell in enumerate(ells):
        L = assemble_precision_factor(grid, ell, sigma)
        cond = conditional_gaussian(problem.A, problem.noise_std, problem.y, L)
        ests[i] = cond.mean
        maes[i], rmses[i] = metrics(cond.mean, truth.values)
    return BaselineResult(
        ells=ells,
        max_abs_error=maes,
        rmse=rmses,
        estimates=ests,
        idx_min_mae=int(np.argmin(maes)),
        idx_min_rmse=int(np.argmin(rmses)),
    )
