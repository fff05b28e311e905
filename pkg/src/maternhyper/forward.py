"""Linear forward operators, test phantoms and synthetic data.

Measurement meshes are sub-lattices of the unknown mesh: the selection
operators pick every ``stride``-th node per axis, so the observation
matrix is a 0/1 restriction and the measurement locations are exact
grid nodes by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import Field, Grid

__all__ = [
    "ForwardProblem",
    "interp_operator",
    "selection_operator",
    "heaviside_operator",
    "phantom_interp_1d",
    "phantom_diff_1d",
    "phantom_diff_integral",
    "phantom_2d",
    "synth_data",
]

DIFF_NOISE_CEILING = 0.1  # differentiation is ill-posed; reject noisier configs


@dataclass
class ForwardProblem:
    """A linear observation model ``y = A v + e`` with e ~ N(0, noise_std^2 I)."""

    A: sp.spmatrix
    noise_std: float
    y: np.ndarray
    unknown_grid: Grid
    measurement_x: np.ndarray  # (M, dim) locations

    def __post_init__(self):
        if self.noise_std <= 0:
            raise ValueError("noise_std must be > 0")
        m, n = self.A.shape
        if n != self.unknown_grid.n_nodes:
            raise ValueError("operator width does not match unknown grid")
        if self.y is not None and len(self.y) != m:
            raise ValueError("data length does not match operator height")


def _axis_stride(n_unknown: int, n_measure: int) -> int:
    if n_measure == n_unknown:
        return 1
    if n_measure > 1 and (n_unknown - 1) % (n_measure - 1) == 0:
        return (n_unknown - 1) // (n_measure - 1)
    if n_unknown % n_measure == 0:
        return n_unknown // n_measure
    raise ValueError(
        f"measurement mesh ({n_measure}) is not a sub-lattice of the "
        f"unknown mesh ({n_unknown})"
    )


def selection_indices(unknown_grid: Grid, n_measure: tuple[int, ...]) -> np.ndarray:
    """Node indices of the measurement sub-lattice (row-major order)."""
    if len(n_measure) != unknown_grid.dim:
        raise ValueError("measurement shape does not match grid dimension")
    strides = [
        _axis_stride(unknown_grid.n_axis[ax], n_measure[ax])
        for ax in range(unknown_grid.dim)
    ]
    if unknown_grid.dim == 1:
        return np.arange(n_measure[0]) * strides[0]
    ix = np.arange(n_measure[0]) * strides[0]
    iy = np.arange(n_measure[1]) * strides[1]
    gx, gy = np.meshgrid(ix, iy)
    return (gy * unknown_grid.nx + gx).ravel()


def selection_operator(unknown_grid: Grid, indices: np.ndarray) -> sp.csr_matrix:
    """0/1 matrix picking the given unknown-grid nodes."""
    indices = np.asarray(indices, dtype=int)
    if np.any(indices < 0) or np.any(indices >= unknown_grid.n_nodes):
        raise ValueError("selection index out of range")
    m = len(indices)
    return sp.csr_matrix(
        (np.ones(m), indices, np.arange(m + 1)), shape=(m, unknown_grid.n_nodes)
    )


def interp_operator(unknown_grid: Grid, measurement_grid: Grid) -> sp.csr_matrix:
    """Restriction operator from the unknown mesh to a coarser measurement mesh.

    The measurement mesh must be an exact sub-lattice (same extent, node
    counts related by an integer stride per axis); off-grid measurement
    points are rejected.
    """
    if unknown_grid.dim != measurement_grid.dim:
        raise ValueError("grid dimension mismatch")
    if not np.allclose(unknown_grid.extent, measurement_grid.extent, rtol=1e-12):
        raise ValueError("unknown and measurement extents differ")
    idx = selection_indices(unknown_grid, measurement_grid.n_axis)
    return selection_operator(unknown_grid, idx)


def heaviside_operator(unknown_grid: Grid, measurement_points: np.ndarray) -> sp.csr_matrix:
    """Cumulative-integral operator: row j approximates ``int_0^{t_j} v``.

    Quadrature is a left Riemann sum with weight h' per interior node and
    h'/2 at a node coinciding with the upper limit, giving a
    lower-triangular matrix in sorted-coordinate order.
    """
    if unknown_grid.dim != 1:
        raise ValueError("Heaviside operator is 1-D only")
    t = np.asarray(measurement_points, dtype=float)
    h = unknown_grid.h
    x = unknown_grid.axis_coords(0)
    tol = 1e-9 * h
    A = np.zeros((len(t), unknown_grid.n_nodes))
    for j, tj in enumerate(t):
        on_edge = np.abs(x - tj) < tol
        A[j] = np.where(x < tj - tol, h, 0.0) + np.where(on_edge, h / 2.0, 0.0)
    return sp.csr_matrix(A)


def _mollifier(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    inside = (x > 0.0) & (x < 5.0)
    xi = x[inside]
    out[inside] = np.exp(4.0 - 25.0 / (xi * (5.0 - xi)))
    return out


def phantom_interp_1d(x) -> np.ndarray:
    """Smooth mollifier on (0,5) plus two unit boxcars on [7,8] and (8,9]."""
    x = np.asarray(x, dtype=float)
    out = _mollifier(x)
    out = np.where((x >= 7.0) & (x <= 8.0), 1.0, out)
    out = np.where((x > 8.0) & (x <= 9.0), -1.0, out)
    return out


def phantom_diff_1d(x) -> np.ndarray:
    """Derivative-side truth: differentiated mollifier plus the two boxcars."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > 0.0) & (x < 5.0)
    xi = x[inside]
    out[inside] = (
        25.0 / (xi**2 * (5.0 - xi)) - 25.0 / (xi * (5.0 - xi) ** 2)
    ) * np.exp(4.0 - 25.0 / (xi * (5.0 - xi)))
    out = np.where((x >= 7.0) & (x <= 8.0), 1.0, out)
    out = np.where((x > 8.0) & (x <= 9.0), -1.0, out)
    return out


def phantom_diff_integral(x) -> np.ndarray:
    """Data-side curve for the differentiation problem: mollifier + triangle."""
    x = np.asarray(x, dtype=float)
    out = _mollifier(x)
    out = np.where((x >= 7.0) & (x <= 8.0), x - 7.0, out)
    out = np.where((x > 8.0) & (x <= 9.0), -x + 9.0, out)
    return out


def phantom_2d(x, y, box=(0.15, 0.4, 0.15, 0.4), bump_center=(0.65, 0.65),
               bump_std=0.12) -> np.ndarray:
    """Axis-aligned box of height 0.75 plus a Gaussian bump of height 1."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x0, x1, y0, y1 = box
    in_box = (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)
    cx, cy = bump_center
    bump = np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * bump_std**2))
    return 0.75 * in_box + bump


def synth_data(A: sp.spmatrix, truth_field: Field, noise_std: float,
               seed: int | np.random.Generator) -> np.ndarray:
    """y = A truth + noise_std * xi with xi ~ N(0, I); deterministic per seed."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    clean = A @ truth_field.values
    if noise_std == 0.0:
        return clean
    return clean + noise_std * rng.standard_normal(A.shape[0])


def check_diff_noise(noise_std: float) -> None:
    """Differentiation cannot tolerate interpolation-level noise."""
    if noise_std > DIFF_NOISE_CEILING:
        raise ValueError(
            f"noise_std={noise_std} too large for the differentiation problem "
            f"(ceiling {DIFF_NOISE_CEILING})"
        )
    if noise_std > DIFF_NOISE_CEILING / 2:
        warnings.warn(
            "high noise level for an ill-posed differentiation problem",
            stacklevel=2,
        )
