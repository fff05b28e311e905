"""Sparse precision factors for the Matern-type elliptic prior.

The prior on a field ``v`` is encoded by a sparse matrix ``L`` such that
``L v = w`` with ``w ~ N(0, I)``, i.e. the prior precision is ``L^T L``.
Row ``n`` discretises ``(1 - ell_n^2 Laplacian)`` at node ``n`` and is
divided by the per-node noise standard deviation
``s_n = sigma * ell_n^{d/2} * h^{-d/2}``.

``L`` depends on the length-scale field row-locally: changing ``ell`` at
one node changes exactly one row, which is what makes cheap determinant
ratios possible during sampling.  Note that the row-scaled ``L`` is
symmetric only for constant ``ell``; only ``L^T L`` is symmetric in
general.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .grid import Boundary, Field, Grid, neighbor_table

__all__ = [
    "Row",
    "PrecisionFactor",
    "AnisoSpec",
    "sample_white_noise",
    "assemble_precision_factor",
    "assemble_anisotropic_factor",
    "sample_realization",
    "replace_row",
]


@dataclass(frozen=True)
class Row:
    """One sparse row: column indices and matching coefficients."""

    indices: np.ndarray
    values: np.ndarray

    def dot(self, vec: np.ndarray) -> float:
        return float(self.values @ vec[self.indices])


def _as_ell_array(grid: Grid, ell) -> np.ndarray:
    if isinstance(ell, Field):
        arr = ell.values
    else:
        arr = np.broadcast_to(np.asarray(ell, dtype=float), (grid.n_nodes,))
    arr = np.asarray(arr, dtype=float)
    if arr.shape != (grid.n_nodes,):
        raise ValueError("length-scale field does not match grid")
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError("length-scale values must be finite and > 0")
    return arr.copy()


class PrecisionFactor:
    """Sparse factor ``L(ell)`` with row-local dependence on ``ell``.

    The sparsity pattern is fixed at assembly; committed row updates
    modify coefficient data in place and invalidate the cached LU
    factorisation.
    """

    def __init__(self, grid: Grid, sigma: float, ell: np.ndarray, csr: sp.csr_matrix,
                 row_builder, supports_row_update: bool = True):
        self.grid = grid
        self.sigma = float(sigma)
        self.ell = ell
        self._csr = csr
        self._row_builder = row_builder
        self.supports_row_update = supports_row_update
        self._lu = None

    # -- row access ----------------------------------------------------

    def row(self, n: int) -> Row:
        lo, hi = self._csr.indptr[n], self._csr.indptr[n + 1]
        return Row(self._csr.indices[lo:hi].copy(), self._csr.data[lo:hi].copy())

    def compute_row(self, n: int, ell_value: float) -> Row:
        """Coefficients row ``n`` would have for the given length-scale."""
        if not self.supports_row_update:
            raise ValueError("this factor does not support single-row updates")
        if not (ell_value > 0.0 and np.isfinite(ell_value)):
            raise ValueError(f"length-scale must be finite and > 0, got {ell_value}")
        return self._row_builder(n, ell_value)

    def commit_row(self, n: int, ell_value: float, new_row: Row) -> None:
        """Write a previously computed row into the matrix."""
        lo, hi = self._csr.indptr[n], self._csr.indptr[n + 1]
        if not np.array_equal(self._csr.indices[lo:hi], new_row.indices):
            raise ValueError("row support does not match factor sparsity pattern")
        self._csr.data[lo:hi] = new_row.values
        self.ell[n] = ell_value
        self._lu = None

    # -- matrix views --------------------------------------------------

    def matrix(self) -> sp.csr_matrix:
        return self._csr

    def factor(self):
        """Cached sparse LU of the current ``L`` (refreshed after commits)."""
        if self._lu is None:
            self._lu = splu(self._csr.tocsc())
        return self._lu

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self.factor().solve(rhs)

    def to_coo_csv(self) -> str:
        """Coordinate-list text dump (``row,col,value``) for debugging."""
        coo = self._csr.tocoo()
        buf = io.StringIO()
        buf.write("row,col,value\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            buf.write(f"{r},{c},{v:.17g}\n")
        return buf.getvalue()


@dataclass
class AnisoSpec:
    """Anisotropic length-scaling: principal scales and a tilt angle.

    ``ell1``/``ell2`` may be fields, arrays or scalars; ``theta`` is in
    radians and may vary per node.
    """

    ell1: object
    ell2: object
    theta: object = 0.0


def sample_white_noise(grid: Grid, rng: np.random.Generator) -> Field:
    """Discrete white noise: i.i.d. N(0, h^{-d}) per node (cell averages)."""
    std = grid.h ** (-grid.dim / 2.0)
    return Field(grid, rng.normal(0.0, std, size=grid.n_nodes))


def assemble_precision_factor(grid: Grid, ell, sigma: float) -> PrecisionFactor:
    """Assemble the isotropic factor ``L(ell)``.

    Row ``n``: centre ``1 + 2d ell_n^2/h^2``, each of the ``2d``
    neighbours ``-ell_n^2/h^2``, all divided by
    ``s_n = sigma * ell_n^{d/2} * h^{-d/2}``.  Dirichlet ghosts are
    dropped (homogeneous zero boundary).
    """
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    ell_arr = _as_ell_array(grid, ell)
    d, h = grid.dim, grid.h
    nbrs = neighbor_table(grid)

    def row_builder(n: int, ell_value: float) -> Row:
        s = sigma * ell_value ** (d / 2.0) * h ** (-d / 2.0)
        lam = ell_value**2 / h**2
        here = nbrs[n]
        cols = [n]
        vals = [(1.0 + 2 * d * lam) / s]
        for j in here:
            if j >= 0:
                cols.append(int(j))
                vals.append(-lam / s)
        order = np.argsort(cols, kind="stable")
        return Row(np.asarray(cols)[order], np.asarray(vals)[order])

    return _assemble(grid, sigma, ell_arr, row_builder)


def assemble_anisotropic_factor(grid: Grid, aniso: AnisoSpec, sigma: float) -> PrecisionFactor:
    """Assemble the 2-D factor for ``(1 - div(H grad))`` with
    ``H = R(theta) diag(ell1^2, ell2^2) R(theta)^T``.

    Uses a 9-point stencil with the 4-corner cross-difference for the
    mixed derivative.  Noise scaling generalises the isotropic rule with
    the geometric mean: ``s_n = sigma * sqrt(ell1 ell2) / h``.
    """
    if grid.dim != 2:
        raise ValueError("anisotropic factor requires a 2-D grid")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    ell1 = _as_ell_array(grid, aniso.ell1)
    ell2 = _as_ell_array(grid, aniso.ell2)
    theta = np.broadcast_to(
        np.asarray(getattr(aniso.theta, "values", aniso.theta), dtype=float),
        (grid.n_nodes,),
    )
    h, nx, ny = grid.h, grid.nx, grid.ny
    periodic = grid.boundary is Boundary.PERIODIC
    # ell stored on the factor is the geometric mean (drives the noise scale)
    ell_geo = np.sqrt(ell1 * ell2)

    def row_builder(n: int, _ell_unused: float) -> Row:
        l1s, l2s = ell1[n] ** 2, ell2[n] ** 2
        ct, st = np.cos(theta[n]), np.sin(theta[n])
        a = l1s * ct * ct + l2s * st * st
        c = l1s * st * st + l2s * ct * ct
        b = (l1s - l2s) * st * ct
        s = sigma * np.sqrt(ell1[n] * ell2[n]) / h
        ix, iy = n % nx, n // nx

        def at(jx: int, jy: int) -> int:
            if periodic:
                return (jy % ny) * nx + (jx % nx)
            if 0 <= jx < nx and 0 <= jy < ny:
                return jy * nx + jx
            return -1

        entries = {
            at(ix, iy): 1.0 + 2 * (a + c) / h**2,
            at(ix + 1, iy): -a / h**2,
            at(ix - 1, iy): -a / h**2,
        }
        for jx, jy, v in [
            (ix, iy + 1, -c / h**2),
            (ix, iy - 1, -c / h**2),
            (ix + 1, iy + 1, -b / (2 * h**2)),
            (ix - 1, iy - 1, -b / (2 * h**2)),
            (ix + 1, iy - 1, b / (2 * h**2)),
            (ix - 1, iy + 1, b / (2 * h**2)),
        ]:
            j = at(jx, jy)
            if j in entries:
                entries[j] += v
            else:
                entries[j] = v
        entries.pop(-1, None)
        cols = np.array(sorted(entries), dtype=int)
        vals = np.array([entries[j] for j in cols]) / s
        return Row(cols, vals)

    return _assemble(grid, sigma, ell_geo, row_builder, supports_row_update=False)


def _assemble(grid: Grid, sigma: float, ell_arr: np.ndarray, row_builder,
              supports_row_update: bool = True) -> PrecisionFactor:
    indptr = [0]
    indices: list[np.ndarray] = []
    data: list[np.ndarray] = []
    for n in range(grid.n_nodes):
        row = row_builder(n, ell_arr[n])
        indices.append(row.indices)
        data.append(row.values)
        indptr.append(indptr[-1] + len(row.indices))
    csr = sp.csr_matrix(
        (np.concatenate(data), np.concatenate(indices), np.asarray(indptr)),
        shape=(grid.n_nodes, grid.n_nodes),
    )
    return PrecisionFactor(grid, sigma, ell_arr, csr, row_builder,
                           supports_row_update=supports_row_update)


def sample_realization(L: PrecisionFactor, rng: np.random.Generator) -> Field:
    """Draw ``v ~ N(0, (L^T L)^{-1})`` by solving ``L v = w``, ``w ~ N(0, I)``."""
    w = rng.standard_normal(L.grid.n_nodes)
    v = L.solve(w)
    return Field(L.grid, v)


def replace_row(L: PrecisionFactor, node_index: int, new_ell_value: float) -> tuple[Row, Row]:
    """Preview a single-row length-scale update.

    Returns ``(old_row, new_row)`` without mutating ``L``; the caller
    commits with ``L.commit_row(node_index, new_ell_value, new_row)``.
    """
    old_row = L.row(node_index)
    new_row = L.compute_row(node_index, new_ell_value)
    return old_row, new_row
