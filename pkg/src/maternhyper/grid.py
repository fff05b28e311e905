"""Equispaced 1-D/2-D lattices, boundary rules, stencils and node fields.

Node ordering is row-major with the x axis fastest: in 2-D, node index
``n = iy * nx + ix``.  Spacing conventions: periodic grids use
``h = extent / n_axis`` (node ``n_axis`` wraps onto node 0), Dirichlet
grids use ``h = extent / (n_axis - 1)`` (both endpoints are nodes).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Boundary",
    "Grid",
    "Field",
    "make_grid",
    "stencil",
    "interpolate_to",
]


class Boundary(Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class Grid:
    """Equispaced lattice on a rectangular domain with origin 0.

    Attributes
    ----------
    dim : 1 or 2
    n_axis : points per axis, ``(nx,)`` or ``(nx, ny)``
    extent : domain length per axis
    boundary : Boundary rule (controls both spacing and stencil wrap)
    h : grid spacing, identical along all axes
    """

    dim: int
    n_axis: tuple[int, ...]
    extent: tuple[float, ...]
    boundary: Boundary
    h: float

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.n_axis))

    @property
    def nx(self) -> int:
        return self.n_axis[0]

    @property
    def ny(self) -> int:
        return self.n_axis[1] if self.dim == 2 else 1

    def index_to_multi(self, node_index: int) -> tuple[int, ...]:
        """Row-major node index -> per-axis indices (x fastest)."""
        if not 0 <= node_index < self.n_nodes:
            raise IndexError(f"node index {node_index} out of range")
        if self.dim == 1:
            return (node_index,)
        return (node_index % self.nx, node_index // self.nx)

    def multi_to_index(self, multi: tuple[int, ...]) -> int:
        if self.dim == 1:
            (ix,) = multi
            if not 0 <= ix < self.nx:
                raise IndexError(f"axis index {ix} out of range")
            return ix
        ix, iy = multi
        if not (0 <= ix < self.nx and 0 <= iy < self.ny):
            raise IndexError(f"axis indices {multi} out of range")
        return iy * self.nx + ix

    def node_coords(self) -> np.ndarray:
        """Coordinates of all nodes, shape (n_nodes, dim)."""
        if self.dim == 1:
            return (self.h * np.arange(self.nx))[:, None]
        xs = self.h * np.arange(self.nx)
        ys = self.h * np.arange(self.ny)
        gx, gy = np.meshgrid(xs, ys)  # row-major, x fastest
        return np.column_stack([gx.ravel(), gy.ravel()])

    def axis_coords(self, axis: int = 0) -> np.ndarray:
        return self.h * np.arange(self.n_axis[axis])


def make_grid(
    dim: int,
    n_axis: int | tuple[int, ...] | list[int],
    extent: float | tuple[float, ...] | list[float],
    boundary: Boundary = Boundary.PERIODIC,
) -> Grid:
    """Build an equispaced grid.

    ``n_axis`` must be at least 3 per axis (the Laplacian stencil is
    undefined below that).  The spacing must come out identical along
    every axis; mismatched ``extent``/``n_axis`` combinations are
    rejected.
    """
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    n = tuple(int(v) for v in np.atleast_1d(n_axis))
    ext = tuple(float(v) for v in np.atleast_1d(extent))
    if len(n) == 1 and dim == 2:
        n = n * 2
    if len(ext) == 1 and dim == 2:
        ext = ext * 2
    if len(n) != dim or len(ext) != dim:
        raise ValueError("n_axis/extent length does not match dim")
    if any(v < 3 for v in n):
        raise ValueError(f"need at least 3 points per axis, got {n}")
    if any(e <= 0 for e in ext):
        raise ValueError(f"extent must be positive, got {ext}")

    if boundary is Boundary.PERIODIC:
        hs = [e / m for e, m in zip(ext, n)]
    else:
        hs = [e / (m - 1) for e, m in zip(ext, n)]
    if not np.allclose(hs, hs[0], rtol=1e-12, atol=0.0):
        raise ValueError(f"grid spacing differs across axes: {hs}")
    return Grid(dim=dim, n_axis=n, extent=ext, boundary=boundary, h=float(hs[0]))


def stencil(grid: Grid, node_index: int) -> list[tuple[int | None, str]]:
    """Laplacian stencil neighbourhood of a node.

    Returns ``(neighbour_index, tag)`` pairs.  1-D tags are
    ``left, self, right``; 2-D tags are ``N, S, E, W, self`` with
    N/S stepping -/+ along y and W/E stepping -/+ along x.  Periodic
    grids wrap; Dirichlet grids report out-of-domain neighbours as
    ``None`` (zero-valued ghosts).
    """
    periodic = grid.boundary is Boundary.PERIODIC

    def shift(ix: int, n: int) -> int | None:
        if periodic:
            return ix % n
        return ix if 0 <= ix < n else None

    if grid.dim == 1:
        (ix,) = grid.index_to_multi(node_index)
        out = [
            (shift(ix - 1, grid.nx), "left"),
            (node_index, "self"),
            (shift(ix + 1, grid.nx), "right"),
        ]
    else:
        ix, iy = grid.index_to_multi(node_index)
        nbrs = {
            "N": (ix, iy - 1),
            "S": (ix, iy + 1),
            "W": (ix - 1, iy),
            "E": (ix + 1, iy),
        }
        out = []
        for tag in ("N", "S", "E", "W"):
            jx, jy = nbrs[tag]
            sx, sy = shift(jx, grid.nx), shift(jy, grid.ny)
            idx = None if sx is None or sy is None else sy * grid.nx + sx
            out.append((idx, tag))
        out.append((node_index, "self"))
    return out


def neighbor_table(grid: Grid) -> np.ndarray:
    """All non-self stencil neighbours as an (n_nodes, 2*dim) int array.

    Ghost neighbours (Dirichlet) are encoded as -1.
    """
    periodic = grid.boundary is Boundary.PERIODIC
    if grid.dim == 1:
        ix = np.arange(grid.nx)
        left, right = ix - 1, ix + 1
        if periodic:
            left %= grid.nx
            right %= grid.nx
        else:
            left = np.where(left < 0, -1, left)
            right = np.where(right >= grid.nx, -1, right)
        return np.column_stack([left, right])

    nx, ny = grid.nx, grid.ny
    idx = np.arange(grid.n_nodes)
    ix, iy = idx % nx, idx // nx

    def wrap(jx, jy):
        if periodic:
            return (jy % ny) * nx + (jx % nx)
        bad = (jx < 0) | (jx >= nx) | (jy < 0) | (jy >= ny)
        return np.where(bad, -1, jy * nx + jx)

    return np.column_stack(
        [wrap(ix, iy - 1), wrap(ix, iy + 1), wrap(ix + 1, iy), wrap(ix - 1, iy)]
    )


@dataclass
class Field:
    """Real values on the nodes of a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"field length {self.values.shape} does not match "
                f"{self.grid.n_nodes} grid nodes"
            )

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.n_nodes, float(value)))

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def to_csv(self) -> str:
        """Serialise as ``index,x[,y],value`` rows with one header line."""
        coords = self.grid.node_coords()
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if self.grid.dim == 1:
            writer.writerow(["index", "x", "value"])
            for i, v in enumerate(self.values):
                writer.writerow([i, f"{coords[i, 0]:.17g}", f"{v:.17g}"])
        else:
            writer.writerow(["index", "x", "y", "value"])
            for i, v in enumerate(self.values):
                writer.writerow(
                    [i, f"{coords[i, 0]:.17g}", f"{coords[i, 1]:.17g}", f"{v:.17g}"]
                )
        return buf.getvalue()


def interpolate_to(field: Field, target_grid: Grid) -> Field:
    """Piecewise-linear (1-D) / bilinear (2-D) resampling onto another grid.

    Both grids must span the same extent.  Periodic source fields are
    wrapped so target nodes beyond the last source node interpolate
    against node 0.
    """
    src = field.grid
    if src.dim != target_grid.dim:
        raise ValueError("dimension mismatch between grids")
    if not np.allclose(src.extent, target_grid.extent, rtol=1e-12):
        raise ValueError(
            f"extent mismatch: {src.extent} vs {target_grid.extent}"
        )
    if target_grid == src:
        return field.copy()

    def axis_with_wrap(grid: Grid, axis: int, values_nd: np.ndarray):
        xs = grid.axis_coords(axis)
        if grid.boundary is Boundary.PERIODIC:
            xs = np.append(xs, grid.extent[axis])
            values_nd = np.concatenate(
                [values_nd, values_nd.take([0], axis=axis)], axis=axis
            )
        return xs, values_nd

    if src.dim == 1:
        xs, vals = axis_with_wrap(src, 0, field.values)
        out = np.interp(target_grid.axis_coords(0), xs, vals)
        return Field(target_grid, out)

    vals = field.values.reshape(src.ny, src.nx)  # axis 0 = y, axis 1 = x
    ys, vals = axis_with_wrap(src, 1, vals)
    xs, vals = axis_with_wrap(src, 0, np.swapaxes(vals, 0, 1))
    vals = np.swapaxes(vals, 0, 1)  # back to (y, x)

    from scipy.interpolate import RegularGridInterpolator

    interp = RegularGridInterpolator((ys, xs), vals, method="linear")
    pts = target_grid.node_coords()  # columns (x, y)
    out = interp(np.column_stack([pts[:, 1], pts[:, 0]]))
    return Field(target_grid, out)
