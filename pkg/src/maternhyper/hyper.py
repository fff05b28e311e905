"""Hyperpriors on the latent field ``u`` and link maps ``ell = g(u)``.

Three hyperprior families are supported: a Gaussian field with its own
sparse precision factor, a 1-D Cauchy walk (cumulative i.i.d. Cauchy
increments), and i.i.d. Cauchy noise.  Link maps turn the unconstrained
latent field into a strictly positive length-scale field.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import Field, Grid, stencil
from .spde import PrecisionFactor, assemble_precision_factor, sample_realization

__all__ = [
    "ExpLink",
    "CauchyLink",
    "BoundedExpLink",
    "GaussianMaternHyper",
    "CauchyWalkHyper",
    "CauchyNoiseHyper",
    "apply_link",
    "sample_hyper",
    "log_density",
    "log_density_delta",
]

_EXP_CLAMP = 700.0  # exp overflow guard


@dataclass(frozen=True)
class ExpLink:
    """g(s) = exp(s)."""

    def __call__(self, s):
        return np.exp(np.clip(s, -_EXP_CLAMP, _EXP_CLAMP))


@dataclass(frozen=True)
class CauchyLink:
    """g(s) = a / (b + c|s|) + d, even in s, with range (d, a/b + d]."""

    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    d: float = 0.05

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.c > 0 and self.d > 0):
            raise ValueError("CauchyLink requires a, b, c, d > 0")

    def __call__(self, s):
        return self.a / (self.b + self.c * np.abs(s)) + self.d


@dataclass(frozen=True)
class BoundedExpLink:
    """g(s) = clamp(exp(a|s|) - b, lower, upper); g(0) = 1 - b = lower by default."""

    a: float = 1.0
    b: float = 0.95
    lower: float = 0.05
    upper: float = 2.0

    def __post_init__(self):
        if not (self.a > 0 and 0 < self.b < 1 and 0 < self.lower < self.upper):
            raise ValueError("BoundedExpLink requires a > 0, b in (0,1), 0 < lower < upper")

    def __call__(self, s):
        raw = np.exp(np.clip(self.a * np.abs(s), -_EXP_CLAMP, _EXP_CLAMP)) - self.b
        return np.clip(raw, self.lower, self.upper)


def apply_link(link, u: Field) -> Field:
    """Pointwise ``ell = g(u)``; the result is strictly positive."""
    out = np.asarray(link(u.values), dtype=float)
    return Field(u.grid, out)


class GaussianMaternHyper:
    """Gaussian hyperprior: ``u`` is a field with constant scales
    ``(ell0, sigma0)`` drawn from the same sparse-factor construction
    used for the main prior."""

    def __init__(self, grid: Grid, ell0: float, sigma0: float, link=None):
        if ell0 <= 0 or sigma0 <= 0:
            raise ValueError("ell0 and sigma0 must be > 0")
        self.grid = grid
        self.ell0 = float(ell0)
        self.sigma0 = float(sigma0)
        self.link = link if link is not None else ExpLink()
        self.factor: PrecisionFactor = assemble_precision_factor(grid, ell0, sigma0)
        # rows of the factor whose support includes a given column; the
        # pattern is symmetric, so these are the stencil indices
        self._touching = [
            np.array(sorted({i for i, _ in stencil(grid, n) if i is not None}))
            for n in range(grid.n_nodes)
        ]


@dataclass
class CauchyWalkHyper:
    """1-D Cauchy walk: u(0) = 0, increments ~ Cauchy(scale, 0).

    ``scale`` defaults to the grid spacing h.
    """

    scale: float | None = None
    link: object = dc_field(default_factory=CauchyLink)

    def step_scale(self, grid: Grid) -> float:
        return grid.h if self.scale is None else self.scale


@dataclass
class CauchyNoiseHyper:
    """i.i.d. Cauchy(scale, 0) per node; ``scale`` defaults to grid h."""

    scale: float | None = None
    link: object = dc_field(default_factory=CauchyLink)

    def step_scale(self, grid: Grid) -> float:
        return grid.h if self.scale is None else self.scale


def sample_hyper(model, grid: Grid, rng: np.random.Generator) -> Field:
    """Draw a latent field ``u`` from the hypermodel."""
    if isinstance(model, GaussianMaternHyper):
        if model.grid != grid:
            raise ValueError("hypermodel grid does not match requested grid")
        return sample_realization(model.factor, rng)
    if isinstance(model, CauchyWalkHyper):
        if grid.dim != 1:
            raise ValueError("Cauchy walk hypermodel is 1-D only")
        gamma = model.step_scale(grid)
        incr = gamma * rng.standard_cauchy(grid.n_nodes - 1)
        return Field(grid, np.concatenate([[0.0], np.cumsum(incr)]))
    if isinstance(model, CauchyNoiseHyper):
        gamma = model.step_scale(grid)
        return Field(grid, gamma * rng.standard_cauchy(grid.n_nodes))
    raise TypeError(f"unknown hypermodel {type(model)!r}")


def log_density(model, u: Field) -> float:
    """Unnormalised hyperprior log-density of the full latent field."""
    vals = u.values
    if isinstance(model, GaussianMaternHyper):
        r = model.factor.matrix() @ vals
        return -0.5 * float(r @ r)
    if isinstance(model, CauchyWalkHyper):
        gamma = model.step_scale(u.grid)
        d = np.diff(vals)
        return -float(np.sum(np.log(gamma**2 + d**2)))
    if isinstance(model, CauchyNoiseHyper):
        gamma = model.step_scale(u.grid)
        return -float(np.sum(np.log(gamma**2 + vals**2)))
    raise TypeError(f"unknown hypermodel {type(model)!r}")


def log_density_delta(model, u: Field, node_index: int, new_value: float) -> float:
    """log D(u') - log D(u) where u' changes only at ``node_index``.

    Computed locally: the Gaussian family touches only the factor rows
    whose stencil contains the node, the Cauchy walk touches at most two
    increments, and Cauchy noise touches a single term.
    """
    vals = u.values
    old_value = vals[node_index]
    if isinstance(model, GaussianMaternHyper):
        delta = 0.0
        L = model.factor
        for m in model._touching[node_index]:
            row = L.row(int(m))
            r_old = row.dot(vals)
            # only the node_index column of this row changes
            k = np.searchsorted(row.indices, node_index)
            r_new = r_old + row.values[k] * (new_value - old_value)
            delta += -0.5 * (r_new**2 - r_old**2)
        return float(delta)
    if isinstance(model, CauchyWalkHyper):
        gamma = model.step_scale(u.grid)
        delta = 0.0
        if node_index > 0:
            d_old = old_value - vals[node_index - 1]
            d_new = new_value - vals[node_index - 1]
            delta += np.log(gamma**2 + d_old**2) - np.log(gamma**2 + d_new**2)
        if node_index < len(vals) - 1:
            d_old = vals[node_index + 1] - old_value
            d_new = vals[node_index + 1] - new_value
            delta += np.log(gamma**2 + d_old**2) - np.log(gamma**2 + d_new**2)
        return float(delta)
    if isinstance(model, CauchyNoiseHyper):
        gamma = model.step_scale(u.grid)
        return float(
            np.log(gamma**2 + old_value**2) - np.log(gamma**2 + new_value**2)
        )
    raise TypeError(f"unknown hypermodel {type(model)!r}")
