"""Experiment assembly: grids, truths and forward problems per config.

This is the glue between configs and the numeric modules; the CLI and
the test harness both build their problems here so they agree exactly.
"""

from __future__ import annotations

import numpy as np

from .config import ConfigError, ExperimentConfig
from .forward import (
    ForwardProblem,
    heaviside_operator,
    phantom_2d,
    phantom_diff_1d,
    phantom_interp_1d,
    selection_indices,
    selection_operator,
    synth_data,
)
from .grid import Boundary, Field, Grid, make_grid

__all__ = [
    "unknown_grid_for",
    "truth_for",
    "build_operator",
    "build_problem",
    "build_problem_with_data",
]


def unknown_grid_for(cfg: ExperimentConfig, n_unknown=None) -> Grid:
    p = cfg.problem
    n = list(n_unknown) if n_unknown is not None else list(p.n_unknown)
    return make_grid(p.dim, n, list(p.extent), Boundary(p.boundary))


def truth_for(cfg: ExperimentConfig, grid: Grid) -> Field:
    kind = cfg.problem.kind
    coords = grid.node_coords()
    if kind in ("interp1d", "realize"):
        return Field(grid, phantom_interp_1d(coords[:, 0]))
    if kind == "diff1d":
        return Field(grid, phantom_diff_1d(coords[:, 0]))
    if kind == "interp2d":
        return Field(grid, phantom_2d(coords[:, 0], coords[:, 1]))
    raise ConfigError(f"no truth defined for kind {kind!r}")


def build_operator(cfg: ExperimentConfig, grid: Grid):
    """Observation matrix plus measurement locations for the config."""
    p = cfg.problem
    idx = selection_indices(grid, tuple(p.n_measure))
    locations = grid.node_coords()[idx]
    if p.kind == "diff1d":
        A = heaviside_operator(grid, locations[:, 0])
    else:
        A = selection_operator(grid, idx)
    return A, locations


def build_problem(cfg: ExperimentConfig, n_unknown=None,
                  y: np.ndarray | None = None) -> tuple[ForwardProblem, Field]:
    """Forward problem plus truth; generates data unless ``y`` is given.

    The data seed is derived from the MCMC seed so `make-data` and a
    direct in-process build agree.
    """
    grid = unknown_grid_for(cfg, n_unknown)
    truth = truth_for(cfg, grid)
    A, locations = build_operator(cfg, grid)
    if y is None:
        y = synth_data(A, truth, cfg.problem.noise_std, data_seed(cfg))
    problem = ForwardProblem(
        A=A,
        noise_std=cfg.problem.noise_std,
        y=np.asarray(y, dtype=float),
        unknown_grid=grid,
        measurement_x=locations,
    )
    return problem, truth


def build_problem_with_data(cfg: ExperimentConfig, y: np.ndarray,
                            n_unknown=None) -> tuple[ForwardProblem, Field]:
    if len(y) != int(np.prod(cfg.problem.n_measure)):
        raise ConfigError(
            f"data length {len(y)} does not match configured measurement "
            f"mesh {cfg.problem.n_measure}"
        )
    return build_problem(cfg, n_unknown=n_unknown, y=y)


def data_seed(cfg: ExperimentConfig) -> int:
    # offset keeps the data stream distinct from the chain stream
    return int(cfg.mcmc.seed) + 11
