"""Gibbs / Metropolis-within-Gibbs sampler for the hierarchical prior.

Each outer iteration draws the unknown field exactly from its Gaussian
conditional (a perturbed stacked least-squares solve) and then sweeps the
latent length-scale field with single-site Metropolis updates.  A single
accepted update changes one row of the precision factor, so the prior
normalisation ratio reduces to a rank-one determinant ratio.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .grid import Field, Grid, stencil
from .hyper import apply_link, log_density_delta
from .spde import PrecisionFactor, Row, assemble_precision_factor, replace_row

__all__ = [
    "ChainState",
    "ChainOutput",
    "StackedSolver",
    "gibbs_v_step",
    "det_ratio_exact",
    "det_ratio_windowed",
    "mwg_sweep",
    "adapt_scales",
    "run_chain",
    "kde",
    "KdeResult",
]

logger = logging.getLogger(__name__)

T_ADAPT_DEFAULT = 100
ADAPT_FACTOR = 1.5
ACCEPT_LO, ACCEPT_HI = 0.25, 0.5
INITIAL_SCALE = 0.5


class StackedSolver:
    """Cached normal-equation factorisation of the stacked system
    ``[A / noise_std; L]`` for repeated conditional Gaussian draws."""

    def __init__(self, A: sp.spmatrix, noise_std: float, L: PrecisionFactor,
                 AtA_scaled: sp.spmatrix | None = None):
        if noise_std <= 0:
            raise ValueError("noise_std must be > 0")
        self.A = sp.csr_matrix(A)
        self.noise_std = float(noise_std)
        self.Lmat = L.matrix().copy()
        if AtA_scaled is None:
            AtA_scaled = (self.A.T @ self.A) / noise_std**2
        Q = AtA_scaled + self.Lmat.T @ self.Lmat
        try:
            self._lu = splu(sp.csc_matrix(Q))
        except RuntimeError as exc:  # exactly singular
            raise ValueError(f"rank-deficient stacked system: {exc}") from exc
        self.m = self.A.shape[0]
        self.n = self.A.shape[1]

    def draw(self, y: np.ndarray, rng: np.random.Generator,
             eta: np.ndarray | None = None) -> np.ndarray:
        if eta is None:
            eta = rng.standard_normal(self.m + self.n)
        eta_a, eta_l = eta[: self.m], eta[self.m:]
        b = self.A.T @ (np.asarray(y) / self.noise_std**2 + eta_a / self.noise_std)
        b = b + self.Lmat.T @ eta_l
        return self._lu.solve(b)


def gibbs_v_step(A, noise_std: float, y, L: PrecisionFactor,
                 rng: np.random.Generator, eta: np.ndarray | None = None,
                 solver: StackedSolver | None = None) -> Field:
    """Exact draw from ``v | ell, y ~ N(m, Q^{-1})``.

    Solves the perturbed stacked least-squares system
    ``[A/noise_std; L] v ~ [y/noise_std; 0] + eta`` with
    ``eta ~ N(0, I_{M+N})``; ``Q = A^T A / noise_std^2 + L^T L``.
    """
    if solver is None:
        solver = StackedSolver(A, noise_std, L)
    return Field(L.grid, solver.draw(y, rng, eta=eta))


def det_ratio_exact(L: PrecisionFactor, node_index: int,
                    old_row: Row, new_row: Row) -> float:
    """det(L_prop)/det(L_old) for a single-row change, by the matrix
    determinant lemma: ``1 + (new - old) . x`` with ``L_old x = e_n``."""
    if not np.array_equal(old_row.indices, new_row.indices):
        raise ValueError("rows must share the same stencil support")
    e = np.zeros(L.grid.n_nodes)
    e[node_index] = 1.0
    x = L.factor().solve(e)
    return float(1.0 + (new_row.values - old_row.values) @ x[new_row.indices])


def _window_indices(grid: Grid, node_index: int, radius: int) -> np.ndarray:
    seen = {node_index}
    frontier = {node_index}
    for _ in range(radius):
        nxt = set()
        for n in frontier:
            for j, _tag in stencil(grid, n):
                if j is not None and j not in seen:
                    nxt.add(j)
        seen |= nxt
        frontier = nxt
    return np.array(sorted(seen))


def det_ratio_windowed(L: PrecisionFactor, node_index: int, old_row: Row,
                       new_row: Row, window_radius: int = 1) -> float:
    """Approximate determinant ratio from a local block of ``L``.

    Restricts ``L_old`` to the stencil-graph neighbourhood of the updated
    node (3 indices in 1-D, 5 in 2-D at radius 1), inverts the block and
    forms the local rank-one ratio.  Fast but inexact: accuracy improves
    with ``window_radius``.
    """
    if window_radius < 1:
        raise ValueError("window_radius must be >= 1")
    if not np.array_equal(old_row.indices, new_row.indices):
        raise ValueError("rows must share the same stencil support")
    win = _window_indices(L.grid, node_index, window_radius)
    block = L.matrix()[np.ix_(win, win)].toarray()
    local_n = int(np.searchsorted(win, node_index))
    e = np.zeros(len(win))
    e[local_n] = 1.0
    try:
        x = np.linalg.solve(block, e)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular window block: {exc}") from exc
    mask = np.isin(new_row.indices, win)
    pos = np.searchsorted(win, new_row.indices[mask])
    delta = new_row.values[mask] - old_row.values[mask]
    return float(1.0 + delta @ x[pos])


@dataclass
class ChainState:
    """Mutable single-chain state; one chain owns its factor exclusively."""

    v: np.ndarray
    u: np.ndarray
    ell: np.ndarray
    L: PrecisionFactor
    scales: np.ndarray
    iteration: int = 0
    # adaptation-window counters
    proposals: np.ndarray = None
    accepts: np.ndarray = None
    # post-adaptation totals (report these as the acceptance summary)
    post_proposals: np.ndarray = None
    post_accepts: np.ndarray = None
    adapting: bool = True

    def __post_init__(self):
        n = len(self.u)
        for name in ("proposals", "accepts", "post_proposals", "post_accepts"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(n))


def mwg_sweep(state: ChainState, hypermodel, v: np.ndarray,
              rng: np.random.Generator, det_ratio: str = "exact",
              window_radius: int = 1, nodes=None) -> ChainState:
    """One Metropolis-within-Gibbs sweep over the latent field.

    Proposes symmetric Gaussian steps on ``u`` (so proposal terms cancel)
    and accepts with the three-term log-ratio: hyperprior delta, log
    determinant ratio, and the row-local change of the prior quadratic
    form.  The likelihood does not involve the length-scales and drops
    out.
    """
    link = hypermodel.link
    grid = state.L.grid
    u_field = Field(grid, state.u)
    node_iter = range(len(state.u)) if nodes is None else nodes
    for n in node_iter:
        state.proposals[n] += 1
        if not state.adapting:
            state.post_proposals[n] += 1
        u_new = state.u[n] + state.scales[n] * rng.standard_normal()
        log_accept = np.log(rng.random())
        ell_new = float(np.asarray(link(u_new)))
        if not (np.isfinite(ell_new) and ell_new > 0):
            logger.warning("non-finite link value at node %d; rejecting", n)
            continue
        old_row, new_row = replace_row(state.L, n, ell_new)
        if det_ratio == "exact":
            ratio = det_ratio_exact(state.L, n, old_row, new_row)
        else:
            ratio = det_ratio_windowed(state.L, n, old_row, new_row, window_radius)
        if not (np.isfinite(ratio) and ratio > 0):
            logger.warning("non-positive determinant ratio at node %d; rejecting", n)
            continue
        quad_old = old_row.dot(v)
        quad_new = new_row.dot(v)
        delta = (
            log_density_delta(hypermodel, u_field, n, u_new)
            + np.log(ratio)
            - 0.5 * (quad_new**2 - quad_old**2)
        )
        if not np.isfinite(delta):
            logger.warning("non-finite acceptance delta at node %d; rejecting", n)
            continue
        if log_accept < delta:
            state.L.commit_row(n, ell_new, new_row)
            state.u[n] = u_new
            state.ell[n] = ell_new
            state.accepts[n] += 1
            if not state.adapting:
                state.post_accepts[n] += 1
    return state


def adapt_scales(state: ChainState) -> ChainState:
    """Per-node scale tuning toward the 25-50% acceptance band.

    Only valid during burn-in; counters reset afterwards.
    """
    with np.errstate(invalid="ignore"):
        rates = np.where(state.proposals > 0, state.accepts / np.maximum(state.proposals, 1), 0.0)
    state.scales = np.where(rates > ACCEPT_HI, state.scales * ADAPT_FACTOR, state.scales)
    state.scales = np.where(rates < ACCEPT_LO, state.scales / ADAPT_FACTOR, state.scales)
    state.proposals[:] = 0
    state.accepts[:] = 0
    return state


@dataclass
class ChainOutput:
    """Stored post-burn-in samples plus summary statistics."""

    grid: Grid
    samples_v: np.ndarray  # (S, N)
    samples_ell: np.ndarray
    cm_v: np.ndarray
    cm_ell: np.ndarray
    std_v: np.ndarray
    std_ell: np.ndarray
    acceptance: np.ndarray  # per-node post-adaptation acceptance rates
    iterations: int
    burn_in: int
    thin: int
    seed: int
    runtime: float

    def cumulative_mean(self, node: int, which: str = "v") -> np.ndarray:
        s = self.samples_v if which == "v" else self.samples_ell
        return np.cumsum(s[:, node]) / np.arange(1, len(s) + 1)


def run_chain(problem, hypermodel, K: int, burn_in: int, thin: int = 1,
              seed: int = 0, det_ratio: str = "exact", window_radius: int = 1,
              sigma: float = 1.0, t_adapt: int = T_ADAPT_DEFAULT,
              initial_scale: float = INITIAL_SCALE) -> ChainOutput:
    """Alternate exact conditional draws of v with latent-field sweeps.

    Adaptation runs every ``t_adapt`` sweeps and freezes at
    ``burn_in // 2`` so the post-burn-in kernel is fixed.  Fully
    deterministic for a given seed.
    """
    if not K > burn_in >= 0:
        raise ValueError("need K > burn_in >= 0")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    if det_ratio not in ("exact", "windowed"):
        raise ValueError(f"unknown det_ratio mode {det_ratio!r}")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    grid = problem.unknown_grid
    n = grid.n_nodes

    u = np.zeros(n)
    ell = np.asarray(apply_link(hypermodel.link, Field(grid, u)).values)
    L = assemble_precision_factor(grid, ell.copy(), sigma)
    A = sp.csr_matrix(problem.A)
    ata_scaled = (A.T @ A) / problem.noise_std**2
    solver = StackedSolver(A, problem.noise_std, L, AtA_scaled=ata_scaled)
    v = solver.draw(problem.y, rng)

    state = ChainState(v=v, u=u, ell=ell, L=L,
                       scales=np.full(n, initial_scale))
    freeze_at = burn_in // 2

    stored_v, stored_ell = [], []
    for k in range(1, K + 1):
        solver = StackedSolver(A, problem.noise_std, state.L, AtA_scaled=ata_scaled)
        state.v = solver.draw(problem.y, rng)
        state.adapting = k <= freeze_at
        mwg_sweep(state, hypermodel, state.v, rng,
                  det_ratio=det_ratio, window_radius=window_radius)
        if state.adapting and k % t_adapt == 0:
            adapt_scales(state)
        state.iteration = k
        if k > burn_in and (k - burn_in) % thin == 0:
            stored_v.append(state.v.copy())
            stored_ell.append(state.ell.copy())

    samples_v = np.asarray(stored_v)
    samples_ell = np.asarray(stored_ell)
    with np.errstate(invalid="ignore"):
        acceptance = np.where(
            state.post_proposals > 0,
            state.post_accepts / np.maximum(state.post_proposals, 1),
            np.nan,
        )
    if not np.all(np.isfinite(samples_v)):
        raise FloatingPointError("non-finite state encountered in chain output")
    return ChainOutput(
        grid=grid,
        samples_v=samples_v,
        samples_ell=samples_ell,
        cm_v=samples_v.mean(axis=0),
        cm_ell=samples_ell.mean(axis=0),
        std_v=samples_v.std(axis=0, ddof=1),
        std_ell=samples_ell.std(axis=0, ddof=1),
        acceptance=acceptance,
        iterations=K,
        burn_in=burn_in,
        thin=thin,
        seed=seed,
        runtime=time.perf_counter() - t0,
    )


@dataclass
class KdeResult:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    point_mass: float | None = None  # set when all samples coincide


def kde(samples, bandwidth: float | None = None, n_points: int = 512) -> KdeResult:
    """Gaussian-kernel density estimate on samples +/- 3 bandwidths.

    The bandwidth defaults to Silverman's rule.  Degenerate inputs (all
    samples equal) are flagged as a point mass instead of a curve.
    """
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        raise ValueError("need at least 2 samples")
    std = x.std(ddof=1)
    if std == 0.0:
        return KdeResult(grid=np.array([x[0]]), density=np.array([np.inf]),
                         bandwidth=0.0, point_mass=float(x[0]))
    if bandwidth is None:
        iqr = np.subtract(*np.percentile(x, [75, 25]))
        spread = min(std, iqr / 1.34) if iqr > 0 else std
        bandwidth = 0.9 * spread * len(x) ** (-1.0 / 5.0)
    grid = np.linspace(x.min() - 3 * bandwidth, x.max() + 3 * bandwidth, n_points)
    z = (grid[:, None] - x[None, :]) / bandwidth
    dens = np.exp(-0.5 * z**2).sum(axis=1) / (len(x) * bandwidth * np.sqrt(2 * np.pi))
    return KdeResult(grid=grid, density=dens, bandwidth=float(bandwidth))
