"""Experiment configuration: dataclasses, TOML loading and defaults.

One table per module in the TOML file: ``[problem]``, ``[prior]``,
``[hyper]``, ``[mcmc]``, ``[realize]``, ``[output]``.  All defaults
mirror the reference experiment setups; longer chains are available by
raising ``mcmc.iterations``.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .grid import Boundary
from .hyper import (
    BoundedExpLink,
    CauchyLink,
    CauchyNoiseHyper,
    CauchyWalkHyper,
    ExpLink,
    GaussianMaternHyper,
)

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "default_config"]

KINDS = ("interp1d", "diff1d", "interp2d", "realize")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ProblemConfig:
    kind: str = "interp1d"
    dim: int = 1
    n_unknown: list = field(default_factory=lambda: [161])
    n_measure: list = field(default_factory=lambda: [81])
    extent: list = field(default_factory=lambda: [10.0])
    noise_std: float = 0.1
    # Dirichlet spacing h = extent/(n-1) puts the reference experiment
    # meshes at h = 1/16 (unknowns) over 1/8 (measurements) exactly
    boundary: str = "dirichlet"


@dataclass
class PriorConfig:
    sigma: float = 2.0


@dataclass
class HyperConfig:
    family: str = "gaussian_matern"  # gaussian_matern | cauchy_walk | cauchy_noise
    ell0: float = 1.0
    sigma0: float = 3.0
    scale: float = 0.0  # Cauchy step/noise scale; 0 means "use grid h"
    link: str = "exp"  # exp | cauchy | bounded_exp
    link_a: float = 1.0
    link_b: float = 1.0
    link_c: float = 1.0
    link_d: float = 0.05
    bexp_a: float = 1.0
    bexp_b: float = 0.95
    bexp_lower: float = 0.05
    bexp_upper: float = 2.0


@dataclass
class McmcConfig:
    iterations: int = 10000
    burn_in: int = 5000
    thin: int = 1
    seed: int = 1
    t_adapt: int = 100
    det_ratio: str = "exact"  # exact | windowed
    window_radius: int = 1
    initial_scale: float = 0.5


@dataclass
class RealizeConfig:
    n_realizations: int = 4
    padding: float = 0.0  # fraction of extent padded per side, cropped after
    anisotropic: bool = False
    aniso_ratio: float = 0.5  # ell2 = aniso_ratio * ell1
    theta: float = 0.0  # tilt angle in radians
    write_covariance: bool = False


@dataclass
class OutputConfig:
    directory: str = "out"
    store_chains: bool = False


@dataclass
class ExperimentConfig:
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    prior: PriorConfig = field(default_factory=PriorConfig)
    hyper: HyperConfig = field(default_factory=HyperConfig)
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    realize: RealizeConfig = field(default_factory=RealizeConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> None:
        p, m = self.problem, self.mcmc
        if p.kind not in KINDS:
            raise ConfigError(f"problem.kind must be one of {KINDS}, got {p.kind!r}")
        if p.dim not in (1, 2):
            raise ConfigError(f"problem.dim must be 1 or 2, got {p.dim}")
        if len(p.n_unknown) not in (1, 2) or any(v < 3 for v in p.n_unknown):
            raise ConfigError(f"problem.n_unknown invalid: {p.n_unknown}")
        if any(e <= 0 for e in p.extent):
            raise ConfigError(f"problem.extent must be positive: {p.extent}")
        if p.noise_std <= 0:
            raise ConfigError(f"problem.noise_std must be > 0, got {p.noise_std}")
        if p.boundary not in ("periodic", "dirichlet"):
            raise ConfigError(f"problem.boundary invalid: {p.boundary!r}")
        if p.kind == "diff1d" and p.noise_std > 0.1:
            raise ConfigError(
                "problem.noise_std > 0.1 is rejected for the ill-posed "
                "differentiation problem"
            )
        if self.prior.sigma <= 0:
            raise ConfigError("prior.sigma must be > 0")
        if self.hyper.family not in ("gaussian_matern", "cauchy_walk", "cauchy_noise"):
            raise ConfigError(f"hyper.family invalid: {self.hyper.family!r}")
        if self.hyper.link not in ("exp", "cauchy", "bounded_exp"):
            raise ConfigError(f"hyper.link invalid: {self.hyper.link!r}")
        if self.hyper.family == "gaussian_matern" and (
            self.hyper.ell0 <= 0 or self.hyper.sigma0 <= 0
        ):
            raise ConfigError("hyper.ell0 and hyper.sigma0 must be > 0")
        if not m.iterations > m.burn_in >= 0:
            raise ConfigError("mcmc.iterations must exceed mcmc.burn_in >= 0")
        if m.thin < 1:
            raise ConfigError("mcmc.thin must be >= 1")
        if m.det_ratio not in ("exact", "windowed"):
            raise ConfigError(f"mcmc.det_ratio invalid: {m.det_ratio!r}")
        if m.seed is None:
            raise ConfigError("mcmc.seed is mandatory (no wall-clock seeding)")

    # -- constructed objects ------------------------------------------

    def boundary(self) -> Boundary:
        return Boundary(self.problem.boundary)

    def link(self):
        h = self.hyper
        if h.link == "exp":
            return ExpLink()
        if h.link == "cauchy":
            return CauchyLink(h.link_a, h.link_b, h.link_c, h.link_d)
        return BoundedExpLink(h.bexp_a, h.bexp_b, h.bexp_lower, h.bexp_upper)

    def hypermodel(self, grid):
        h = self.hyper
        scale = h.scale if h.scale > 0 else None
        if h.family == "gaussian_matern":
            return GaussianMaternHyper(grid, h.ell0, h.sigma0, link=self.link())
        if h.family == "cauchy_walk":
            return CauchyWalkHyper(scale=scale, link=self.link())
        return CauchyNoiseHyper(scale=scale, link=self.link())

    def to_toml_str(self) -> str:
        lines = []
        for section, values in asdict(self).items():
            lines.append(f"[{section}]")
            for key, val in values.items():
                if isinstance(val, str):
                    lines.append(f'{key} = "{val}"')
                elif isinstance(val, bool):
                    lines.append(f"{key} = {str(val).lower()}")
                elif isinstance(val, list):
                    lines.append(f"{key} = {val}")
                else:
                    lines.append(f"{key} = {val}")
            lines.append("")
        return "\n".join(lines)


_DEFAULTS = {
    # 1-D interpolation: 81 observations, noise std 0.1, domain [0, 10]
    "interp1d": dict(
        problem=dict(kind="interp1d", dim=1, n_unknown=[161], n_measure=[81],
                     extent=[10.0], noise_std=0.1),
        hyper=dict(family="cauchy_walk", link="cauchy"),
    ),
    # numerical differentiation: 101 observations, noise std 0.03
    "diff1d": dict(
        problem=dict(kind="diff1d", dim=1, n_unknown=[201], n_measure=[101],
                     extent=[10.0], noise_std=0.03),
        hyper=dict(family="gaussian_matern", link="exp", ell0=1.0, sigma0=3.0),
    ),
    # 2-D interpolation: 41x41 observations, noise std 0.025, unit square
    "interp2d": dict(
        problem=dict(kind="interp2d", dim=2, n_unknown=[81, 81],
                     n_measure=[41, 41], extent=[1.0, 1.0], noise_std=0.025),
        hyper=dict(family="gaussian_matern", link="exp", ell0=0.1, sigma0=2.0),
        prior=dict(sigma=2.0),
        mcmc=dict(iterations=2000, burn_in=1000),
    ),
    # realisations stay periodic: stationarity holds across the whole
    # domain instead of decaying to the pinned boundary
    "realize": dict(
        problem=dict(kind="realize", dim=1, n_unknown=[256], n_measure=[256],
                     extent=[10.0], noise_std=0.1, boundary="periodic"),
        hyper=dict(family="cauchy_walk", link="cauchy"),
        prior=dict(sigma=1.0),
    ),
}


def default_config(kind: str = "interp1d") -> ExperimentConfig:
    if kind not in KINDS:
        raise ConfigError(f"unknown problem kind {kind!r}")
    cfg = ExperimentConfig()
    _apply(cfg, _DEFAULTS[kind])
    cfg.validate()
    return cfg


def _apply(cfg: ExperimentConfig, data: dict) -> None:
    sections = {
        "problem": cfg.problem,
        "prior": cfg.prior,
        "hyper": cfg.hyper,
        "mcmc": cfg.mcmc,
        "realize": cfg.realize,
        "output": cfg.output,
    }
    for section, values in data.items():
        if section not in sections:
            raise ConfigError(f"unknown config section [{section}]")
        target = sections[section]
        if not isinstance(values, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, val in values.items():
            if not hasattr(target, key):
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            current = getattr(target, key)
            if isinstance(current, list) and not isinstance(val, list):
                val = [val]
            setattr(target, key, val)


def load_config(path: str) -> ExperimentConfig:
    """Parse a TOML config file, applying kind-specific defaults first."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc
    kind = data.get("problem", {}).get("kind", "interp1d")
    if kind not in KINDS:
        raise ConfigError(f"problem.kind must be one of {KINDS}, got {kind!r}")
    cfg = ExperimentConfig()
    _apply(cfg, _DEFAULTS[kind])
    _apply(cfg, data)
    cfg.validate()
    return cfg
