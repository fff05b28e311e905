"""Command-line front end.

Subcommands: ``make-data``, ``invert``, ``realize``, ``baseline``,
``defaults``.  All outputs are plot-ready CSV plus a JSON run manifest;
``--emit-gnuplot`` writes companion gnuplot scripts.  Exit codes:
0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, default_config, load_config
from .experiments import build_problem, build_problem_with_data, unknown_grid_for
from .grid import Boundary, Field, interpolate_to, make_grid
from .hyper import apply_link, sample_hyper
from .oracle import constant_ell_baseline, dense_covariance
from .sampler import kde, run_chain
from .spde import (
    AnisoSpec,
    assemble_anisotropic_factor,
    assemble_precision_factor,
    sample_realization,
)

FMT = "%.17g"


# ---------------------------------------------------------------------
# small IO helpers


def _write(path: str, text: str) -> str:
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _write_manifest(out_dir: str, cfg: ExperimentConfig, t0: float,
                    files: list[str], extra: dict | None = None) -> str:
    manifest = {
        "version": __version__,
        "seed": cfg.mcmc.seed,
        "runtime_s": round(time.perf_counter() - t0, 3),
        "config": json.loads(json.dumps(_cfg_dict(cfg))),
        "outputs": sorted(os.path.basename(f) for f in files),
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(out_dir, "manifest.json")
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)  # atomic write at run end
    return path


def _cfg_dict(cfg: ExperimentConfig) -> dict:
    from dataclasses import asdict

    return asdict(cfg)


def _field_csv(path: str, field: Field) -> str:
    return _write(path, field.to_csv())


def _band_csv(path: str, grid, mean: np.ndarray, std: np.ndarray,
              n_sigma: float) -> str:
    coords = grid.node_coords()
    lines = []
    if grid.dim == 1:
        lines.append("index,x,mean,std,lower,upper")
        for i in range(grid.n_nodes):
            lo = mean[i] - n_sigma * std[i]
            hi = mean[i] + n_sigma * std[i]
            lines.append(
                f"{i},{coords[i, 0]:.17g},{mean[i]:.17g},{std[i]:.17g},"
                f"{lo:.17g},{hi:.17g}"
            )
    else:
        lines.append("index,x,y,mean,std,lower,upper")
        for i in range(grid.n_nodes):
            lo = mean[i] - n_sigma * std[i]
            hi = mean[i] + n_sigma * std[i]
            lines.append(
                f"{i},{coords[i, 0]:.17g},{coords[i, 1]:.17g},{mean[i]:.17g},"
                f"{std[i]:.17g},{lo:.17g},{hi:.17g}"
            )
    return _write(path, "\n".join(lines) + "\n")


def _parse_int_list(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse integer list {text!r}: {exc}") from exc


# ---------------------------------------------------------------------
# subcommands


def cmd_make_data(cfg: ExperimentConfig, out_dir: str) -> int:
    t0 = time.perf_counter()
    os.makedirs(out_dir, exist_ok=True)
    problem, truth = build_problem(cfg)
    files = [_field_csv(os.path.join(out_dir, "truth.csv"), truth)]

    lines = []
    if problem.unknown_grid.dim == 1:
        lines.append("t,y")
        for t, yv in zip(problem.measurement_x[:, 0], problem.y):
            lines.append(f"{t:.17g},{yv:.17g}")
    else:
        lines.append("x,y,value")
        for (x, yc), yv in zip(problem.measurement_x, problem.y):
            lines.append(f"{x:.17g},{yc:.17g},{yv:.17g}")
    files.append(_write(os.path.join(out_dir, "data.csv"), "\n".join(lines) + "\n"))
    _write_manifest(out_dir, cfg, t0, files)
    return 0


def _load_data(data_dir: str) -> np.ndarray:
    path = os.path.join(data_dir, "data.csv")
    try:
        raw = np.genfromtxt(path, delimiter=",", names=True)
    except OSError as exc:
        raise ConfigError(f"cannot read data file {path}: {exc}") from exc
    name = raw.dtype.names[-1]
    return np.atleast_1d(raw[name]).astype(float)


def cmd_invert(cfg: ExperimentConfig, data_dir: str, out_dir: str,
               refine: list[int] | None = None,
               trace_nodes: list[int] | None = None,
               kde_nodes: list[int] | None = None,
               emit_gnuplot: bool = False) -> int:
    t0 = time.perf_counter()
    os.makedirs(out_dir, exist_ok=True)
    y = _load_data(data_dir)
    trace_nodes = trace_nodes or []
    kde_nodes = kde_nodes or []

    if refine:
        cm_fields = []
        for n in refine:
            sub = os.path.join(out_dir, f"refine_{n}")
            _invert_once(cfg, y, sub, n_unknown=[n] * cfg.problem.dim,
                         seed=cfg.mcmc.seed + n, trace_nodes=trace_nodes,
                         kde_nodes=kde_nodes, emit_gnuplot=emit_gnuplot,
                         cm_sink=cm_fields)
        finest = cm_fields[-1].grid
        lines = ["n_coarse,n_fine,relative_l2"]
        for (na, fa), (nb, fb) in zip(
            zip(refine, cm_fields), zip(refine[1:], cm_fields[1:])
        ):
            a = interpolate_to(fa, finest).values
            b = interpolate_to(fb, finest).values
            rel = float(np.linalg.norm(a - b) / np.linalg.norm(b))
            lines.append(f"{na},{nb},{rel:.17g}")
        _write(os.path.join(out_dir, "refine_l2.csv"), "\n".join(lines) + "\n")
        _write_manifest(out_dir, cfg, t0, [os.path.join(out_dir, "refine_l2.csv")])
        return 0

    _invert_once(cfg, y, out_dir, n_unknown=None, seed=cfg.mcmc.seed,
                 trace_nodes=trace_nodes, kde_nodes=kde_nodes,
                 emit_gnuplot=emit_gnuplot)
    return 0


def _invert_once(cfg: ExperimentConfig, y: np.ndarray, out_dir: str,
                 n_unknown, seed: int, trace_nodes: list[int],
                 kde_nodes: list[int], emit_gnuplot: bool,
                 cm_sink: list | None = None) -> None:
    t0 = time.perf_counter()
    os.makedirs(out_dir, exist_ok=True)
    problem, _truth = build_problem_with_data(cfg, y, n_unknown=n_unknown)
    grid = problem.unknown_grid
    hypermodel = cfg.hypermodel(grid)
    m = cfg.mcmc
    out = run_chain(
        problem, hypermodel, K=m.iterations, burn_in=m.burn_in, thin=m.thin,
        seed=seed, det_ratio=m.det_ratio, window_radius=m.window_radius,
        sigma=cfg.prior.sigma, t_adapt=m.t_adapt,
        initial_scale=m.initial_scale,
    )
    files = [
        _band_csv(os.path.join(out_dir, "cm_v.csv"), grid, out.cm_v, out.std_v, 3.0),
        _band_csv(os.path.join(out_dir, "cm_ell.csv"), grid, out.cm_ell,
                  out.std_ell, 1.0),
    ]
    for n in trace_nodes:
        for which, samples in (("v", out.samples_v), ("ell", out.samples_ell)):
            cum = out.cumulative_mean(n, which)
            lines = ["sample,value,cumulative_mean"]
            for i, (val, cm) in enumerate(zip(samples[:, n], cum)):
                lines.append(f"{i},{val:.17g},{cm:.17g}")
            files.append(_write(os.path.join(out_dir, f"trace_{which}_{n}.csv"),
                                "\n".join(lines) + "\n"))
    for n in kde_nodes:
        res = kde(out.samples_v[:, n])
        lines = ["value,density"]
        for xv, dv in zip(res.grid, res.density):
            lines.append(f"{xv:.17g},{dv:.17g}")
        files.append(_write(os.path.join(out_dir, f"kde_v_{n}.csv"),
                            "\n".join(lines) + "\n"))
    if cfg.output.store_chains:
        lines = ["iter,node,value"]
        for i in range(out.samples_v.shape[0]):
            for n in range(out.samples_v.shape[1]):
                lines.append(f"{i},{n},{out.samples_v[i, n]:.17g}")
        files.append(_write(os.path.join(out_dir, "chain_v.csv"),
                            "\n".join(lines) + "\n"))
    if emit_gnuplot:
        files.append(_emit_gnuplot(out_dir, grid.dim, trace_nodes, kde_nodes))
    acc = out.acceptance[np.isfinite(out.acceptance)]
    _write_manifest(out_dir, cfg, t0, files, extra={
        "seed": seed,
        "acceptance": {
            "mean": float(acc.mean()) if len(acc) else None,
            "min": float(acc.min()) if len(acc) else None,
            "max": float(acc.max()) if len(acc) else None,
            "in_band_frac": float(np.mean((acc >= 0.2) & (acc <= 0.55)))
            if len(acc) else None,
        },
    })
    if cm_sink is not None:
        cm_sink.append(Field(grid, out.cm_v))


def cmd_realize(cfg: ExperimentConfig, out_dir: str, seed: int | None = None) -> int:
    t0 = time.perf_counter()
    os.makedirs(out_dir, exist_ok=True)
    p, r = cfg.problem, cfg.realize
    seed = cfg.mcmc.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    grid = unknown_grid_for(cfg)
    if r.anisotropic and p.dim != 2:
        raise ConfigError("anisotropic realisations require a 2-D problem")

    # extended domain: pad per side, sample there, crop back
    pad_nodes = [int(round(r.padding * n)) for n in grid.n_axis]
    n_pad = [n + 2 * q for n, q in zip(grid.n_axis, pad_nodes)]
    ext_pad = [e * m / n for e, m, n in zip(grid.extent, n_pad, grid.n_axis)]
    work = make_grid(p.dim, n_pad, ext_pad, Boundary(p.boundary))

    hypermodel = cfg.hypermodel(work)
    u = sample_hyper(hypermodel, work, rng)
    ell = apply_link(hypermodel.link, u)
    if r.anisotropic:
        spec = AnisoSpec(ell1=ell, ell2=r.aniso_ratio * ell.values, theta=r.theta)
        L = assemble_anisotropic_factor(work, spec, cfg.prior.sigma)
    else:
        L = assemble_precision_factor(work, ell, cfg.prior.sigma)

    def crop(field: Field) -> Field:
        if all(q == 0 for q in pad_nodes):
            return field
        if p.dim == 1:
            q = pad_nodes[0]
            return Field(grid, field.values[q:q + grid.nx])
        vals = field.values.reshape(work.ny, work.nx)
        qx, qy = pad_nodes
        return Field(grid, vals[qy:qy + grid.ny, qx:qx + grid.nx].ravel())

    files = [_field_csv(os.path.join(out_dir, "ell.csv"), crop(ell))]
    for k in range(r.n_realizations):
        v = crop(sample_realization(L, rng))
        files.append(_field_csv(os.path.join(out_dir, f"realization_{k}.csv"), v))
    if r.write_covariance:
        cov = dense_covariance(L)  # size-guarded
        lines = [",".join(f"{v:.17g}" for v in row) for row in cov]
        files.append(_write(os.path.join(out_dir, "covariance.csv"),
                            "\n".join(lines) + "\n"))
    _write_manifest(out_dir, cfg, t0, files, extra={"seed": seed})
    return 0


def cmd_baseline(cfg: ExperimentConfig, data_dir: str, out_dir: str,
                 ell_grid: np.ndarray | None = None) -> int:
    t0 = time.perf_counter()
    os.makedirs(out_dir, exist_ok=True)
    y = _load_data(data_dir)
    problem, truth = build_problem_with_data(cfg, y)
    if ell_grid is None:
        ell_grid = np.geomspace(0.05, 5.0, 40)
    result = constant_ell_baseline(problem, ell_grid, truth, sigma=cfg.prior.sigma)
    files = [_write(os.path.join(out_dir, "baseline.csv"), result.to_csv())]

    grid = problem.unknown_grid
    named = {
        "baseline_min_mae.csv": result.estimates[result.idx_min_mae],
        "baseline_min_rmse.csv": result.estimates[result.idx_min_rmse],
    }
    # long length-scale reference estimate at ell = 2
    from .oracle import conditional_gaussian

    L2 = assemble_precision_factor(grid, 2.0, cfg.prior.sigma)
    named["baseline_ell2.csv"] = conditional_gaussian(
        problem.A, problem.noise_std, problem.y, L2
    ).mean
    for name, est in named.items():
        files.append(_field_csv(os.path.join(out_dir, name), Field(grid, est)))
    _write_manifest(out_dir, cfg, t0, files)
    return 0


def cmd_defaults(kind: str) -> int:
    print(default_config(kind).to_toml_str())
    return 0


def _emit_gnuplot(out_dir: str, dim: int, trace_nodes: list[int],
                  kde_nodes: list[int]) -> str:
    lines = [
        "set datafile separator ','",
        "set key outside",
    ]
    if dim == 1:
        lines += [
            "set terminal pngcairo size 900,600",
            "set output 'cm_v.png'",
            "plot 'cm_v.csv' using 2:5:6 skip 1 with filledcurves fc rgb '#ddddff' "
            "title '3 sigma band', 'cm_v.csv' using 2:3 skip 1 with lines title 'CM of v'",
            "set output 'cm_ell.png'",
            "plot 'cm_ell.csv' using 2:5:6 skip 1 with filledcurves fc rgb '#ffdddd' "
            "title '1 sigma band', 'cm_ell.csv' using 2:3 skip 1 with lines title 'CM of ell'",
        ]
    else:
        lines += [
            "set terminal pngcairo size 900,700",
            "set output 'cm_v.png'",
            "set view map",
            "splot 'cm_v.csv' using 2:3:4 skip 1 with points palette pt 5 title 'CM of v'",
        ]
    for n in trace_nodes:
        lines += [
            f"set output 'trace_v_{n}.png'",
            f"plot 'trace_v_{n}.csv' using 1:2 skip 1 with lines title 'chain', "
            f"'trace_v_{n}.csv' using 1:3 skip 1 with lines title 'cumulative mean'",
        ]
    for n in kde_nodes:
        lines += [
            f"set output 'kde_v_{n}.png'",
            f"plot 'kde_v_{n}.csv' using 1:2 skip 1 with lines title 'density'",
        ]
    return _write(os.path.join(out_dir, "plots.gp"), "\n".join(lines) + "\n")


# ---------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maternhyper",
        description="Hierarchical non-stationary field priors for linear "
        "Bayesian inversion",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="TOML config file")
        sp.add_argument("--out", help="output directory (overrides config)")
        sp.add_argument("--seed", type=int, help="seed override")

    sp = sub.add_parser("make-data", help="synthesise truth and measurements")
    common(sp)

    sp = sub.add_parser("invert", help="run the MCMC inversion")
    common(sp)
    sp.add_argument("--data", help="directory holding data.csv (default: --out)")
    sp.add_argument("--det-ratio", choices=["exact", "windowed"])
    sp.add_argument("--refine", help="comma list of unknown sizes, e.g. '81,161,321'")
    sp.add_argument("--trace-nodes", help="comma list of node indices to trace")
    sp.add_argument("--kde-nodes", help="comma list of node indices for KDE curves")
    sp.add_argument("--emit-gnuplot", action="store_true")

    sp = sub.add_parser("realize", help="draw prior realisations")
    common(sp)

    sp = sub.add_parser("baseline", help="constant length-scale baselines")
    common(sp)
    sp.add_argument("--data", help="directory holding data.csv (default: --out)")

    sp = sub.add_parser("defaults", help="print default config as TOML")
    sp.add_argument("--kind", default="interp1d",
                    choices=["interp1d", "diff1d", "interp2d", "realize"])
    return parser


def _resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else default_config("interp1d")
    if getattr(args, "seed", None) is not None:
        cfg.mcmc.seed = args.seed
    if getattr(args, "out", None):
        cfg.output.directory = args.out
    if getattr(args, "det_ratio", None):
        cfg.mcmc.det_ratio = args.det_ratio
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "defaults":
            return cmd_defaults(args.kind)
        cfg = _resolve_config(args)
        out_dir = cfg.output.directory
        if args.command == "make-data":
            return cmd_make_data(cfg, out_dir)
        if args.command == "invert":
            data_dir = args.data or out_dir
            return cmd_invert(
                cfg, data_dir, out_dir,
                refine=_parse_int_list(args.refine),
                trace_nodes=_parse_int_list(args.trace_nodes),
                kde_nodes=_parse_int_list(args.kde_nodes),
                emit_gnuplot=args.emit_gnuplot,
            )
        if args.command == "realize":
            return cmd_realize(cfg, out_dir)
        if args.command == "baseline":
            data_dir = args.data or out_dir
            return cmd_baseline(cfg, data_dir, out_dir)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
