"""Command-line front end for experiments and data dumps.

Thin shell over the library: configuration comes from built-in defaults,
overridden by an optional JSON config file, overridden by flags.  Every
number written to disk is produced by library code, so reruns with the
same config and seed are byte-identical.

Exit codes: 0 success, 2 invalid configuration, 3 I/O failure,
4 computation failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .acquisition import ei_field, mes_field
from .errors import ConfigError, VesboError
from .gp import Dataset, fit_hyperparameters, fit_posterior
from .harness import (
    ACQUISITIONS,
    ExperimentConfig,
    _atomic_write_text,
    _fmt,
    _standardized,
    _ves_config,
    run_bo,
    run_experiment,
    write_runs_csv,
)
from .objectives import get_objective, objective_registry
from .sampling import SampleGrid, derive_seed, sample_pairs, sample_paths, sampling_plan
from .ves import ves_exp_select, ves_gamma_select

__all__ = ["CliInvocation", "parse_and_validate", "execute", "main"]

_BENCH_DEFAULT_ACQS = "ei,mes,ves_gamma,random"


@dataclass(frozen=True)
class CliInvocation:
    """Validated command plus the merged experiment configuration."""

    subcommand: str
    config: ExperimentConfig
    objectives: tuple[str, ...]
    acquisitions: tuple[str, ...]
    out: Path
    jobs: int = 1
    trace_out: Path | None = None
    x: tuple[float, ...] | None = None


def _parse_grid(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    try:
        return tuple(int(tok) for tok in str(text).lower().split("x"))
    except ValueError:
        raise ConfigError("grid", f"expected e.g. '101x101', got {text!r}") from None


def _norm_acq(name: str) -> str:
    return name.strip().replace("-", "_")


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="JSON config file")
    p.add_argument("--objective", default=None, help="objective name (bench: comma list or 'all')")
    p.add_argument("--acq", default=None, help="acquisition (bench: comma list or 'all')")
    p.add_argument("--steps", type=int, default=None, help="optimization steps per run")
    p.add_argument("--repeats", type=int, default=None, help="independent seeded repeats")
    p.add_argument("--seed", type=int, default=None, help="base seed (run r uses seed+r)")
    p.add_argument("--grid", default=None, help="candidate grid, e.g. 101x101")
    p.add_argument("--paths", type=int, default=None, help="posterior path samples per step")
    p.add_argument("--init-points", type=int, default=None, help="initial random observations")
    p.add_argument("--sampler", choices=["exact", "coarse"], default=None,
                   help="path sampling grid: candidate grid itself, or a coarser one")
    p.add_argument("--coarse-grid", type=int, default=None,
                   help="nodes per dimension of the coarse sampling grid")
    p.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=None,
                   help="standardize observations before fitting")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vesbo",
        description="Bayesian optimization benchmarks with EI, MES and "
        "variational entropy search acquisitions.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("run", help="single seeded run, per-step CSV output")
    _add_experiment_flags(p)
    p.add_argument("--trace-out", type=Path, default=None,
                   help="JSONL file of per-step variational fit records")

    p = sub.add_parser("bench", help="repeated runs over objectives x acquisitions")
    _add_experiment_flags(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    p = sub.add_parser("dump-acq", help="acquisition field CSV for a seeded snapshot")
    _add_experiment_flags(p)

    p = sub.add_parser("dump-samples", help="(best value, node value) sample pairs CSV")
    _add_experiment_flags(p)
    p.add_argument("--x", default=None, help="candidate point, e.g. '0.5,1.4' (snapped to grid)")

    sub.add_parser("list-objectives", help="registered objectives and domains")
    return parser


def _load_config_file(path: Path) -> dict:
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"malformed JSON in {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config", f"{path} must hold a JSON object")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key in raw:
        if key not in known:
            raise ConfigError(key, "unknown config field")
    return raw


def parse_and_validate(argv) -> CliInvocation:
    """Merge defaults <- config file <- flags and validate everything."""
    ns = _build_parser().parse_args(argv)
    if ns.subcommand == "list-objectives":
        dummy = ExperimentConfig(objective="himmelblau", acquisition="ei", steps=1)
        return CliInvocation(
            subcommand=ns.subcommand, config=dummy, objectives=(), acquisitions=(),
            out=Path("results"),
        )

    merged: dict = {"objective": "himmelblau", "acquisition": "ei", "steps": 50}
    if ns.subcommand == "bench":
        merged["acquisition"] = _BENCH_DEFAULT_ACQS
    merged.update(
        {f.name: f.default for f in dataclasses.fields(ExperimentConfig)
         if f.default is not dataclasses.MISSING}
    )
    if ns.config is not None:
        merged.update(_load_config_file(ns.config))

    flag_map = {
        "objective": ns.objective,
        "acquisition": ns.acq,
        "steps": ns.steps,
        "repeats": ns.repeats,
        "seed": ns.seed,
        "grid": ns.grid,
        "paths": ns.paths,
        "init_points": ns.init_points,
        "sampler": ns.sampler,
        "coarse_grid": ns.coarse_grid,
        "standardize": ns.standardize,
    }
    merged.update({k: v for k, v in flag_map.items() if v is not None})
    merged["grid"] = _parse_grid(merged["grid"])

    all_objectives = tuple(o.name for o in objective_registry())
    obj_spec = str(merged["objective"])
    objectives = all_objectives if obj_spec == "all" else tuple(
        tok.strip() for tok in obj_spec.split(",") if tok.strip()
    )
    acq_spec = _norm_acq(str(merged["acquisition"]))
    acquisitions = ACQUISITIONS if acq_spec == "all" else tuple(
        _norm_acq(tok) for tok in acq_spec.split(",") if tok.strip()
    )
    if not objectives:
        raise ConfigError("objective", "no objective given")
    if not acquisitions:
        raise ConfigError("acquisition", "no acquisition given")

    merged["objective"] = objectives[0]
    merged["acquisition"] = acquisitions[0]
    config = ExperimentConfig(**merged)
    for obj in objectives:
        for acq in acquisitions:
            replace(config, objective=obj, acquisition=acq).validate()

    x = None
    if getattr(ns, "x", None) is not None:
        try:
            x = tuple(float(tok) for tok in str(ns.x).split(","))
        except ValueError:
            raise ConfigError("x", f"expected comma-separated floats, got {ns.x!r}") from None

    return CliInvocation(
        subcommand=ns.subcommand,
        config=config,
        objectives=objectives,
        acquisitions=acquisitions,
        out=ns.out,
        jobs=getattr(ns, "jobs", 1),
        trace_out=getattr(ns, "trace_out", None),
        x=x,
    )


def _config_json(inv: CliInvocation) -> str:
    payload = dataclasses.asdict(inv.config)
    payload["objective"] = ",".join(inv.objectives)
    payload["acquisition"] = ",".join(inv.acquisitions)
    payload["grid"] = list(inv.config.grid)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _snapshot(cfg: ExperimentConfig):
    """Posterior fitted to the seeded initial design, as the first BO step sees it."""
    objective = get_objective(cfg.objective)
    grid = SampleGrid.regular(objective.domain, cfg.grid)
    sample_grid, _ = sampling_plan(grid, cfg.sampler, cfg.coarse_grid)
    lo = np.array([d[0] for d in objective.domain])
    hi = np.array([d[1] for d in objective.domain])
    rng = np.random.default_rng(derive_seed(cfg.seed, 0))
    X = lo + rng.random((cfg.init_points, objective.dimension)) * (hi - lo)
    y = _standardized(objective.batch_eval(X), cfg.standardize)
    data = Dataset(X, y)
    gp = fit_posterior(data, fit_hyperparameters(data))
    return objective, grid, sample_grid, gp, data.incumbent()


def _cmd_bench(inv: CliInvocation) -> None:
    inv.out.mkdir(parents=True, exist_ok=True)
    _atomic_write_text(inv.out / "config.json", _config_json(inv))
    for obj in inv.objectives:
        for acq in inv.acquisitions:
            cfg = replace(inv.config, objective=obj, acquisition=acq)
            _, agg = run_experiment(cfg, out_dir=inv.out, jobs=inv.jobs)
            final = agg.mean_log_regret[-1]
            print(f"{obj} {acq}: mean final log regret {final:.3f} -> {inv.out}")


def _cmd_run(inv: CliInvocation) -> None:
    cfg = inv.config
    objective = get_objective(cfg.objective)
    trace = run_bo(objective, cfg, cfg.seed)
    inv.out.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.objective}_{cfg.acquisition}"
    write_runs_csv([trace], inv.out / f"{stem}_runs.csv", objective.dimension)
    if inv.trace_out is not None:
        lines = []
        for rec in trace.steps:
            if rec.ves is None:
                continue
            lines.append(json.dumps({"step": rec.step, **rec.ves}, sort_keys=True))
        _atomic_write_text(inv.trace_out, "\n".join(lines) + ("\n" if lines else ""))
    status = "complete" if trace.complete else "incomplete"
    last = trace.steps[-1].log_regret if trace.steps else float("nan")
    print(f"{cfg.objective} {cfg.acquisition} seed {cfg.seed}: {status}, "
          f"final log regret {last:.3f} -> {inv.out}")


def _field_csv(grid: SampleGrid, values: np.ndarray) -> str:
    coords = ",".join(f"x{i + 1}" for i in range(grid.dimension))
    lines = [f"{coords},value"]
    for point, val in zip(grid.points, values):
        xs = ",".join(_fmt(v) for v in point)
        lines.append(f"{xs},{_fmt(val)}")
    return "\n".join(lines) + "\n"


def _cmd_dump_acq(inv: CliInvocation) -> None:
    cfg = inv.config
    objective, grid, sample_grid, gp, incumbent = _snapshot(cfg)
    step_seed = derive_seed(cfg.seed, 1)
    acq = cfg.acquisition
    if acq == "ei":
        fld = ei_field(gp, grid, incumbent)
    elif acq == "mes":
        batch = sample_paths(gp, sample_grid, cfg.paths, step_seed)
        n_mv = batch.n_paths if cfg.mes_samples == 0 else min(cfg.mes_samples, batch.n_paths)
        fld = mes_field(gp, grid, batch.path_max[:n_mv])
    elif acq in ("ves_gamma", "ves_exp"):
        select = ves_gamma_select if acq == "ves_gamma" else ves_exp_select
        family = "gamma" if acq == "ves_gamma" else "exponential"
        fld = select(gp, grid, incumbent, _ves_config(cfg, family), step_seed).field
    else:
        raise ConfigError("acquisition", f"no field dump for {acq!r}")
    inv.out.mkdir(parents=True, exist_ok=True)
    path = inv.out / f"{cfg.objective}_{acq}_field.csv"
    _atomic_write_text(path, _field_csv(grid, fld.values))
    print(f"wrote {path}")


def _cmd_dump_samples(inv: CliInvocation) -> None:
    cfg = inv.config
    if inv.x is None:
        raise ConfigError("x", "dump-samples requires --x")
    objective, grid, sample_grid, gp, _ = _snapshot(cfg)
    if len(inv.x) != objective.dimension:
        raise ConfigError("x", f"expected {objective.dimension} coordinates, got {len(inv.x)}")
    batch = sample_paths(gp, sample_grid, cfg.paths, derive_seed(cfg.seed, 1))
    node = int(np.argmin(np.linalg.norm(sample_grid.points - np.asarray(inv.x), axis=1)))
    pairs = sample_pairs(batch, node)
    lines = ["y_star,y_x"] + [f"{_fmt(a)},{_fmt(b)}" for a, b in pairs]
    inv.out.mkdir(parents=True, exist_ok=True)
    path = inv.out / f"{cfg.objective}_samples.csv"
    _atomic_write_text(path, "\n".join(lines) + "\n")
    snapped = ",".join(_fmt(v) for v in sample_grid.points[node])
    print(f"wrote {path} (candidate snapped to grid node [{snapped}])")


def _cmd_list_objectives() -> None:
    for obj in objective_registry():
        box = " x ".join(f"[{lo:g}, {hi:g}]" for lo, hi in obj.domain)
        print(f"{obj.name}: d={obj.dimension}, domain {box}, max {obj.f_star:g}")


def execute(inv: CliInvocation) -> int:
    """Run a validated invocation; map failures onto exit codes."""
    try:
        if inv.subcommand == "bench":
            _cmd_bench(inv)
        elif inv.subcommand == "run":
            _cmd_run(inv)
        elif inv.subcommand == "dump-acq":
            _cmd_dump_acq(inv)
        elif inv.subcommand == "dump-samples":
            _cmd_dump_samples(inv)
        elif inv.subcommand == "list-objectives":
            _cmd_list_objectives()
        else:
            raise ConfigError("subcommand", f"unknown subcommand {inv.subcommand!r}")
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    except VesboError as exc:
        print(
            f"computation error [{type(exc).__module__}.{type(exc).__name__}]: {exc}",
            file=sys.stderr,
        )
        return 4


def main(argv=None) -> None:
    try:
        inv = parse_and_validate(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(2)
    sys.exit(execute(inv))


if __name__ == "__main__":
    main()
