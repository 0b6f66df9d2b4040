"""Benchmark harness: the optimization loop, regret metric, and experiments.

One run draws a few uniform initial observations, then repeats: fit
kernel hyperparameters by MLE (on standardized values by default), fit
the posterior, pick the next grid node with the configured acquisition,
and evaluate the objective without noise.  Repeats differ only in their
seed (base seed + run index) and may execute in parallel; results are
identical regardless of worker count.
"""

from __future__ import annotations

import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .acquisition import ei_field, mes_field
from .errors import ConfigError, InvalidFStarError, VesboError
from .gp import Dataset, fit_hyperparameters, fit_posterior
from .objectives import Objective, get_objective, objective_registry
from .sampling import SampleGrid, derive_seed, sample_paths, sampling_plan
from .ves import VesConfig, ves_exp_select, ves_gamma_select

__all__ = [
    "ACQUISITIONS",
    "REGRET_FLOOR",
    "ExperimentConfig",
    "StepRecord",
    "RegretTrace",
    "ExperimentAggregate",
    "log_regret",
    "run_bo",
    "run_experiment",
    "write_runs_csv",
    "write_aggregate_csv",
]

logger = logging.getLogger(__name__)

ACQUISITIONS = ("ei", "mes", "ves_gamma", "ves_exp", "random")

#: Regret reported once the optimum is matched to double precision.
REGRET_FLOOR = -16.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one benchmark experiment."""

    objective: str
    acquisition: str
    steps: int
    repeats: int = 10
    grid: tuple[int, ...] = (101, 101)
    paths: int = 1024
    init_points: int = 2
    seed: int = 0
    standardize: bool = True
    sampler: str = "exact"
    coarse_grid: int = 41
    ves_max_iters: int = 10
    ves_resample: bool = False
    mes_samples: int = 128

    def validate(self) -> None:
        names = tuple(o.name for o in objective_registry())
        if self.objective not in names:
            raise ConfigError("objective", f"must be one of {names}, got {self.objective!r}")
        if self.acquisition not in ACQUISITIONS:
            raise ConfigError(
                "acquisition", f"must be one of {ACQUISITIONS}, got {self.acquisition!r}"
            )
        if self.steps < 1:
            raise ConfigError("steps", f"must be >= 1, got {self.steps}")
        if self.repeats < 1:
            raise ConfigError("repeats", f"must be >= 1, got {self.repeats}")
        if len(self.grid) < 1 or any(r < 2 for r in self.grid):
            raise ConfigError("grid", f"needs >= 2 nodes per dimension, got {self.grid}")
        if self.paths < 2:
            raise ConfigError("paths", f"must be >= 2, got {self.paths}")
        if self.init_points < 1:
            raise ConfigError("init_points", f"must be >= 1, got {self.init_points}")
        if self.seed < 0:
            raise ConfigError("seed", f"must be >= 0, got {self.seed}")
        if self.sampler not in ("exact", "coarse"):
            raise ConfigError("sampler", f"must be 'exact' or 'coarse', got {self.sampler!r}")
        if self.coarse_grid < 2:
            raise ConfigError("coarse_grid", f"must be >= 2, got {self.coarse_grid}")
        if self.ves_max_iters < 1:
            raise ConfigError("ves_max_iters", f"must be >= 1, got {self.ves_max_iters}")
        if self.mes_samples < 0:
            raise ConfigError("mes_samples", f"must be >= 0 (0 = all), got {self.mes_samples}")


@dataclass(frozen=True)
class StepRecord:
    """One optimization step: evaluated point and running regret."""

    step: int
    x: np.ndarray
    y: float
    best_y: float
    log_regret: float
    ves: dict | None = None


@dataclass(frozen=True)
class RegretTrace:
    """Per-step record of one seeded run."""

    acquisition: str
    seed: int
    steps: list[StepRecord] = dc_field(repr=False)
    complete: bool = True


@dataclass(frozen=True)
class ExperimentAggregate:
    """Per-step mean and standard deviation of log regret over repeats."""

    acquisition: str
    steps: np.ndarray
    mean_log_regret: np.ndarray
    std_log_regret: np.ndarray


def log_regret(best_y: float, f_star: float) -> float:
    """log(f_star - best_y), floored at -16 once the gap hits machine scale."""
    if best_y > f_star + 1e-12:
        raise InvalidFStarError(
            f"observed value {best_y} exceeds declared maximum {f_star}"
        )
    gap = f_star - best_y
    if gap <= math.exp(REGRET_FLOOR):
        return REGRET_FLOOR
    return math.log(gap)


def _standardized(values: np.ndarray, enabled: bool) -> np.ndarray:
    if not enabled or values.size < 2:
        return values
    scale = float(values.std())
    if scale == 0.0:
        scale = 1.0
    return (values - float(values.mean())) / scale


def _pick_unobserved(values: np.ndarray, observed: np.ndarray) -> int:
    """Best-scoring node that has not been evaluated yet (lowest-index ties)."""
    if observed.all():
        raise VesboError("all grid nodes have been evaluated")
    masked = np.where(observed, -np.inf, values)
    return int(np.argmax(masked))


def _ves_config(cfg: ExperimentConfig, family: str) -> VesConfig:
    return VesConfig(
        max_iters=cfg.ves_max_iters,
        paths=cfg.paths,
        resample_per_iter=cfg.ves_resample,
        family=family,
        sampler=cfg.sampler,
        coarse_resolution=cfg.coarse_grid,
    )


def _select_node(
    cfg: ExperimentConfig,
    gp,
    grid: SampleGrid,
    sample_grid: SampleGrid,
    incumbent: float,
    observed: np.ndarray,
    step_seed: int,
):
    """Next grid node index for the configured acquisition, plus trace info."""
    acq = cfg.acquisition
    if acq == "random":
        rng = np.random.default_rng(derive_seed(step_seed, 1))
        free = np.flatnonzero(~observed)
        return int(free[rng.integers(free.size)]), None
    if acq == "ei":
        fld = ei_field(gp, grid, incumbent)
        return _pick_unobserved(fld.values, observed), None
    if acq == "mes":
        batch = sample_paths(gp, sample_grid, cfg.paths, step_seed)
        n_mv = batch.n_paths if cfg.mes_samples == 0 else min(cfg.mes_samples, batch.n_paths)
        fld = mes_field(gp, grid, batch.path_max[:n_mv])
        return _pick_unobserved(fld.values, observed), None
    select = ves_gamma_select if acq == "ves_gamma" else ves_exp_select
    family = "gamma" if acq == "ves_gamma" else "exponential"
    result = select(gp, grid, incumbent, _ves_config(cfg, family), step_seed)
    info = {
        "iterations": result.iterations_used,
        "k": result.k_final,
        "beta": result.beta_final,
        "x_selected": [float(v) for v in result.x_selected],
        "eslb_max": float(result.field.values[result.field.argmax_index]),
    }
    return _pick_unobserved(result.field.values, observed), info


def run_bo(objective: Objective, cfg: ExperimentConfig, seed: int) -> RegretTrace:
    """One seeded optimization run of ``cfg.steps`` evaluations.

    A failed step (singular data, degenerate grid, ...) aborts the run;
    the partial trace is returned with ``complete=False``.
    """
    cfg.validate()
    if len(cfg.grid) != objective.dimension:
        raise ConfigError(
            "grid", f"{len(cfg.grid)} dims for a {objective.dimension}-d objective"
        )
    grid = SampleGrid.regular(objective.domain, cfg.grid)
    sample_grid, _ = sampling_plan(grid, cfg.sampler, cfg.coarse_grid)

    lo = np.array([d[0] for d in objective.domain])
    hi = np.array([d[1] for d in objective.domain])
    rng = np.random.default_rng(derive_seed(seed, 0))
    X = lo + rng.random((cfg.init_points, objective.dimension)) * (hi - lo)
    ys = [float(v) for v in objective.batch_eval(X)]

    observed = np.zeros(len(grid), dtype=bool)
    records: list[StepRecord] = []
    complete = True
    best = max(ys)
    for t in range(1, cfg.steps + 1):
        try:
            y_arr = np.asarray(ys)
            data = Dataset(X, _standardized(y_arr, cfg.standardize))
            gp = fit_posterior(data, fit_hyperparameters(data))
            incumbent = data.incumbent()
            idx, ves_info = _select_node(
                cfg, gp, grid, sample_grid, incumbent, observed, derive_seed(seed, t)
            )
            x_next = grid.points[idx]
            y_next = objective.eval(x_next)
            X = np.vstack([X, x_next[None, :]])
            ys.append(y_next)
            observed[idx] = True
            best = max(best, y_next)
            records.append(
                StepRecord(
                    step=t,
                    x=x_next.copy(),
                    y=y_next,
                    best_y=best,
                    log_regret=log_regret(best, objective.f_star),
                    ves=ves_info,
                )
            )
        except VesboError as exc:
            logger.warning("run (seed %d) aborted at step %d: %s", seed, t, exc)
            complete = False
            break
    return RegretTrace(
        acquisition=cfg.acquisition, seed=seed, steps=records, complete=complete
    )


def _run_for_seed(args) -> RegretTrace:
    cfg, seed = args
    return run_bo(get_objective(cfg.objective), cfg, seed)


def run_experiment(
    cfg: ExperimentConfig, out_dir=None, jobs: int = 1
) -> tuple[list[RegretTrace], ExperimentAggregate]:
    """Run ``cfg.repeats`` independent seeded runs and aggregate regret.

    Run r uses seed ``cfg.seed + r``.  With ``jobs > 1`` repeats execute
    in worker processes; outputs are byte-identical either way because
    each run is fully determined by its own seed and results are ordered
    by run index.  CSVs are written when ``out_dir`` is given.
    """
    cfg.validate()
    tasks = [(cfg, cfg.seed + r) for r in range(cfg.repeats)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(_run_for_seed, tasks))
    else:
        traces = [_run_for_seed(t) for t in tasks]

    steps = np.arange(1, cfg.steps + 1)
    mean = np.empty(cfg.steps)
    std = np.empty(cfg.steps)
    for i, t in enumerate(steps):
        at_t = [tr.steps[t - 1].log_regret for tr in traces if len(tr.steps) >= t]
        if not at_t:
            mean[i] = math.nan
            std[i] = math.nan
            continue
        arr = np.asarray(at_t)
        mean[i] = arr.mean()
        std[i] = arr.std()
    agg = ExperimentAggregate(
        acquisition=cfg.acquisition, steps=steps, mean_log_regret=mean, std_log_regret=std
    )

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{cfg.objective}_{cfg.acquisition}"
        write_runs_csv(traces, out / f"{stem}_runs.csv", get_objective(cfg.objective).dimension)
        write_aggregate_csv(agg, out / f"{stem}_agg.csv")
    return traces, agg


def _fmt(v: float) -> str:
    return repr(float(v))


def _atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_runs_csv(traces: list[RegretTrace], path, dimension: int) -> None:
    """Per-step rows for every run: acquisition,run,step,x1..xd,y,best_y,log_regret."""
    coords = ",".join(f"x{i + 1}" for i in range(dimension))
    lines = [f"acquisition,run,step,{coords},y,best_y,log_regret"]
    for run_index, trace in enumerate(traces):
        for rec in trace.steps:
            xs = ",".join(_fmt(v) for v in rec.x)
            lines.append(
                f"{trace.acquisition},{run_index},{rec.step},{xs},"
                f"{_fmt(rec.y)},{_fmt(rec.best_y)},{_fmt(rec.log_regret)}"
            )
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_aggregate_csv(agg: ExperimentAggregate, path) -> None:
    """Aggregate rows: acquisition,step,mean_log_regret,std_log_regret."""
    lines = ["acquisition,step,mean_log_regret,std_log_regret"]
    for t, m, s in zip(agg.steps, agg.mean_log_regret, agg.std_log_regret):
        lines.append(f"{agg.acquisition},{int(t)},{_fmt(m)},{_fmt(s)}")
    _atomic_write_text(path, "\n".join(lines) + "\n")
