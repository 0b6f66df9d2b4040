"""Joint posterior path sampling over a grid, and improvement-gap moments.

A path batch is a set of P joint draws of the GP posterior over the grid
nodes; the maximum of each draw serves as one sample of the function's
best value.  Because every candidate node shares the same paths, the
per-node gap statistics are coupled exactly as the joint density of
(best value, candidate value) requires.

Sampling is deterministic given the seed; batches are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import GridDegeneracyError, SingularDataError
from .gp import GpPosterior, _chol_with_jitter, posterior_cov, posterior_mean_var

__all__ = [
    "SampleGrid",
    "PathBatch",
    "GapMoments",
    "GapMomentsField",
    "derive_seed",
    "sample_paths",
    "gap_moments",
    "gap_moments_all",
    "nearest_node_map",
    "sample_pairs",
]


#: Floor applied to gaps before taking logarithms.  A path whose argmax
#: coincides with the candidate node has an exactly zero gap; the floor
#: keeps the log moment finite.
DEFAULT_CLAMP_EPS = 1e-12


def derive_seed(*parts: int) -> int:
    """Stable child seed from integer coordinates (e.g. run, step).

    Hashing through a seed sequence keeps streams for different
    coordinates independent while staying reproducible across processes.
    """
    ss = np.random.SeedSequence([int(p) for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SampleGrid:
    """Ordered grid nodes over the search domain.

    ``points`` has shape (G, d).  For regular grids the node index runs in
    C order (first coordinate varies slowest), which fixes the
    deterministic lowest-index tie-breaking used by every argmax.
    """

    points: np.ndarray
    resolution: tuple[int, ...]

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "resolution", tuple(int(r) for r in self.resolution))
        if pts.shape[0] < 1:
            raise ValueError("grid needs at least one node")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def bounds(self) -> list[tuple[float, float]]:
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return [(float(a), float(b)) for a, b in zip(lo, hi)]

    @classmethod
    def regular(cls, bounds, resolution) -> "SampleGrid":
        """Tensor-product grid of ``resolution`` nodes over a box."""
        resolution = tuple(int(r) for r in resolution)
        if len(bounds) != len(resolution):
            raise ValueError("bounds and resolution must have equal length")
        if any(r < 2 for r in resolution):
            raise ValueError("need at least 2 nodes per dimension")
        axes = [np.linspace(lo, hi, r) for (lo, hi), r in zip(bounds, resolution)]
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        return cls(points=points, resolution=resolution)


@dataclass(frozen=True)
class PathBatch:
    """P joint posterior draws over the grid, with per-path maxima."""

    values: np.ndarray
    path_max: np.ndarray
    seed: int

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] < 2:
            raise ValueError("path batch requires a (P, G) matrix with P >= 2")
        if not np.array_equal(self.path_max, self.values.max(axis=1)):
            raise ValueError("path_max must equal the row maxima of values")

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class GapMoments:
    """Sample moments of the clamped improvement gap at one node."""

    mean_gap: float
    mean_log_gap: float
    n_clamped: int


class GapMomentsField:
    """Gap moments for every grid node, array-backed.

    Indexing returns the scalar ``GapMoments`` of one node, computed by
    the same reduction as :func:`gap_moments`.
    """

    __slots__ = ("mean_gap", "mean_log_gap", "n_clamped")

    def __init__(self, mean_gap: np.ndarray, mean_log_gap: np.ndarray, n_clamped: np.ndarray):
        self.mean_gap = mean_gap
        self.mean_log_gap = mean_log_gap
        self.n_clamped = n_clamped

    def __len__(self) -> int:
        return self.mean_gap.shape[0]

    def __getitem__(self, node: int) -> GapMoments:
        return GapMoments(
            mean_gap=float(self.mean_gap[node]),
            mean_log_gap=float(self.mean_log_gap[node]),
            n_clamped=int(self.n_clamped[node]),
        )

    def take(self, indices: np.ndarray) -> "GapMomentsField":
        """Field re-indexed onto another grid (nearest-node assignment)."""
        return GapMomentsField(
            mean_gap=self.mean_gap[indices],
            mean_log_gap=self.mean_log_gap[indices],
            n_clamped=self.n_clamped[indices],
        )


def sample_paths(gp: GpPosterior, grid: SampleGrid, n_paths: int, seed: int) -> PathBatch:
    """Draw ``n_paths`` joint posterior samples over the grid nodes.

    Uses one Cholesky factorization of the G x G posterior covariance
    (with the same escalating jitter ladder as model fitting).  The draw
    is deterministic given ``seed``.

    Raises
    ------
    GridDegeneracyError
        If the covariance cannot be factorized within the jitter ladder.
    """
    if n_paths < 2:
        raise ValueError(f"need at least 2 paths, got {n_paths}")
    mean, _ = posterior_mean_var(gp, grid.points)
    cov = posterior_cov(gp, grid.points)
    try:
        L, _ = _chol_with_jitter(cov, gp.params.sigma_f**2)
    except SingularDataError as exc:
        raise GridDegeneracyError(str(exc)) from None
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((len(grid), n_paths))
    # (P, G) with Fortran layout: node columns stay contiguous, so the
    # per-node reductions below match the vectorized field computation
    # bit for bit.
    values = (mean[:, None] + L @ z).T
    return PathBatch(values=values, path_max=values.max(axis=1), seed=seed)


def _node_moments(column: np.ndarray, path_max: np.ndarray, incumbent: float, eps: float):
    raw = path_max - np.maximum(column, incumbent)
    gaps = np.maximum(raw, eps)
    mean_gap = max(float(gaps.mean()), eps)
    mean_log_gap = max(float(np.log(gaps).mean()), np.log(eps))
    return mean_gap, mean_log_gap, int((raw < eps).sum())


def gap_moments(
    batch: PathBatch, x_index: int, incumbent: float, eps: float = DEFAULT_CLAMP_EPS
) -> GapMoments:
    """Mean and mean-log of max(y_best - max(y_node, incumbent), eps).

    ``n_clamped`` counts the paths whose raw gap fell below the floor
    (typically the paths whose argmax is the node itself).
    """
    if eps <= 0:
        raise ValueError(f"clamp floor must be positive, got {eps}")
    column = np.ascontiguousarray(batch.values[:, x_index])
    mg, mlg, nc = _node_moments(column, batch.path_max, incumbent, eps)
    return GapMoments(mean_gap=mg, mean_log_gap=mlg, n_clamped=nc)


def gap_moments_all(
    batch: PathBatch, incumbent: float, eps: float = DEFAULT_CLAMP_EPS
) -> GapMomentsField:
    """Gap moments at every grid node, sharing the batch's paths."""
    if eps <= 0:
        raise ValueError(f"clamp floor must be positive, got {eps}")
    n_nodes = batch.n_nodes
    mean_gap = np.empty(n_nodes)
    mean_log_gap = np.empty(n_nodes)
    n_clamped = np.empty(n_nodes, dtype=np.int64)
    path_max = batch.path_max
    for g in range(n_nodes):
        column = np.ascontiguousarray(batch.values[:, g])
        mean_gap[g], mean_log_gap[g], n_clamped[g] = _node_moments(
            column, path_max, incumbent, eps
        )
    return GapMomentsField(mean_gap, mean_log_gap, n_clamped)


def nearest_node_map(sample_grid: SampleGrid, query_grid: SampleGrid) -> np.ndarray:
    """Index of the nearest sampling node for every query node."""
    _, idx = cKDTree(sample_grid.points).query(query_grid.points)
    return np.asarray(idx, dtype=np.int64)


_PLAN_CACHE: dict = {}


def sampling_plan(
    grid: SampleGrid, sampler: str, coarse_resolution: int
) -> tuple[SampleGrid, np.ndarray | None]:
    """Grid paths are drawn on, plus the nearest-node map back onto ``grid``.

    ``exact`` samples on the candidate grid itself (map is None).
    ``coarse`` samples on a regular ``coarse_resolution``-per-dimension
    grid over the same box and assigns each candidate node the moments of
    its nearest sampling node.  Plans are cached per grid geometry since
    they are reused at every optimization step.
    """
    if sampler == "exact":
        return grid, None
    if sampler != "coarse":
        raise ValueError(f"unknown sampler {sampler!r}")
    key = (
        grid.resolution,
        tuple(grid.bounds),
        int(coarse_resolution),
    )
    cached = _PLAN_CACHE.get(key)
    if cached is None:
        sample_grid = SampleGrid.regular(
            grid.bounds, (int(coarse_resolution),) * grid.dimension
        )
        cached = (sample_grid, nearest_node_map(sample_grid, grid))
        _PLAN_CACHE[key] = cached
    return cached


def sample_pairs(batch: PathBatch, x_index: int) -> np.ndarray:
    """(P, 2) array of (best-value, node-value) sample pairs at one node."""
    return np.column_stack([batch.path_max, batch.values[:, x_index]])
