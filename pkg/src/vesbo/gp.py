"""Noise-free Gaussian process regression with a Matern 5/2 kernel.

The model interpolates exact observations: the posterior is conditioned on
(K + jitter*I) where jitter is the smallest ladder value that lets the
Cholesky factorization succeed.  Hyperparameters are fitted by maximum
log-likelihood over a log-spaced grid with golden-section refinement;
no kernel gradients are required.

All posterior objects are immutable after construction; concurrent reads
are safe.  Fitting never mutates an existing posterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.spatial.distance import cdist

from .errors import SingularDataError

__all__ = [
    "DEFAULT_BOUNDS",
    "Dataset",
    "KernelParams",
    "GpPosterior",
    "kernel_eval",
    "kernel_matrix",
    "fit_posterior",
    "posterior_mean",
    "posterior_mean_var",
    "posterior_cov",
    "log_marginal_likelihood",
    "fit_hyperparameters",
]

_SQRT5 = math.sqrt(5.0)

#: Hyperparameter box used by MLE fitting (applies after any output
#: standardization done by the caller).
DEFAULT_BOUNDS = ((1e-3, 1e3), (1e-3, 1e3))

_JITTER_BASE = 1e-10
_JITTER_MAX = 1e-4

_GRID_SIZE = 16
_GOLDEN_SWEEPS = 2


@dataclass(frozen=True)
class KernelParams:
    """Output scale and length scale of the Matern 5/2 kernel."""

    sigma_f: float
    sigma_l: float

    def __post_init__(self):
        if not (self.sigma_f > 0 and self.sigma_l > 0):
            raise ValueError(
                f"kernel parameters must be positive, got "
                f"sigma_f={self.sigma_f}, sigma_l={self.sigma_l}"
            )


class Dataset:
    """Observed inputs and their exact (noise-free) evaluations.

    Parameters
    ----------
    points : array-like, shape (n, d)
        Evaluated inputs.  Must be pairwise distinct: with noise-free
        conditioning a duplicated point makes the kernel matrix singular.
    values : array-like, shape (n,)
        Objective values at ``points``.
    """

    __slots__ = ("points", "values")

    def __init__(self, points, values):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = np.asarray(values, dtype=float).reshape(-1)
        if pts.shape[0] != vals.shape[0]:
            raise ValueError(
                f"points/values length mismatch: {pts.shape[0]} vs {vals.shape[0]}"
            )
        if pts.shape[0] < 1:
            raise ValueError("dataset needs at least one observation")
        self.points = pts
        self.values = vals

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def incumbent(self) -> float:
        """Best observed value so far."""
        return float(self.values.max())

    def extended(self, x, y: float) -> "Dataset":
        """New dataset with one more observation appended."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return Dataset(
            np.vstack([self.points, x]), np.append(self.values, float(y))
        )


def _matern52(dists: np.ndarray, sigma_f: float, sigma_l: float) -> np.ndarray:
    """Matern 5/2 covariance as a function of Euclidean distance."""
    s = (_SQRT5 / sigma_l) * dists
    return (sigma_f * sigma_f) * (1.0 + s + s * s / 3.0) * np.exp(-s)


def kernel_eval(params: KernelParams, x, x_other) -> float:
    """Kernel value between two input points."""
    x = np.asarray(x, dtype=float).reshape(-1)
    x_other = np.asarray(x_other, dtype=float).reshape(-1)
    if x.shape != x_other.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x_other.shape}")
    r = float(np.linalg.norm(x - x_other))
    return float(_matern52(np.asarray(r), params.sigma_f, params.sigma_l))


def kernel_matrix(params: KernelParams, X, X_other=None) -> np.ndarray:
    """Cross-covariance matrix K[i, j] = kernel(X[i], X_other[j]).

    With ``X_other`` omitted this is the Gram matrix of ``X`` (also the
    prior covariance of the latent function at those inputs).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    other = X if X_other is None else np.atleast_2d(np.asarray(X_other, dtype=float))
    return _matern52(cdist(X, other), params.sigma_f, params.sigma_l)


@dataclass(frozen=True)
class GpPosterior:
    """Fitted GP state: Cholesky factor and precomputed solves.

    ``chol`` is the lower-triangular factor of (K + jitter*I) over the
    training points and ``alpha`` solves (K + jitter*I) alpha = y.
    """

    data: Dataset
    params: KernelParams
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float


def _chol_with_jitter(K: np.ndarray, scale: float) -> tuple[np.ndarray, float]:
    """Cholesky of K + jitter*I, escalating jitter tenfold until success."""
    jitter = _JITTER_BASE * scale
    limit = _JITTER_MAX * scale
    eye = np.eye(K.shape[0])
    while True:
        try:
            return np.linalg.cholesky(K + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > limit * (1.0 + 1e-12):
                raise SingularDataError(
                    f"factorization failed up to jitter {limit:.3e}; "
                    "points are likely duplicated or nearly coincident"
                ) from None


def fit_posterior(data: Dataset, params: KernelParams) -> GpPosterior:
    """Condition the GP on the dataset.

    Raises
    ------
    SingularDataError
        If the dataset contains duplicate points or the kernel matrix
        cannot be factorized within the jitter ladder.
    """
    dists = cdist(data.points, data.points)
    n = len(data)
    if n > 1:
        off_diag = dists[~np.eye(n, dtype=bool)]
        if off_diag.size and off_diag.min() == 0.0:
            raise SingularDataError("dataset contains duplicate points")
    K = _matern52(dists, params.sigma_f, params.sigma_l)
    L, jitter = _chol_with_jitter(K, params.sigma_f**2)
    alpha = solve_triangular(
        L.T, solve_triangular(L, data.values, lower=True), lower=False
    )
    return GpPosterior(data=data, params=params, chol=L, alpha=alpha, jitter=jitter)


def posterior_mean(gp: GpPosterior, x) -> float:
    """Predictive mean at a single point (zero prior mean)."""
    k = kernel_matrix(gp.params, gp.data.points, np.asarray(x, dtype=float).reshape(1, -1))
    return float(k[:, 0] @ gp.alpha)


def posterior_mean_var(gp: GpPosterior, X) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise predictive mean and variance at each row of X.

    The variance is clamped to be nonnegative; the tiny negative values
    that exact interpolation produces at training points are rounding
    artifacts of the jitter-regularized solve.
    """
    K_cross = kernel_matrix(gp.params, gp.data.points, X)
    mean = K_cross.T @ gp.alpha
    v = solve_triangular(gp.chol, K_cross, lower=True)
    var = gp.params.sigma_f**2 - np.einsum("ij,ij->j", v, v)
    return mean, np.maximum(var, 0.0)


def posterior_cov(gp: GpPosterior, X) -> np.ndarray:
    """Full predictive covariance over the rows of X (diagonal clamped >= 0)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    K_cross = kernel_matrix(gp.params, gp.data.points, X)
    v = solve_triangular(gp.chol, K_cross, lower=True)
    cov = kernel_matrix(gp.params, X) - v.T @ v
    np.fill_diagonal(cov, np.maximum(np.diagonal(cov), 0.0))
    return cov


def _lml_from_chol(L: np.ndarray, y: np.ndarray, alpha: np.ndarray) -> float:
    n = y.shape[0]
    return float(
        -0.5 * (y @ alpha)
        - np.log(np.diagonal(L)).sum()
        - 0.5 * n * math.log(2.0 * math.pi)
    )


def log_marginal_likelihood(data: Dataset, params: KernelParams) -> float:
    """Log evidence of the data under the (jitter-regularized) prior."""
    gp = fit_posterior(data, params)
    return _lml_from_chol(gp.chol, data.values, gp.alpha)


def _lml_from_dists(dists: np.ndarray, y: np.ndarray, sigma_f: float, sigma_l: float) -> float:
    """Likelihood evaluation on a precomputed distance matrix; -inf on failure."""
    K = _matern52(dists, sigma_f, sigma_l)
    try:
        L, _ = _chol_with_jitter(K, sigma_f**2)
    except SingularDataError:
        return -math.inf
    alpha = solve_triangular(L.T, solve_triangular(L, y, lower=True), lower=False)
    return _lml_from_chol(L, y, alpha)


_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(fun, lo: float, hi: float, iters: int = 40) -> tuple[float, float]:
    """Golden-section maximization of a unimodal-ish scalar function."""
    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = fun(d)
    return (c, fc) if fc >= fd else (d, fd)


def fit_hyperparameters(data: Dataset, bounds=DEFAULT_BOUNDS) -> KernelParams:
    """MLE kernel parameters over a bounded box.

    Evaluates the likelihood on a 16x16 log-spaced grid, then refines the
    best cell by coordinate-wise golden section on log-parameters.  The
    result never scores below the best grid point.  With a single
    observation the likelihood carries no length-scale information and the
    defaults (1, 1), clipped to the bounds, are returned.
    """
    (f_lo, f_hi), (l_lo, l_hi) = bounds
    clip = lambda v, lo, hi: min(max(v, lo), hi)
    if len(data) < 2:
        return KernelParams(clip(1.0, f_lo, f_hi), clip(1.0, l_lo, l_hi))

    dists = cdist(data.points, data.points)
    y = data.values
    lml = lambda lf, ll: _lml_from_dists(dists, y, 10.0**lf, 10.0**ll)

    log_f = np.linspace(math.log10(f_lo), math.log10(f_hi), _GRID_SIZE)
    log_l = np.linspace(math.log10(l_lo), math.log10(l_hi), _GRID_SIZE)
    best_val = -math.inf
    best = (log_f[0], log_l[0])
    for lf in log_f:
        for ll in log_l:
            val = lml(lf, ll)
            if val > best_val:
                best_val, best = val, (lf, ll)

    # Refine within one grid step of the best cell, coordinate by coordinate.
    step_f = (log_f[-1] - log_f[0]) / (_GRID_SIZE - 1)
    step_l = (log_l[-1] - log_l[0]) / (_GRID_SIZE - 1)
    cur_f, cur_l = best
    cur_val = best_val
    for _ in range(_GOLDEN_SWEEPS):
        lo = max(cur_f - step_f, log_f[0])
        hi = min(cur_f + step_f, log_f[-1])
        x, val = _golden_max(lambda lf: lml(lf, cur_l), lo, hi)
        if val > cur_val:
            cur_f, cur_val = x, val
        lo = max(cur_l - step_l, log_l[0])
        hi = min(cur_l + step_l, log_l[-1])
        x, val = _golden_max(lambda ll: lml(cur_f, ll), lo, hi)
        if val > cur_val:
            cur_l, cur_val = x, val

    if not math.isfinite(cur_val) or cur_val < best_val:
        cur_f, cur_l = best
    return KernelParams(
        clip(10.0**cur_f, f_lo, f_hi), clip(10.0**cur_l, l_lo, l_hi)
    )
