"""Benchmark objectives in maximization form.

The classic minimization test functions are negated so that every
objective has a known maximum f_star = 0, which the regret metric needs.
Each objective exposes a scalar ``eval`` and a vectorized ``batch_eval``;
registration spot-checks the declared maximum on 1e5 random points.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

__all__ = ["Objective", "objective_registry", "get_objective"]


@dataclass(frozen=True)
class Objective:
    name: str
    dimension: int
    domain: tuple[tuple[float, float], ...]
    batch_eval: Callable[[np.ndarray], np.ndarray]
    f_star: float

    def eval(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return float(self.batch_eval(x)[0])


def _rosenbrock(X: np.ndarray) -> np.ndarray:
    # max 0 at (1, 1)
    x, y = X[:, 0], X[:, 1]
    return -((1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2)


def _three_hump_camel(X: np.ndarray) -> np.ndarray:
    # max 0 at (0, 0)
    x, y = X[:, 0], X[:, 1]
    return -(2.0 * x**2 - 1.05 * x**4 + x**6 / 6.0 + x * y + y**2)


def _himmelblau(X: np.ndarray) -> np.ndarray:
    # max 0 at (3, 2), (-2.805118, 3.131312), (-3.779310, -3.283186),
    # (3.584428, -1.848126)
    x, y = X[:, 0], X[:, 1]
    return -((x * x + y - 11.0) ** 2 + (x + y * y - 7.0) ** 2)


_SPECS = (
    ("rosenbrock", _rosenbrock, ((-2.0, 2.0), (-2.0, 2.0))),
    ("three_hump_camel", _three_hump_camel, ((-2.0, 2.0), (-2.0, 2.0))),
    ("himmelblau", _himmelblau, ((-5.0, 5.0), (-5.0, 5.0))),
)

_SPOT_CHECK_POINTS = 100_000


def _spot_check(obj: Objective, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    lo = np.array([d[0] for d in obj.domain])
    hi = np.array([d[1] for d in obj.domain])
    pts = lo + rng.random((_SPOT_CHECK_POINTS, obj.dimension)) * (hi - lo)
    worst = float(obj.batch_eval(pts).max())
    if worst > obj.f_star:
        raise ValueError(
            f"{obj.name}: sampled value {worst} exceeds declared maximum {obj.f_star}"
        )


@lru_cache(maxsize=1)
def objective_registry() -> tuple[Objective, ...]:
    """All registered objectives, validated once per process."""
    objs = tuple(
        Objective(name=name, dimension=2, domain=domain, batch_eval=fn, f_star=0.0)
        for name, fn, domain in _SPECS
    )
    for obj in objs:
        _spot_check(obj)
    return objs


def get_objective(name: str) -> Objective:
    for obj in objective_registry():
        if obj.name == name:
            return obj
    known = ", ".join(o.name for o in objective_registry())
    raise KeyError(f"unknown objective {name!r}; known: {known}")
