"""Unit tests for the registered benchmark objectives."""

import numpy as np
import pytest

from vesbo.objectives import get_objective, objective_registry


def test_registry_contents():
    objs = {o.name: o for o in objective_registry()}
    assert set(objs) == {"rosenbrock", "three_hump_camel", "himmelblau"}
    assert objs["rosenbrock"].domain == ((-2.0, 2.0), (-2.0, 2.0))
    assert objs["three_hump_camel"].domain == ((-2.0, 2.0), (-2.0, 2.0))
    assert objs["himmelblau"].domain == ((-5.0, 5.0), (-5.0, 5.0))
    for o in objs.values():
        assert o.f_star == 0.0
        assert o.dimension == 2


@pytest.mark.parametrize(
    "name, xmax",
    [
        ("rosenbrock", (1.0, 1.0)),
        ("three_hump_camel", (0.0, 0.0)),
        ("himmelblau", (3.0, 2.0)),
    ],
)
def test_known_maximizer_attains_f_star(name, xmax):
    obj = get_objective(name)
    assert obj.eval(xmax) == 0.0


def test_himmelblau_other_maximizers():
    obj = get_objective("himmelblau")
    for x in [(-2.805118, 3.131312), (-3.779310, -3.283186), (3.584428, -1.848126)]:
        assert obj.eval(x) == pytest.approx(0.0, abs=1e-6)


def test_never_exceeds_declared_maximum():
    rng = np.random.default_rng(1)
    for obj in objective_registry():
        lo = np.array([d[0] for d in obj.domain])
        hi = np.array([d[1] for d in obj.domain])
        pts = lo + rng.random((10**6, 2)) * (hi - lo)
        assert obj.batch_eval(pts).max() <= obj.f_star


def test_unknown_name_raises():
    with pytest.raises(KeyError):
        get_objective("ackley")
