import io
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridbatt import SearchSpace, SwarmConfig, optimize
from gridbatt.errors import ConfigurationError


def sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


def rosenbrock(x):
    x = np.asarray(x)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1 - x[:-1]) ** 2))


def test_sphere_converges():
    res = optimize(sphere, SearchSpace.box(-5.12, 5.12, 10), SwarmConfig(seed=1))
    assert res.best_cost < 1e-6


def test_rosenbrock_2d():
    res = optimize(rosenbrock, SearchSpace.box(-2.0, 2.0, 2), SwarmConfig(seed=3, stall_iters=300))
    assert np.allclose(res.best_position, [1.0, 1.0], atol=1e-3)


def test_fixed_seed_is_bit_identical():
    cfg = SwarmConfig(particles=15, iterations=40, seed=11)
    a = optimize(rosenbrock, SearchSpace.box(-2, 2, 4), cfg)
    b = optimize(rosenbrock, SearchSpace.box(-2, 2, 4), cfg)
    assert a.best_cost == b.best_cost
    assert np.array_equal(a.best_position, b.best_position)
    assert a.history == b.history


def test_parallel_map_gives_same_result():
    cfg = SwarmConfig(particles=12, iterations=30, seed=5)
    serial = optimize(sphere, SearchSpace.box(-1, 1, 6), cfg)
    with ThreadPoolExecutor(4) as pool:
        par = optimize(sphere, SearchSpace.box(-1, 1, 6), cfg, map_fn=pool.map)
    assert serial.history == par.history


def test_evaluation_count_and_history_length():
    cfg = SwarmConfig(particles=8, iterations=25, seed=0, stall_iters=1000)
    res = optimize(sphere, SearchSpace.box(-1, 1, 3), cfg)
    assert res.evaluations == 8 * 26
    assert len(res.history) == 26
    assert res.stopped_by == "iterations"


def test_stall_stop():
    res = optimize(lambda x: 1.0, SearchSpace.box(-1, 1, 2), SwarmConfig(stall_iters=5))
    assert res.stopped_by == "stall"
    assert res.iterations == 5


def test_initial_position_is_used():
    target = np.array([0.3, -0.2])
    f = lambda x: float(np.sum((np.asarray(x) - target) ** 2))  # noqa: E731
    res = optimize(f, SearchSpace.box(-1, 1, 2), SwarmConfig(particles=4, iterations=0), initial=[target])
    assert res.best_cost == 0.0


def test_non_finite_costs_are_worst():
    f = lambda x: float("nan") if x[0] > 0 else float(x[0] ** 2)  # noqa: E731
    res = optimize(f, SearchSpace.box(-1, 1, 1), SwarmConfig(particles=10, iterations=20))
    assert np.isfinite(res.best_cost)


def test_progress_stream():
    buf = io.StringIO()
    optimize(sphere, SearchSpace.box(-1, 1, 2), SwarmConfig(particles=4, iterations=3, stall_iters=10), progress=buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 4
    assert lines[-1].split(",")[2] == "16"


def test_dimension_mismatch():
    class F:
        dimension = 3

        def __call__(self, x):
            return 0.0

    with pytest.raises(ConfigurationError):
        optimize(F(), SearchSpace.box(-1, 1, 2))


@pytest.mark.parametrize("bad", [dict(particles=1), dict(inertia_w=1.5), dict(v_max_frac=0), dict(c1=-1)])
def test_config_validation(bad):
    with pytest.raises(ConfigurationError):
        SwarmConfig(**bad)


def test_space_validation():
    with pytest.raises(ConfigurationError):
        SearchSpace(np.array([0.0, 1.0]), np.array([1.0, 1.0]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_history_non_increasing_and_in_bounds(seed, d):
    seen = []

    def f(x):
        seen.append(np.array(x))
        return rosenbrock(np.r_[x, 0.0])

    space = SearchSpace(np.full(d, -1.5), np.linspace(0.5, 2.0, d))
    res = optimize(f, space, SwarmConfig(particles=6, iterations=15, seed=seed))
    assert all(b <= a for a, b in zip(res.history, res.history[1:]))
    pts = np.array(seen)
    assert np.all(pts >= space.lower) and np.all(pts <= space.upper)
    assert res.best_cost == min(res.history)
