"""The particle swarm optimiser on standard test functions."""

import numpy as np

from gridbatt import SearchSpace, SwarmConfig, optimize


def sphere(x):
    return float(np.sum(np.square(x)))


def rosenbrock(x):
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1 - x[:-1]) ** 2))


def rastrigin(x):
    return float(10 * len(x) + np.sum(x**2 - 10 * np.cos(2 * np.pi * x)))


res = optimize(sphere, SearchSpace.box(-5.12, 5.12, 10), SwarmConfig(seed=0))
print(f"sphere:     {res.best_cost:.2e} after {res.evaluations} evaluations ({res.stopped_by})")

res = optimize(rosenbrock, SearchSpace.box(-2, 2, 2), SwarmConfig(seed=0, stall_iters=300))
print("rosenbrock:", np.round(res.best_position, 5), f"{res.best_cost:.2e}")

res = optimize(rastrigin, SearchSpace.box(-5.12, 5.12, 5), SwarmConfig(seed=0))
print(f"rastrigin:  {res.best_cost:.4f} (local minima are common here)")

# The best cost never rises
h = np.array(res.history)
print("history non-increasing:", bool(np.all(np.diff(h) <= 0)), "length", len(h))
