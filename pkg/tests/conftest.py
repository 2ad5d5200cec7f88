from __future__ import annotations

import math
import random

import pytest

from octsynth.core import ProblemParams, Slope, Trajectory, characteristic_rho


def draw_params(rng: random.Random, *, lam_frac=(0.1, 0.9), t0_max: float = 2.0) -> ProblemParams:
    """Random valid instance; horizons straddle every clause threshold.

    ``x0`` hits the endpoints +-1 with positive probability and the horizon is
    drawn either uniformly up to ``6/a`` or right next to a threshold.
    """
    a = rng.uniform(0.5, 4.0)
    lam = rng.uniform(*lam_frac) * a
    r = rng.random()
    x0 = -1.0 if r < 0.1 else 1.0 if r < 0.2 else rng.uniform(-1.0, 1.0)
    rho = characteristic_rho(a, lam)
    rho1, rho2 = (1 + x0) / a, (1 - x0) / a
    thresholds = [rho, 2 * rho, rho1, rho + rho2, 2 * rho - rho1, (3 - x0) / a, rho + 2 / a, 4 / a]
    thresholds = [t for t in thresholds if t > 1e-6]
    if rng.random() < 0.3:
        h = rng.choice(thresholds) * (1 + rng.uniform(-1e-3, 1e-3))
    else:
        h = rng.uniform(1e-3, 6.0 / a)
    t0 = rng.uniform(0.0, t0_max)
    return ProblemParams(a, lam, t0, t0 + h, x0)


def params_stream(seed: int, n: int, **kw):
    rng = random.Random(seed)
    return [draw_params(rng, **kw) for _ in range(n)]


def random_trajectory(rng: random.Random, a: float, t0: float) -> Trajectory:
    """Feasible path of 1-5 arcs; each arc stops before leaving [-1, 1]."""
    x0 = rng.uniform(-1, 1)
    x, t = x0, t0
    arcs = []
    for _ in range(rng.randint(1, 5)):
        s = rng.choice([Slope.DOWN, Slope.HOLD, Slope.UP])
        room = {Slope.UP: (1 - x) / a, Slope.DOWN: (1 + x) / a, Slope.HOLD: 1.0}[s]
        if room < 1e-3:
            s, room = Slope.HOLD, 1.0
        d = rng.uniform(0.05, 1.0) * room
        t += d
        x = min(max(x + s.rate(a) * d, -1.0), 1.0)
        arcs.append((t, s))
    return Trajectory.from_arcs(a, t0, x0, arcs)


def feasible_path(rng: random.Random):
    a = rng.uniform(0.5, 4)
    lam = rng.uniform(0.05, 0.95) * a
    traj = random_trajectory(rng, a, rng.uniform(0, 3))
    return ProblemParams(a, lam, traj.t0, traj.T, traj.states[0]), traj


@pytest.fixture
def rng():
    return random.Random(20261019)


def close(x: float, y: float, tol: float) -> bool:
    return math.isfinite(x) and abs(x - y) <= tol


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "SUMMARY", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: s.startswith("info")):
            terminalreporter.write_line(line)
