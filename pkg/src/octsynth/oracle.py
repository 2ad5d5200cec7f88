"""Grid dynamic programming and shape enumeration, used to check candidates.

Neither search relies on the synthesis results: the value iteration runs
over an arbitrary control set, and the shape search scans free switch times.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import ProblemParams, ValidationError, derive_constants
from .cost import _e0, _e1, total_cost_closed
from .synthesis import CandidateSet, ConstructionError, ShapeKind, ShapeSpec, build_shape

try:
    from . import _dp_ext as _kernel

    BACKEND = "cython"
except ImportError:  # pragma: no cover - exercised only without a compiler
    from . import _dp_numpy as _kernel

    BACKEND = "numpy"

DEFAULT_CONTROLS = (-1.0, -0.5, 0.0, 0.5, 1.0)


def thread_count() -> int:
    """Worker cap for the compiled sweep, read from ``OCTSYNTH_THREADS``."""
    raw = os.environ.get("OCTSYNTH_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass(frozen=True)
class GridSpec:
    n_t: int = 4000
    n_x: int = 2001
    controls: tuple[float, ...] = DEFAULT_CONTROLS

    def __post_init__(self) -> None:
        if int(self.n_t) != self.n_t or self.n_t < 10:
            raise ValidationError(f"n_t must be an integer >= 10, got {self.n_t}")
        if int(self.n_x) != self.n_x or self.n_x < 11 or self.n_x % 2 == 0:
            raise ValidationError(f"n_x must be an odd integer >= 11, got {self.n_x}")
        ctrl = tuple(float(u) for u in self.controls)
        if any(not -1.0 <= u <= 1.0 for u in ctrl):
            raise ValidationError(f"controls must lie in [-1, 1], got {ctrl}")
        if not {-1.0, 0.0, 1.0} <= set(ctrl):
            raise ValidationError("controls must contain -1, 0 and 1")
        # smallest |u| first so strict-less scanning breaks ties toward it
        ordered = tuple(sorted(set(ctrl), key=lambda u: (abs(u), u)))
        object.__setattr__(self, "controls", ordered)


@dataclass(frozen=True)
class OracleResult:
    value: float
    path: tuple[tuple[float, float], ...]
    policy_controls: tuple[float, ...]
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class VerificationVerdict:
    passed: bool
    candidate_value: float
    oracle_value: float
    gap: float  # oracle - candidate; negative means the oracle found something cheaper
    tol: float


def value_table(params: ProblemParams, grid: GridSpec, backend: str | None = None):
    """Full value array ``V[k, j]`` on the grid, with its axes and prune count."""
    t_grid = np.linspace(params.t0, params.T, grid.n_t + 1)
    x_grid = np.linspace(-1.0, 1.0, grid.n_x)
    x_grid[(grid.n_x - 1) // 2] = 0.0
    V = np.empty((grid.n_t + 1, grid.n_x))
    V[-1] = 0.0
    kernel = _kernel
    if backend == "numpy":
        from . import _dp_numpy as kernel
    elif backend not in (None, BACKEND):
        raise ValueError(f"backend {backend!r} is not available (have {BACKEND!r})")
    controls = np.asarray(grid.controls, dtype=np.float64)
    pruned = kernel.backward_sweep(V, t_grid, x_grid, controls, params.a, params.lam, thread_count())
    return V, t_grid, x_grid, pruned


def _interp(row: np.ndarray, x_grid: np.ndarray, x: float) -> float:
    return float(np.interp(x, x_grid, row))


def dp_solve(params: ProblemParams, grid: GridSpec | None = None, *, backend: str | None = None) -> OracleResult:
    """Backward induction from ``V(T, .) = 0`` and a greedy forward path."""
    grid = GridSpec() if grid is None else grid
    if not -1.0 <= params.x0 <= 1.0:
        raise ValidationError(f"x0 must lie in [-1,1], got {params.x0}")
    V, t_grid, x_grid, pruned = value_table(params, grid, backend)
    a, lam = params.a, params.lam
    dt = float(t_grid[1] - t_grid[0])
    e0, e1 = _e0(lam, dt), _e1(lam, dt)
    edge = 1e-12

    x = params.x0
    path = [(float(t_grid[0]), x)]
    policy = []
    for k in range(grid.n_t):
        disc = math.exp(-lam * float(t_grid[k]))
        best_u, best_v = None, math.inf
        for u in grid.controls:
            nxt = x - a * u * dt
            if nxt < -1.0 - edge or nxt > 1.0 + edge:
                continue
            nxt = min(max(nxt, -1.0), 1.0)
            v = -disc * ((x + u) * e0 - a * u * e1) + _interp(V[k + 1], x_grid, nxt)
            if v < best_v:
                best_u, best_v = u, v
        if best_u is None:  # pragma: no cover - u = 0 is always admissible
            raise RuntimeError("no admissible control at a feasible state")
        x = min(max(x - a * best_u * dt, -1.0), 1.0)
        policy.append(best_u)
        path.append((float(t_grid[k + 1]), x))

    return OracleResult(
        value=_interp(V[0], x_grid, params.x0),
        path=tuple(path),
        policy_controls=tuple(policy),
        diagnostics={"pruned": pruned, "backend": backend or BACKEND, "n_t": grid.n_t, "n_x": grid.n_x},
    )


def _shape_family(params: ProblemParams, switches: Iterable[float]):
    c = derive_constants(params)
    yield ShapeSpec(ShapeKind.PURE_DESCENT)
    yield ShapeSpec(ShapeKind.TENT_FROM_MINUS1)
    yield ShapeSpec(ShapeKind.DESCEND_TO_MINUS1_AT_T)
    yield ShapeSpec(ShapeKind.RISE_HOLD_DESCEND, hold_start=params.t0 + c.rho2)
    for s in switches:
        yield ShapeSpec(ShapeKind.RISE_THEN_DESCEND, switch=s)
        yield ShapeSpec(ShapeKind.RISE_HOLD_DESCEND, hold_start=params.t0 + c.rho2, hold_end=s)


def shape_search(params: ProblemParams, m: int, *, extra_switches: Sequence[float] = ()) -> OracleResult:
    """Best member of the restricted shape family over an ``m``-point switch grid.

    Free switch times are ``t0 + k (T - t0) / (m + 1)`` for ``k = 1..m``; the
    same grid serves as the free end of a hold at the upper bound.  Exact
    switch times may be added through ``extra_switches``.  Shapes that are
    infeasible for ``params`` are skipped.
    """
    if m < 2:
        raise ValueError(f"switch grid needs m >= 2 points, got {m}")
    h = params.horizon
    switches = [params.t0 + k * h / (m + 1) for k in range(1, m + 1)]
    switches.extend(float(s) for s in extra_switches)

    best = None
    evaluated = skipped = 0
    for spec in _shape_family(params, switches):
        try:
            traj = build_shape(spec, params)
        except ConstructionError:
            skipped += 1
            continue
        evaluated += 1
        cost = total_cost_closed(params, traj).value
        if best is None or cost < best[0]:
            best = (cost, spec, traj)

    cost, spec, traj = best
    return OracleResult(
        value=cost,
        path=tuple(zip(traj.times, traj.states)),
        policy_controls=tuple(float(s.control) for s in traj.slopes),
        diagnostics={"shape": spec, "evaluated": evaluated, "skipped": skipped, "m": m},
    )


def compare(params: ProblemParams, cands: CandidateSet, oracle: OracleResult, tol: float) -> VerificationVerdict:
    """Two-sided agreement between the cheapest candidate and the oracle value."""
    best = min(c.cost for c in cands)
    gap = oracle.value - best
    passed = best <= oracle.value + tol and oracle.value <= best + tol
    return VerificationVerdict(passed, best, oracle.value, gap, tol)
