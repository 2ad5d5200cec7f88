"""Problem data, derived constants and the piecewise-linear trajectory type.

Every trajectory handled by the package is a continuous piecewise-linear
state path whose slopes are restricted to ``{-a, 0, +a}``.  Slopes are kept
as :class:`Slope` tags so that the control ``u = -xdot / a`` is always an
exact member of ``{-1, 0, +1}``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

# Breakpoint states this close to a bound are snapped onto it.
STATE_SNAP = 1e-12


class ValidationError(ValueError):
    """Raised when problem parameters violate a standing assumption."""


class Slope(enum.IntEnum):
    DOWN = -1
    HOLD = 0
    UP = 1

    def rate(self, a: float) -> float:
        if self is Slope.UP:
            return float(a)
        return -float(a) if self is Slope.DOWN else 0.0

    @property
    def control(self) -> int:
        # xdot = -a u  =>  u = -sign(slope)
        return -int(self)


@dataclass(frozen=True)
class ProblemParams:
    """The five scalars of the bilaterally constrained problem.

    Minimize ``J = int_{t0}^{T} -exp(-lam t) (x + u) dt`` subject to
    ``xdot = -a u``, ``|u| <= 1``, ``|x| <= 1`` and ``x(t0) = x0``.
    """

    a: float
    lam: float
    t0: float
    T: float
    x0: float

    def __post_init__(self) -> None:
        for name in ("a", "lam", "t0", "T", "x0"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValidationError(f"{name} must be a finite real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if not self.lam > 0:
            raise ValidationError(f"lambda must be positive, got {self.lam}")
        if not self.a > self.lam:
            raise ValidationError(f"a must exceed lambda (a={self.a}, lambda={self.lam})")
        if not self.t0 >= 0:
            raise ValidationError(f"t0 must be nonnegative, got {self.t0}")
        if not self.T > self.t0:
            raise ValidationError(f"T must exceed t0 (t0={self.t0}, T={self.T})")
        if not -1.0 <= self.x0 <= 1.0:
            raise ValidationError(f"x0 must lie in [-1,1], got {self.x0}")

    @property
    def horizon(self) -> float:
        return self.T - self.t0

    def shifted(self, delta: float) -> "ProblemParams":
        return ProblemParams(self.a, self.lam, self.t0 + delta, self.T + delta, self.x0)


@dataclass(frozen=True)
class DerivedConstants:
    rho: float
    rho1: float
    rho2: float
    t_bar: float
    horizon: float


def characteristic_rho(a: float, lam: float) -> float:
    if 2.0 * lam >= a:
        # a - lam is exact here, so the quotient keeps full precision as lam -> a
        return math.log(a / (a - lam)) / lam
    # log1p keeps precision when lam << a
    return -math.log1p(-lam / a) / lam


def derive_constants(params: ProblemParams) -> DerivedConstants:
    """Return ``rho``, the boundary travel times and ``t_bar = T - rho``."""
    rho = characteristic_rho(params.a, params.lam)
    rho1 = (1.0 + params.x0) / params.a
    rho2 = (1.0 - params.x0) / params.a
    return DerivedConstants(
        rho=rho,
        rho1=rho1,
        rho2=rho2,
        t_bar=params.T - rho,
        horizon=params.horizon,
    )


@dataclass(frozen=True)
class Trajectory:
    """Continuous piecewise-linear state path.

    ``times`` and ``states`` hold the breakpoints; ``slopes[k]`` tags the
    segment ``[times[k], times[k+1]]``.
    """

    a: float
    times: tuple[float, ...]
    states: tuple[float, ...]
    slopes: tuple[Slope, ...]

    def __post_init__(self) -> None:
        if len(self.times) < 2 or len(self.states) != len(self.times):
            raise ValueError("trajectory needs at least two breakpoints with one state each")
        if len(self.slopes) != len(self.times) - 1:
            raise ValueError("trajectory needs exactly one slope tag per segment")
        if any(t1 <= t0 for t0, t1 in zip(self.times, self.times[1:])):
            raise ValueError("breakpoint times must be strictly increasing")
        if not all(type(s) is Slope for s in self.slopes):
            object.__setattr__(self, "slopes", tuple(Slope(s) for s in self.slopes))

    @classmethod
    def from_arcs(
        cls,
        a: float,
        t0: float,
        x0: float,
        arcs: Iterable[tuple[float, Slope]],
        *,
        min_length: float = 0.0,
    ) -> "Trajectory":
        """Chain arcs ``(end_time, slope)`` starting from ``(t0, x0)``.

        Arcs no longer than ``min_length`` are dropped.  States within
        ``STATE_SNAP`` of +-1 are snapped onto the bound.
        """
        times = [float(t0)]
        states = [float(x0)]
        slopes: list[Slope] = []
        for end, slope in arcs:
            start = times[-1]
            if end - start <= min_length:
                continue
            slope = Slope(slope)
            x = states[-1] + slope.rate(a) * (end - start)
            if abs(x - 1.0) <= STATE_SNAP:
                x = 1.0
            elif abs(x + 1.0) <= STATE_SNAP:
                x = -1.0
            times.append(float(end))
            states.append(x)
            slopes.append(slope)
        return cls(a=float(a), times=tuple(times), states=tuple(states), slopes=tuple(slopes))

    @property
    def t0(self) -> float:
        return self.times[0]

    @property
    def T(self) -> float:
        return self.times[-1]

    @property
    def n_segments(self) -> int:
        return len(self.slopes)

    def segments(self):
        """Yield ``(t_lo, t_hi, x_lo, x_hi, slope)`` per segment."""
        for k, s in enumerate(self.slopes):
            yield self.times[k], self.times[k + 1], self.states[k], self.states[k + 1], s

    def segment_index(self, t: float, side: str = "right") -> int:
        """Index of the segment containing ``t``.

        At a breakpoint, ``side="right"`` picks the segment starting there and
        ``side="left"`` the one ending there; the domain ends clamp inward.
        """
        times = self.times
        n = len(self.slopes)
        if side == "right":
            for k in range(n - 1, -1, -1):
                if t >= times[k]:
                    return k
            return 0
        for k in range(n):
            if t <= times[k + 1]:
                return k
        return n - 1

    def state_at(self, t: float) -> float:
        k = self.segment_index(t)
        t_lo = self.times[k]
        return self.states[k] + self.slopes[k].rate(self.a) * (t - t_lo)

    def control_at(self, t: float, side: str = "right") -> int:
        return self.slopes[self.segment_index(t, side)].control

    def switch_times(self) -> tuple[float, ...]:
        return self.times[1:-1]

    def refined(self, t: float) -> "Trajectory":
        """Same path with an extra breakpoint inserted at ``t``."""
        if not self.times[0] < t < self.times[-1] or t in self.times:
            raise ValueError(f"refinement time {t} must be an interior non-breakpoint")
        k = self.segment_index(t)
        times = list(self.times)
        states = list(self.states)
        slopes = list(self.slopes)
        times.insert(k + 1, t)
        states.insert(k + 1, self.state_at(t))
        slopes.insert(k + 1, slopes[k])
        return Trajectory(self.a, tuple(times), tuple(states), tuple(slopes))

    def shifted(self, delta: float) -> "Trajectory":
        return Trajectory(self.a, tuple(t + delta for t in self.times), self.states, self.slopes)


@dataclass(frozen=True)
class ControlLaw:
    pieces: tuple[tuple[float, float, int], ...]

    def value_at(self, t: float) -> int:
        for lo, hi, u in self.pieces:
            if lo <= t < hi:
                return u
        return self.pieces[-1][2]


def control_from_trajectory(traj: Trajectory, a: float | None = None) -> ControlLaw:
    """Piecewise-constant control ``u = -slope / a`` on the trajectory's partition."""
    if a is not None and not math.isclose(a, traj.a, rel_tol=0, abs_tol=0):
        raise ValueError(f"trajectory was built for a={traj.a}, not a={a}")
    return ControlLaw(
        tuple((lo, hi, s.control) for lo, hi, _, _, s in traj.segments())
    )


def integrate_control(law: ControlLaw, a: float, x0: float) -> list[float]:
    """Breakpoint states reconstructed from ``x0`` by exact integration of ``-a u``."""
    states = [x0]
    for lo, hi, u in law.pieces:
        states.append(states[-1] - a * u * (hi - lo))
    return states


@dataclass(frozen=True)
class FeasibilityReport:
    checks: dict[str, tuple[bool, str]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(passed for passed, _ in self.checks.values())

    def failures(self) -> list[str]:
        return [name for name, (passed, _) in self.checks.items() if not passed]


def check_feasible(traj: Trajectory, params: ProblemParams, *, tol: float = 1e-12) -> FeasibilityReport:
    """Soft report on initial condition, bounds, slope admissibility and coverage."""
    checks: dict[str, tuple[bool, str]] = {}

    dx0 = abs(traj.states[0] - params.x0)
    checks["initial_condition"] = (dx0 <= tol, f"|x(t0) - x0| = {dx0:.3e}")

    worst = max(max(abs(x) for x in traj.states) - 1.0, 0.0)
    checks["bounds"] = (worst == 0.0, f"max excess over |x| <= 1: {worst:.3e}")

    slope_ok = math.isclose(traj.a, params.a, rel_tol=0.0, abs_tol=0.0)
    drift = 0.0
    t, x = traj.times, traj.states
    for k, s in enumerate(traj.slopes):
        step = abs(x[k + 1] - x[k] - int(s) * params.a * (t[k + 1] - t[k]))
        if step > drift:
            drift = step
    slope_ok = slope_ok and drift <= tol * max(1.0, params.a * params.horizon)
    checks["slopes"] = (slope_ok, f"gain {traj.a} vs {params.a}, max continuity drift {drift:.3e}")

    gap = max(abs(traj.t0 - params.t0), abs(traj.T - params.T))
    checks["coverage"] = (gap == 0.0, f"domain [{traj.t0}, {traj.T}] vs [{params.t0}, {params.T}]")

    return FeasibilityReport(checks)


def sample(traj: Trajectory, n: int) -> list[tuple[float, float, int]]:
    """``n`` uniform samples over the domain plus every breakpoint.

    Controls at breakpoints come from the segment on the right, except at
    the final time where the last segment is used.
    """
    if n < 2:
        raise ValueError("sample count must be at least 2")
    t0, T = traj.t0, traj.T
    grid = [t0 + (T - t0) * k / (n - 1) for k in range(n)]
    grid[-1] = T
    times = sorted(set(grid).union(traj.times))
    exact = dict(zip(traj.times, traj.states))
    out = []
    for t in times:
        side = "left" if t == T else "right"
        k = traj.segment_index(t, side)
        if t in exact:
            x = exact[t]
        else:
            x = traj.states[k] + traj.slopes[k].rate(traj.a) * (t - traj.times[k])
        out.append((t, x, traj.slopes[k].control))
    return out


def as_params(values: Sequence[float] | dict) -> ProblemParams:
    if isinstance(values, dict):
        return ProblemParams(values["a"], values["lambda"], values["t0"], values["T"], values["x0"])
    return ProblemParams(*values)
