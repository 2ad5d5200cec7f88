"""Exact and quadrature evaluation of the discounted cost.

All closed forms are assembled from two antiderivatives on a segment
``[t1, t1 + d]``::

    int_0^d exp(-lam s) ds      = (1 - exp(-lam d)) / lam
    int_0^d s exp(-lam s) ds    = (1 - exp(-lam d) (1 + lam d)) / lam**2

The lemma identities are *not* transcribed; they are recomputed from these
and compared against the textbook right-hand sides in the tests.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import ProblemParams, Slope, Trajectory


def _e0(lam: float, d: float) -> float:
    return -math.expm1(-lam * d) / lam


def _e1(lam: float, d: float) -> float:
    y = lam * d
    if y < 0.1:
        # 1 - e^{-y}(1+y) = sum_{k>=2} (-1)^k (k-1) y^k / k!
        term = y * y / 2.0
        total = term
        k = 2
        while abs(term) > 1e-18 * abs(total):
            term *= -y / (k + 1)
            k += 1
            total += term * (k - 1)
        return total / (lam * lam)
    return (-math.expm1(-y) - y * math.exp(-y)) / (lam * lam)


def linear_piece_cost(lam: float, a: float, t1: float, t2: float, x1: float, slope: Slope) -> float:
    """``int_{t1}^{t2} -exp(-lam t)(x(t) + u) dt`` for ``x(t) = x1 + slope*a*(t - t1)``."""
    d = t2 - t1
    if d <= 0:
        return 0.0
    rate = slope.rate(a)
    u = slope.control
    return -math.exp(-lam * t1) * ((x1 + u) * _e0(lam, d) + rate * _e1(lam, d))


def delta(lam: float, t1: float, t2: float) -> float:
    """``exp(-lam t1) - 2 exp(-lam (t1+t2)/2) + exp(-lam t2)``.

    Evaluated through the equivalent square
    ``exp(-lam t1) * expm1(-lam (t2 - t1) / 2) ** 2`` which avoids the
    three-term cancellation for short intervals.
    """
    return math.exp(-lam * t1) * math.expm1(-0.5 * lam * (t2 - t1)) ** 2


@dataclass(frozen=True)
class SegmentCost:
    interval: tuple[float, float]
    value: float


@dataclass(frozen=True)
class CostValue:
    value: float

    def __float__(self) -> float:
        return self.value


def _cost_over(lam: float, traj: Trajectory, t1: float, t2: float) -> float:
    total = 0.0
    a = traj.a
    for lo, hi, x_lo, _, s in traj.segments():
        lo_c = max(lo, t1)
        hi_c = min(hi, t2)
        if hi_c <= lo_c:
            continue
        x_start = x_lo if lo_c == lo else x_lo + s.rate(a) * (lo_c - lo)
        total += linear_piece_cost(lam, a, lo_c, hi_c, x_start, s)
    return total


def segment_cost_closed(params: ProblemParams, traj: Trajectory, t1: float, t2: float) -> SegmentCost:
    if not (traj.t0 <= t1 <= t2 <= traj.T):
        raise ValueError(f"interval [{t1}, {t2}] is outside the trajectory domain [{traj.t0}, {traj.T}]")
    return SegmentCost((t1, t2), _cost_over(params.lam, traj, t1, t2))


def total_cost_closed(params: ProblemParams, traj: Trajectory) -> CostValue:
    return CostValue(_cost_over(params.lam, traj, traj.t0, traj.T))


def running_cost(params: ProblemParams, traj: Trajectory, t: float) -> float:
    """Accumulated cost ``x2(t)`` of the Mayer reformulation."""
    return segment_cost_closed(params, traj, traj.t0, t).value


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


def total_cost_quadrature(params: ProblemParams, traj: Trajectory, n: int) -> CostValue:
    """Composite 5-point Gauss-Legendre with ``n`` panels per linear piece."""
    if n < 1:
        raise ValueError("need at least one panel per piece")
    lam, a = params.lam, traj.a
    total = 0.0
    for lo, hi, x_lo, _, s in traj.segments():
        edges = np.linspace(lo, hi, n + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        t = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        x = x_lo + s.rate(a) * (t - lo)
        f = -np.exp(-lam * t) * (x + s.control)
        total += float(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * f))
    return CostValue(total)


class GapKind(enum.Enum):
    UPPER_BOUNDARY_VEE = "upper_boundary_vee"
    LOWER_BOUNDARY_TENT = "lower_boundary_tent"
    LEVEL_VEE = "level_vee"


def _lemma_processes(a: float, t1: float, t2: float, kind: GapKind, xi: float | None):
    mid = 0.5 * (t1 + t2)
    if kind is GapKind.UPPER_BOUNDARY_VEE:
        level, first, second = 1.0, Slope.DOWN, Slope.UP
    elif kind is GapKind.LOWER_BOUNDARY_TENT:
        level, first, second = -1.0, Slope.UP, Slope.DOWN
    else:
        if xi is None:
            raise ValueError("LEVEL_VEE needs a level xi")
        level, first, second = float(xi), Slope.DOWN, Slope.UP
    flat = Trajectory.from_arcs(a, t1, level, [(t2, Slope.HOLD)])
    bent = Trajectory.from_arcs(a, t1, level, [(mid, first), (t2, second)])
    return flat, bent


def lemma_gap(
    params: ProblemParams,
    t1: float,
    t2: float,
    kind: GapKind,
    xi: float | None = None,
) -> tuple[float, float]:
    """Cost of the bent process minus the flat one, and the closed-form prediction.

    Returns ``(lhs, rhs)`` where ``lhs`` comes from :func:`segment_cost_closed`
    on the two constructed processes and ``rhs = +-(1/lam)(a/lam - 1) Delta``.
    """
    a, lam = params.a, params.lam
    if not t1 < t2:
        raise ValueError("need t1 < t2")
    if t2 - t1 > 4.0 / a * (1 + 1e-12):
        raise ValueError(f"interval length {t2 - t1} exceeds 4/a = {4.0 / a}")
    if kind is GapKind.LEVEL_VEE:
        if xi is None or xi > 1.0 or xi - 0.5 * a * (t2 - t1) < -1.0 - 1e-12:
            raise ValueError(f"level {xi} does not leave room for the vee")
    flat, bent = _lemma_processes(a, t1, t2, kind, xi)
    lhs = _cost_over(lam, bent, t1, t2) - _cost_over(lam, flat, t1, t2)
    sign = -1.0 if kind is GapKind.LOWER_BOUNDARY_TENT else 1.0
    rhs = sign * (a / lam - 1.0) * delta(lam, t1, t2) / lam
    return lhs, rhs


@dataclass(frozen=True)
class DeltaInequalityReport:
    shifted: float  # Delta(t1 + eps, t2)
    full: float  # Delta(t1, t2)
    head: float  # Delta(t1, t1 + eps)
    tail: float  # Delta(t1 + eps, t2)

    @property
    def monotone_ok(self) -> bool:
        return self.shifted < self.full

    @property
    def superadditive_ok(self) -> bool:
        return self.full > self.head + self.tail

    @property
    def ok(self) -> bool:
        return self.monotone_ok and self.superadditive_ok


def delta_inequalities(lam: float, t1: float, t2: float, eps: float) -> DeltaInequalityReport:
    if not t1 < t2:
        raise ValueError("need t1 < t2")
    if not 0.0 < eps < t2 - t1:
        raise ValueError(f"eps must lie in (0, {t2 - t1}), got {eps}")
    return DeltaInequalityReport(
        shifted=delta(lam, t1 + eps, t2),
        full=delta(lam, t1, t2),
        head=delta(lam, t1, t1 + eps),
        tail=delta(lam, t1 + eps, t2),
    )
