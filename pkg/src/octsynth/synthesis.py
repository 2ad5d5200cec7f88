"""Regime classification and candidate construction.

The half-line of horizons ``h = T - t0`` is partitioned per regime into
lettered clauses.  Each clause lists one or two trajectory forms built
from a small family of shapes (:class:`ShapeKind`).

Two form tables are available:

``"paper"``
    The forms exactly as printed in the published theorems.
``"repaired"`` (default)
    Identical labels, clause boundaries and candidate counts, but when
    ``rho < 2/a`` every form that rides the upper bound and then falls for
    longer than ``rho`` is replaced by rise / hold at 1 until ``T - rho`` /
    fall for ``rho``.  The printed forms violate the switching-sign
    condition on that final fall and are beaten by the grid oracle.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Literal

from .core import (
    DerivedConstants,
    ProblemParams,
    Slope,
    Trajectory,
    derive_constants,
)
from .cost import total_cost_closed

FormTable = Literal["paper", "repaired"]

# Relative slack when deciding whether a switch time sits inside (t0, T).
_TIME_SLACK = 1e-12


class ConstructionError(ValueError):
    """A requested shape cannot be realised for the given parameters."""


class Theorem(str, enum.Enum):
    THM3A = "Thm3a"
    THM3B = "Thm3b"
    THM3C1 = "Thm3c1"
    THM3C2 = "Thm3c2"
    THM3C3 = "Thm3c3"
    THM3D = "Thm3d"


class Status(str, enum.Enum):
    UNIQUE_GLOBAL = "UniqueGlobal"
    LOCAL_CANDIDATE = "LocalCandidate"


class ShapeKind(str, enum.Enum):
    PURE_DESCENT = "PureDescent"
    RISE_THEN_DESCEND = "RiseThenDescend"
    RISE_HOLD_DESCEND = "RiseHoldDescend"
    TENT_FROM_MINUS1 = "TentFromMinus1"
    DESCEND_TO_MINUS1_AT_T = "DescendToMinus1AtT"


@dataclass(frozen=True)
class ShapeSpec:
    kind: ShapeKind
    switch: float | None = None
    hold_start: float | None = None
    hold_end: float | None = None


@dataclass(frozen=True, order=True)
class RegimeLabel:
    theorem: Theorem
    clause: str

    def __str__(self) -> str:
        return f"{self.theorem.value}/{self.clause}"


@dataclass(frozen=True)
class Candidate:
    trajectory: Trajectory
    label: RegimeLabel
    status: Status
    shape: ShapeSpec
    cost: float


@dataclass(frozen=True)
class CandidateSet:
    label: RegimeLabel
    candidates: tuple[Candidate, ...]

    def __post_init__(self) -> None:
        if not 1 <= len(self.candidates) <= 2:
            raise ValueError(f"a clause lists one or two forms, got {len(self.candidates)}")

    @property
    def best(self) -> Candidate:
        return self.candidates[0]

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    def __getitem__(self, i: int) -> Candidate:
        return self.candidates[i]


# --------------------------------------------------------------------------
# classification


def _cmp(x: float, y: float, snap: float) -> int:
    if abs(x - y) <= snap:
        return 0
    return -1 if x < y else 1


def _alternative(params: ProblemParams, c: DerivedConstants, snap: float) -> Theorem:
    a = params.a
    if _cmp(c.rho, 2.0 / a, snap) >= 0:
        return Theorem.THM3A
    if _cmp(params.x0, -1.0, snap) == 0:
        return Theorem.THM3B
    if _cmp(c.rho1, c.rho, snap) <= 0:
        return Theorem.THM3D
    order = _cmp(c.rho1, c.rho + c.rho2, snap)
    if order < 0:
        return Theorem.THM3C1
    if order == 0:
        return Theorem.THM3C2
    return Theorem.THM3C3


def classify(params: ProblemParams, snap: float = 0.0) -> RegimeLabel:
    """Theorem and clause selected by ``(a, lam, x0, T - t0)``.

    ``snap`` widens every equality test to ``|lhs - rhs| <= snap``; the
    default of zero uses the printed inequalities verbatim.
    """
    c = derive_constants(params)
    thm = _alternative(params, c, snap)
    h = c.horizon
    a = params.a
    rho, rho1, rho2 = c.rho, c.rho1, c.rho2
    top = (3.0 - params.x0) / a  # rho1 + 2 rho2, the latest a fall to -1 can start from 1

    def cmp(y: float) -> int:
        return _cmp(h, y, snap)

    if thm is Theorem.THM3A:
        if cmp(rho1) <= 0:
            clause = "a"
        elif cmp(top) < 0:
            clause = "b"
        else:
            clause = "c"
    elif thm is Theorem.THM3B:
        if cmp(2 * rho) <= 0:
            clause = "a"
        elif cmp(rho + 2.0 / a) < 0:
            clause = "b"
        elif cmp(4.0 / a) < 0:
            clause = "c"
        elif cmp(4.0 / a) == 0:
            clause = "d"
        else:
            clause = "e"
    elif thm is Theorem.THM3C1:
        if cmp(rho) <= 0:
            clause = "a"
        elif cmp(rho1) < 0:
            clause = "b"
        elif cmp(rho1) == 0:
            clause = "c"
        elif cmp(rho + rho2) < 0:
            clause = "d"
        elif cmp(top) < 0:
            clause = "e"
        elif cmp(top) == 0:
            clause = "f"
        else:
            clause = "g"
    elif thm is Theorem.THM3C2:
        # no clause (e) in this theorem
        if cmp(rho) <= 0:
            clause = "a"
        elif cmp(rho1) < 0:
            clause = "b"
        elif cmp(rho1) == 0:
            clause = "c"
        elif cmp(top) < 0:
            clause = "d"
        elif cmp(top) == 0:
            clause = "f"
        else:
            clause = "g"
    elif thm is Theorem.THM3C3:
        if cmp(rho) <= 0:
            clause = "a"
        elif cmp(rho + rho2) < 0:
            clause = "b"
        elif cmp(rho1) < 0:
            # also owns h == rho + rho2, where (b) and (c) describe the same path
            clause = "c"
        elif cmp(rho1) == 0:
            clause = "d"
        elif cmp(top) < 0:
            clause = "e"
        elif cmp(top) == 0:
            clause = "f"
        else:
            clause = "g"
    else:
        if cmp(rho1) <= 0:
            clause = "a"
        elif cmp(2 * rho - rho1) <= 0:
            # (b) also owns h == 2 rho - rho1, where its form coincides with (c)'s
            clause = "b"
        elif cmp(rho + rho2) < 0:
            clause = "c"
        elif cmp(top) < 0:
            clause = "d"
        elif cmp(top) == 0:
            clause = "e"
        else:
            clause = "f"
    return RegimeLabel(thm, clause)


# --------------------------------------------------------------------------
# shapes


def _inside(t: float, params: ProblemParams) -> bool:
    slack = _TIME_SLACK * max(1.0, abs(params.T))
    return params.t0 - slack <= t <= params.T + slack


def _finish(traj: Trajectory, params: ProblemParams, what: str) -> Trajectory:
    worst = max(abs(x) for x in traj.states)
    if worst > 1.0:
        raise ConstructionError(f"{what}: state reaches {worst:.15g}, outside [-1, 1]")
    return traj


def build_shape(shape: ShapeSpec, params: ProblemParams) -> Trajectory:
    """Realise one of the enumerated shapes as a :class:`Trajectory`."""
    a, t0, T, x0 = params.a, params.t0, params.T, params.x0
    c = derive_constants(params)
    drop = _TIME_SLACK * max(1.0, abs(T))
    kind = ShapeKind(shape.kind)

    if kind is ShapeKind.PURE_DESCENT:
        x_end = x0 - a * c.horizon
        if x_end < -1.0 - 1e-12:
            raise ConstructionError(
                f"PureDescent needs T - t0 <= (1 + x0)/a = {c.rho1:.15g}, got {c.horizon:.15g}"
            )
        traj = Trajectory.from_arcs(a, t0, x0, [(T, Slope.DOWN)])
        return _finish(traj, params, "PureDescent")

    if kind is ShapeKind.TENT_FROM_MINUS1:
        if x0 != -1.0:
            raise ConstructionError(f"TentFromMinus1 needs x0 = -1, got {x0}")
        if c.horizon > 4.0 / a * (1 + 1e-12):
            raise ConstructionError(
                f"TentFromMinus1 needs T - t0 <= 4/a = {4.0 / a:.15g}, got {c.horizon:.15g}"
            )
        mid = 0.5 * (t0 + T)
        traj = Trajectory.from_arcs(a, t0, x0, [(mid, Slope.UP), (T, Slope.DOWN)])
        traj = _snap_end(traj, -1.0)
        return _finish(traj, params, "TentFromMinus1")

    if kind in (ShapeKind.RISE_THEN_DESCEND, ShapeKind.DESCEND_TO_MINUS1_AT_T):
        if kind is ShapeKind.DESCEND_TO_MINUS1_AT_T:
            switch = 0.5 * (T + t0 - c.rho1) if shape.switch is None else shape.switch
        else:
            if shape.switch is None:
                raise ConstructionError("RiseThenDescend needs a switch time")
            switch = shape.switch
        if not _inside(switch, params):
            raise ConstructionError(f"switch time {switch!r} lies outside [{t0}, {T}]")
        switch = min(max(switch, t0), T)
        apex = x0 + a * (switch - t0)
        if apex > 1.0 + 1e-12:
            raise ConstructionError(
                f"rise until {switch:.15g} overshoots x = 1; switch must be <= t0 + rho2 = {t0 + c.rho2:.15g}"
            )
        traj = Trajectory.from_arcs(a, t0, x0, [(switch, Slope.UP), (T, Slope.DOWN)], min_length=drop)
        if kind is ShapeKind.DESCEND_TO_MINUS1_AT_T:
            traj = _snap_end(traj, -1.0)
        return _finish(traj, params, kind.value)

    # rise / hold at 1 / descend
    hold_start = t0 + c.rho2
    if shape.hold_start is not None and abs(shape.hold_start - hold_start) > 1e-9 * max(1.0, abs(T)):
        raise ConstructionError(
            f"hold can only start when the rise reaches 1, at t0 + rho2 = {hold_start:.15g}"
        )
    hold_end = T - 2.0 / a if shape.hold_end is None else shape.hold_end
    if hold_end < hold_start - drop:
        raise ConstructionError(
            "RiseHoldDescend needs the hold to end after it starts: "
            f"T - t0 >= rho2 + (T - hold_end) = {c.rho2 + (T - hold_end):.15g}, got {c.horizon:.15g}"
        )
    if T - hold_end > 2.0 / a * (1 + 1e-12):
        raise ConstructionError(
            f"descending from 1 for {T - hold_end:.15g} > 2/a crosses x = -1"
        )
    hold_end = max(hold_end, hold_start)
    traj = Trajectory.from_arcs(
        a,
        t0,
        x0,
        [(hold_start, Slope.UP), (hold_end, Slope.HOLD), (T, Slope.DOWN)],
        min_length=drop,
    )
    traj = _pin_hold(traj)
    return _finish(traj, params, "RiseHoldDescend")


def _snap_end(traj: Trajectory, level: float) -> Trajectory:
    if abs(traj.states[-1] - level) <= 1e-9:
        states = traj.states[:-1] + (level,)
        return Trajectory(traj.a, traj.times, states, traj.slopes)
    return traj


def _pin_hold(traj: Trajectory) -> Trajectory:
    # the hold level is exactly 1 by construction
    states = list(traj.states)
    for k, s in enumerate(traj.slopes):
        if s is Slope.HOLD:
            states[k] = states[k + 1] = 1.0
    return Trajectory(traj.a, traj.times, tuple(states), traj.slopes)


# --------------------------------------------------------------------------
# form tables


def _forms(label: RegimeLabel, params: ProblemParams, c: DerivedConstants, table: FormTable):
    """Shape specs listed by a clause and the clauses asserting uniqueness."""
    t0, T, a = params.t0, params.T, params.a
    pure = ShapeSpec(ShapeKind.PURE_DESCENT)
    tent = ShapeSpec(ShapeKind.TENT_FROM_MINUS1)
    peak_at_tbar = ShapeSpec(ShapeKind.RISE_THEN_DESCEND, switch=T - c.rho)
    to_minus1 = ShapeSpec(ShapeKind.DESCEND_TO_MINUS1_AT_T)
    peak_at_top = ShapeSpec(ShapeKind.RISE_THEN_DESCEND, switch=t0 + c.rho2)
    last_fall = ShapeSpec(ShapeKind.RISE_THEN_DESCEND, switch=T - 2.0 / a)
    hold_full = ShapeSpec(ShapeKind.RISE_HOLD_DESCEND, hold_start=t0 + c.rho2, hold_end=T - 2.0 / a)
    hold_rho = ShapeSpec(ShapeKind.RISE_HOLD_DESCEND, hold_start=t0 + c.rho2, hold_end=T - c.rho)

    thm, clause = label.theorem, label.clause
    if thm is Theorem.THM3A:
        forms = {"a": [pure], "b": [to_minus1], "c": [hold_full]}
        unique = {"a", "b", "c"}
    elif thm is Theorem.THM3B:
        forms = {
            "a": [tent],
            "b": [tent, peak_at_tbar],
            "c": [tent, peak_at_top],
            "d": [tent],
            "e": [hold_full],
        }
        unique = {"a", "d", "e"}
    elif thm is Theorem.THM3C1:
        forms = {
            "a": [pure],
            "b": [peak_at_tbar],
            "c": [pure, peak_at_tbar],
            "d": [peak_at_tbar, to_minus1],
            "e": [to_minus1, peak_at_top],
            "f": [last_fall],
            "g": [hold_full],
        }
        unique = {"a", "b", "f", "g"}
    elif thm is Theorem.THM3C2:
        forms = {
            "a": [pure],
            "b": [peak_at_tbar],
            "c": [pure, peak_at_top],
            "d": [to_minus1, peak_at_top],
            "f": [last_fall],
            "g": [hold_full],
        }
        unique = {"a", "b", "f", "g"}
    elif thm is Theorem.THM3C3:
        forms = {
            "a": [pure],
            "b": [peak_at_tbar],
            "c": [peak_at_top],
            "d": [pure, peak_at_top],
            "e": [to_minus1, peak_at_top],
            "f": [last_fall],
            "g": [hold_full],
        }
        unique = {"a", "b", "c", "f", "g"}
    else:
        forms = {
            "a": [pure],
            "b": [to_minus1],
            "c": [peak_at_tbar, to_minus1],
            "d": [to_minus1, peak_at_top],
            "e": [last_fall],
            "f": [hold_full],
        }
        unique = {"a", "b", "e", "f"}

    chosen = list(forms[clause])
    if table == "repaired" and thm is not Theorem.THM3A:
        # a fall from the upper bound lasting longer than rho is never extremal
        # when rho < 2/a; the extremal arc holds at 1 until T - rho instead.
        repl = {id(peak_at_top), id(last_fall), id(hold_full)}
        if thm is Theorem.THM3B and clause == "d":
            repl.add(id(tent))
        chosen = [hold_rho if id(s) in repl else s for s in chosen]
    return chosen, clause in unique


def synthesize(params: ProblemParams, *, forms: FormTable = "repaired", snap: float = 0.0) -> CandidateSet:
    """Candidate set of the classified clause, cheapest first."""
    if forms not in ("paper", "repaired"):
        raise ValueError(f"unknown form table {forms!r}")
    label = classify(params, snap=snap)
    c = derive_constants(params)
    specs, unique = _forms(label, params, c, forms)
    status = Status.UNIQUE_GLOBAL if unique else Status.LOCAL_CANDIDATE
    cands = []
    for spec in specs:
        traj = build_shape(spec, params)
        cost = total_cost_closed(params, traj).value
        cands.append(Candidate(traj, label, status, spec, cost))
    cands.sort(key=lambda cand: (cand.cost, cand.trajectory.times))
    return CandidateSet(label, tuple(cands))
