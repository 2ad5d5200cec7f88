"""Maximum-principle multipliers for the Mayer form of the problem.

With state ``(x1, x2)`` where ``x2`` accumulates the running cost, the
adjoint has a constant second component ``p2`` and a first component with
``p1' = exp(-lam t) q2``.  The state constraint contributes a nonnegative
measure ``mu`` with a direction ``nu = +-1`` on the active bound, and
``q1 = p1 + int_[t0, t) nu dmu``.  The switching function is
``sigma = a q1 + exp(-lam t) q2``; the control minimises ``sigma u``.

``mu`` is stored as point masses plus density pieces of the form
``c exp(-lam t) (1 - lam/a) dt``, the form that keeps ``sigma`` at zero
along an arc held at ``x = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ProblemParams, Slope, Trajectory
from .synthesis import Candidate, ShapeKind

BOUND_TOL = 1e-12
FD_STEP = 1e-6


@dataclass(frozen=True)
class Atom:
    t: float
    mass: float
    nu: int


@dataclass(frozen=True)
class Density:
    t_lo: float
    t_hi: float
    c: float
    nu: int


@dataclass(frozen=True)
class Measure:
    atoms: tuple[Atom, ...] = ()
    densities: tuple[Density, ...] = ()


@dataclass(frozen=True)
class P1Piece:
    """``p1(t) = c0 + c1 exp(-lam t)`` on ``[t_lo, t_hi]``."""

    t_lo: float
    t_hi: float
    c0: float
    c1: float


@dataclass(frozen=True)
class Multipliers:
    gamma: float
    p2: float
    p1_pieces: tuple[P1Piece, ...]
    mu: Measure = field(default_factory=Measure)


@dataclass(frozen=True)
class Unsupported:
    reason: str


@dataclass(frozen=True)
class CertificateReport:
    residuals: dict
    nontrivial: bool
    tol: float
    worst_segment: int | None = None  # segment with the largest minimum-condition violation

    @property
    def passed(self) -> bool:
        return self.nontrivial and all(r <= self.tol for r in self.residuals.values())

    def failures(self) -> list[str]:
        bad = [k for k, r in self.residuals.items() if r > self.tol]
        if not self.nontrivial:
            bad.append("nontriviality")
        return bad


# --------------------------------------------------------------------------
# evaluation


def _density_mass(lam: float, a: float, d: Density, lo: float, hi: float) -> float:
    lo, hi = max(lo, d.t_lo), min(hi, d.t_hi)
    if hi <= lo:
        return 0.0
    return d.c * (1.0 - lam / a) * (math.exp(-lam * lo) - math.exp(-lam * hi)) / lam


def eta1(params: ProblemParams, mu: Measure, t: float, *, closed: bool = False) -> float:
    """``int nu dmu`` over ``[t0, t)``, or over ``[t0, t]`` when ``closed``."""
    total = 0.0
    for atom in mu.atoms:
        if atom.t < t or (closed and atom.t == t):
            total += atom.nu * atom.mass
    for d in mu.densities:
        total += d.nu * _density_mass(params.lam, params.a, d, params.t0, t)
    return total


def total_mass(params: ProblemParams, mu: Measure) -> float:
    return sum(a.mass for a in mu.atoms) + sum(
        _density_mass(params.lam, params.a, d, d.t_lo, d.t_hi) for d in mu.densities
    )


def _p1_piece(mult: Multipliers, t: float) -> P1Piece:
    for piece in mult.p1_pieces:
        if piece.t_lo <= t <= piece.t_hi:
            return piece
    raise ValueError(f"t = {t} is not covered by any p1 piece")


def p1_at(params: ProblemParams, mult: Multipliers, t: float) -> float:
    piece = _p1_piece(mult, t)
    return piece.c0 + piece.c1 * math.exp(-params.lam * t)


def _check_time(params: ProblemParams, t: float) -> None:
    if not params.t0 <= t <= params.T:
        raise ValueError(f"t = {t} lies outside [{params.t0}, {params.T}]")


def q_of_t(params: ProblemParams, mult: Multipliers, t: float, *, right: bool = False) -> tuple[float, float]:
    """``(q1, q2)`` at ``t``.

    The measure is integrated over ``[t0, t)``, closing at ``t = T``.  With
    ``right=True`` the right limit is returned, i.e. masses at ``t`` count.
    """
    _check_time(params, t)
    closed = right or t == params.T
    return p1_at(params, mult, t) + eta1(params, mult.mu, t, closed=closed), mult.p2


def switching_sigma(params: ProblemParams, mult: Multipliers, t: float, *, right: bool = False) -> float:
    q1, q2 = q_of_t(params, mult, t, right=right)
    return params.a * q1 + math.exp(-params.lam * t) * q2


def _sigma_array(params: ProblemParams, mult: Multipliers, ts: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Vectorised :func:`switching_sigma`; ``right`` selects right limits per point."""
    lam, a = params.lam, params.a
    closed = right | (ts == params.T)
    p1 = np.full(ts.shape, np.nan)
    for piece in mult.p1_pieces:
        sel = (ts >= piece.t_lo) & (ts <= piece.t_hi) & np.isnan(p1)
        p1[sel] = piece.c0 + piece.c1 * np.exp(-lam * ts[sel])
    if np.isnan(p1).any():
        raise ValueError("p1 pieces do not cover the check grid")
    eta = np.zeros(ts.shape)
    for atom in mult.mu.atoms:
        eta += atom.nu * atom.mass * ((atom.t < ts) | (closed & (atom.t == ts)))
    for d in mult.mu.densities:
        hi = np.clip(ts, d.t_lo, d.t_hi)
        eta += d.nu * d.c * (1.0 - lam / a) * (math.exp(-lam * d.t_lo) - np.exp(-lam * hi)) / lam
    return a * (p1 + eta) + np.exp(-lam * ts) * mult.p2


# --------------------------------------------------------------------------
# construction

_SUPPORTED = {
    (Slope.DOWN,),
    (Slope.UP, Slope.DOWN),
    (Slope.UP, Slope.HOLD, Slope.DOWN),
    (Slope.HOLD, Slope.DOWN),
}


def build_certificate(params: ProblemParams, cand: Candidate) -> Multipliers | Unsupported:
    """Normal multipliers (``gamma = 1``) for a synthesized candidate.

    Holds at ``x = 1`` carry the density with ``c = 1``.  When the path ends
    at ``x = -1`` a point mass at ``T`` with ``nu = -1`` absorbs the level of
    ``sigma`` that the final fall needs; nowhere else is a point mass placed.
    The result is not guaranteed to satisfy the conditions: candidates that
    are not extremals produce a certificate that the checker rejects.
    """
    traj = cand.trajectory
    try:
        ShapeKind(cand.shape.kind)
    except ValueError:
        return Unsupported(f"unknown shape {cand.shape.kind!r}")
    if traj.slopes not in _SUPPORTED:
        return Unsupported(f"arc pattern {[s.name for s in traj.slopes]} is outside the supported shapes")

    a, lam, T = params.a, params.lam, params.T
    densities = []
    for lo, hi, x_lo, x_hi, s in traj.segments():
        if s is Slope.HOLD:
            if x_lo != 1.0 or x_hi != 1.0:
                return Unsupported(f"hold arc at x = {x_lo} is not on the upper bound")
            densities.append(Density(lo, hi, 1.0, +1))

    tau = traj.times[-2]  # start of the final fall
    atoms = []
    if traj.states[-1] == -1.0 and len(traj.slopes) > 1:
        # sigma on the final fall is a mT + B(t); continuity at tau needs a mT + B(tau) = 0
        b_tau = (a / lam - 1.0) * math.exp(-lam * tau) - (a / lam) * math.exp(-lam * T)
        m_T = max(0.0, -b_tau / a)
        if m_T > 0.0:
            atoms.append(Atom(T, m_T, -1))

    mu = Measure(tuple(atoms), tuple(densities))
    eta_T = eta1(params, mu, T, closed=True)
    # q1(T) = 0 with p1' = -exp(-lam t)
    c1 = 1.0 / lam
    c0 = -eta_T - math.exp(-lam * T) / lam
    return Multipliers(gamma=1.0, p2=-1.0, p1_pieces=(P1Piece(params.t0, T, c0, c1),), mu=mu)


# --------------------------------------------------------------------------
# verification


def _p1_derivative(params: ProblemParams, mult: Multipliers, t: float, mode: str) -> float:
    if mode == "exact":
        piece = _p1_piece(mult, t)
        return -params.lam * piece.c1 * math.exp(-params.lam * t)
    h = FD_STEP

    def f(s: float) -> float:
        return p1_at(params, mult, s)

    if t - h < params.t0:
        return (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2 * h)) / (2 * h)
    if t + h > params.T:
        return (3.0 * f(t) - 4.0 * f(t - h) + f(t - 2 * h)) / (2 * h)
    return (f(t + h) - f(t - h)) / (2 * h)


def _check_times(params: ProblemParams, traj: Trajectory, mult: Multipliers, n_grid: int) -> np.ndarray:
    extra = list(traj.times) + [a.t for a in mult.mu.atoms]
    extra += [x for d in mult.mu.densities for x in (d.t_lo, d.t_hi)]
    extra += [x for p in mult.p1_pieces for x in (p.t_lo, p.t_hi)]
    grid = np.linspace(params.t0, params.T, n_grid)
    pts = np.concatenate([grid, np.clip(extra, params.t0, params.T)])
    return np.unique(pts)


def check_certificate(
    params: ProblemParams,
    cand: Candidate,
    mult: Multipliers,
    tol: float = 1e-8,
    *,
    n_grid: int = 10_000,
    derivative: str = "exact",
) -> CertificateReport:
    """Residuals of the support, adjoint, transversality and minimum conditions."""
    if derivative not in ("exact", "fd"):
        raise ValueError(f"derivative must be 'exact' or 'fd', got {derivative!r}")
    traj = cand.trajectory
    lam, a, t0, T = params.lam, params.a, params.t0, params.T
    times = _check_times(params, traj, mult, n_grid)

    # (i) mu >= 0, supported on the active bound with the matching direction
    support = 0.0
    for atom in mult.mu.atoms:
        support = max(support, -atom.mass)
        if not t0 <= atom.t <= T:
            support = max(support, 1.0)
            continue
        if atom.mass > 0.0:
            x = traj.state_at(atom.t)
            if abs(x - atom.nu) > BOUND_TOL or atom.nu not in (-1, 1):
                support = max(support, atom.mass * max(abs(x - atom.nu), 1.0))
    for d in mult.mu.densities:
        support = max(support, -d.c)
        if not t0 <= d.t_lo <= d.t_hi <= T:
            support = max(support, 1.0)
            continue
        if d.c > 0.0 and d.t_hi > d.t_lo:
            inside = times[(times >= d.t_lo) & (times <= d.t_hi)]
            dev = max(abs(traj.state_at(float(t)) - d.nu) for t in inside)
            if dev > BOUND_TOL or d.nu not in (-1, 1):
                support = max(support, d.c * max(dev, 1.0))

    # (ii) p1' = exp(-lam t) q2 on each piece, and p1 continuous across pieces
    pieces = sorted(mult.p1_pieces, key=lambda p: p.t_lo)
    adjoint = 0.0
    if not pieces or pieces[0].t_lo > t0 or pieces[-1].t_hi < T:
        adjoint = math.inf
    for left, right in zip(pieces, pieces[1:]):
        jump = abs((left.c0 + left.c1 * math.exp(-lam * left.t_hi)) - (right.c0 + right.c1 * math.exp(-lam * right.t_lo)))
        adjoint = max(adjoint, jump, max(0.0, right.t_lo - left.t_hi))
    if adjoint < math.inf:
        for t in times:
            t = float(t)
            adjoint = max(adjoint, abs(_p1_derivative(params, mult, t, derivative) - math.exp(-lam * t) * mult.p2))

    # (iii) q1(T) = 0, q2(T) = -gamma
    q1_T, q2_T = q_of_t(params, mult, T)
    transversality = max(abs(q1_T), abs(q2_T + mult.gamma))

    # (iv) u minimises sigma u over [-1, 1], checked on each arc with one-sided limits at its ends
    minimum = 0.0
    worst = None
    for k, (lo, hi, _, _, s) in enumerate(traj.segments()):
        pts = times[(times >= lo) & (times <= hi)]
        sig = _sigma_array(params, mult, pts, right=(pts == lo) & (pts < T))
        u = s.control
        if u == 1:
            r = np.maximum(sig, 0.0)
        elif u == -1:
            r = np.maximum(-sig, 0.0)
        else:
            r = np.abs(sig)
        seg_worst = float(r.max()) if r.size else 0.0
        if seg_worst > minimum:
            minimum, worst = seg_worst, k

    p_norm = max(abs(mult.p2), *(abs(p1_at(params, mult, float(t))) for t in (t0, T)))
    nontrivial = mult.gamma > 0.0 or p_norm > 0.0 or total_mass(params, mult.mu) > 0.0
    if mult.gamma < 0.0:
        transversality = max(transversality, -mult.gamma)

    return CertificateReport(
        residuals={
            "support": support,
            "adjoint": adjoint,
            "transversality": transversality,
            "minimum": minimum,
        },
        nontrivial=nontrivial,
        tol=tol,
        worst_segment=worst,
    )


# --------------------------------------------------------------------------
# exchange format


def to_json(mult: Multipliers) -> dict:
    """Document form; ``nu_per_support_piece`` lists atoms first, then densities."""
    return {
        "gamma": mult.gamma,
        "p2": mult.p2,
        "p1_pieces": [{"t_lo": p.t_lo, "t_hi": p.t_hi, "c0": p.c0, "c1": p.c1} for p in mult.p1_pieces],
        "mu": {
            "atoms": [{"t": a.t, "mass": a.mass} for a in mult.mu.atoms],
            "densities": [{"t_lo": d.t_lo, "t_hi": d.t_hi, "c": d.c} for d in mult.mu.densities],
        },
        "nu_per_support_piece": [[a.nu, 0] for a in mult.mu.atoms] + [[d.nu, 0] for d in mult.mu.densities],
    }


def from_json(doc: dict) -> Multipliers:
    atoms_doc = doc["mu"]["atoms"]
    dens_doc = doc["mu"]["densities"]
    nus = doc.get("nu_per_support_piece", [[1, 0]] * (len(atoms_doc) + len(dens_doc)))
    if len(nus) != len(atoms_doc) + len(dens_doc):
        raise ValueError("nu_per_support_piece must have one entry per atom and density")
    for nu in nus:
        if len(nu) != 2 or nu[1] != 0:
            raise ValueError(f"nu entries must be (+-1, 0), got {nu}")
    atoms = tuple(Atom(float(d["t"]), float(d["mass"]), int(n[0])) for d, n in zip(atoms_doc, nus))
    dens = tuple(
        Density(float(d["t_lo"]), float(d["t_hi"]), float(d["c"]), int(n[0]))
        for d, n in zip(dens_doc, nus[len(atoms_doc):])
    )
    pieces = tuple(P1Piece(float(p["t_lo"]), float(p["t_hi"]), float(p["c0"]), float(p["c1"])) for p in doc["p1_pieces"])
    return Multipliers(float(doc["gamma"]), float(doc["p2"]), pieces, Measure(atoms, dens))
