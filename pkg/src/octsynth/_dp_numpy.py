"""Vectorised backward sweep; the reference the compiled kernel must match."""

from __future__ import annotations

import math

import numpy as np

# Interpolation weights this close to 0 or 1 are treated as exact node hits.
WEIGHT_SNAP = 1e-12


def step_cost_coeffs(lam: float, dt: float) -> tuple[float, float]:
    """Exact ``int_0^dt e^{-lam s} ds`` and ``int_0^dt s e^{-lam s} ds``."""
    from .cost import _e0, _e1

    return _e0(lam, dt), _e1(lam, dt)


def shift_plan(controls, a: float, dt: float, dx: float, n_x: int):
    """Per-control successor layout on a uniform state grid.

    For control ``u`` the successor of node ``j`` sits at fractional node
    ``j + s`` with ``s = -a u dt / dx``.  Returns ``(base, weight, valid)``
    where ``base[i]`` and ``weight[i]`` split ``s`` into integer and
    fractional parts, and ``valid[i, j]`` is False when the successor leaves
    the grid (such transitions are pruned, never clamped).
    """
    n_u = len(controls)
    base = np.empty(n_u, dtype=np.int64)
    weight = np.empty(n_u)
    valid = np.empty((n_u, n_x), dtype=bool)
    j = np.arange(n_x)
    for i, u in enumerate(controls):
        s = -a * float(u) * dt / dx
        b = math.floor(s)
        w = s - b
        if w > 1.0 - WEIGHT_SNAP:
            b, w = b + 1, 0.0
        elif w < WEIGHT_SNAP:
            w = 0.0
        lo = j + b
        hi = lo + (1 if w > 0.0 else 0)
        base[i] = b
        weight[i] = w
        valid[i] = (lo >= 0) & (hi <= n_x - 1)
    return base, weight, valid


def backward_sweep(
    V: np.ndarray,
    t_grid: np.ndarray,
    x_grid: np.ndarray,
    controls: np.ndarray,
    a: float,
    lam: float,
    n_threads: int = 1,
) -> int:
    """Fill ``V[k, j]`` for ``k = n_t - 1 .. 0`` in place; return the pruned count.

    ``V[n_t]`` must already hold the terminal values.  From node ``x_j`` the
    control ``u`` leads to ``x_j - a u dt``; successors outside [-1, 1] are
    pruned, the rest are read off ``V[k+1]`` by linear interpolation.
    Controls are scanned in the given order and only a strictly smaller
    value replaces the incumbent.  ``n_threads`` is accepted for signature
    parity with the compiled kernel and ignored.
    """
    n_t = V.shape[0] - 1
    n_x = x_grid.shape[0]
    dt = float(t_grid[1] - t_grid[0])
    dx = float(x_grid[1] - x_grid[0])
    e0, e1 = step_cost_coeffs(lam, dt)
    base, weight, valid = shift_plan(controls, a, dt, dx, n_x)
    j = np.arange(n_x)

    plans = []
    for i, u in enumerate(controls):
        lo = np.clip(j + base[i], 0, n_x - 1)
        hi = np.clip(j + base[i] + (1 if weight[i] > 0.0 else 0), 0, n_x - 1)
        plans.append((float(u), valid[i], lo, hi, float(weight[i])))

    best = np.empty(n_x)
    for k in range(n_t - 1, -1, -1):
        nxt = V[k + 1]
        disc = math.exp(-lam * float(t_grid[k]))
        best.fill(np.inf)
        for u, ok, lo, hi, w in plans:
            # -e^{-lam t_k} [ (x + u) e0 + xdot e1 ],  xdot = -a u
            stage = -disc * ((x_grid + u) * e0 - a * u * e1)
            cont = (1.0 - w) * nxt[lo] + w * nxt[hi]
            val = np.where(ok, stage + cont, np.inf)
            np.minimum(best, val, out=best, where=val < best)
        V[k] = best
    return int(n_x * len(controls) - valid.sum()) * n_t
