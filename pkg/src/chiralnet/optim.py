"""Bounded Nelder-Mead on the unit box."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

REFLECT = 1.0
EXPAND = 2.0
CONTRACT = 0.5
SHRINK = 0.5


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    evaluations: int
    converged: bool


def _diameter(simplex: np.ndarray) -> float:
    diffs = simplex[:, None, :] - simplex[None, :, :]
    return float(np.sqrt((diffs ** 2).sum(-1)).max())


def nelder_mead(
    func: Callable[[np.ndarray], float],
    x0,
    *,
    step: float = 0.05,
    xtol: float = 1e-4,
    max_evals: int = 2000,
) -> SimplexResult:
    """Minimize ``func`` over [0, 1]^d.

    Trial points are clipped onto the box before evaluation. Stops when the
    simplex diameter drops below ``xtol`` or after ``max_evals`` calls; in the
    latter case ``converged`` is False and the best point so far is returned.
    """
    x0 = np.clip(np.asarray(x0, dtype=float), 0.0, 1.0)
    d = x0.size
    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        return float(func(x))

    simplex = [x0]
    for i in range(d):
        v = x0.copy()
        v[i] = v[i] + step if v[i] + step <= 1.0 else v[i] - step
        simplex.append(v)
    simplex = np.array(simplex)
    values = np.array([f(v) for v in simplex])

    converged = False
    while True:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        if _diameter(simplex) < xtol:
            converged = True
            break
        if evals >= max_evals:
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = np.clip(centroid + REFLECT * (centroid - worst), 0.0, 1.0)
        fr = f(xr)
        if fr < values[0]:
            xe = np.clip(centroid + EXPAND * (xr - centroid), 0.0, 1.0)
            fe = f(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-1]:
            xc = np.clip(centroid + CONTRACT * (xr - centroid), 0.0, 1.0)
            fc = f(xc)
            if fc <= fr:
                simplex[-1], values[-1] = xc, fc
                continue
        else:
            xc = centroid + CONTRACT * (worst - centroid)
            fc = f(xc)
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
                continue
        best = simplex[0]
        for k in range(1, d + 1):
            simplex[k] = best + SHRINK * (simplex[k] - best)
            values[k] = f(simplex[k])

    i = int(np.argmin(values))
    return SimplexResult(simplex[i].copy(), float(values[i]), evals, converged)
