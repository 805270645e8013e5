"""Adaptive Dormand-Prince 5(4) integration shared by the flow and geodesic modules.

The integrator is written out here (rather than taken from scipy) because the
step controller must cap each step by the distance to the polytope boundary
and must reject, not crash on, trial stages that leave the interior.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegeneracyError, DomainError, InputError, StiffnessError

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    min_dt: float = float("inf")

    def to_dict(self) -> dict:
        return {"accepted": self.accepted, "rejected": self.rejected,
                "min_dt": None if not np.isfinite(self.min_dt) else float(self.min_dt)}


@dataclass
class OdeOptions:
    t_max: float = 10.0
    rtol: float = 1e-10
    atol: float = 1e-12
    first_step: float | None = None
    max_steps: int = 200_000

    def __post_init__(self):
        for name in ("t_max", "rtol", "atol"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")


@dataclass
class OdeResult:
    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    stop: object
    stats: StepStats = field(default_factory=StepStats)


def _stages(rhs, t, y, f0, dt):
    k = [f0]
    for i in range(1, 7):
        yi = y + dt * sum(a * kj for a, kj in zip(_A[i], k))
        k.append(rhs(t + _C[i] * dt, yi))
    return k


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    opts: OdeOptions,
    stop: Callable[[float, np.ndarray, np.ndarray], object],
    dt_cap: Callable[[np.ndarray, np.ndarray], float] | None = None,
    valid: Callable[[np.ndarray], bool] | None = None,
) -> OdeResult:
    """Integrate ``y' = rhs(t, y)`` from ``t = 0``.

    ``stop(t, y, dy)`` is called at the start and after every accepted step;
    a non-``None`` return ends the run and is stored as ``stop``.  Reaching
    ``t_max`` ends with ``stop = "TimeLimit"``.  Trial steps for which ``rhs``
    raises a domain/degeneracy error, or whose end point fails ``valid``,
    are rejected and retried with half the step.
    """
    y = np.array(y0, dtype=float)
    t = 0.0
    f = rhs(t, y)
    ts, ys, fs = [t], [y.copy()], [f.copy()]
    stats = StepStats()
    verdict = stop(t, y, f)
    if verdict is not None:
        return OdeResult(np.array(ts), np.array(ys), np.array(fs), verdict, stats)

    scale0 = opts.atol + opts.rtol * np.abs(y)
    d0 = np.linalg.norm(y / scale0) / np.sqrt(y.size)
    d1 = np.linalg.norm(f / scale0) / np.sqrt(y.size)
    dt = opts.first_step or (0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6)
    dt = min(dt, opts.t_max)
    underflow = 1e-14 * opts.t_max

    for _ in range(opts.max_steps):
        if dt_cap is not None:
            dt = min(dt, dt_cap(y, f))
        dt = min(dt, opts.t_max - t)
        if dt < underflow:
            raise StiffnessError(
                f"step size underflow (dt = {dt:.3e}) at t = {t:.6g}",
                partial=OdeResult(np.array(ts), np.array(ys), np.array(fs), "StiffnessError", stats),
            )
        try:
            k = _stages(rhs, t, y, f, dt)
            y_new = y + dt * sum(b * kj for b, kj in zip(_B5, k) if b)
            if valid is not None and not valid(y_new):
                raise DomainError("trial step left the domain", 0.0)
        except (DomainError, DegeneracyError):
            stats.rejected += 1
            dt *= 0.5
            continue
        err_vec = dt * sum(e * kj for e, kj in zip(_E, k))
        sc = opts.atol + opts.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / sc) ** 2)))
        if not np.isfinite(err):
            stats.rejected += 1
            dt *= 0.5
            continue
        if err <= 1.0:
            t = t + dt
            y = y_new
            f = k[6]  # FSAL
            stats.accepted += 1
            stats.min_dt = min(stats.min_dt, dt)
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
            verdict = stop(t, y, f)
            if verdict is None and t >= opts.t_max * (1 - 1e-15):
                verdict = "TimeLimit"
            if verdict is not None:
                return OdeResult(np.array(ts), np.array(ys), np.array(fs), verdict, stats)
            factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err ** -0.2))
        else:
            stats.rejected += 1
            factor = max(MIN_FACTOR, SAFETY * err ** -0.2)
        dt *= factor
    raise StiffnessError(
        f"step budget of {opts.max_steps} exhausted at t = {t:.6g}",
        partial=OdeResult(np.array(ts), np.array(ys), np.array(fs), "StiffnessError", stats),
    )


def hermite_resample(t: np.ndarray, y: np.ndarray, dy: np.ndarray, grid) -> np.ndarray:
    """Cubic Hermite dense output of accepted steps at the times in ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if grid.size and (grid.min() < t[0] or grid.max() > t[-1]):
        raise InputError("resampling grid extends beyond the integrated interval")
    idx = np.clip(np.searchsorted(t, grid, side="right") - 1, 0, max(len(t) - 2, 0))
    if len(t) == 1:
        return np.repeat(y[:1], grid.size, axis=0)
    h = (t[idx + 1] - t[idx])[:, None]
    s = ((grid - t[idx])[:, None]) / h
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * y[idx] + h10 * h * dy[idx] + h01 * y[idx + 1] + h11 * h * dy[idx + 1]


def quintic_resample(t: np.ndarray, y: np.ndarray, dy: np.ndarray, d2y: np.ndarray, grid):
    """Quintic Hermite interpolation from ``(y, y', y'')`` at the samples.

    Returns values and first derivatives at ``grid``.  Used for second-order
    systems, where the acceleration is known at every accepted step.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size and (grid.min() < t[0] or grid.max() > t[-1]):
        raise InputError("resampling grid extends beyond the integrated interval")
    if len(t) == 1:
        return np.repeat(y[:1], grid.size, axis=0), np.repeat(dy[:1], grid.size, axis=0)
    idx = np.clip(np.searchsorted(t, grid, side="right") - 1, 0, len(t) - 2)
    h = (t[idx + 1] - t[idx])[:, None]
    s = ((grid - t[idx])[:, None]) / h
    y0, D0, A0 = y[idx], h * dy[idx], h * h * d2y[idx]
    y1, D1, A1 = y[idx + 1], h * dy[idx + 1], h * h * d2y[idx + 1]
    r0 = y1 - (y0 + D0 + 0.5 * A0)
    r1 = D1 - (D0 + A0)
    r2 = A1 - A0
    c3 = 10 * r0 - 4 * r1 + 0.5 * r2
    c4 = -15 * r0 + 7 * r1 - r2
    c5 = 6 * r0 - 3 * r1 + 0.5 * r2
    val = y0 + s * (D0 + s * (0.5 * A0 + s * (c3 + s * (c4 + s * c5))))
    der = D0 + s * (A0 + s * (3 * c3 + s * (4 * c4 + s * 5 * c5)))
    return val, der / h
