"""Mean curvature flow of torus fibres as the negative g_P-gradient flow of log V."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InputError
from .geometry import grad_log_volume, orbital_volume
from .ode import OdeOptions, StepStats, hermite_resample, integrate
from .polytope import Polytope
from .potential import Potential, jet as potential_jet

BOUNDARY_HIT = "BoundaryHit"
TIME_LIMIT = "TimeLimit"
CRITICAL_POINT = "CriticalPoint"

CRITICAL_SPEED = 1e-12


@dataclass(frozen=True)
class Termination:
    kind: str
    active_facets: tuple[int, ...] = ()
    grad_norm: float | None = None

    @property
    def limit_type(self) -> str | None:
        """``"circle"`` for one active facet, ``"point"`` for two or more."""
        if self.kind != BOUNDARY_HIT:
            return None
        return "circle" if len(self.active_facets) == 1 else "point"

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == BOUNDARY_HIT:
            d["active_facets"] = list(self.active_facets)
            d["limit"] = self.limit_type
        if self.grad_norm is not None:
            d["grad_norm"] = float(self.grad_norm)
        return d


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    velocity: np.ndarray
    termination: Termination
    stats: StepStats = field(default_factory=StepStats)
    V: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.t)

    def resample(self, times) -> np.ndarray:
        return hermite_resample(self.t, self.x, self.velocity, times)

    def summary(self) -> dict:
        return {
            "termination": self.termination.to_dict(),
            "t_final": float(self.t[-1]),
            "x_final": [float(v) for v in self.x[-1]],
            "samples": int(len(self.t)),
            "steps": self.stats.to_dict(),
        }


@dataclass
class FlowOptions:
    t_max: float = 10.0
    boundary_eps: float | None = None  # default 1e-6 * diameter
    rtol: float = 1e-10
    atol: float = 1e-12
    direction: float = -1.0  # -1: mean curvature flow, +1: ascent of log V

    def __post_init__(self):
        if self.boundary_eps is not None and not self.boundary_eps > 0:
            raise InputError("boundary_eps must be positive")
        if self.direction not in (-1.0, 1.0, -1, 1):
            raise InputError("direction must be +1 or -1")


def gradient_gP_log_volume(pot: Potential, x) -> np.ndarray:
    j = potential_jet(pot, x)
    return j.hess_inv @ grad_log_volume(j)


def mcf_velocity(pot: Potential, x) -> np.ndarray:
    """``-u^{jl} d_l log V``, the negative g_P-gradient of ``log V``."""
    return -gradient_gP_log_volume(pot, x)


def _default_eps(P: Polytope) -> float:
    try:
        return 1e-6 * P.diameter
    except InputError:
        return 1e-6


def boundary_stop(P: Polytope, eps: float):
    def check(x) -> Termination | None:
        l = P.l(x)
        if l.min() <= eps:
            active = tuple(int(i) for i in np.flatnonzero(l <= 2 * eps))
            return Termination(BOUNDARY_HIT, active)
        return None
    return check


def boundary_dt_cap(P: Polytope, x: np.ndarray, speed: float) -> float:
    if speed == 0:
        return np.inf
    return 0.25 * float(P.l(x).min()) / speed


def integrate_mcf(pot: Potential, x0, opts: FlowOptions | None = None) -> Trajectory:
    """Integrate ``x' = -grad_{g_P} log V`` (or its reverse) from ``x0``."""
    opts = opts or FlowOptions()
    P = pot.polytope
    x0 = P._check_point(x0)
    if not P.l(x0).min() > 0:
        raise DomainError(f"start point {x0.tolist()} is not interior", float(P.l(x0).min()))
    eps = opts.boundary_eps if opts.boundary_eps is not None else _default_eps(P)
    sign = float(opts.direction)
    at_boundary = boundary_stop(P, eps)

    def rhs(_t, x):
        return sign * gradient_gP_log_volume(pot, x)

    def stop(_t, x, v):
        hit = at_boundary(x)
        if hit is not None:
            return hit
        speed = float(np.linalg.norm(v))
        if speed < CRITICAL_SPEED:
            return Termination(CRITICAL_POINT, grad_norm=speed)
        return None

    res = integrate(
        rhs, x0, OdeOptions(t_max=opts.t_max, rtol=opts.rtol, atol=opts.atol), stop,
        dt_cap=lambda x, v: boundary_dt_cap(P, x, float(np.linalg.norm(v))),
        valid=lambda x: bool(P.l(x).min() > 0),
    )
    term = res.stop if isinstance(res.stop, Termination) else Termination(str(res.stop))
    V = np.array([orbital_volume(potential_jet(pot, x)) for x in res.y])
    return Trajectory(res.t, res.y, res.dy, term, res.stats, V)


def volume_along(pot: Potential, traj: Trajectory) -> np.ndarray:
    return np.array([orbital_volume(potential_jet(pot, x)) for x in traj.x])
