"""Geodesics of the conformal metric ``h = V^{2/k} g_P`` on the polytope interior.

Preimages of ``h``-geodesics (k = 1) under the moment map are invariant
minimal submanifolds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, DomainError, InputError
from .flow import BOUNDARY_HIT, Termination, boundary_stop
from .geometry import grad_log_volume, log_volume
from .ode import OdeOptions, StepStats, integrate, quintic_resample
from .potential import Potential, PotentialJet, jet as potential_jet

# Quotient geodesics whose lifts are known to be singular (cone points over
# tori where the curve meets a vertex); informational only.
KNOWN_SINGULAR_LIFTS = {
    "cp2": "the diagonal segment ends at the vertex (0,0); its lift is a cone over a torus",
    "cp1xcp1": "lines x1 = 1/2 or x2 = 1/2 lift smoothly; curves through a vertex lift to cones",
}


def _check_k(k) -> int:
    if int(k) != k or k < 1:
        raise InputError("k must be a positive integer")
    return int(k)


def hl_metric(pot: Potential, x, k: int = 1) -> np.ndarray:
    """``V(x)^{2/k} g_P(x)``."""
    k = _check_k(k)
    j = potential_jet(pot, x)
    return np.exp(2.0 * log_volume(j) / k) * j.hess


def christoffel_from_jet(j: PotentialJet, k: int) -> np.ndarray:
    """``Gamma[c, a, b]`` of ``h = V^{2/k} H``.

    ``d_a h_bc = V^{2/k} (H_bca + (2/k) d_a log V H_bc)``; the conformal
    factor cancels against ``h^{-1}``.
    """
    g = grad_log_volume(j)
    H, Hi, T = j.hess, j.hess_inv, j.third
    # dh[a, b, c] = d_a h_bc / V^{2/k}
    dh = np.transpose(T, (2, 0, 1)) + (2.0 / k) * np.einsum("a,bc->abc", g, H)
    # d_a h_db + d_b h_da - d_d h_ab
    lower = np.einsum("adb->dab", dh) + np.einsum("bda->dab", dh) - dh
    return 0.5 * np.einsum("cd,dab->cab", Hi, lower)


def christoffel(pot: Potential, x, k: int = 1) -> np.ndarray:
    return christoffel_from_jet(potential_jet(pot, x), _check_k(k))


def geodesic_acceleration(pot: Potential, x, v, k: int = 1) -> np.ndarray:
    G = christoffel(pot, x, k)
    return -np.einsum("cab,a,b->c", G, v, v)


def hl_speed2(pot: Potential, x, v, k: int = 1) -> float:
    v = np.asarray(v, dtype=float)
    return float(v @ hl_metric(pot, x, k) @ v)


@dataclass
class HLGeodesic:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    accel: np.ndarray
    speed2: np.ndarray
    termination: Termination
    k: int = 1
    stats: StepStats = field(default_factory=StepStats)

    @property
    def speed2_drift(self) -> float:
        s0 = self.speed2[0]
        return float(np.abs(self.speed2 - s0).max() / abs(s0))

    def resample(self, times) -> tuple[np.ndarray, np.ndarray]:
        """Positions and velocities at ``times`` (quintic Hermite in x)."""
        return quintic_resample(self.t, self.x, self.v, self.accel, times)

    def summary(self) -> dict:
        return {
            "termination": self.termination.to_dict(),
            "k": self.k,
            "t_final": float(self.t[-1]),
            "x_final": [float(c) for c in self.x[-1]],
            "speed2_drift": self.speed2_drift,
            "samples": int(len(self.t)),
            "steps": self.stats.to_dict(),
        }


@dataclass
class GeodesicOptions:
    t_max: float = 10.0
    boundary_eps: float | None = None
    rtol: float = 1e-11
    atol: float = 1e-13

    def __post_init__(self):
        if self.boundary_eps is not None and not self.boundary_eps > 0:
            raise InputError("boundary_eps must be positive")


def integrate_geodesic(pot: Potential, x0, v0, k: int = 1, opts: GeodesicOptions | None = None) -> HLGeodesic:
    """Integrate ``x'' + Gamma(x', x') = 0`` for the metric ``V^{2/k} g_P``."""
    opts = opts or GeodesicOptions()
    k = _check_k(k)
    P = pot.polytope
    n = P.dim
    x0 = P._check_point(x0)
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (n,):
        raise InputError(f"velocity has shape {v0.shape}, expected ({n},)")
    if not np.linalg.norm(v0) > 0:
        raise InputError("initial velocity must be nonzero")
    if not P.l(x0).min() > 0:
        raise DomainError(f"start point {x0.tolist()} is not interior", float(P.l(x0).min()))
    if opts.boundary_eps is not None:
        eps = opts.boundary_eps
    else:
        eps = 1e-6 * P.diameter if P.compact else 1e-6
    at_boundary = boundary_stop(P, eps)

    def rhs(_t, y):
        x, v = y[:n], y[n:]
        return np.concatenate([v, geodesic_acceleration(pot, x, v, k)])

    def stop(_t, y, _dy):
        return at_boundary(y[:n])

    def cap(y, _dy):
        speed = float(np.linalg.norm(y[n:]))
        return np.inf if speed == 0 else 0.25 * float(P.l(y[:n]).min()) / speed

    res = integrate(
        rhs, np.concatenate([x0, v0]),
        OdeOptions(t_max=opts.t_max, rtol=opts.rtol, atol=opts.atol), stop,
        dt_cap=cap, valid=lambda y: bool(P.l(y[:n]).min() > 0),
    )
    xs, vs = res.y[:, :n], res.y[:, n:]
    speed2 = np.array([hl_speed2(pot, x, v, k) for x, v in zip(xs, vs)])
    term = res.stop if isinstance(res.stop, Termination) else Termination(str(res.stop))
    return HLGeodesic(res.t, xs, vs, res.dy[:, n:], speed2, term, k, res.stats)


def geodesic_residual(pot: Potential, t, x, k: int = 1) -> float:
    """Max defect of ``x'' + Gamma(x', x')`` on a uniformly sampled polyline.

    Derivatives come from second-order central differences at the interior
    samples; the Christoffel symbols are analytic.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if t.ndim != 1 or x.shape[0] != t.shape[0] or t.size < 5:
        raise InputError("geodesic_residual needs at least 5 samples with matching times")
    dt = np.diff(t)
    if not np.all(dt > 0) or np.abs(dt - dt[0]).max() > 1e-9 * max(abs(dt[0]), 1e-300):
        raise InputError("geodesic_residual needs a uniform, increasing time grid")
    h = dt[0]
    worst = 0.0
    for i in range(1, len(t) - 1):
        v = (x[i + 1] - x[i - 1]) / (2 * h)
        a = (x[i + 1] - 2 * x[i] + x[i - 1]) / (h * h)
        try:
            defect = a - geodesic_acceleration(pot, x[i], v, k)
        except (DomainError, DegeneracyError):
            raise
        worst = max(worst, float(np.abs(defect).max()))
    return worst
