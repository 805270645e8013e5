"""Toric metrics on the simplex with prescribed minimal fibres.

Two constructive routes are implemented:

* diagonal (cohomogeneity one): ``u = u_G + 1/2 f(x1 + x2)`` with
  ``1 + t(1-t) f''(t) = exp(phi(t))``.  Critical points sit over the diagonal
  at ``(t/2, t/2)`` exactly where ``phi'(t) = beta(t) = (2-3t)/(t(1-t))``;
* separable: ``u = u_G + 1/2 (f(x1) + g(x2))`` with ``f'' = exp(psi_f)``,
  ``g'' = exp(psi_g)``, where the jets of ``psi`` at the target coordinates
  force each target to be critical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, InputError
from .polytope import simplex
from .potential import Potential, ProfileTerm, interior_lattice, is_positive_definite
from .profiles import (
    ContinuumPhi,
    ExpSplineProfile,
    PhiQuotientProfile,
    QuinticHermite,
    _beta,
    _beta_prime,
)
from .solver import SolverConfig, find_minimal_fibres, gP_distance, grad_only

SAMPLES_PER_SEGMENT = 200
DIAGONAL = np.array([1, 1])


def beta(t: float) -> float:
    """Slope ``phi'`` must take at a diagonal critical point ``(t/2, t/2)``."""
    return _beta(t)


def beta_prime(t: float) -> float:
    return _beta_prime(t)


def diagonal_potential(phi) -> Potential:
    return Potential(simplex(), (ProfileTerm(PhiQuotientProfile(phi), DIAGONAL, 1.0),))


def _collar_width(points) -> float:
    pts = sorted([0.0, *points, 1.0])
    gap = min(b - a for a, b in zip(pts, pts[1:]))
    return min(1e-2, gap / 4.0)


@dataclass
class Verification:
    found: list
    recovered: list
    distances: list
    exact: bool
    classifications: list
    max_offdiagonal: float = 0.0

    def to_dict(self) -> dict:
        return {
            "found": [[float(c) for c in p] for p in self.found],
            "recovered": [bool(r) for r in self.recovered],
            "distances": [float(d) for d in self.distances],
            "exact": bool(self.exact),
            "classifications": list(self.classifications),
            "max_offdiagonal": float(self.max_offdiagonal),
        }


@dataclass
class DiagonalPrescription:
    targets: list
    phi: QuinticHermite
    f_second: PhiQuotientProfile
    potential: Potential
    delta: float
    touching: list = field(default_factory=list)
    verification: Verification | None = None

    def summary(self) -> dict:
        return {
            "mode": "diagonal",
            "targets": [float(t) for t in self.targets],
            "points": [[t / 2, t / 2] for t in self.targets],
            "delta": self.delta,
            "touching": [float(t) for t in self.touching],
            "verification": None if self.verification is None else self.verification.to_dict(),
        }


def _check_targets_1d(targets) -> list[float]:
    ts = [float(t) for t in targets]
    if not ts:
        raise InputError("at least one target is required")
    if any(not 0.0 < t < 1.0 for t in ts):
        raise InputError("diagonal targets must lie strictly inside (0, 1)")
    ts_sorted = sorted(ts)
    if any(b - a <= 1e-3 for a, b in zip(ts_sorted, ts_sorted[1:])):
        raise InputError("diagonal targets must be pairwise separated by more than 1e-3")
    return ts_sorted


def _sign_pattern(k: int) -> tuple[list[int], list[int]]:
    """Required sign of ``e = phi' - beta`` on each of the k+1 segments, and the
    slope sign of ``e`` at each target (0 marks a touching zero)."""
    seg = [-1]
    slopes = []
    for i in range(k):
        if k % 2 == 0 and i == k - 1:
            slopes.append(0)
            seg.append(seg[-1])
        else:
            slopes.append(-seg[-1])
            seg.append(-seg[-1])
    return seg, slopes


def _segment_error(knots, d1, d2, i, s):
    """``e`` on segment ``i`` at unit parameters ``s`` with the value jump set to zero,
    plus the bump ``b`` multiplying the value jump."""
    h = knots[i + 1] - knots[i]
    base = QuinticHermite([knots[i], knots[i + 1]], [0.0, 0.0], d1[i:i + 2], d2[i:i + 2])
    t = knots[i] + s * h
    e0 = np.array([base.jet2(float(tt))[1] for tt in t]) - np.array([beta(float(tt)) for tt in t])
    b = 30.0 * s * s * (1 - s) ** 2 / h
    return t, e0, b


def _phi_error_samples(phi, knots, n=SAMPLES_PER_SEGMENT):
    """Sampled ``phi' - beta`` on each segment (open interior)."""
    out = []
    for i in range(len(knots) - 1):
        s = (np.arange(n) + 0.5) / n
        t = knots[i] + s * (knots[i + 1] - knots[i])
        e = np.array([phi.jet2(float(tt))[1] - beta(float(tt)) for tt in t])
        out.append((t, e))
    return out


def build_diagonal_phi(targets, kappa: float | None = None, margin: float = 0.1):
    """Quintic Hermite ``phi`` whose slope meets ``beta`` exactly at ``targets``.

    Returns ``(phi, delta, touching)``.  For an even number of targets the last
    one is a touching (degenerate) zero of ``phi' - beta``: the sign of
    ``phi' - beta`` is negative near 0 and positive near 1, so an even number
    of transversal crossings is impossible.
    """
    ts = _check_targets_1d(targets)
    k = len(ts)
    delta = _collar_width(ts)
    if k == 1 and abs(ts[0] - 2.0 / 3.0) < 1e-12:
        # beta vanishes only at 2/3, so the Guillemin metric already works
        return QuinticHermite([0.0, 1.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]), delta, []
    knots = [delta, *ts, 1.0 - delta]
    if ts[0] <= delta or ts[-1] >= 1.0 - delta:
        raise InputError("targets too close to the ends of [0, 1]")
    seg, slopes = _sign_pattern(k)
    d1 = [0.0] + [beta(t) for t in ts] + [0.0]
    d2 = [0.0]
    for t, sl in zip(ts, slopes):
        kap = kappa if kappa is not None else max(1.0, 0.5 * abs(beta_prime(t)))
        d2.append(beta_prime(t) + sl * kap)
    d2.append(0.0)

    s = (np.arange(SAMPLES_PER_SEGMENT * 4) + 0.5) / (SAMPLES_PER_SEGMENT * 4)
    jumps = []
    for i in range(k + 1):
        _, e0, b = _segment_error(knots, d1, d2, i, s)
        ratio = -e0 / b
        if seg[i] > 0:
            thr = float(ratio.max())
            jumps.append(thr + margin * max(1.0, abs(thr)))
        else:
            thr = float(ratio.min())
            jumps.append(thr - margin * max(1.0, abs(thr)))
    total = sum(jumps)
    # the first segment only needs an upper bound and the last a lower bound
    if total > 0:
        jumps[0] -= total
    else:
        jumps[-1] -= total
    vals = [0.0]
    for jmp in jumps[:-1]:
        vals.append(vals[-1] + jmp)
    vals.append(0.0)
    full_knots = [0.0, *knots, 1.0]
    phi = QuinticHermite(full_knots, [0.0, *vals, 0.0], [0.0, *d1, 0.0], [0.0, *d2, 0.0])

    for i, (t, e) in enumerate(_phi_error_samples(phi, knots)):
        if not np.all(np.sign(e) == seg[i]):
            raise ConstructionError(
                f"phi' - beta changes sign inside segment [{knots[i]:.6g}, {knots[i + 1]:.6g}]"
            )
    touching = [ts[-1]] if k % 2 == 0 else []
    return phi, delta, touching


def _solver_config(grid: int | None) -> SolverConfig:
    return SolverConfig(grid=grid or 25)


def verify_points(pot: Potential, points, grid: int | None = None, tol: float = 1e-6) -> Verification:
    reports = find_minimal_fibres(pot, _solver_config(grid))
    found = [r.point for r in reports]
    dists, recovered = [], []
    for p in points:
        d = min((gP_distance(pot, p, q) for q in found), default=math.inf)
        dists.append(d)
        recovered.append(d < tol)
    extra = [q for q in found if min(gP_distance(pot, p, q) for p in points) >= tol]
    offdiag = max((abs(q[0] - q[1]) for q in found), default=0.0)
    return Verification(
        found=found,
        recovered=recovered,
        distances=dists,
        exact=all(recovered) and not extra,
        classifications=[r.classification for r in reports],
        max_offdiagonal=float(offdiag),
    )


def _check_pd(pot: Potential, per_axis: int = 50) -> None:
    rep = is_positive_definite(pot, interior_lattice(pot.polytope, per_axis))
    if not rep.passed:
        raise ConstructionError(
            f"constructed Hessian is not positive definite at {rep.worst_point.tolist()}"
        )


def prescribe_diagonal(targets, verify: bool = True, grid: int | None = None,
                       kappa: float | None = None) -> DiagonalPrescription:
    """Cohomogeneity-one metric whose diagonal critical points are ``(t_i/2, t_i/2)``."""
    ts = _check_targets_1d(targets)
    phi, delta, touching = build_diagonal_phi(ts, kappa=kappa)
    prof = PhiQuotientProfile(phi)
    pot = diagonal_potential(phi)
    _check_pd(pot)
    out = DiagonalPrescription(ts, phi, prof, pot, delta, touching)
    if verify:
        out.verification = verify_points(pot, [np.array([t / 2, t / 2]) for t in ts], grid)
    return out


# --- separable route ------------------------------------------------------------

def separable_third_derivatives(p) -> tuple[float, float]:
    """``(f''', g''')`` making ``p`` critical when ``f'' = g'' = 1`` there.

    With ``4 det Hess u = (a + f'')(b + g'') - c^2`` for ``a = 1/x1 + 1/l``,
    ``b = 1/x2 + 1/l``, ``c = 1/l``, ``l = 1 - x1 - x2``, criticality is
    ``d_j det = 0``, which is linear in ``f'''`` and ``g'''`` separately.
    """
    x1, x2 = float(p[0]), float(p[1])
    l = 1.0 - x1 - x2
    a, b, c = 1 / x1 + 1 / l, 1 / x2 + 1 / l, 1 / l
    dl = 1 / (l * l)  # d_1 (1/l) = d_2 (1/l)
    da1, db2 = -1 / (x1 * x1) + dl, -1 / (x2 * x2) + dl
    # d_1: (da1 + f3)(b + 1) + (a + 1) dl - 2 c dl = 0
    f3 = (2 * c * dl - (a + 1) * dl) / (b + 1) - da1
    g3 = (2 * c * dl - (b + 1) * dl) / (a + 1) - db2
    return f3, g3


@dataclass
class SeparablePrescription:
    targets: list
    psi_f: QuinticHermite
    psi_g: QuinticHermite
    third: list
    potential: Potential
    delta: float
    grad_norms: list = field(default_factory=list)
    verification: Verification | None = None

    def summary(self) -> dict:
        return {
            "mode": "separable",
            "targets": [[float(c) for c in p] for p in self.targets],
            "third_derivatives": [[float(a), float(b)] for a, b in self.third],
            "delta": self.delta,
            "grad_norms": [float(g) for g in self.grad_norms],
            "verification": None if self.verification is None else self.verification.to_dict(),
        }


def _psi_spline(coords, slopes, delta) -> QuinticHermite:
    order = np.argsort(coords)
    xs = [float(coords[i]) for i in order]
    ds = [float(slopes[i]) for i in order]
    knots = [0.0, delta, *xs, 1.0 - delta, 1.0]
    m = len(knots)
    return QuinticHermite(knots, [0.0] * m, [0.0, 0.0, *ds, 0.0, 0.0], [0.0] * m)


def prescribe_separable(targets, verify: bool = True, grid: int | None = None,
                        grad_tol: float = 1e-8) -> SeparablePrescription:
    """Separable metric for which every target point is a critical point of ``V``."""
    pts = np.asarray(targets, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
        raise InputError("separable targets must be a non-empty list of 2D points")
    P = simplex()
    if np.any(pts @ P._nf.T - P.offsets <= 0):
        raise InputError("separable targets must lie inside the simplex")
    for axis in (0, 1):
        c = np.sort(pts[:, axis])
        if np.any(np.diff(c) <= 1e-3):
            raise InputError(
                f"targets share (or nearly share) coordinate x{axis + 1}; perturb them apart by more than 1e-3"
            )
    delta = min(_collar_width(pts[:, 0]), _collar_width(pts[:, 1]))
    third = [separable_third_derivatives(p) for p in pts]
    psi_f = _psi_spline(pts[:, 0], [t[0] for t in third], delta)
    psi_g = _psi_spline(pts[:, 1], [t[1] for t in third], delta)
    pot = Potential(P, (
        ProfileTerm(ExpSplineProfile(psi_f), np.array([1, 0]), 1.0),
        ProfileTerm(ExpSplineProfile(psi_g), np.array([0, 1]), 1.0),
    ))
    _check_pd(pot)
    norms = [float(np.linalg.norm(grad_only(pot, p))) for p in pts]
    if max(norms) >= grad_tol:
        raise ConstructionError(f"targets not critical after construction: grad norms {norms}")
    out = SeparablePrescription([p for p in pts], psi_f, psi_g, third, pot, delta, norms)
    if verify:
        out.verification = verify_points(pot, list(pts), grid)
    return out


# --- continuum demo -------------------------------------------------------------

def continuum_profile(eps: float = 0.05) -> Potential:
    """Cohomogeneity-one potential with a whole segment of minimal fibres.

    ``phi' = beta`` on ``[1/3, 2/3]``, so every diagonal point ``(t/2, t/2)``
    with ``t`` in that band is critical.
    """
    return diagonal_potential(ContinuumPhi(eps))
