"""Locate and classify critical points of the orbital volume."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConsistencyError, DegeneracyError, DomainError, InputError, PreconditionError, UnsupportedInputError
from .geometry import evaluate_jet, log_volume_derivatives
from .polytope import Polytope
from .potential import Potential, jet as potential_jet

LOCAL_MAX = "LocalMax"
LOCAL_MIN = "LocalMin"
SADDLE = "Saddle"
DEGENERATE = "Degenerate"


@dataclass
class SolverConfig:
    """Multi-start Newton settings.

    ``grid`` is points per axis of the seed lattice (``None`` means
    ``ceil(12/n) + 3``).  ``dedup`` and ``margin`` are fractions of the
    polytope diameter.  ``box`` bounds the search for non-compact polytopes.
    """

    grid: int | None = None
    tol: float = 1e-12
    dedup: float = 1e-6
    margin: float = 1e-3
    max_iter: int = 200
    max_halvings: int = 40
    boundary_floor: float = 1e-9
    box: tuple | None = None
    classify_tol: float = 1e-7

    def __post_init__(self):
        if self.grid is not None and self.grid < 3:
            raise InputError("seed grid needs at least 3 points per axis")
        for name in ("tol", "dedup", "classify_tol"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")


@dataclass
class FibreReport:
    point: np.ndarray
    grad_norm: float
    hess_eigs: np.ndarray
    classification: str
    ricci_index: int
    index_lower_bound: int
    value_V: float
    scalar: float
    unstable_by_scalar: bool
    ricci_hessian_residual: float
    ricci_eigs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_dict(self) -> dict:
        return {
            "point": [float(v) for v in self.point],
            "grad_norm": float(self.grad_norm),
            "hess_eigs": [float(v) for v in self.hess_eigs],
            "classification": self.classification,
            "ricci_index": int(self.ricci_index),
            "index_lower_bound": int(self.index_lower_bound),
            "value_V": float(self.value_V),
            "scalar": float(self.scalar),
            "unstable_by_scalar": bool(self.unstable_by_scalar),
            "ricci_hessian_residual": float(self.ricci_hessian_residual),
            "ricci_eigs": [float(v) for v in self.ricci_eigs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FibreReport":
        return cls(
            point=np.array(d["point"], dtype=float),
            grad_norm=float(d["grad_norm"]),
            hess_eigs=np.array(d["hess_eigs"], dtype=float),
            classification=str(d["classification"]),
            ricci_index=int(d["ricci_index"]),
            index_lower_bound=int(d["index_lower_bound"]),
            value_V=float(d["value_V"]),
            scalar=float(d["scalar"]),
            unstable_by_scalar=bool(d["unstable_by_scalar"]),
            ricci_hessian_residual=float(d["ricci_hessian_residual"]),
            ricci_eigs=np.array(d.get("ricci_eigs", []), dtype=float),
        )


def _classify_eigs(eigs: np.ndarray, tau: float) -> str:
    if np.any(np.abs(eigs) <= tau):
        return DEGENERATE
    if np.all(eigs < 0):
        return LOCAL_MAX
    if np.all(eigs > 0):
        return LOCAL_MIN
    return SADDLE


def classify(pot: Potential, x, tau: float | None = None, grad_tol: float = 1e-10,
             rel_tau: float = 1e-7) -> FibreReport:
    """Stability data at a critical point of ``V``.

    Eigenvalues are taken relative to ``g_P`` (a g_P-orthonormal frame).  The
    classification tolerance defaults to ``rel_tau`` times the largest
    eigenvalue magnitude.
    """
    j = potential_jet(pot, x)
    geo = evaluate_jet(j)
    gnorm = float(np.linalg.norm(geo.grad_logV))
    if gnorm > grad_tol:
        raise PreconditionError(f"point {j.point.tolist()} is not critical: |grad log V| = {gnorm:.3e}")
    hess_eigs = scipy.linalg.eigh(geo.hess_gP_logV, geo.gP, eigvals_only=True)
    ric = 0.5 * (geo.ricci_xx + geo.ricci_xx.T)
    ricci_eigs = scipy.linalg.eigh(ric, geo.gP, eigvals_only=True)
    scale = float(np.abs(hess_eigs).max()) if hess_eigs.size else 0.0
    if tau is None:
        tau = rel_tau * scale
    n = pot.dim
    ricci_index = int(np.sum(ricci_eigs < -tau))
    residual = float(np.abs(np.sort(hess_eigs) + np.sort(ricci_eigs)[::-1]).max())
    return FibreReport(
        point=j.point.copy(),
        grad_norm=gnorm,
        hess_eigs=hess_eigs,
        classification=_classify_eigs(hess_eigs, tau),
        ricci_index=ricci_index,
        index_lower_bound=n - ricci_index,
        value_V=geo.V,
        scalar=geo.scalar,
        unstable_by_scalar=bool(geo.scalar > 0),
        ricci_hessian_residual=residual,
        ricci_eigs=ricci_eigs,
    )


def _max_step_fraction(P: Polytope, x: np.ndarray, d: np.ndarray, floor: float) -> float:
    """Largest alpha <= 1 keeping every facet value above ``floor`` (with slack)."""
    l = P.l(x)
    rate = P._nf @ d
    alpha = 1.0
    for li, ri in zip(l, rate):
        if ri < 0:
            alpha = min(alpha, 0.9 * (li - floor) / (-ri))
    return max(alpha, 0.0)


def _in_box(x, box) -> bool:
    lo, hi = box
    return bool(np.all(x >= lo) and np.all(x <= hi))


def newton_critical_point(pot: Potential, x0, cfg: SolverConfig, box=None):
    """Damped Newton on ``grad log V``.  Returns the root or ``None``."""
    P = pot.polytope
    x = np.array(x0, dtype=float)
    best = None
    for _ in range(cfg.max_iter):
        try:
            _, g, Hl = log_volume_derivatives(potential_jet(pot, x))
        except (DegeneracyError, DomainError):
            return None
        gn = float(np.linalg.norm(g))
        if gn < cfg.tol:
            best = x
            break
        try:
            d = -np.linalg.solve(Hl, g)
        except np.linalg.LinAlgError:
            d = g  # ascent fallback on a singular Jacobian
        alpha = _max_step_fraction(P, x, d, cfg.boundary_floor)
        f0 = gn * gn
        accepted = False
        for _ in range(cfg.max_halvings):
            y = x + alpha * d
            try:
                gy = grad_only(pot, y)
            except (DegeneracyError, DomainError):
                alpha *= 0.5
                continue
            if float(gy @ gy) < f0:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            return None
        x = y
        if box is not None and not _in_box(x, box):
            return None
    if best is None:
        return None
    # a few extra full steps to polish slowly converging (degenerate) roots
    for _ in range(60):
        try:
            _, g, Hl = log_volume_derivatives(potential_jet(pot, x))
            d = -np.linalg.solve(Hl, g)
            y = x + d
            gy = grad_only(pot, y)
        except (DegeneracyError, DomainError, np.linalg.LinAlgError):
            break
        if not float(gy @ gy) < float(g @ g) or np.linalg.norm(d) < 1e-15:
            break
        x = y
    return x


def grad_only(pot: Potential, x) -> np.ndarray:
    j = potential_jet(pot, x)
    return log_volume_derivatives(j)[1]


def seed_lattice(P: Polytope, cfg: SolverConfig) -> tuple[np.ndarray, tuple]:
    n = P.dim
    if cfg.box is not None:
        lo, hi = (np.asarray(b, dtype=float).reshape(-1) for b in cfg.box)
        if lo.shape != (n,) or hi.shape != (n,) or np.any(hi <= lo):
            raise InputError("search box must be (lo, hi) with lo < hi per axis")
    elif P.compact:
        lo, hi = P.bounding_box
    else:
        raise UnsupportedInputError("non-compact polytope: supply SolverConfig.box")
    per_axis = cfg.grid if cfg.grid is not None else math.ceil(12 / n) + 3
    axes = [lo[k] + (np.arange(per_axis) + 0.5) * (hi[k] - lo[k]) / per_axis for k in range(n)]
    pts = np.array(list(itertools.product(*axes)))
    diam = float(np.linalg.norm(hi - lo))
    lv = pts @ P._nf.T - P.offsets
    return pts[lv.min(axis=1) > cfg.margin * diam], (lo, hi), diam


def gP_distance(pot: Potential, a, b) -> float:
    """Midpoint approximation of the g_P-distance between nearby points."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    mid = 0.5 * (a + b)
    d = b - a
    try:
        H = potential_jet(pot, mid).hess
    except (DegeneracyError, DomainError):
        return float(np.linalg.norm(d))
    return float(math.sqrt(max(d @ H @ d, 0.0)))


def find_minimal_fibres(pot: Potential, config: SolverConfig | None = None) -> list[FibreReport]:
    """All interior critical points of ``V`` reachable from the seed lattice.

    Results are sorted by ``value_V`` descending.  On compact polytopes an
    empty result is a :class:`ConsistencyError` since ``V`` must attain an
    interior maximum there.
    """
    cfg = config or SolverConfig()
    P = pot.polytope
    seeds, box, diam = seed_lattice(P, cfg)
    use_box = box if cfg.box is not None else None
    roots = []
    for s in seeds:
        r = newton_critical_point(pot, s, cfg, use_box)
        if r is not None:
            roots.append(r)
    radius = cfg.dedup * diam
    reports: list[FibreReport] = []
    candidates = []
    for r in roots:
        try:
            rep = classify(pot, r, grad_tol=max(cfg.tol, 1e-10), rel_tau=cfg.classify_tol)
        except (PreconditionError, DegeneracyError, DomainError):
            continue
        candidates.append(rep)
    candidates.sort(key=lambda rep: (-rep.value_V, rep.grad_norm, tuple(rep.point)))
    for rep in candidates:
        if all(gP_distance(pot, rep.point, kept.point) > radius for kept in reports):
            reports.append(rep)
    if P.compact and cfg.box is None and not reports:
        raise ConsistencyError(
            "no critical point of V found on a compact polytope (V must have an interior maximum)",
            check="existence",
        )
    return reports


def guillemin_minimality_residual(P: Polytope, x) -> np.ndarray:
    """``sum_{i,j} det(nu_i, nu_j)^2 / (l_i^2 l_j) nu_i`` for 2D polytopes.

    Vanishes exactly at the critical points of ``V`` for the Guillemin metric.
    """
    if P.dim != 2:
        raise UnsupportedInputError("the combinatorial residual is defined for n = 2 only")
    x = P._check_point(x)
    l = P.l(x)
    if not l.min() > 0:
        raise DomainError(f"point {x.tolist()} is not interior", float(l.min()))
    nf = P._nf
    det = np.outer(nf[:, 0], nf[:, 1]) - np.outer(nf[:, 1], nf[:, 0])
    w = (det ** 2) / np.outer(l ** 2, l)
    return w.sum(axis=1) @ nf
