"""Pointwise geometry of a toric Kähler metric on the polytope interior.

Everything here is computed from the analytic order-4 jet of the potential.
Finite differences only appear in the ``*_check`` functions, which serve as
independent oracles for the analytic formulas.

Sign conventions: ``s`` is Abreu's scalar curvature, so the g-trace of the
full Ricci tensor is ``2 s``.  ``laplacian_gP_check`` uses the non-negative
Laplacian ``-div grad`` for which ``Delta V = s V``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, DomainError, InputError
from .potential import Potential, PotentialJet, jet as potential_jet

_PIVOT_FLOOR = 1e-300


def _cholesky(jet: PotentialJet) -> np.ndarray:
    try:
        L = np.linalg.cholesky(jet.hess)
    except np.linalg.LinAlgError as exc:
        raise DegeneracyError(
            f"Hessian of u is not positive definite at {jet.point.tolist()}"
        ) from exc
    if np.diag(L).min() ** 2 < _PIVOT_FLOOR:
        raise DegeneracyError(f"Hessian of u is numerically singular at {jet.point.tolist()}")
    return L


def log_volume(jet: PotentialJet) -> float:
    L = _cholesky(jet)
    return float(-np.log(np.diag(L)).sum())


def orbital_volume(jet: PotentialJet) -> float:
    """``det(Hess u)^{-1/2}`` via a Cholesky factor."""
    return float(np.exp(log_volume(jet)))


def grad_log_volume(jet: PotentialJet) -> np.ndarray:
    """``d_j log V = -1/2 tr(H^{-1} d_j H)``."""
    _cholesky(jet)
    return -0.5 * np.einsum("ab,baj->j", jet.hess_inv, jet.third)


def hess_log_volume(jet: PotentialJet) -> np.ndarray:
    """Euclidean second partials of ``log V``."""
    Hi = jet.hess_inv
    HiT = np.einsum("ab,bcj->acj", Hi, jet.third)  # (H^-1 d_j H)
    t1 = np.einsum("ab,bajk->jk", Hi, jet.fourth)
    t2 = np.einsum("abj,bak->jk", HiT, HiT)
    h = -0.5 * (t1 - t2)
    return 0.5 * (h + h.T)


def log_volume_derivatives(jet: PotentialJet) -> tuple[float, np.ndarray, np.ndarray]:
    return log_volume(jet), grad_log_volume(jet), hess_log_volume(jet)


@dataclass(frozen=True)
class GeometryEval:
    point: np.ndarray
    V: float
    grad_logV: np.ndarray
    hess_logV: np.ndarray
    gP: np.ndarray
    gP_inv: np.ndarray
    gP_grad_logV: np.ndarray
    ricci_xx: np.ndarray
    ricci_tt: np.ndarray
    scalar: float
    hess_gP_logV: np.ndarray
    sigma: np.ndarray
    rho_coeffs: np.ndarray

    def trace_identity_residual(self) -> float:
        tr = np.sum(self.gP_inv * self.ricci_xx) + np.sum(self.gP * self.ricci_tt)
        return float(abs(tr - 2.0 * self.scalar) / max(1.0, abs(self.scalar)))

    def block_relation_residual(self) -> float:
        pred = self.gP_inv @ self.ricci_xx @ self.gP_inv
        scale = max(1.0, np.abs(self.ricci_tt).max())
        return float(np.abs(pred - self.ricci_tt).max() / scale)

    def symmetry_residual(self) -> float:
        scale = max(1.0, np.abs(self.ricci_xx).max())
        return float(np.abs(self.ricci_xx - self.ricci_xx.T).max() / scale)


def _velocity_derivative(jet: PotentialJet, grad: np.ndarray, hlog: np.ndarray):
    """``w = H^{-1} grad log V`` and ``Dw[l, j] = d_j w^l``."""
    Hi = jet.hess_inv
    w = Hi @ grad
    # d_j H^{-1} = -H^{-1} (d_j H) H^{-1}
    dHi_g = -np.einsum("ab,bcj,cd,d->aj", Hi, jet.third, Hi, grad)
    Dw = dHi_g + Hi @ hlog
    return w, Dw


def evaluate_jet(jet: PotentialJet) -> GeometryEval:
    lv, grad, hlog = log_volume_derivatives(jet)
    H, Hi, T = jet.hess, jet.hess_inv, jet.third
    w, Dw = _velocity_derivative(jet, grad, hlog)
    # Ric(d_xi, d_xj) = -u_il d_j w^l
    ricci_xx = -H @ Dw
    # Ric(d_thi, d_thj) = -u^{ik} d_k w^j
    ricci_tt = -Hi @ Dw.T
    scalar = -float(np.trace(Dw))
    # Christoffel symbols of g_P: Gamma^k_ij = 1/2 u^{kl} u_lij
    hess_gP = hlog - 0.5 * np.einsum("l,lij->ij", w, T)
    return GeometryEval(
        point=jet.point,
        V=float(np.exp(lv)),
        grad_logV=grad,
        hess_logV=hlog,
        gP=H,
        gP_inv=Hi,
        gP_grad_logV=w,
        ricci_xx=ricci_xx,
        ricci_tt=ricci_tt,
        scalar=scalar,
        hess_gP_logV=hess_gP,
        sigma=-w,
        rho_coeffs=-Dw.T,
    )


def evaluate(pot: Potential, x) -> GeometryEval:
    return evaluate_jet(potential_jet(pot, x))


def second_derivatives_of_inverse(jet: PotentialJet) -> np.ndarray:
    """``d_i d_k u^{ab}`` as an array indexed ``[a, b, i, k]``."""
    Hi, T, Q = jet.hess_inv, jet.third, jet.fourth
    A = np.einsum("ab,bck->ack", Hi, T)  # H^-1 d_k H
    # d_i d_k H^-1 = A_i A_k H^-1 + A_k A_i H^-1 - H^-1 Q_ik H^-1
    AA = np.einsum("abi,bck->acik", A, A)
    term1 = np.einsum("acik,cd->adik", AA, Hi)
    term2 = np.einsum("acki,cd->adik", AA, Hi)
    term3 = np.einsum("ab,bcik,cd->adik", Hi, Q, Hi)
    return term1 + term2 - term3


def abreu_scalar(jet: PotentialJet) -> float:
    """``s = -1/2 sum_ij d_i d_j u^{ij}`` (independent of ``evaluate``)."""
    D2 = second_derivatives_of_inverse(jet)
    return float(-0.5 * np.einsum("ijij->", D2))


def maslov_consistency(pot: Potential, x) -> float:
    """Compare the Ricci-form coefficients with ``d sigma``.

    The Ricci form is taken from the second-derivative expression
    ``rho = -1/2 sum d_i d_k u^{ji} dx^k ^ dtheta^j``; ``d sigma`` comes from
    the derivative of ``sigma_j = -u^{jl} d_l log V`` in ``evaluate``.
    Returns the largest absolute discrepancy.
    """
    j = potential_jet(pot, x)
    geo = evaluate_jet(j)
    D2 = second_derivatives_of_inverse(j)
    rho = -0.5 * np.einsum("jiik->kj", D2)
    # d_k sigma_j = -d_k w^j = rho_coeffs[k, j] as assembled from Dw
    dsigma = geo.rho_coeffs
    return float(np.abs(rho - dsigma).max())


@dataclass(frozen=True)
class LaplacianCheck:
    laplacian: float
    sV: float
    residual: float
    relative: bool


def _axis_reach(P, x) -> np.ndarray:
    """Distance from ``x`` to the boundary along each coordinate axis."""
    l = P.l(x)
    nf = np.abs(P._nf)
    with np.errstate(divide="ignore"):
        ratios = np.where(nf > 0, l[:, None] / nf, np.inf)
    return ratios.min(axis=0)


def _div_form_laplacian(pot: Potential, x: np.ndarray, steps: np.ndarray) -> float:
    n = x.shape[0]
    E = np.eye(n) * steps[:, None]

    def V(y):
        return orbital_volume(potential_jet(pot, y))

    def flux(y):
        jy = potential_jet(pot, y)
        gradV = np.array([(V(y + E[j]) - V(y - E[j])) / (2 * steps[j]) for j in range(n)])
        return (jy.hess_inv @ gradV) / orbital_volume(jy)  # sqrt(det g_P) = 1/V

    div = sum((flux(x + E[i])[i] - flux(x - E[i])[i]) / (2 * steps[i]) for i in range(n))
    return -div * V(x)


def laplacian_gP_check(pot: Potential, x, h: float | None = None) -> LaplacianCheck:
    """Finite-difference ``Delta_P V`` against ``s V``.

    The divergence-form stencil ``-(1/sqrt g) d_i(sqrt g g^{ij} d_j V)`` uses
    central differences of the analytic ``V`` and metric.  With an explicit
    ``h`` the same step is used on every axis.  Without it, each axis gets a
    step of ``1e-2`` times the distance to the boundary along that axis and
    the result is Richardson-extrapolated from steps ``k`` and ``k/2``; this
    keeps rounding error in check close to facets.
    """
    P = pot.polytope
    x = P._check_point(x)
    lmin = float(P.l(x).min())
    reach = _axis_reach(P, x)
    if h is None:
        steps = 1e-2 * reach
    elif h <= 0:
        raise InputError("stencil step must be positive")
    else:
        steps = np.full(P.dim, float(h))
    if not lmin > 0 or not np.all(reach > 4 * steps):
        raise DomainError(f"finite-difference stencil leaves the polytope at {x.tolist()}", lmin)
    if h is None:
        lap = (4.0 * _div_form_laplacian(pot, x, 0.5 * steps) - _div_form_laplacian(pot, x, steps)) / 3.0
    else:
        lap = _div_form_laplacian(pot, x, steps)
    j0 = potential_jet(pot, x)
    sV = evaluate_jet(j0).scalar * orbital_volume(j0)
    if abs(sV) < 1e-12:
        return LaplacianCheck(lap, sV, abs(lap - sV), False)
    return LaplacianCheck(lap, sV, abs(lap - sV) / abs(sV), True)
