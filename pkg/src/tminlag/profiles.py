"""One-variable profile functions entering ``u = u_G + sum (c/2) f(a . x)``.

Only ``f''``, ``f'''`` and ``f''''`` ever reach the curvature formulas, so a
profile is specified at whichever level is convenient and reports the
curvature jet ``(f'', f''', f'''')`` through :meth:`Profile.jet`.

Variants and the level they are defined at:

=============  ================================================
``zero``       f = 0
``polynomial`` f = sum c_k t^k
``exp_poly``   f'' = exp(p(t)),  p polynomial
``cubic_spline`` f'' = clamped cubic spline
``hermite``    f'' = quintic Hermite spline (value, d1, d2 at knots)
``exp_spline`` f'' = exp(psi),  psi quintic Hermite
``phi_quotient`` f'' = (exp(phi) - 1) / (t (1 - t)),  phi quintic Hermite
               or the fixed continuum profile
=============  ================================================
"""

from __future__ import annotations

import math
from bisect import bisect_right

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InputError, ProfileDomainError


def _check_domain(t: float, lo: float, hi: float, what: str) -> None:
    if not (lo <= t <= hi):
        raise ProfileDomainError(
            f"{what} evaluated at t={t!r} outside its interval [{lo!r}, {hi!r}]",
            min_value=min(t - lo, hi - t),
        )


class QuinticHermite:
    """C^2 piecewise quintic through prescribed value, slope and curvature.

    Each segment is the unique quintic matching ``(y, y', y'')`` at both ends.
    Evaluation returns ``(y, y', y'')``; the third derivative jumps at knots.
    """

    def __init__(self, knots, values, d1, d2):
        knots = [float(k) for k in knots]
        values = [float(v) for v in values]
        d1 = [float(v) for v in d1]
        d2 = [float(v) for v in d2]
        m = len(knots)
        if m < 2 or not (len(values) == len(d1) == len(d2) == m):
            raise InputError("hermite spline needs >= 2 knots and matching data lengths")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise InputError("hermite knots must be strictly increasing")
        self.knots, self.values, self.d1, self.d2 = knots, values, d1, d2
        self._coef = []
        for i in range(m - 1):
            h = knots[i + 1] - knots[i]
            y0, D0, A0 = values[i], h * d1[i], h * h * d2[i]
            y1, D1, A1 = values[i + 1], h * d1[i + 1], h * h * d2[i + 1]
            r0 = y1 - (y0 + D0 + 0.5 * A0)
            r1 = D1 - (D0 + A0)
            r2 = A1 - A0
            c3 = 10.0 * r0 - 4.0 * r1 + 0.5 * r2
            c4 = -15.0 * r0 + 7.0 * r1 - r2
            c5 = 6.0 * r0 - 3.0 * r1 + 0.5 * r2
            self._coef.append((h, y0, D0, 0.5 * A0, c3, c4, c5))

    @property
    def domain(self) -> tuple[float, float]:
        return self.knots[0], self.knots[-1]

    def jet2(self, t: float) -> tuple[float, float, float]:
        lo, hi = self.domain
        _check_domain(t, lo, hi, "hermite spline")
        i = min(bisect_right(self.knots, t) - 1, len(self._coef) - 1)
        h, a0, a1, a2, a3, a4, a5 = self._coef[i]
        s = (t - self.knots[i]) / h
        v = a0 + s * (a1 + s * (a2 + s * (a3 + s * (a4 + s * a5))))
        dv = a1 + s * (2 * a2 + s * (3 * a3 + s * (4 * a4 + s * 5 * a5)))
        d2v = 2 * a2 + s * (6 * a3 + s * (12 * a4 + s * 20 * a5))
        return v, dv / h, d2v / (h * h)

    def to_dict(self) -> dict:
        return {
            "kind": "hermite",
            "knots": list(self.knots),
            "values": list(self.values),
            "d1": list(self.d1),
            "d2": list(self.d2),
        }


def _beta(t: float) -> float:
    return (2.0 - 3.0 * t) / (t * (1.0 - t))


def _beta_prime(t: float) -> float:
    return -2.0 / (t * t) - 1.0 / ((1.0 - t) ** 2)


class ContinuumPhi:
    """phi with phi' = (2 - 3t)/(t(1-t)) on [1/3, 2/3], zero off a padded band.

    The middle piece is ``log(27/2 t^2 (1 - t))``; quintic blends of width
    ``eps`` join it to zero on each side.
    """

    def __init__(self, eps: float = 0.05):
        if not 0 < eps < 1.0 / 3.0:
            raise InputError("continuum blend width must lie in (0, 1/3)")
        self.eps = float(eps)
        a, b = 1.0 / 3.0, 2.0 / 3.0
        self._left = QuinticHermite(
            [0.0, a - eps, a], [0.0, 0.0, 0.0], [0.0, 0.0, _beta(a)], [0.0, 0.0, _beta_prime(a)]
        )
        self._right = QuinticHermite(
            [b, b + eps, 1.0],
            [math.log(2.0), 0.0, 0.0],
            [0.0, 0.0, 0.0],
            [_beta_prime(b), 0.0, 0.0],
        )

    domain = (0.0, 1.0)

    def jet2(self, t: float) -> tuple[float, float, float]:
        _check_domain(t, 0.0, 1.0, "continuum phi")
        if t < 1.0 / 3.0:
            return self._left.jet2(t)
        if t > 2.0 / 3.0:
            return self._right.jet2(t)
        v = math.log(13.5 * t * t * (1.0 - t))
        return v, _beta(t), _beta_prime(t)

    def to_dict(self) -> dict:
        return {"kind": "continuum", "eps": self.eps}


def phi_from_dict(data: dict):
    kind = data.get("kind")
    if kind == "hermite":
        _strict(data, {"kind", "knots", "values", "d1", "d2"})
        return QuinticHermite(data["knots"], data["values"], data["d1"], data["d2"])
    if kind == "continuum":
        _strict(data, {"kind", "eps"})
        return ContinuumPhi(data.get("eps", 0.05))
    raise InputError(f"unknown phi kind {kind!r}")


class Profile:
    """Base class: ``jet(t)`` returns ``(f'', f''', f'''')``."""

    kind = "abstract"
    domain: tuple[float, float] = (-math.inf, math.inf)

    def jet(self, t: float) -> tuple[float, float, float]:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


class ZeroProfile(Profile):
    kind = "zero"

    def jet(self, t):
        return 0.0, 0.0, 0.0

    def to_dict(self):
        return {"kind": "zero"}


class PolynomialProfile(Profile):
    """f(t) = sum_k coeffs[k] t^k."""

    kind = "polynomial"

    def __init__(self, coeffs):
        self.coeffs = [float(c) for c in coeffs]
        p = np.polynomial.Polynomial(self.coeffs)
        self._derivs = [p.deriv(k) for k in (2, 3, 4)]

    def jet(self, t):
        return tuple(float(d(t)) for d in self._derivs)

    def to_dict(self):
        return {"kind": "polynomial", "coeffs": list(self.coeffs)}


class ExpPolyProfile(Profile):
    """f''(t) = exp(p(t)) with ``p = sum coeffs[k] t^k``; always positive."""

    kind = "exp_poly"

    def __init__(self, coeffs):
        self.coeffs = [float(c) for c in coeffs]
        p = np.polynomial.Polynomial(self.coeffs)
        self._p = (p, p.deriv(1), p.deriv(2))

    def jet(self, t):
        p, dp, d2p = (float(q(t)) for q in self._p)
        e = math.exp(p)
        return e, dp * e, (d2p + dp * dp) * e

    def to_dict(self):
        return {"kind": "exp_poly", "coeffs": list(self.coeffs)}


class CubicSplineProfile(Profile):
    """f'' given by a cubic spline with clamped end slopes."""

    kind = "cubic_spline"

    def __init__(self, knots, values, end_slopes=(0.0, 0.0)):
        self.knots = [float(k) for k in knots]
        self.values = [float(v) for v in values]
        self.end_slopes = (float(end_slopes[0]), float(end_slopes[1]))
        try:
            self._s = CubicSpline(
                self.knots, self.values,
                bc_type=((1, self.end_slopes[0]), (1, self.end_slopes[1])),
            )
        except ValueError as exc:
            raise InputError(f"bad cubic spline data: {exc}") from exc
        self.domain = (self.knots[0], self.knots[-1])

    def jet(self, t):
        _check_domain(t, *self.domain, "cubic spline profile")
        s = self._s
        return float(s(t)), float(s(t, 1)), float(s(t, 2))

    def to_dict(self):
        return {
            "kind": "cubic_spline",
            "knots": list(self.knots),
            "values": list(self.values),
            "end_slopes": list(self.end_slopes),
        }


class HermiteProfile(Profile):
    """f'' tabulated as a quintic Hermite spline."""

    kind = "hermite"

    def __init__(self, spline: QuinticHermite):
        self.spline = spline
        self.domain = spline.domain

    def jet(self, t):
        return self.spline.jet2(t)

    def to_dict(self):
        return self.spline.to_dict()


class ExpSplineProfile(Profile):
    """f'' = exp(psi) with psi a quintic Hermite spline."""

    kind = "exp_spline"

    def __init__(self, psi: QuinticHermite):
        self.psi = psi
        self.domain = psi.domain

    def jet(self, t):
        v, d1, d2 = self.psi.jet2(t)
        e = math.exp(v)
        return e, d1 * e, (d2 + d1 * d1) * e

    def to_dict(self):
        return {"kind": "exp_spline", "psi": self.psi.to_dict()}


class PhiQuotientProfile(Profile):
    """f'' = (exp(phi) - 1) / (t (1 - t)) on [0, 1].

    With this choice ``1 + t(1-t) f'' = exp(phi) > 0``.  Where phi and its
    first two derivatives vanish the jet is exactly zero, which is how the
    removable singularities at t = 0, 1 are handled for collared phi.
    """

    kind = "phi_quotient"
    domain = (0.0, 1.0)

    def __init__(self, phi):
        self.phi = phi

    def jet(self, t):
        _check_domain(t, 0.0, 1.0, "phi-quotient profile")
        p, dp, d2p = self.phi.jet2(t)
        if p == 0.0 and dp == 0.0 and d2p == 0.0:
            return 0.0, 0.0, 0.0
        w = t * (1.0 - t)
        if w == 0.0:
            raise ProfileDomainError(
                "phi-quotient profile is singular at the endpoint unless phi vanishes there",
                min_value=0.0,
            )
        e = math.exp(p)
        q, dq, d2q = math.expm1(p), dp * e, (d2p + dp * dp) * e
        dw, d2w = 1.0 - 2.0 * t, -2.0
        f2 = q / w
        f3 = (dq - f2 * dw) / w
        f4 = (d2q - 2.0 * f3 * dw - f2 * d2w) / w
        return f2, f3, f4

    def to_dict(self):
        return {"kind": "phi_quotient", "phi": self.phi.to_dict()}


def _strict(data: dict, allowed: set) -> None:
    extra = set(data) - allowed
    if extra:
        raise InputError(f"unknown profile fields: {sorted(extra)}")


def profile_from_dict(data: dict) -> Profile:
    if isinstance(data, Profile):
        return data
    if not isinstance(data, dict):
        raise InputError("profile spec must be an object")
    kind = data.get("kind")
    try:
        if kind == "zero":
            _strict(data, {"kind"})
            return ZeroProfile()
        if kind == "polynomial":
            _strict(data, {"kind", "coeffs"})
            return PolynomialProfile(data["coeffs"])
        if kind == "exp_poly":
            _strict(data, {"kind", "coeffs"})
            return ExpPolyProfile(data["coeffs"])
        if kind == "cubic_spline":
            _strict(data, {"kind", "knots", "values", "end_slopes"})
            return CubicSplineProfile(data["knots"], data["values"], data.get("end_slopes", (0.0, 0.0)))
        if kind == "hermite":
            return HermiteProfile(phi_from_dict(data))
        if kind == "exp_spline":
            _strict(data, {"kind", "psi"})
            return ExpSplineProfile(phi_from_dict(data["psi"]))
        if kind == "phi_quotient":
            _strict(data, {"kind", "phi"})
            return PhiQuotientProfile(phi_from_dict(data["phi"]))
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed {kind} profile: {exc}") from exc
    raise InputError(f"unknown profile kind {kind!r}")
