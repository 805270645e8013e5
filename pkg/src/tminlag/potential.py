"""Symplectic potentials ``u = u_G + sum (c/2) f(a . x)`` and their jets."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, DomainError, InputError
from .polytope import Polytope, polytope_from_spec
from .profiles import Profile, ZeroProfile, profile_from_dict


@dataclass(frozen=True)
class PotentialJet:
    """Derivatives of ``u`` of order 2-4 at ``point`` (value and gradient are not kept)."""

    point: np.ndarray
    hess: np.ndarray
    hess_inv: np.ndarray
    third: np.ndarray
    fourth: np.ndarray
    min_facet: float = float("nan")


@dataclass(frozen=True)
class ProfileTerm:
    profile: Profile
    direction: np.ndarray
    coeff: float = 1.0

    def to_dict(self) -> dict:
        return {
            "type": "profile",
            "direction": [int(a) for a in self.direction],
            "coeff": float(self.coeff),
            "profile": self.profile.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class Potential:
    """``u_G`` of ``polytope`` plus profile terms ``(coeff/2) profile(direction . x)``."""

    polytope: Polytope
    terms: tuple[ProfileTerm, ...] = field(default_factory=tuple)

    def __post_init__(self):
        terms = tuple(self.terms)
        n = self.polytope.dim
        for t in terms:
            if np.asarray(t.direction).shape != (n,):
                raise InputError(f"profile direction must have length {n}")
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self) -> int:
        return self.polytope.dim

    @property
    def is_guillemin(self) -> bool:
        return all(isinstance(t.profile, ZeroProfile) for t in self.terms)

    def jet(self, x) -> PotentialJet:
        return jet(self, x)

    def to_dict(self) -> dict:
        return {
            "polytope": self.polytope.name or self.polytope.to_dict(),
            "terms": [{"type": "guillemin"}] + [t.to_dict() for t in self.terms],
        }

    @classmethod
    def from_dict(cls, data) -> "Potential":
        if isinstance(data, str):
            return cls(polytope_from_spec(data))
        if not isinstance(data, dict):
            raise InputError("potential spec must be an object or a built-in name")
        extra = set(data) - {"polytope", "terms"}
        if extra:
            raise InputError(f"unknown potential fields: {sorted(extra)}")
        if "polytope" not in data:
            raise InputError("potential spec needs a 'polytope'")
        P = polytope_from_spec(data["polytope"])
        raw_terms = data.get("terms", [{"type": "guillemin"}])
        n_guillemin = sum(1 for t in raw_terms if t.get("type") == "guillemin")
        if n_guillemin != 1:
            raise InputError(f"the Guillemin term must appear exactly once (found {n_guillemin})")
        terms = []
        for t in raw_terms:
            kind = t.get("type")
            if kind == "guillemin":
                if set(t) != {"type"}:
                    raise InputError("guillemin term takes no parameters")
                continue
            if kind != "profile":
                raise InputError(f"unknown term type {kind!r}")
            extra = set(t) - {"type", "direction", "coeff", "profile"}
            if extra:
                raise InputError(f"unknown term fields: {sorted(extra)}")
            try:
                direction = np.asarray(t["direction"])
                profile = profile_from_dict(t["profile"])
            except KeyError as exc:
                raise InputError(f"profile term missing {exc}") from exc
            if not np.all(np.equal(np.mod(direction, 1), 0)):
                raise InputError("profile direction must be an integer vector")
            terms.append(ProfileTerm(profile, direction.astype(np.int64), float(t.get("coeff", 1.0))))
        return cls(P, tuple(terms))


def guillemin(P: Polytope | str) -> Potential:
    return Potential(polytope_from_spec(P))


def _sym_outer(vecs: np.ndarray, weights: np.ndarray, order: int) -> np.ndarray:
    """sum_i weights[i] * vecs[i]^{(x) order}."""
    if order == 2:
        return np.einsum("i,ia,ib->ab", weights, vecs, vecs)
    if order == 3:
        return np.einsum("i,ia,ib,ic->abc", weights, vecs, vecs, vecs)
    return np.einsum("i,ia,ib,ic,id->abcd", weights, vecs, vecs, vecs, vecs)


def guillemin_jet(P: Polytope, x) -> PotentialJet:
    """Closed-form derivatives of ``u_G = 1/2 sum (l_i log l_i - l_i)``."""
    x = P._check_point(x)
    l = P.l(x)
    lmin = float(l.min())
    if not lmin > 0:
        raise DomainError(f"point {x.tolist()} is not interior (min facet value {lmin!r})", lmin)
    nf = P._nf
    inv = 1.0 / l
    hess = 0.5 * _sym_outer(nf, inv, 2)
    third = -0.5 * _sym_outer(nf, inv * inv, 3)
    fourth = _sym_outer(nf, inv * inv * inv, 4)
    return _finish(x, hess, third, fourth, lmin)


def _finish(x, hess, third, fourth, lmin) -> PotentialJet:
    try:
        hess_inv = np.linalg.inv(hess)
    except np.linalg.LinAlgError as exc:
        raise DegeneracyError(f"Hessian of u is singular at {x.tolist()}") from exc
    hess_inv = 0.5 * (hess_inv + hess_inv.T)
    return PotentialJet(x, hess, hess_inv, third, fourth, lmin)


def jet(pot: Potential, x) -> PotentialJet:
    """Guillemin jet plus ``(c/2) f^(k)(a.x) a^{(x)k}`` for k = 2, 3, 4."""
    g = guillemin_jet(pot.polytope, x)
    if not pot.terms:
        return g
    hess, third, fourth = g.hess.copy(), g.third.copy(), g.fourth.copy()
    touched = False
    for term in pot.terms:
        if isinstance(term.profile, ZeroProfile):
            continue
        a = term.direction.astype(float)
        f2, f3, f4 = term.profile.jet(float(a @ g.point))
        c = 0.5 * term.coeff
        aa = np.multiply.outer(a, a)
        aaa = np.multiply.outer(aa, a)
        hess += c * f2 * aa
        third += c * f3 * aaa
        fourth += c * f4 * np.multiply.outer(aaa, a)
        touched = True
    if not touched:
        return g
    return _finish(g.point, hess, third, fourth, g.min_facet)


@dataclass(frozen=True)
class PDReport:
    passed: bool
    min_eigenvalues: np.ndarray
    worst_point: np.ndarray
    worst_eigenvalue: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "worst_point": self.worst_point.tolist(),
            "worst_eigenvalue": self.worst_eigenvalue,
        }


def interior_lattice(P: Polytope, per_axis: int = 50, margin: float = 0.0, box=None) -> np.ndarray:
    """Cell-centred lattice over the bounding box, filtered to the interior."""
    lo, hi = (np.asarray(b, dtype=float) for b in (box if box is not None else P.bounding_box))
    axes = [lo[k] + (np.arange(per_axis) + 0.5) * (hi[k] - lo[k]) / per_axis for k in range(P.dim)]
    pts = np.array(list(itertools.product(*axes)))
    lv = pts @ P._nf.T - P.offsets
    return pts[lv.min(axis=1) > margin]


def is_positive_definite(pot: Potential, sample=None) -> PDReport:
    if sample is None:
        sample = interior_lattice(pot.polytope, 50)
    sample = np.asarray(sample, dtype=float)
    if sample.size == 0:
        raise InputError("positive-definiteness check needs at least one sample point")
    sample = sample.reshape(-1, pot.dim)
    mins = np.array([np.linalg.eigvalsh(jet(pot, p).hess)[0] for p in sample])
    k = int(np.argmin(mins))
    return PDReport(bool(np.all(mins > 0)), mins, sample[k], float(mins[k]))


def random_interior_points(P: Polytope, count: int, rng: np.random.Generator,
                           margin: float = 0.0, box=None) -> np.ndarray:
    """Uniform samples of ``{x : min_i l_i(x) > margin}`` by rejection from the box."""
    lo, hi = (np.asarray(b, dtype=float) for b in (box if box is not None else P.bounding_box))
    out = []
    while len(out) < count:
        pts = rng.uniform(lo, hi, size=(max(64, 4 * count), P.dim))
        lv = pts @ P._nf.T - P.offsets
        out.extend(pts[lv.min(axis=1) > margin])
    return np.array(out[:count])


def perturbed_potential(P: Polytope | str) -> Potential:
    """A fixed non-Guillemin test potential: ``u_G + 1/2 f(x1 + x2)``, ``f'' = exp(-1 + t/2 + t^2/3)``.

    Convex ``f`` keeps the Hessian positive definite on any polytope.
    """
    from .profiles import ExpPolyProfile

    P = polytope_from_spec(P)
    a = np.ones(P.dim, dtype=np.int64)
    return Potential(P, (ProfileTerm(ExpPolyProfile([-1.0, 0.5, 1.0 / 3.0]), a, 1.0),))
