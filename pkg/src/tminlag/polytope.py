"""Moment polytopes as intersections of half-spaces ``x . nu_i - lambda_i >= 0``."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np
from scipy.optimize import linprog

from .errors import InputError, UnsupportedInputError

_VERTEX_TOL = 1e-10


@dataclass(frozen=True)
class FacetValues:
    values: np.ndarray
    min_value: float


@dataclass(frozen=True)
class DelzantVertex:
    point: tuple[float, float]
    facets: tuple[int, int]
    det: int
    ok: bool


@dataclass(frozen=True)
class DelzantReport:
    vertices: list[DelzantVertex]

    @property
    def passed(self) -> bool:
        return all(v.ok for v in self.vertices)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "vertices": [
                {"point": list(v.point), "facets": list(v.facets), "det": v.det, "ok": v.ok}
                for v in self.vertices
            ],
        }


@dataclass(frozen=True, eq=False)
class Polytope:
    """Half-space description of a moment polytope.

    Facet ``i`` is ``l_i(x) = x . normals[i] - offsets[i] >= 0``.  Normals must
    be primitive integer vectors.  Construction finds an interior witness
    (a point maximizing the smallest facet value) and records whether the
    polytope is bounded.
    """

    normals: np.ndarray
    offsets: np.ndarray
    name: str = ""
    interior_point: np.ndarray = field(init=False, repr=False)
    compact: bool = field(init=False)

    def __post_init__(self):
        normals = np.asarray(self.normals)
        if normals.ndim != 2 or normals.shape[0] == 0 or normals.shape[1] == 0:
            raise InputError("normals must be a non-empty (d, n) array")
        if not np.all(np.equal(np.mod(normals, 1), 0)):
            raise InputError("facet normals must be integer vectors")
        normals = normals.astype(np.int64)
        offsets = np.asarray(self.offsets, dtype=float).reshape(-1)
        if offsets.shape[0] != normals.shape[0]:
            raise InputError(
                f"{normals.shape[0]} normals but {offsets.shape[0]} offsets"
            )
        for i, nu in enumerate(normals):
            if not np.any(nu):
                raise InputError(f"facet {i} has a zero normal")
            g = reduce(math.gcd, (abs(int(c)) for c in nu))
            if g != 1:
                raise InputError(f"facet {i} normal {nu.tolist()} is not primitive")
        normals.setflags(write=False)
        offsets.setflags(write=False)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "_nf", normals.astype(float))

        witness, depth = _chebyshev_like_center(self._nf, offsets)
        if depth <= 1e-12:
            raise InputError("polytope has empty interior")
        witness.setflags(write=False)
        object.__setattr__(self, "interior_point", witness)
        object.__setattr__(self, "compact", self._bounding_box() is not None)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @property
    def n_facets(self) -> int:
        return self.normals.shape[0]

    def l(self, x) -> np.ndarray:
        """Raw facet values, no validation."""
        return self._nf @ x - self.offsets

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise InputError(f"point has shape {x.shape}, expected ({self.dim},)")
        return x

    def _bounding_box(self):
        lo, hi = [], []
        for k in range(self.dim):
            for sign, store in ((1.0, lo), (-1.0, hi)):
                c = np.zeros(self.dim)
                c[k] = sign
                res = linprog(
                    c, A_ub=-self._nf, b_ub=-self.offsets,
                    bounds=[(None, None)] * self.dim, method="highs",
                )
                if res.status != 0:
                    return None
                store.append(sign * res.fun)
        return np.array(lo), np.array(hi)

    @cached_property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        box = self._bounding_box()
        if box is None:
            raise UnsupportedInputError("polytope is not compact; supply a search box")
        return box

    @cached_property
    def diameter(self) -> float:
        lo, hi = self.bounding_box
        return float(np.linalg.norm(hi - lo))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "facets": [
                {"normal": nu.tolist(), "offset": float(lam)}
                for nu, lam in zip(self.normals, self.offsets)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "Polytope":
        if not isinstance(data, dict):
            raise InputError("polytope spec must be an object")
        unknown = set(data) - {"dim", "facets"}
        if unknown:
            raise InputError(f"unknown polytope fields: {sorted(unknown)}")
        try:
            dim = int(data["dim"])
            facets = data["facets"]
            normals = [f["normal"] for f in facets]
            offsets = [float(f["offset"]) for f in facets]
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed polytope spec: {exc}") from exc
        for f in facets:
            extra = set(f) - {"normal", "offset"}
            if extra:
                raise InputError(f"unknown facet fields: {sorted(extra)}")
        if any(len(nu) != dim for nu in normals):
            raise InputError("facet normal length does not match dim")
        return cls(np.array(normals), np.array(offsets), name=name)


def _chebyshev_like_center(normals: np.ndarray, offsets: np.ndarray):
    """Maximize ``min_i l_i(x)`` (capped at 1) with an LP."""
    d, n = normals.shape
    c = np.zeros(n + 1)
    c[-1] = -1.0
    # l_i(x) >= t  <=>  -nu_i.x + t <= -lambda_i
    a_ub = np.hstack([-normals, np.ones((d, 1))])
    res = linprog(
        c, A_ub=a_ub, b_ub=-offsets,
        bounds=[(None, None)] * n + [(None, 1.0)], method="highs",
    )
    if res.status != 0:
        return np.zeros(n), -np.inf
    return np.asarray(res.x[:n], dtype=float), float(res.x[-1])


def facet_values(P: Polytope, x) -> FacetValues:
    x = P._check_point(x)
    vals = P.l(x)
    return FacetValues(values=vals, min_value=float(vals.min()))


def contains_interior(P: Polytope, x, margin: float = 0.0) -> bool:
    if margin < 0:
        raise InputError("margin must be non-negative")
    return facet_values(P, x).min_value > margin


def validate_delzant_2d(P: Polytope) -> DelzantReport:
    """Check |det(nu_i, nu_j)| = 1 at every vertex of a compact 2D polytope."""
    if P.dim != 2:
        raise UnsupportedInputError("Delzant validation is implemented for n = 2 only")
    nf = P._nf
    d = P.n_facets
    found: dict[tuple[int, int], np.ndarray] = {}
    scale = max(1.0, float(np.abs(P.offsets).max()))
    for i in range(d):
        for j in range(i + 1, d):
            a = nf[[i, j]]
            if abs(np.linalg.det(a)) < 0.5:  # integer normals: det is 0 or >= 1
                continue
            v = np.linalg.solve(a, P.offsets[[i, j]])
            lv = P.l(v)
            if lv.min() < -_VERTEX_TOL * scale:
                continue
            active = tuple(int(k) for k in np.flatnonzero(np.abs(lv) <= _VERTEX_TOL * scale))
            if len(active) != 2:
                raise UnsupportedInputError(
                    f"degenerate vertex at {v.tolist()}: facets {list(active)} meet there"
                )
            found[active] = v
    counts = np.zeros(d, dtype=int)
    for i, j in found:
        counts[i] += 1
        counts[j] += 1
    for k in range(d):
        if counts[k] != 2:
            pair = [p for p in found if k in p]
            raise UnsupportedInputError(
                f"facet {k} meets {counts[k]} vertices (pairs {pair}); "
                "polytope is non-compact or has a redundant facet"
            )
    center = np.mean(list(found.values()), axis=0)
    order = sorted(
        found.items(),
        key=lambda kv: math.atan2(kv[1][1] - center[1], kv[1][0] - center[0]),
    )
    vertices = []
    for (i, j), v in order:
        det = int(round(np.linalg.det(nf[[i, j]])))
        vertices.append(
            DelzantVertex(point=(float(v[0]), float(v[1])), facets=(i, j), det=det, ok=abs(det) == 1)
        )
    return DelzantReport(vertices)


# --- built-in catalog ---------------------------------------------------------

def simplex() -> Polytope:
    return Polytope(np.array([[1, 0], [0, 1], [-1, -1]]), np.array([0.0, 0.0, -1.0]), name="cp2")


def square() -> Polytope:
    return Polytope(
        np.array([[1, 0], [0, 1], [-1, 0], [0, -1]]), np.array([0.0, 0.0, -1.0, -1.0]),
        name="cp1xcp1",
    )


def quadrant() -> Polytope:
    return Polytope(np.array([[1, 0], [0, 1]]), np.array([0.0, 0.0]), name="c2")


def blowup1(a: float = 0.5) -> Polytope:
    """Simplex cut by ``x2 <= a``."""
    if not 0 < a < 1:
        raise InputError("blowup1 needs 0 < a < 1")
    return Polytope(
        np.array([[1, 0], [0, 1], [-1, -1], [0, -1]]), np.array([0.0, 0.0, -1.0, -a]),
        name=f"blowup1:a={a!r}",
    )


def blowup1_sym(a: float = 0.3) -> Polytope:
    """Simplex with the corner at the origin cut by ``x1 + x2 >= a``."""
    if not 0 < a < 1:
        raise InputError("blowup1sym needs 0 < a < 1")
    return Polytope(
        np.array([[1, 0], [0, 1], [1, 1], [-1, -1]]), np.array([0.0, 0.0, a, -1.0]),
        name=f"blowup1sym:a={a!r}",
    )


def blowup3(a: float = 0.25, b: float = 0.75) -> Polytope:
    """Hexagon ``x >= 0, a <= x1 + x2 <= 1, x1 <= b, x2 <= b``."""
    if not (0 < a < b < 1 and b > 0.5):
        raise InputError("blowup3 needs 0 < a < b < 1 and b > 1/2")
    return Polytope(
        np.array([[1, 0], [0, 1], [1, 1], [-1, -1], [-1, 0], [0, -1]]),
        np.array([0.0, 0.0, a, -1.0, -b, -b]),
        name=f"blowup3:a={a!r},b={b!r}",
    )


_BUILTINS = {
    "cp2": simplex,
    "simplex": simplex,
    "cp1xcp1": square,
    "square": square,
    "c2": quadrant,
    "blowup1": blowup1,
    "blowup1sym": blowup1_sym,
    "blowup3": blowup3,
}

COMPACT_BUILTINS = ("cp2", "cp1xcp1", "blowup1:a=0.5", "blowup3:a=0.25,b=0.75")

_NAME_RE = re.compile(r"^\s*([A-Za-z0-9_]+)\s*(?::(.*))?$")


def builtin(name: str) -> Polytope:
    """Look up a built-in polytope, e.g. ``"cp2"`` or ``"blowup3:a=0.2,b=0.7"``."""
    m = _NAME_RE.match(name)
    if not m or m.group(1) not in _BUILTINS:
        raise InputError(f"unknown built-in polytope {name!r}; known: {sorted(_BUILTINS)}")
    kwargs = {}
    if m.group(2):
        for part in m.group(2).split(","):
            key, _, val = part.partition("=")
            try:
                kwargs[key.strip()] = float(val)
            except ValueError as exc:
                raise InputError(f"bad parameter {part!r} in {name!r}") from exc
    try:
        return _BUILTINS[m.group(1)](**kwargs)
    except TypeError as exc:
        raise InputError(f"bad parameters for {m.group(1)!r}: {exc}") from exc


def polytope_from_spec(spec) -> Polytope:
    if isinstance(spec, Polytope):
        return spec
    if isinstance(spec, str):
        return builtin(spec)
    return Polytope.from_dict(spec)
