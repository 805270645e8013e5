"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are collected in ``RESULTS`` and repeated in the pytest terminal
summary (see conftest.py).  Run ``pytest tests/test_acceptance.py -s`` to see
them inline as well.
"""

import functools
import time

import numpy as np
import pytest

from tminlag.errors import TminlagError
from tminlag.flow import FlowOptions, integrate_mcf, volume_along
from tminlag.geometry import evaluate, grad_log_volume, laplacian_gP_check
from tminlag.hsiang_lawson import integrate_geodesic
from tminlag.polytope import COMPACT_BUILTINS, blowup1
from tminlag.potential import (
    guillemin,
    interior_lattice,
    is_positive_definite,
    jet,
    perturbed_potential,
    random_interior_points,
)
from tminlag.prescribe import continuum_profile, prescribe_diagonal, prescribe_separable
from tminlag.solver import SolverConfig, find_minimal_fibres, grad_only, guillemin_minimality_residual

from conftest import all_potentials

RESULTS: list[str] = []


def criterion(number: int, title: str):
    """Record PASS/FAIL for the wrapped test, including crashes."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except AssertionError as exc:
                _line(number, title, False, str(exc).splitlines()[0] if str(exc) else "assertion failed")
                raise
            except (TminlagError, ArithmeticError, ValueError) as exc:
                _line(number, title, False, f"{type(exc).__name__}: {exc}")
                raise
            _line(number, title, True, detail or "")
        return run

    return wrap


def _line(number, title, ok, detail):
    text = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}  {title}  {detail}".rstrip()
    RESULTS.append(text)
    print(text)


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


# --- independent oracles -------------------------------------------------------------


def _quartic(y, a):
    return 2 * y**4 - a * y**3 - 5 * a * y**2 + a * (3 * a + 2) * y - a * a


def _bisect_quartic(a):
    lo, hi = 0.0, a
    flo = _quartic(lo, a)
    assert flo * _quartic(hi, a) < 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = _quartic(mid, a)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _square_flow(x0, t):
    return 0.5 + np.outer(np.exp(2 * t), np.asarray(x0) - 0.5)


# --- criteria ----------------------------------------------------------------------


@criterion(1, "CP2 Clifford torus")
def test_c01_cp2_clifford():
    reps, dt = _timed(find_minimal_fibres, guillemin("cp2"))
    assert len(reps) == 1, f"{len(reps)} critical points"
    r = reps[0]
    err = float(np.abs(r.point - 1 / 3).max())
    assert err < 1e-10, f"distance {err:.3e}"
    assert r.classification == "LocalMax", r.classification
    assert r.index_lower_bound == 2, f"index bound {r.index_lower_bound}"
    assert dt < 1.0, f"runtime {dt:.2f}s"
    return f"err={err:.1e} runtime={dt:.2f}s"


@criterion(2, "CP1xCP1 centre")
def test_c02_square_centre():
    reps, dt = _timed(find_minimal_fibres, guillemin("cp1xcp1"))
    assert len(reps) == 1, f"{len(reps)} critical points"
    err = float(np.abs(reps[0].point - 0.5).max())
    assert err < 1e-10, f"distance {err:.3e}"
    assert reps[0].classification == "LocalMax", reps[0].classification
    assert dt < 1.0, f"runtime {dt:.2f}s"
    return f"err={err:.1e} runtime={dt:.2f}s"


@criterion(3, "C2 has no critical point")
def test_c03_c2_empty():
    pot = guillemin("c2")
    box = (np.array([0.0, 0.0]), np.array([10.0, 10.0]))
    reps = find_minimal_fibres(pot, SolverConfig(box=box))
    assert reps == [], f"{len(reps)} spurious critical points"
    grid = interior_lattice(pot.polytope, 50, box=box)
    assert len(grid) == 2500
    gmin = min(float(np.linalg.norm(grad_log_volume(jet(pot, p)))) for p in grid)
    assert gmin > 0.05, f"min |grad log V| = {gmin:.4f}"
    return f"min|grad log V|={gmin:.4f}"


@criterion(4, "blow-up quartic")
def test_c04_blowup_quartic():
    a = 0.5
    reps = find_minimal_fibres(guillemin(blowup1(a)))
    assert len(reps) == 1, f"{len(reps)} critical points"
    x1, y = reps[0].point
    line = abs(x1 - (1 - y) / 2)
    res = abs(_quartic(y, a))
    root = abs(y - _bisect_quartic(a))
    assert line < 1e-8, f"symmetry line {line:.2e}"
    assert res < 1e-8, f"quartic residual {res:.2e}"
    assert root < 1e-8, f"bisection gap {root:.2e}"
    return f"y={y:.12f} residual={res:.1e}"


@criterion(5, "Abreu identity Delta V = sV")
def test_c05_abreu():
    rng = np.random.default_rng(5)
    worst = 0.0
    t0 = time.perf_counter()
    for pot in all_potentials():
        P = pot.polytope
        for p in random_interior_points(P, 100, rng, margin=1e-3 * P.diameter):
            worst = max(worst, laplacian_gP_check(pot, p).residual)
    dt = time.perf_counter() - t0
    assert worst < 1e-5, f"worst relative residual {worst:.2e}"
    assert dt < 10.0, f"runtime {dt:.1f}s"
    return f"worst={worst:.1e} runtime={dt:.1f}s"


def _all_critical_points():
    pots = all_potentials() + [guillemin("blowup1sym")]
    return [(pot, r) for pot in pots for r in find_minimal_fibres(pot)]


@criterion(6, "Ricci-Hessian identity at critical points")
def test_c06_ricci_hessian():
    pairs = _all_critical_points()
    assert pairs
    worst = 0.0
    for pot, r in pairs:
        g = evaluate(pot, r.point)
        worst = max(worst, float(np.abs(g.ricci_xx + g.hess_gP_logV).max()))
    assert worst < 1e-8, f"worst {worst:.2e}"
    return f"{len(pairs)} points, worst={worst:.1e}"


@criterion(7, "curvature self-consistency")
def test_c07_curvature_consistency():
    rng = np.random.default_rng(7)
    worst = {"symmetry": 0.0, "trace": 0.0, "block": 0.0}
    for pot in all_potentials():
        P = pot.polytope
        for p in random_interior_points(P, 100, rng, margin=1e-3 * P.diameter):
            g = evaluate(pot, p)
            worst["symmetry"] = max(worst["symmetry"], g.symmetry_residual())
            worst["trace"] = max(worst["trace"], g.trace_identity_residual())
            worst["block"] = max(worst["block"], g.block_relation_residual())
    for k, v in worst.items():
        assert v < 1e-8, f"{k} residual {v:.2e}"
    return " ".join(f"{k}={v:.1e}" for k, v in worst.items())


@criterion(8, "square flow closed form")
def test_c08_flow_oracle():
    pot = guillemin("cp1xcp1")
    opts = FlowOptions(boundary_eps=1e-6)
    traj, dt = _timed(integrate_mcf, pot, [0.3, 0.45], opts)
    exact = _square_flow([0.3, 0.45], traj.t)
    dev = float((np.linalg.norm(traj.x - exact, axis=1) / np.linalg.norm(exact, axis=1)).max())
    assert dev < 1e-6, f"relative deviation {dev:.2e}"
    assert traj.termination.kind == "BoundaryHit", traj.termination.kind
    assert len(traj.termination.active_facets) == 1, traj.termination.active_facets
    diag = integrate_mcf(pot, [0.3, 0.3], opts)
    assert diag.termination.kind == "BoundaryHit", diag.termination.kind
    assert len(diag.termination.active_facets) == 2, diag.termination.active_facets
    assert dt < 1.0, f"runtime {dt:.2f}s"
    return f"dev={dev:.1e} runtime={dt:.2f}s"


@criterion(9, "flow monotonicity of V")
def test_c09_flow_monotone():
    rng = np.random.default_rng(9)
    count = 0
    for name in COMPACT_BUILTINS:
        pot = guillemin(name)
        P = pot.polytope
        for x0 in random_interior_points(P, 20, rng, margin=1e-3 * P.diameter):
            traj = integrate_mcf(pot, x0)
            V = volume_along(pot, traj)
            if len(V) > 1:
                assert np.all(np.diff(V) < 0), f"V not strictly decreasing from {x0.tolist()} on {name}"
            count += 1
    return f"{count} trajectories"


@criterion(10, "Hsiang-Lawson vertical geodesic")
def test_c10_hl_geodesic():
    geo = integrate_geodesic(guillemin("cp1xcp1"), [0.5, 0.2], [0.0, 1.0])
    dev = float(np.abs(geo.x[:, 0] - 0.5).max())
    assert dev < 1e-8, f"sup|x1 - 1/2| = {dev:.2e}"
    assert geo.speed2_drift < 1e-6, f"speed^2 drift {geo.speed2_drift:.2e}"
    return f"dev={dev:.1e} drift={geo.speed2_drift:.1e}"


def _random_targets(rng, k=3, gap=0.1):
    while True:
        ts = np.sort(rng.uniform(0.05, 0.95, k))
        if np.all(np.diff(ts) > gap):
            return [float(t) for t in ts]


@criterion(11, "diagonal prescription")
def test_c11_diagonal_prescription():
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    lines = []
    for targets in ([0.4, 0.9], _random_targets(rng)):
        res = prescribe_diagonal(targets)
        v = res.verification
        assert all(v.recovered), f"targets {targets}: distances {v.distances}"
        assert max(v.distances) < 1e-6
        assert v.max_offdiagonal < 1e-8, f"off-diagonal point {v.max_offdiagonal:.2e}"
        pot = res.potential
        assert is_positive_definite(pot, interior_lattice(pot.polytope, 50)).passed, "Hessian not PD"
        lines.append(f"{[round(t, 4) for t in targets]}:{len(v.found)} found")
    dt = time.perf_counter() - t0
    assert dt < 30.0, f"runtime {dt:.1f}s"
    return f"{'; '.join(lines)} runtime={dt:.1f}s"


@criterion(12, "separable prescription")
def test_c12_separable():
    res = prescribe_separable([(0.2, 0.3), (0.5, 0.25)], verify=False)
    norms = [float(np.linalg.norm(grad_only(res.potential, p))) for p in res.targets]
    assert max(norms) < 1e-8, f"grad norms {norms}"
    return f"max grad={max(norms):.1e}"


@criterion(13, "continuum of minimal fibres")
def test_c13_continuum():
    pot = continuum_profile()
    norms = [float(np.linalg.norm(grad_only(pot, [x, x]))) for x in np.linspace(1 / 6, 1 / 3, 50)]
    assert max(norms) < 1e-7, f"max grad {max(norms):.2e}"
    return f"max grad={max(norms):.1e}"


@criterion(14, "Guillemin 2D combinatorial residual")
def test_c14_guillemin_residual():
    worst, count = 0.0, 0
    for name in (*COMPACT_BUILTINS, "blowup1sym", "c2"):
        pot = guillemin(name)
        P = pot.polytope
        cfg = SolverConfig() if P.compact else SolverConfig(box=(np.zeros(2), np.full(2, 10.0)))
        for r in find_minimal_fibres(pot, cfg):
            worst = max(worst, float(np.linalg.norm(guillemin_minimality_residual(P, r.point))))
            count += 1
    assert count > 0
    assert worst < 1e-8, f"worst {worst:.2e}"
    return f"{count} points, worst={worst:.1e}"


def _fd_jet_errors(pot, x):
    j = jet(pot, x)
    h = 1e-5 * j.min_facet
    n = len(x)
    d_hess = np.empty_like(j.third)
    d_third = np.empty_like(j.fourth)
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        jp, jm = jet(pot, x + e), jet(pot, x - e)
        d_hess[..., k] = (jp.hess - jm.hess) / (2 * h)
        d_third[..., k] = (jp.third - jm.third) / (2 * h)
    e3 = np.abs(d_hess - j.third).max() / np.abs(j.third).max()
    e4 = np.abs(d_third - j.fourth).max() / np.abs(j.fourth).max()
    return float(e3), float(e4)


@criterion(15, "derivative jet finite differences")
def test_c15_jet_fd():
    rng = np.random.default_rng(15)
    pots = all_potentials() + [prescribe_diagonal([0.4, 0.9], verify=False).potential,
                               perturbed_potential("blowup1sym")]
    w3 = w4 = 0.0
    for _ in range(100):
        pot = pots[rng.integers(len(pots))]
        x = random_interior_points(pot.polytope, 1, rng, margin=1e-3)[0]
        e3, e4 = _fd_jet_errors(pot, x)
        w3, w4 = max(w3, e3), max(w4, e4)
    assert w3 <= 1e-5, f"hess->third {w3:.2e}"
    assert w4 <= 1e-4, f"third->fourth {w4:.2e}"
    return f"hess->third={w3:.1e} third->fourth={w4:.1e}"


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
