import numpy as np
import pytest
from scipy.optimize import root

from tminlag.errors import InputError, PreconditionError, UnsupportedInputError
from tminlag.geometry import evaluate
from tminlag.polytope import COMPACT_BUILTINS, blowup1, builtin, simplex, square
from tminlag.potential import guillemin, interior_lattice, perturbed_potential
from tminlag.solver import (
    FibreReport,
    SolverConfig,
    classify,
    find_minimal_fibres,
    guillemin_minimality_residual,
)

from conftest import all_potentials


def quartic(y, a):
    return 2 * y**4 - a * y**3 - 5 * a * y**2 + a * (3 * a + 2) * y - a * a


def bisect_quartic(a):
    lo, hi = 0.0, a
    flo = quartic(lo, a)
    assert flo * quartic(hi, a) < 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = quartic(mid, a)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_cp2_unique_clifford():
    reps = find_minimal_fibres(guillemin("cp2"))
    assert len(reps) == 1
    r = reps[0]
    assert np.abs(r.point - 1 / 3).max() < 1e-10
    assert r.classification == "LocalMax"
    assert r.grad_norm < 1e-12


def test_square_unique_center():
    reps = find_minimal_fibres(guillemin("cp1xcp1"))
    assert len(reps) == 1
    assert np.abs(reps[0].point - 0.5).max() < 1e-10
    assert reps[0].classification == "LocalMax"


def test_blowup_matches_quartic():
    a = 0.5
    reps = find_minimal_fibres(guillemin(blowup1(a)))
    assert len(reps) == 1
    x1, y = reps[0].point
    assert abs(x1 - (1 - y) / 2) < 1e-8
    assert abs(quartic(y, a)) < 1e-8
    assert abs(y - bisect_quartic(a)) < 1e-8


@pytest.mark.parametrize("a", [0.2, 0.35, 0.8])
def test_blowup_family(a):
    reps = find_minimal_fibres(guillemin(blowup1(a)))
    assert len(reps) == 1
    assert abs(reps[0].point[1] - bisect_quartic(a)) < 1e-8


def test_c2_empty_in_box():
    cfg = SolverConfig(box=((1e-6, 1e-6), (10.0, 10.0)))
    assert find_minimal_fibres(guillemin("c2"), cfg) == []
    with pytest.raises(UnsupportedInputError):
        find_minimal_fibres(guillemin("c2"))


def test_classify_examples():
    r = classify(guillemin("cp2"), [1 / 3, 1 / 3])
    assert (r.classification, r.ricci_index, r.index_lower_bound) == ("LocalMax", 0, 2)
    assert r.unstable_by_scalar
    assert np.all(np.linalg.eigvalsh(evaluate(guillemin("cp2"), [1 / 3, 1 / 3]).ricci_xx) > 0)
    r = classify(guillemin("cp1xcp1"), [0.5, 0.5])
    assert (r.classification, r.index_lower_bound) == ("LocalMax", 2)
    # product of round spheres: Ric = 2 g_P, so both g_P-relative eigenvalues are 2
    assert r.ricci_eigs == pytest.approx([2.0, 2.0])
    assert r.ricci_hessian_residual <= 1e-6
    with pytest.raises(PreconditionError, match="grad"):
        classify(guillemin("cp2"), [0.2, 0.2])


def test_report_round_trip():
    r = find_minimal_fibres(guillemin("blowup3"))[0]
    again = FibreReport.from_dict(r.to_dict())
    assert again.to_dict() == r.to_dict()


def test_config_validation():
    with pytest.raises(InputError):
        SolverConfig(grid=2)
    with pytest.raises(InputError):
        SolverConfig(tol=0.0)
    with pytest.raises(InputError):
        find_minimal_fibres(guillemin("cp2"), SolverConfig(box=((0, 0), (-1, 1))))


def test_guillemin_residual_examples():
    assert np.abs(guillemin_minimality_residual(simplex(), [1 / 3, 1 / 3])).max() < 1e-12
    assert np.abs(guillemin_minimality_residual(square(), [0.5, 0.5])).max() < 1e-12
    P = blowup1(0.5)
    x = find_minimal_fibres(guillemin(P))[0].point
    assert np.linalg.norm(guillemin_minimality_residual(P, x)) < 1e-8
    assert np.linalg.norm(guillemin_minimality_residual(simplex(), [0.2, 0.3])) > 1.0


def test_guillemin_residual_needs_2d():
    from tminlag.polytope import Polytope
    cube = Polytope(np.vstack([np.eye(3, dtype=int), -np.eye(3, dtype=int)]), np.array([0, 0, 0, -1, -1, -1.0]))
    with pytest.raises(UnsupportedInputError):
        guillemin_minimality_residual(cube, [0.5, 0.5, 0.5])


@pytest.mark.parametrize("name", COMPACT_BUILTINS + ("blowup1sym:a=0.3",))
def test_residual_equivalence(name):
    P = builtin(name)
    reps = find_minimal_fibres(guillemin(P))
    for r in reps:
        assert np.linalg.norm(guillemin_minimality_residual(P, r.point)) < 1e-8
    # independent root search on the combinatorial residual
    radius = 1e-6 * P.diameter
    for x0 in interior_lattice(P, 12, margin=1e-2):
        sol = root(lambda x: guillemin_minimality_residual(P, x) if P.l(x).min() > 0 else np.full(2, 1e6),
                   x0, method="hybr", tol=1e-14)
        if not sol.success or P.l(sol.x).min() <= 0:
            continue
        if np.linalg.norm(guillemin_minimality_residual(P, sol.x)) > 1e-8:
            continue
        assert min(np.linalg.norm(sol.x - r.point) for r in reps) < max(radius, 1e-7)


@pytest.mark.parametrize("pot", all_potentials(), ids=lambda p: p.polytope.name + ("" if p.is_guillemin else "+f"))
def test_uniqueness_under_positive_ricci(pot):
    lattice = interior_lattice(pot.polytope, 30)
    ricci_pd = all(np.linalg.eigvalsh(evaluate(pot, x).ricci_xx)[0] > 0 for x in lattice)
    reps = find_minimal_fibres(pot)
    if ricci_pd:
        assert len(reps) == 1
    assert reps[0].classification == "LocalMax"


def test_determinism():
    pot = perturbed_potential("blowup3")
    a = [r.to_dict() for r in find_minimal_fibres(pot)]
    b = [r.to_dict() for r in find_minimal_fibres(pot)]
    assert a == b


def test_results_sorted_by_volume():
    from tminlag.prescribe import prescribe_diagonal
    pot = prescribe_diagonal([0.3, 0.5, 0.8], verify=False).potential
    reps = find_minimal_fibres(pot, SolverConfig(grid=25))
    vals = [r.value_V for r in reps]
    assert vals == sorted(vals, reverse=True)
    assert len(reps) >= 3
