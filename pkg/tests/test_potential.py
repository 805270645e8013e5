import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tminlag.errors import DomainError, InputError, ProfileDomainError
from tminlag.polytope import COMPACT_BUILTINS, builtin, quadrant, simplex, square
from tminlag.potential import (
    Potential,
    ProfileTerm,
    guillemin,
    guillemin_jet,
    is_positive_definite,
    jet,
    perturbed_potential,
    random_interior_points,
)
from tminlag.profiles import CubicSplineProfile, PolynomialProfile, ZeroProfile

from conftest import all_potentials


def test_guillemin_hessian_simplex():
    j = guillemin_jet(simplex(), [1 / 3, 1 / 3])
    assert np.allclose(j.hess, [[3, 1.5], [1.5, 3]], rtol=1e-14)
    assert np.allclose(j.hess @ j.hess_inv, np.eye(2), atol=1e-12)


def test_guillemin_square_center():
    j = guillemin_jet(square(), [0.5, 0.5])
    assert np.allclose(j.hess, np.diag([2.0, 2.0]))
    assert np.allclose(j.third, 0.0, atol=1e-14)


def test_guillemin_quadrant():
    j = guillemin_jet(quadrant(), [1.0, 1.0])
    assert np.allclose(j.hess, np.diag([0.5, 0.5]))


def test_guillemin_jet_boundary_raises():
    with pytest.raises(DomainError) as exc:
        guillemin_jet(simplex(), [0.0, 0.5])
    assert exc.value.min_value == 0.0


def test_cohomogeneity_one_quadratic_profile():
    # f = t^2 / 2, so f'' = 1 and u = u_G + 1/2 f(x1 + x2)
    pot = Potential(simplex(), (ProfileTerm(PolynomialProfile([0, 0, 0.5]), np.array([1, 1])),))
    x = [0.25, 0.25]
    expected = guillemin_jet(simplex(), x).hess + 0.5 * np.ones((2, 2))
    assert np.allclose(jet(pot, x).hess, expected, rtol=1e-14)


def test_zero_profile_bitwise():
    pot = Potential(simplex(), (ProfileTerm(ZeroProfile(), np.array([1, 1])),))
    a, b = jet(pot, [0.2, 0.3]), guillemin_jet(simplex(), [0.2, 0.3])
    for name in ("hess", "hess_inv", "third", "fourth"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_separable_offdiagonal_unchanged():
    quad = PolynomialProfile([0, 0, 0.5])
    pot = Potential(simplex(), (
        ProfileTerm(quad, np.array([1, 0])), ProfileTerm(quad, np.array([0, 1])),
    ))
    x = [0.2, 0.3]
    assert jet(pot, x).hess[0, 1] == guillemin_jet(simplex(), x).hess[0, 1]


def test_pd_reports():
    rng = np.random.default_rng(1)
    P = simplex()
    assert is_positive_definite(guillemin(P), random_interior_points(P, 50, rng)).passed
    # det Hess u is proportional to 1 + t(1-t) f''(t), t = x1 + x2, and t(1-t) <= 1/4:
    # f'' = -3 keeps it >= 1/4, f'' = -5 makes it negative around t = 1/2
    mild = Potential(P, (ProfileTerm(PolynomialProfile([0, 0, -1.5]), np.array([1, 1])),))
    assert is_positive_definite(mild).passed
    eps = 1e-3
    assert is_positive_definite(mild, [[0.5 - eps, 0.5 - eps]]).passed
    bad = Potential(P, (ProfileTerm(PolynomialProfile([0, 0, -2.5]), np.array([1, 1])),))
    rep = is_positive_definite(bad, [[0.25, 0.25], [0.05, 0.05], [0.49, 0.49]])
    assert not rep.passed
    assert np.allclose(rep.worst_point, [0.25, 0.25])
    assert list(rep.min_eigenvalues > 0) == [False, True, True]
    good = Potential(P, (
        ProfileTerm(PolynomialProfile([0, 0, 1.0]), np.array([1, 0])),
        ProfileTerm(PolynomialProfile([0, 0, 2.0]), np.array([0, 1])),
    ))
    assert is_positive_definite(good).passed
    with pytest.raises(InputError):
        is_positive_definite(good, [])


def test_profile_domain_violation():
    spline = CubicSplineProfile([0.0, 0.5, 1.0], [1.0, 2.0, 1.0])
    pot = Potential(square(), (ProfileTerm(spline, np.array([1, 1])),))
    jet(pot, [0.3, 0.3])
    with pytest.raises(ProfileDomainError):
        jet(pot, [0.8, 0.8])


def test_potential_json_round_trip():
    for pot in all_potentials():
        again = Potential.from_dict(pot.to_dict())
        x = pot.polytope.interior_point
        assert np.array_equal(jet(pot, x).fourth, jet(again, x).fourth)


def test_potential_spec_strictness():
    with pytest.raises(InputError):
        Potential.from_dict({"polytope": "cp2", "terms": []})
    with pytest.raises(InputError):
        Potential.from_dict({"polytope": "cp2", "terms": [{"type": "guillemin"}, {"type": "guillemin"}]})
    with pytest.raises(InputError):
        Potential.from_dict({"polytope": "cp2", "colour": "red"})
    with pytest.raises(InputError):
        Potential.from_dict({"polytope": "cp2", "terms": [
            {"type": "guillemin"},
            {"type": "profile", "direction": [1.5, 1], "profile": {"kind": "zero"}},
        ]})


def _fd_errors(pot, x):
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
    return e3, e4


_POTS = all_potentials()


@settings(max_examples=60, deadline=None)
@given(i=st.integers(0, len(_POTS) - 1), seed=st.integers(0, 2**31 - 1))
def test_jet_finite_difference_consistency(i, seed):
    pot = _POTS[i]
    x = random_interior_points(pot.polytope, 1, np.random.default_rng(seed), margin=1e-3)[0]
    e3, e4 = _fd_errors(pot, x)
    assert e3 <= 1e-5
    assert e4 <= 1e-4


@pytest.mark.parametrize("name", COMPACT_BUILTINS)
def test_tensor_permutation_symmetry(name):
    rng = np.random.default_rng(3)
    for pot in (guillemin(name), perturbed_potential(name)):
        for x in random_interior_points(pot.polytope, 5, rng):
            j = jet(pot, x)
            for perm in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
                assert np.allclose(j.third, j.third.transpose(perm), rtol=1e-14, atol=0)
            for perm in [(1, 0, 2, 3), (0, 2, 1, 3), (0, 1, 3, 2), (3, 2, 1, 0)]:
                assert np.allclose(j.fourth, j.fourth.transpose(perm), rtol=1e-14, atol=0)


def test_guillemin_closed_forms_exactly_symmetric():
    j = guillemin_jet(builtin("blowup3"), [0.3, 0.4])
    assert np.array_equal(j.third, j.third.transpose(1, 0, 2))
    assert np.array_equal(j.fourth, j.fourth.transpose(3, 1, 2, 0))
