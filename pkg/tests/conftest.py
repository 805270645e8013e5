import numpy as np
import pytest

from tminlag.polytope import COMPACT_BUILTINS, builtin
from tminlag.potential import guillemin, perturbed_potential, random_interior_points


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=COMPACT_BUILTINS)
def compact_name(request):
    return request.param


def all_potentials():
    """Guillemin and one perturbed potential on every compact built-in."""
    out = []
    for name in COMPACT_BUILTINS:
        out.append(guillemin(name))
        out.append(perturbed_potential(name))
    return out


def sample_points(P, count, rng, rel_margin=1e-3):
    return random_interior_points(P, count, rng, margin=rel_margin * P.diameter)


__all__ = ["all_potentials", "sample_points", "builtin"]


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
