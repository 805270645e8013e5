"""Minimal Lagrangian torus fibres of toric Kahler metrics on moment polytopes."""

from .errors import (
    ConsistencyError,
    ConstructionError,
    DegeneracyError,
    DomainError,
    InputError,
    PreconditionError,
    ProfileDomainError,
    StiffnessError,
    TminlagError,
    UnsupportedInputError,
)
from .flow import FlowOptions, Trajectory, integrate_mcf, mcf_velocity
from .geometry import (
    GeometryEval,
    abreu_scalar,
    evaluate,
    grad_log_volume,
    laplacian_gP_check,
    maslov_consistency,
    orbital_volume,
)
from .hsiang_lawson import GeodesicOptions, HLGeodesic, geodesic_residual, hl_metric, integrate_geodesic
from .io import GridField, emit_plot_data
from .polytope import Polytope, builtin, contains_interior, facet_values, validate_delzant_2d
from .potential import Potential, PotentialJet, ProfileTerm, guillemin, guillemin_jet, is_positive_definite, jet
from .prescribe import continuum_profile, prescribe_diagonal, prescribe_separable
from .solver import FibreReport, SolverConfig, classify, find_minimal_fibres, guillemin_minimality_residual

__version__ = "0.1.0"
