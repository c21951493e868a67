"""metrikos: metric coordinate systems, conversions, calculus, and flows.

A point of a metric space is represented by its tuple of distances to a
fixed set of reference points.  This package builds such coordinate
systems over several concrete spaces, converts to and from Cartesian
coordinates, differentiates curves coordinate-wise, integrates vector
fields given by coordinate formulas, checks feasibility, conservation,
Lipschitz bounds, and set invariance, and samples the classical loci
(spheres, ellipsoids, hyperboloids, ...) that conserved quantities trace
out.  A scenario-driven CLI reproduces all of the bundled examples.
"""

from .errors import (
    MetrikosError,
    InvalidInputError,
    ShapeMismatchError,
    InfeasibleCoordsError,
    NoConvergenceError,
    DegenerateConfigurationError,
    InvalidFieldError,
    IntegrationError,
    EmptyLocusError,
    ExpressionError,
    ScenarioError,
)
from .spaces import (
    Subset,
    SpaceDescriptor,
    SpacePoint,
    euclidean,
    sup_metric_plane,
    discrete_space,
    sphere_geodesic,
    grid_function_space,
    point,
    distance,
    member,
    grid_indicator,
    grid_hat,
    grid_eval,
)
from .core import (
    CoordinateSystem,
    MetricCoords,
    EmbeddedPoint,
    FeasibilityReport,
    Violation,
    Witness,
    CoordinatizationReport,
    ConvergenceReport,
    coords_of,
    d_C,
    coord_gap,
    base_offsets,
    embed,
    embed_coords,
    unembed,
    check_feasible,
    verify_coordinatizing,
    redundant_point_check,
    compare_convergence,
    as_vector,
    sample_box_points,
    sample_feasible_coords,
)
from .conversion import (
    MultilaterateOptions,
    hilbert_system,
    hilbert_to_metric,
    metric_to_hilbert,
    multilaterate,
)
from .calculus import (
    H_SEQ,
    DERIV_TOL,
    Curve,
    TangentRep,
    ForwardReport,
    CentralReport,
    make_tangent,
    forward_derivative,
    central_derivative,
    tangency_test,
    tangent_metric,
    char_shift_derivative,
    shifted_indicator_curve,
)
from .loci import (
    KINDS,
    Locus,
    validate_locus,
    locus_residual,
    locus_membership,
    matched_branch,
    residual_gradient,
    default_sampling_box,
    sample_locus,
)
from .fields import (
    CoordField,
    Trajectory,
    RealizedVelocity,
    LipschitzReport,
    ConservationLaw,
    constant_field,
    eval_field,
    integrate_coords,
    integrate_points,
    integrate_on_sphere,
    realize_on_sphere,
    hull_reflector,
    lipschitz_estimate,
    mcshane_extend,
    mcshane_extend_vector,
    cutoff,
    conserved_quantities,
    default_probes,
    field_on_vectors,
)
from .invariance import (
    NAGUMO_H_SEQ,
    CoordSet,
    NagumoReport,
    NagumoViolation,
    InvarianceResult,
    sampled_set,
    implicit_set,
    set_distance,
    nagumo_residual,
    nagumo_check,
    invariance_test,
    law_level_set,
)
from .scenario import ScenarioOutcome, load_scenario, run_scenario
from .demos import DEMO_NAMES, run_demo

__version__ = "0.1.0"

__all__ = [
    "MetrikosError", "InvalidInputError", "ShapeMismatchError",
    "InfeasibleCoordsError", "NoConvergenceError",
    "DegenerateConfigurationError", "InvalidFieldError", "IntegrationError",
    "EmptyLocusError", "ExpressionError", "ScenarioError",
    "Subset", "SpaceDescriptor", "SpacePoint", "euclidean",
    "sup_metric_plane", "discrete_space", "sphere_geodesic",
    "grid_function_space", "point", "distance", "member", "grid_indicator",
    "grid_hat", "grid_eval",
    "CoordinateSystem", "MetricCoords", "EmbeddedPoint", "FeasibilityReport",
    "Violation", "Witness", "CoordinatizationReport", "ConvergenceReport",
    "coords_of", "d_C", "coord_gap", "base_offsets", "embed", "embed_coords",
    "unembed", "check_feasible", "verify_coordinatizing",
    "redundant_point_check", "compare_convergence", "as_vector",
    "sample_box_points", "sample_feasible_coords",
    "MultilaterateOptions", "hilbert_system", "hilbert_to_metric",
    "metric_to_hilbert", "multilaterate",
    "H_SEQ", "DERIV_TOL", "Curve", "TangentRep", "ForwardReport",
    "CentralReport", "make_tangent", "forward_derivative",
    "central_derivative", "tangency_test", "tangent_metric",
    "char_shift_derivative", "shifted_indicator_curve",
    "KINDS", "Locus", "validate_locus", "locus_residual", "locus_membership",
    "matched_branch", "residual_gradient", "default_sampling_box",
    "sample_locus",
    "CoordField", "Trajectory", "RealizedVelocity", "LipschitzReport",
    "ConservationLaw", "constant_field", "eval_field", "integrate_coords",
    "integrate_points", "integrate_on_sphere", "realize_on_sphere",
    "hull_reflector", "lipschitz_estimate", "mcshane_extend",
    "mcshane_extend_vector", "cutoff", "conserved_quantities",
    "default_probes", "field_on_vectors",
    "NAGUMO_H_SEQ", "CoordSet", "NagumoReport", "NagumoViolation",
    "InvarianceResult", "sampled_set", "implicit_set", "set_distance",
    "nagumo_residual", "nagumo_check", "invariance_test", "law_level_set",
    "ScenarioOutcome", "load_scenario", "run_scenario",
    "DEMO_NAMES", "run_demo",
    "__version__",
]
