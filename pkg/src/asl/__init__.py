"""Affine spheres at desk scale: Blaschke metrics, developing maps, holonomies."""

from .errors import (
    BadWindow,
    BracketViolated,
    ChartMismatch,
    DataOffGrid,
    DegenerateDomain,
    GeomError,
    GradientFold,
    LostConvexity,
    NewtonDiverged,
    NotConvex,
    NotEquivariant,
    NotPositiveSpectrum,
    NotProperlyConvex,
    Overflow,
    PathExits,
    TooCoarse,
    ZeroOnBoundary,
    ZeroResidue,
)
from .projective import (
    Chart,
    ConvexDomainApprox,
    HolonomyClass,
    HolonomyKind,
    ProjectivePoint,
    ProjectiveTransform,
    apply_transform,
    bulge_flow,
    classify_holonomy,
    dual_domain,
    fubini_study_distance,
    hausdorff_distance,
    principal_triangle,
    reflection_j,
    twist_bulge_matrix,
)
from .residues import EndClassification, classify_end, eigenvalue_exponents
from .mongeampere import (
    BlaschkeField,
    LegendreTransform,
    MASolution,
    blaschke_field,
    disk_shape,
    legendre_transform,
    polygon_shape,
    radial_blaschke_length,
    regular_polygon_shape,
    solve_dirichlet,
    square_shape,
)
from .wang import (
    BackgroundKind,
    BackgroundMetric1D,
    SubSuperReport,
    WangSolution1D,
    WangSolution2D,
    check_sub_super,
    constant_solution,
    make_background,
    solve_wang_1d,
    solve_wang_2d,
)
from .developing import (
    BlaschkeGridCoefficients,
    ConstantCoefficients,
    Frame,
    PoincareDiskCoefficients,
    conic_fit_residual,
    develop_domain,
    holonomy_affine_deck,
    holonomy_cylinder,
    initial_frame,
    integrate_frame,
    make_path,
    ray_saturation,
    titeica_frame,
)
from .experiments import EXPERIMENTS, ExperimentReport

__version__ = "0.1.0"
