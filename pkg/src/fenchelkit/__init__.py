"""Convex conjugates, duality certificates, optimal transport, and
minimal-flow problems at desk scale.

The compiled kernels are used when the extension module built; the pure
NumPy fallback computes the same results (see fenchelkit._kernels.BACKEND).
"""

from ._kernels import BACKEND
from .errors import (
    DomainMaskError,
    FenchelkitError,
    GridMismatchError,
    ImproperFunctionError,
    MarginalMismatchError,
    NoAffineMinorantError,
    NotSemiDistanceError,
    PivotLimitError,
    ProblemFileError,
    PSolveError,
    QualificationError,
    SlaterError,
)
from .grids import Grid1D, GridFunction
from .functions import (
    AbsValue,
    AffineTilt,
    Entropy,
    IndicatorBall,
    IndicatorInterval,
    LowerSemicircle,
    MinimalSurface,
    NormPower,
    PlusInfinity,
    Quadratic,
    Sampled,
    ScaledNorm,
    ShiftedExp,
    SupportInterval,
    dual_ball_norm,
    evaluate,
)
from .conjugate import (
    SubdiffSet,
    biconjugate,
    check_min_via_conjugate,
    conjugate,
    conjugate_value,
    fenchel_gap,
    subdifferential,
)
from .calculus import (
    ExtremalityReport,
    LinearMap,
    PrimalDualPair,
    conjugate_of_sum,
    extremality_check,
    fenchel_rockafellar,
    inf_convolution,
)
from .programs import (
    ComplementarityReport,
    ConvexProgram,
    KktCertificate,
    LpProblem,
    LpSolution,
    dual_of,
    slater_check,
    solve_convex_program,
    solve_lp,
    value_function,
    verify_complementarity,
)
from .transport import (
    BrenierReport,
    CostMatrix,
    DiscreteMeasure,
    DualPotentials,
    GeodesicSpec,
    TransportPlan,
    brenier_check,
    build_cost,
    c_transform,
    dual_potentials,
    kantorovich_norm,
    kantorovich_rubinstein,
    solve_kantorovich,
)
from .beckmann import (
    BeckmannReport,
    FlowField,
    GridDomain,
    PotentialField,
    W1Result,
    continuation_to_w1,
    divergence,
    entropy_functional,
    gradient,
    optimality_residuals,
    rho_k_functional,
    solve_p_laplace,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    # errors
    "FenchelkitError",
    "ImproperFunctionError",
    "NoAffineMinorantError",
    "GridMismatchError",
    "QualificationError",
    "SlaterError",
    "PivotLimitError",
    "MarginalMismatchError",
    "NotSemiDistanceError",
    "DomainMaskError",
    "PSolveError",
    "ProblemFileError",
    # grids and functions
    "Grid1D",
    "GridFunction",
    "Quadratic",
    "NormPower",
    "AbsValue",
    "Entropy",
    "MinimalSurface",
    "IndicatorInterval",
    "IndicatorBall",
    "Sampled",
    "AffineTilt",
    "PlusInfinity",
    "ShiftedExp",
    "LowerSemicircle",
    "SupportInterval",
    "ScaledNorm",
    "evaluate",
    "dual_ball_norm",
    # conjugation
    "conjugate",
    "conjugate_value",
    "biconjugate",
    "subdifferential",
    "SubdiffSet",
    "fenchel_gap",
    "check_min_via_conjugate",
    # calculus
    "LinearMap",
    "PrimalDualPair",
    "ExtremalityReport",
    "inf_convolution",
    "conjugate_of_sum",
    "fenchel_rockafellar",
    "extremality_check",
    # programs
    "LpProblem",
    "LpSolution",
    "ComplementarityReport",
    "ConvexProgram",
    "KktCertificate",
    "solve_lp",
    "dual_of",
    "verify_complementarity",
    "value_function",
    "slater_check",
    "solve_convex_program",
    # transport
    "DiscreteMeasure",
    "CostMatrix",
    "TransportPlan",
    "DualPotentials",
    "GeodesicSpec",
    "BrenierReport",
    "build_cost",
    "solve_kantorovich",
    "c_transform",
    "dual_potentials",
    "kantorovich_rubinstein",
    "kantorovich_norm",
    "brenier_check",
    # flows
    "GridDomain",
    "FlowField",
    "PotentialField",
    "W1Result",
    "BeckmannReport",
    "divergence",
    "gradient",
    "solve_p_laplace",
    "continuation_to_w1",
    "optimality_residuals",
    "entropy_functional",
    "rho_k_functional",
]
