"""Certified local inversion of composition operators on a truncated
model of smooth functions, with graded gauge-norm tameness certificates.

The intended entry points: build a `CompositionOperator` from a parsed
bivariate expression, derive its `GeneratorFamily` at a base point with
`build_generator`, then solve targets with `newton_invert` against a
member grading.  Everything else supports those three.
"""

from .composition import CompositionOperator, InclusionReport
from .errors import (
    AliasingWarning,
    ConfigError,
    ConfigMismatchError,
    ConstructionError,
    DataError,
    DegenerateInputError,
    EtaRangeError,
    EvaluationError,
    GradedInvError,
    IntervalDomainError,
    MembershipError,
    NumericOverflowError,
    OrderRangeError,
    ParseError,
    PremiseViolationError,
    SamplingError,
    SingularDerivativeError,
    TargetNotAdmissibleError,
    ThetaDomainError,
    VanishingDerivativeError,
)
from .expressions import parse, to_text
from .gauge import Grading, disk_contains, gauge_norm, grading_from_text, scale_to_disk
from .newton import (
    CertificateFlags,
    InversionResult,
    LipschitzReport,
    NeumannReport,
    derivative_invertibility,
    inverse_lipschitz_check,
    neumann_bound,
    neumann_series,
    newton_invert,
)
from .sampling import disk_sample
from .smoothfn import GridConfig, SmoothFn, from_text, lincomb, project
from .tameness import (
    ClosureReport,
    GeneratorFamily,
    JetPolynomial,
    MajorantTable,
    PerturbationKernel,
    build_generator,
    build_jet_polynomials,
    kernel_identity_residual,
)

__version__ = "0.1.0"

__all__ = [
    "AliasingWarning",
    "CertificateFlags",
    "ClosureReport",
    "CompositionOperator",
    "ConfigError",
    "ConfigMismatchError",
    "ConstructionError",
    "DataError",
    "DegenerateInputError",
    "EtaRangeError",
    "EvaluationError",
    "GeneratorFamily",
    "GradedInvError",
    "Grading",
    "GridConfig",
    "InclusionReport",
    "IntervalDomainError",
    "InversionResult",
    "JetPolynomial",
    "LipschitzReport",
    "MajorantTable",
    "MembershipError",
    "NeumannReport",
    "NumericOverflowError",
    "OrderRangeError",
    "ParseError",
    "PerturbationKernel",
    "PremiseViolationError",
    "SamplingError",
    "SingularDerivativeError",
    "SmoothFn",
    "TargetNotAdmissibleError",
    "ThetaDomainError",
    "VanishingDerivativeError",
    "build_generator",
    "build_jet_polynomials",
    "derivative_invertibility",
    "disk_contains",
    "disk_sample",
    "from_text",
    "gauge_norm",
    "grading_from_text",
    "inverse_lipschitz_check",
    "kernel_identity_residual",
    "lincomb",
    "neumann_bound",
    "neumann_series",
    "newton_invert",
    "parse",
    "project",
    "scale_to_disk",
    "to_text",
]
