"""Exception hierarchy shared across the package.

Everything raised on purpose derives from GradedInvError so callers can
catch library failures without swallowing genuine bugs.  The CLI maps
subtrees of this hierarchy onto its exit codes.
"""


class GradedInvError(Exception):
    """Base class for all errors raised deliberately by this package."""


class ConfigError(GradedInvError):
    """Bad run configuration: unknown key, unparsable value, bad range."""


class DataError(GradedInvError):
    """Malformed serialized data (function files, grading files)."""


class ConfigMismatchError(GradedInvError):
    """Operands built against incompatible discretizations."""


class IntervalDomainError(GradedInvError):
    """Evaluation point outside the unit interval."""


class OrderRangeError(GradedInvError):
    """Derivative or jet order outside the supported range."""


class ParseError(GradedInvError):
    """Expression text does not match the expression grammar."""


class EvaluationError(GradedInvError):
    """Expression evaluation hit an undefined value (log of nonpositive,
    division by zero)."""


class VanishingDerivativeError(GradedInvError):
    """The linearization coefficient vanishes somewhere on the strip, so
    no local inverse of the derivative exists."""


class SingularDerivativeError(GradedInvError):
    """A derivative multiplier came numerically too close to zero to
    invert, despite the construction-time nonvanishing check."""


class EtaRangeError(GradedInvError):
    """A composed inner function leaves the admissible second-argument
    range of the nonlinearity."""


class DegenerateInputError(GradedInvError):
    """An input is degenerate for the requested operation (e.g. a grading
    entry that is not positive and finite)."""


class MembershipError(GradedInvError):
    """A grading claimed to belong to the tameness family does not."""


class ThetaDomainError(GradedInvError):
    """Growth-step evaluation outside its domain of definition."""


class ConstructionError(GradedInvError):
    """The seed-sequence construction failed to terminate within its
    shrink budget."""


class NumericOverflowError(GradedInvError):
    """A certified quantity left the representable float range."""


class PremiseViolationError(GradedInvError):
    """A certificate premise failed on a concrete witness; the witness is
    carried in args[1] when available."""


class TargetNotAdmissibleError(GradedInvError):
    """The inversion target is outside the certified neighbourhood."""


class SamplingError(GradedInvError):
    """A sampler was asked for something it cannot produce."""


class AliasingWarning(UserWarning):
    """Projection input carried significant energy beyond the resolvable
    band; the result is a best-effort truncation."""
