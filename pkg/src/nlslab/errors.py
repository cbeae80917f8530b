"""Exception hierarchy shared by all nlslab modules."""


class NlsLabError(Exception):
    """Base class; the CLI maps every subclass to a machine-readable error."""

    code = "nlslab_error"


class SingularChange(NlsLabError, ValueError):
    code = "singular_change"


class DegenerateBasis(NlsLabError, ValueError):
    code = "degenerate_basis"


class NotPositive(NlsLabError, ValueError):
    code = "not_positive"


class AssumptionFails(NlsLabError, ValueError):
    code = "assumption_fails"


class PreconditionViolated(NlsLabError, ValueError):
    code = "precondition_violated"


class DegenerateEigenvector(NlsLabError, ArithmeticError):
    code = "degenerate_eigenvector"


class ModulusOutOfRange(NlsLabError, ValueError):
    code = "modulus_out_of_range"


class ZeroState(NlsLabError, ValueError):
    code = "zero_state"


class StepFailure(NlsLabError, ArithmeticError):
    """Adaptive step size underflowed; ``time`` is the last accepted time."""

    code = "step_failure"

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class NonFinite(NlsLabError, ArithmeticError):
    code = "non_finite"

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class WrongSystem(NlsLabError, ValueError):
    code = "wrong_system"


class ConfigError(NlsLabError, ValueError):
    code = "config_error"
