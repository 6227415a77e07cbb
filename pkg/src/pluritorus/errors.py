"""Exception hierarchy shared by all modules.

Exit-code mapping used by the command line front end:

====================  =========
exception             exit code
====================  =========
NonConvergenceError   2
InfeasibleError       3
InvalidArgumentError  4
UnsupportedError      4
SamplingExhaustedError 5
====================  =========
"""


class PluritorusError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(PluritorusError, ValueError):
    """A precondition on the inputs is violated."""


class UnsupportedError(PluritorusError):
    """The request is outside the declared contract (not a bug)."""


class InvalidComparisonError(InvalidArgumentError):
    """Two potentials cannot be compared (pole sets incompatible)."""


class InvalidSetupError(InvalidArgumentError):
    """A solver setup violates its invariants."""


class SamplingExhaustedError(PluritorusError):
    """A rejection sampler failed after its bounded retry budget."""


class InfeasibleError(PluritorusError):
    """A feasibility status propagated as an error (non-psef class)."""


class NonConvergenceError(PluritorusError):
    """An iterative method hit its iteration cap.

    The partial iterate, when available, is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


EXIT_CODES = {
    NonConvergenceError: 2,
    InfeasibleError: 3,
    InvalidArgumentError: 4,
    UnsupportedError: 4,
    SamplingExhaustedError: 5,
}


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code (4 for parse-type errors)."""
    for klass, code in EXIT_CODES.items():
        if isinstance(exc, klass):
            return code
    return 1
