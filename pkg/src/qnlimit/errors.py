"""Exception hierarchy.

Validation problems (bad input, bad config, parameters outside the admissible
set) derive from :class:`ValidationError`; numerical breakdowns derive from
:class:`NumericalError`. The CLI maps the two families to exit codes 1 and 2.
"""


class QnlimitError(Exception):
    pass


class ValidationError(QnlimitError, ValueError):
    pass


class NumericalError(QnlimitError, ArithmeticError):
    pass


class ClosureDomainError(ValidationError):
    """Potential outside the admissible interval (phi_m, phi_M) of a closure."""


class ClosureRangeError(ValidationError):
    """Density outside the range (rho_m, rho_M) of a closure."""


class NotARarefactionError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class InputError(ValidationError):
    pass


class DegenerateMomentsError(NumericalError):
    pass


class StateError(NumericalError):
    """Loss of positivity (rho or theta) during a fluid run."""


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
