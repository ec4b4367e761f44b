"""Exception hierarchy shared by every capax module."""


class CapaxError(Exception):
    """Base class for all library errors."""


class ScopeError(CapaxError, ValueError):
    pass


class ConfigurationError(CapaxError, ValueError):
    pass


class SizeGuardError(CapaxError):
    pass


class InvalidCommonalityError(CapaxError, ValueError):
    pass


class NumericDomainError(CapaxError, ArithmeticError):
    pass


class InvalidOrderError(CapaxError, ValueError):
    pass


class PreconditionError(CapaxError, ValueError):
    pass


class NonLocalEvidenceError(CapaxError, ValueError):
    def __init__(self, message, tree=None):
        super().__init__(message)
        self.tree = tree


class NonLocalQueryError(CapaxError, ValueError):
    pass


class EmptyEvidenceError(CapaxError, ValueError):
    pass


class ContradictionError(CapaxError):
    """The evidence has zero upper probability under the prior."""


class MalformedModelError(CapaxError, ValueError):
    pass


class InconsistentPairError(MalformedModelError):
    """The m-side and q-side encodings are not duals of one joint."""

    def __init__(self, message, max_error=None):
        super().__init__(message)
        self.max_error = max_error


class SchemaError(CapaxError, ValueError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class ExpressionError(CapaxError, ValueError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position
