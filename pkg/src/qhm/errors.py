"""Exception hierarchy shared by all qhm modules."""


class QHMError(Exception):
    """Base class for every error raised by the library."""


class PreconditionError(QHMError):
    """A module-level precondition was violated."""


class ConfigError(QHMError):
    """Malformed run configuration."""


class MissingWindow(PreconditionError):
    pass


class WindowOverflow(PreconditionError):
    pass


class SupportViolation(PreconditionError):
    pass


class MarginViolation(PreconditionError):
    pass


class DegreeMismatch(PreconditionError):
    pass


class KappaViolation(PreconditionError):
    pass


class NumericalError(QHMError):
    """Numerical failure carrying block / operation provenance."""


class EigenFailure(NumericalError):
    def __init__(self, block, cause):
        super().__init__(f"eigensolve failed on block {block}: {cause}")
        self.block = block


class SingularBase(NumericalError):
    pass


class UnresolvedCrossing(NumericalError):
    pass
