"""Exception types shared across the toolkit."""


class Error(ValueError):
    """Base class for every toolkit error."""


class InvalidModulusError(Error):
    """The modulus is out of range or fails a parity/primality requirement."""


class InvalidArgumentError(Error):
    """An argument is structurally invalid (wrong range, wrong shape, ...)."""


class InvalidLambdaError(Error):
    """The target value lambda is outside the admissible set for the equation."""


class InvalidFractionError(Error):
    """A fraction a/q is not reduced or not in (0, 1)."""


class InvalidParamsError(Error):
    """An experiment configuration is inconsistent or incomplete."""


class TooLargeError(Error):
    """The requested object exceeds the configured size cap."""


class StructureError(Error):
    """A structural hypothesis (e.g. a direct-sum decomposition) fails."""


class MappingError(Error):
    """A group action mapped an index label outside the index set."""
