"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operands act on different numbers of qubits, or an index is out of range."""


class ContractViolation(ValueError):
    """An input breaks a documented precondition (hermiticity, unitarity, ...)."""


class ResourceError(RuntimeError):
    """The requested simulation is too large for dense methods."""


class ParseError(ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class StalledPoolError(RuntimeError):
    """Every pool gradient vanished, so no operator can be selected."""
