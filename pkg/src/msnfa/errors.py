"""Exception types raised across the package."""


class MSNFAError(Exception):
    """Base class for all package errors."""


class NumericalError(MSNFAError):
    """A numerical operation broke down (fit-level failure)."""


class DegenerateDispersion(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class NumericalBreakdown(NumericalError):
    pass


class EmptyComponent(NumericalError):
    pass


class SingularMoment(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class TinyCluster(NumericalError):
    pass


class AllStartsFailed(NumericalError):
    def __init__(self, failures):
        self.failures = list(failures)
        lines = [f"start {i}: {msg}" for i, msg in self.failures]
        super().__init__("all starts failed:\n" + "\n".join(lines))


class DataError(MSNFAError, ValueError):
    """Problems with user-supplied data or files."""


class ParseError(DataError):
    def __init__(self, row, column, token):
        self.row, self.column, self.token = row, column, token
        super().__init__(f"row {row}, column {column!r}: cannot parse {token!r} as a number")


class MissingColumn(DataError):
    pass


class ConstantColumn(DataError):
    pass


class SchemaError(DataError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class InvariantViolation(DataError):
    pass
