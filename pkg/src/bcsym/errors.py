"""Exception hierarchy shared across the package."""


class BcsymError(Exception):
    """Base class for all package errors."""


class DataError(BcsymError):
    """Invalid data, formula, or model specification (user-fixable)."""


class FormulaSyntaxError(DataError):
    """Formula string could not be parsed; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class RankDeficiencyError(DataError):
    """A design matrix is rank deficient; names the offending columns."""

    def __init__(self, part: str, columns):
        self.part = part
        self.columns = list(columns)
        cols = ", ".join(self.columns)
        super().__init__(f"{part} design matrix is rank deficient (collinear columns: {cols})")


class ConvergenceError(BcsymError):
    """An iterative fit failed to reach a stationary point."""


class SeparationError(ConvergenceError):
    """Quasi-complete separation detected in the binary component."""
