class AnwError(Exception):
    """Base class for every error raised by anwfit."""


class InvalidConfigError(AnwError, ValueError):
    pass


class ZeroMassError(AnwError, ValueError):
    """All kernel weights vanish at an evaluation point: the bandwidth is too small for the design."""

    def __init__(self, x: float, fold: int | None = None):
        self.x = float(x)
        self.fold = fold
        where = f"x={self.x:.6g}"
        if fold is not None:
            where += f" (validation fold {fold})"
        super().__init__(f"zero kernel mass at {where}")


class NotAConstraintError(AnwError, ValueError):
    def __init__(self, j: int):
        self.j = j
        super().__init__(f"index {j} is not in the constraint set")


class DegenerateResponseError(AnwError, ValueError):
    pass


class LengthMismatchError(AnwError, ValueError):
    pass


class EmptyConstraintsError(AnwError, ValueError):
    pass


class NonUniformGridError(AnwError, ValueError):
    pass


class TooFewPointsError(AnwError, ValueError):
    pass


class DegenerateTrackError(AnwError, ValueError):
    pass


class BadPresetError(AnwError, ValueError):
    pass


class InfeasibleGridError(AnwError, ValueError):
    pass


class IngestError(AnwError, ValueError):
    pass


class ParseError(IngestError):
    def __init__(self, line: int, detail: str):
        self.line = line
        super().__init__(f"line {line}: {detail}")


class NonFiniteValueError(IngestError):
    def __init__(self, line: int, column: str):
        self.line = line
        self.column = column
        super().__init__(f"line {line}: non-finite value in column {column!r}")


class NoRowsError(IngestError):
    pass


class EmitError(AnwError):
    """Writing run artefacts failed; the underlying OSError is chained."""
