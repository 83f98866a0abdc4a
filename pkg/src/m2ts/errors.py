"""Exception hierarchy shared across the package.

Each class carries the CLI exit code used when it escapes a subcommand.
"""


class M2TSError(Exception):
    exit_code = 1


class DimensionError(M2TSError, ValueError):
    exit_code = 4


class DegenerateMaskError(M2TSError, ValueError):
    exit_code = 7


class EmptyLossError(M2TSError, ValueError):
    exit_code = 5


class NumericInstabilityError(M2TSError, FloatingPointError):
    exit_code = 7


class ConfigError(M2TSError, ValueError):
    exit_code = 4


class StructureError(M2TSError, ValueError):
    exit_code = 5


class MiniSyntaxError(M2TSError, SyntaxError):
    exit_code = 5

    def __init__(self, message, line, column):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class DataFormatError(M2TSError, ValueError):
    exit_code = 5

    def __init__(self, message, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line


class CheckpointError(M2TSError, IOError):
    exit_code = 6


class TrainingDiverged(NumericInstabilityError):
    """Raised when the loss goes non-finite; carries the last good checkpoint."""

    def __init__(self, message, checkpoint=None, history=None):
        super().__init__(message)
        self.checkpoint = checkpoint
        self.history = history or []


class InputTypeError(M2TSError, TypeError):
    """An estimator or CLI input has the wrong Python type."""
    exit_code = 5
