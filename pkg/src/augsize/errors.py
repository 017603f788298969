"""Exception hierarchy.

``DataError`` covers bad or insufficient input data, ``NumericalError`` covers
failures of an estimator or optimizer. The CLI maps them to exit codes 2 and 3.
"""


class AugsizeError(Exception):
    pass


class DataError(AugsizeError, ValueError):
    pass


class NumericalError(AugsizeError, ArithmeticError):
    pass


class MissingFileError(DataError, FileNotFoundError):
    def __init__(self, path):
        super().__init__(f"no such file: {path}")
        self.path = path


class EmptyInputError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, row, column, value):
        super().__init__(f"row {row}, column {column}: cannot parse {value!r} as a finite number")
        self.row = row
        self.column = column
        self.value = value


class RaggedRowError(DataError):
    def __init__(self, row, expected, found):
        super().__init__(f"row {row}: expected {expected} cells, found {found}")
        self.row = row
        self.expected = expected
        self.found = found


class UnknownColumnError(DataError):
    def __init__(self, column):
        super().__init__(f"unknown label column {column!r}")
        self.column = column


class EmptyPartitionError(DataError):
    pass


class ClassAbsentError(DataError):
    pass


class InsufficientSamplesError(DataError):
    pass


class SchemaError(DataError):
    pass


class MissingFieldError(SchemaError):
    def __init__(self, field):
        super().__init__(f"missing required field {field!r}")
        self.field = field


class InconsistentKappaError(SchemaError):
    pass


class DivergenceError(NumericalError):
    def __init__(self, epoch, detail="non-finite loss"):
        super().__init__(f"training diverged at epoch {epoch}: {detail}")
        self.epoch = epoch


class StageError(AugsizeError):
    """Wraps a failure inside a multi-stage pipeline with the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def run_stage(name, fn, *args, **kw):
    """Call ``fn`` and re-raise any failure as a :class:`StageError` named ``name``."""
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
