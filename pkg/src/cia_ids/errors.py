"""Exception hierarchy shared across the package."""


class CiaError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(CiaError, ValueError):
    pass


class MalformedStreamError(CiaError, ValueError):
    def __init__(self, message, index):
        super().__init__(f"{message} (fragment index {index})")
        self.index = index


class UnknownDestinationError(CiaError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown destination"


class CaptureParseError(CiaError, ValueError):
    def __init__(self, message, line, path=None):
        where = f"{path}:{line}" if path is not None else f"line {line}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.path = path


class CaptureValidationError(CiaError, ValueError):
    pass


class InsufficientDataError(CiaError, ValueError):
    def __init__(self, required, actual):
        super().__init__(f"need at least {required} packets, got {actual}")
        self.required = required
        self.actual = actual


class DegenerateScaleError(CiaError, ValueError):
    pass


class NumericError(CiaError, ArithmeticError):
    pass


class ShapeError(CiaError, ValueError):
    pass


class TrainingDivergedError(CiaError, RuntimeError):
    def __init__(self, epoch):
        super().__init__(f"loss became non-finite in epoch {epoch}")
        self.epoch = epoch


class ModelFormatError(CiaError, ValueError):
    pass


class ConfigError(CiaError, ValueError):
    pass


class ExperimentError(CiaError, RuntimeError):
    def __init__(self, window, cause):
        super().__init__(f"window size {window}: {type(cause).__name__}: {cause}")
        self.window = window
