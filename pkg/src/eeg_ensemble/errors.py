"""Exception hierarchy shared across the package."""


class EEGEnsembleError(Exception):
    """Base class for all package errors."""


class InvalidSignal(EEGEnsembleError, ValueError):
    pass


class NonRealResult(EEGEnsembleError, ValueError):
    pass


class DegenerateKnots(EEGEnsembleError, ValueError):
    pass


class InsufficientKnots(EEGEnsembleError, ValueError):
    pass


class SignalTooShort(EEGEnsembleError, ValueError):
    pass


class TooManyModes(EEGEnsembleError, ValueError):
    pass


class ShapeError(EEGEnsembleError, ValueError):
    pass


class BatchTooSmall(EEGEnsembleError, ValueError):
    pass


class StaleState(EEGEnsembleError, RuntimeError):
    pass


class NonFiniteGradient(EEGEnsembleError, FloatingPointError):
    pass


class BandOutOfRange(EEGEnsembleError, ValueError):
    pass


class SubjectTooSparse(EEGEnsembleError, ValueError):
    pass


class NotEnoughSubjects(EEGEnsembleError, ValueError):
    pass


class FormatError(EEGEnsembleError, ValueError):
    """Malformed on-disk container; ``line`` points at the offending line when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UndefinedTest(EEGEnsembleError, ValueError):
    pass


class ClampWarning(UserWarning):
    """Requested component count exceeded what the data/method supports."""
