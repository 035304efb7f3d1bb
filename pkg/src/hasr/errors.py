"""Exception types shared across the package."""


class HasrError(Exception):
    """Base class for all package errors."""


class NotFound(HasrError):
    pass


class UnsupportedFormat(HasrError):
    pass


class MissingWordDirectory(HasrError):
    def __init__(self, word: str):
        super().__init__(f"no directory for word {word!r}")
        self.word = word


class EmptyWordDirectory(HasrError):
    def __init__(self, word: str):
        super().__init__(f"no .wav files for word {word!r}")
        self.word = word


class ClipTooShort(HasrError):
    pass


class TooFewPoints(HasrError):
    pass


class DimensionMismatch(HasrError):
    pass


class SymbolOutOfRange(HasrError):
    pass


class ZeroProbabilitySequence(HasrError):
    """The model assigns the observed prefix probability zero."""


class NoFeasiblePath(HasrError):
    pass


class TooLarge(HasrError):
    pass


class InsufficientData(HasrError):
    def __init__(self, word: str, have: int, need: int):
        super().__init__(f"word {word!r} has {have} training clips, need >= {need}")
        self.word = word


class ConfigError(HasrError):
    pass


class ModelFormatError(HasrError):
    """Model file failed load-time validation."""


class OversizeFrame(HasrError):
    pass


class ProtocolError(HasrError):
    """Malformed or out-of-grammar wire data. `kind` names the offense."""

    UNKNOWN_TYPE = "unknown_type"
    BAD_LENGTH = "bad_length"
    INVALID_UTF8 = "invalid_utf8"
    OVERSIZE = "oversize"

    def __init__(self, kind: str, detail: str):
        super().__init__(f"{kind}: {detail}")
        self.kind = kind


class ConnectFailed(HasrError):
    pass


class BindFailed(HasrError):
    pass


class UnknownAudio(HasrError):
    """Table-mode mock transcriber has no entry for this audio."""
