"""Exception hierarchy shared by every certmark module."""


class CertmarkError(Exception):
    """Base class for all toolkit errors."""


class LengthMismatch(CertmarkError, ValueError):
    pass


class DomainError(CertmarkError, ValueError):
    pass


class ShapeTooSmall(CertmarkError, ValueError):
    pass


class ShapeMismatch(CertmarkError, ValueError):
    pass


class InitNotAdversarial(CertmarkError, ValueError):
    """Raised when a black-box attack is started from a non-adversarial point."""


class DecoderError(CertmarkError, RuntimeError):
    """A decoder failed while processing a given noise sample."""

    def __init__(self, message: str, sample_index: int | None = None):
        super().__init__(message)
        self.sample_index = sample_index


class ProtocolError(CertmarkError, RuntimeError):
    pass


class DecoderTimeout(CertmarkError, TimeoutError):
    pass


class ChildExit(CertmarkError, RuntimeError):
    pass


class ParseError(CertmarkError, ValueError):
    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedFormat(CertmarkError, ValueError):
    pass


class ConfigError(CertmarkError, ValueError):
    pass


class ImageFailure(CertmarkError, RuntimeError):
    """Wraps an error raised while processing one image of a corpus."""

    def __init__(self, image_id: str, cause: Exception):
        super().__init__(f"{image_id}: {type(cause).__name__}: {cause}")
        self.image_id = image_id
        self.cause = cause
