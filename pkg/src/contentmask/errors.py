"""Exception types raised across the package."""


class ContentMaskError(Exception):
    """Base class for all package errors."""


class ContractError(ContentMaskError, ValueError):
    """An operation was called with arguments violating its preconditions."""


class TextGridParseError(ContentMaskError):
    """Malformed TextGrid text."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TextGridStructureError(ContentMaskError):
    """Well-formed TextGrid that lacks the expected word tier or intervals."""


class SelectionError(ContentMaskError):
    """Not enough non-silence words to place a mask."""


class WavFormatError(ContentMaskError):
    """WAV data outside the supported 16-bit PCM mono subset."""


class ConfigError(ContentMaskError):
    """Invalid experiment configuration."""
