"""Exception hierarchy shared by every stitchkit module."""

from pathlib import Path
from typing import Optional, Union


class StitchkitError(Exception):
    """Root of all errors raised on purpose by stitchkit."""


class ImageIOError(StitchkitError, OSError):
    """A raster file could not be read or written."""


class ImageFormatError(StitchkitError, ValueError):
    """A raster file was readable but its pixel format is not supported."""


class ArgumentError(StitchkitError, ValueError):
    """An operation was called with arguments outside its contract."""


class SynthesisError(StitchkitError):
    """No artifact could be placed on the image at all."""


class UsageError(StitchkitError):
    """The command line was used incorrectly."""


class ScoreFileError(StitchkitError, ValueError):
    """A match-score file contains a line that is not a float."""

    def __init__(
        self,
        path: Union[str, Path],
        line_number: int,
        content: str,
        reason: Optional[str] = None,
    ):
        self.path = str(path)
        self.line_number = line_number
        self.content = content
        message = f"{self.path}:{line_number}: cannot parse {content!r} as a match score"
        if reason:
            message += f" ({reason})"
        super().__init__(message)
