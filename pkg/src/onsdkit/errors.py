"""Exception hierarchy shared across the package.

The split mirrors how callers react: bad input files, a processing stage
failing on valid input, or an unusable configuration. The CLI maps each
class to its own exit code and the HTTP layer to a response status.
"""


class OnsdKitError(Exception):
    """Base class for all package-specific errors."""


class IngestionError(OnsdKitError):
    """Raised when input files are missing, malformed or inconsistent."""


class ConfigError(OnsdKitError):
    """Raised when a configuration file or parameter set is invalid."""


class StageError(OnsdKitError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str, frame_index: int | None = None):
        self.stage = stage
        self.frame_index = frame_index
        prefix = f"[{stage}]" if frame_index is None else f"[{stage} @ frame {frame_index}]"
        super().__init__(f"{prefix} {message}")
