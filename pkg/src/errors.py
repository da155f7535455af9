# src/errors.py
from typing import Any, Dict

from .constants import EXIT_DATA, EXIT_NUMERIC, EXIT_USAGE


class TrajkitError(Exception):
    """
    Base error carrying a stable exit code and a structured context dict,
    so the CLI can report `detail` and scripts can branch on `exit_code`.
    """
    exit_code: int = 1

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context: Dict[str, Any] = context

    def __str__(self) -> str:
        if not self.context:
            return self.detail
        extras = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{self.detail} ({extras})"


class ConfigurationError(TrajkitError):
    exit_code = EXIT_USAGE


class ShapeError(TrajkitError):
    exit_code = EXIT_DATA

    def __init__(self, op: str, *shapes, detail: str = "shape mismatch"):
        super().__init__(f"{op}: {detail}", op=op, shapes=[tuple(s) for s in shapes])
        self.op = op
        self.shapes = [tuple(s) for s in shapes]


class NumericFaultError(TrajkitError):
    exit_code = EXIT_NUMERIC


class BackwardError(TrajkitError):
    pass


class FormatError(TrajkitError):
    exit_code = EXIT_DATA


class VersionError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


class ChecksumError(FormatError):
    pass


class DatasetError(TrajkitError):
    exit_code = EXIT_DATA


class IncompatibleModelsError(TrajkitError):
    exit_code = EXIT_DATA
