"""
Exception hierarchy shared by every layer of the pipeline.

`main.py` turns any `GenreFuseError` into a printed message and a nonzero exit status.
"""
from typing import List, Sequence


class GenreFuseError(Exception):
    """Base class for every error the pipeline raises on purpose."""


class DimensionError(GenreFuseError):
    """Tensor shapes are incompatible for the requested operation."""


class NumericError(GenreFuseError):
    """An operation produced (or received) a NaN or an infinity."""


class LabelError(GenreFuseError):
    """A class index or token id is outside its valid range."""


class ContractError(GenreFuseError):
    """A documented precondition of an operation was violated."""


class ClassificationError(GenreFuseError):
    """A raw genre string could not be mapped to a canonical genre."""

    def __init__(self, message: str, unknown: Sequence[str] = ()):
        super().__init__(message)
        self.unknown = list(unknown)


class ImageFormatError(GenreFuseError):
    """Image bytes could not be decoded."""


class CompatibilityError(GenreFuseError):
    """A checkpoint does not match the prepared data it is used with."""


class UsageError(GenreFuseError):
    """The command line asks for something the selected checkpoint cannot do."""


class ManifestError(GenreFuseError):
    """One or more manifest rows failed validation. Carries every problem, not just the first."""

    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        listing = "\n".join(f"  - {p}" for p in self.problems)
        super().__init__(f"{len(self.problems)} manifest problem(s):\n{listing}")
