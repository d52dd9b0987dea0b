"""Exception hierarchy for trackstab.

Every failure the library can signal derives from :class:`TrackStabError`
so callers (and the CLI) can separate contract violations from ordinary
Python bugs.  Input-contract problems map to CLI exit code 2, numeric
failures (divergence, non-finite fields) to exit code 3.
"""

from __future__ import annotations


class TrackStabError(Exception):
    """Base class for all trackstab errors."""


class InputContractError(TrackStabError):
    """An input violated a documented precondition (CLI exit code 2)."""


class NumericError(TrackStabError):
    """A computation failed numerically (CLI exit code 3)."""


class DimensionMismatchError(InputContractError):
    """Arrays or frames with incompatible shapes were combined."""


class InvalidParameterError(InputContractError):
    """A scalar parameter was out of its documented range."""


class SchemaError(InputContractError):
    """A serialized file (tracks, motion spec, config) violated its schema."""


class InsufficientPointsError(InputContractError):
    """Too few visible points to reconstruct a field."""


class GridLayoutError(InputContractError):
    """Grid-based reconstruction was requested for non-grid query points."""


class ConstantImageError(InputContractError):
    """A similarity measure that needs intensity variance got a constant image."""


class NonFiniteFieldError(NumericError):
    """A displacement or velocity field contained NaN or infinity."""


class DivergenceError(NumericError):
    """Registration energy exceeded 10x its initial value.

    Attributes:
        iteration: 1-based iteration at which divergence was detected.
    """

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration
