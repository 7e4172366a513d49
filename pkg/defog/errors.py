"""Exception types raised by the defog toolkit."""
from __future__ import annotations


class DefogError(Exception):
    """Base class for all toolkit errors."""


class ImageFormatError(DefogError, ValueError):
    """The raster file is not a supported PNG or binary PPM."""


class DimensionError(DefogError, ValueError):
    """Image is too small for the stencils or shapes do not agree."""


class ParameterError(DefogError, ValueError):
    """A numeric parameter is outside its valid range."""


class PlanError(DefogError, ValueError):
    """An experiment plan is incomplete or inconsistent."""


class DivergenceError(DefogError, RuntimeError):
    """The explicit scheme produced a non-finite iterate."""

    def __init__(self, iteration: int, message: str | None = None) -> None:
        self.iteration = iteration
        super().__init__(message or f"Non-finite values in iterate {iteration}")
