"""Pixel containers, raster codecs and the discrete operators shared by all modules.

Images are stored channel-planar as read-only ``float64`` arrays of shape
``(C, H, W)``. All stencils use replicate (clamp-to-edge) boundaries and unit
grid spacing.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, TypeVar

import cv2
import numpy as np
from scipy import ndimage

from .errors import DimensionError, ImageFormatError, ParameterError

logger = logging.getLogger(__name__)

MIN_SIDE = 3
PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
PPM_MAGIC = b"P6"

FieldT = TypeVar("FieldT", bound="PlanarField")


@dataclass(frozen=True, eq=False)
class PlanarField:
    """Channel-planar real array without a range constraint.

    Used for signed quantities such as gradients, Laplacians and diffusion
    coefficients. ``PlanarImage`` adds the [0, 1] intensity invariant.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        array = np.array(self.data, dtype=np.float64)
        if array.ndim == 2:
            array = array[np.newaxis]
        if array.ndim != 3:
            raise DimensionError(f"Expected a (C, H, W) array, got shape {array.shape}")
        channels, height, width = array.shape
        if channels not in (1, 3):
            raise DimensionError(f"Only 1 or 3 channels are supported, got {channels}")
        if height < MIN_SIDE or width < MIN_SIDE:
            raise DimensionError(
                f"Image must be at least {MIN_SIDE}x{MIN_SIDE}, got {height}x{width}"
            )
        array.setflags(write=False)
        object.__setattr__(self, "data", array)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    @classmethod
    def from_hwc(cls: type[FieldT], array: np.ndarray) -> FieldT:
        array = np.asarray(array, dtype=np.float64)
        if array.ndim == 2:
            return cls(array)
        return cls(np.moveaxis(array, -1, 0))

    def to_hwc(self) -> np.ndarray:
        return np.moveaxis(self.data, 0, -1).copy()


@dataclass(frozen=True, eq=False)
class PlanarImage(PlanarField):
    """Intensity image with every sample in [0, 1]."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if not np.all(np.isfinite(self.data)):
            raise ParameterError("Image contains non-finite values")
        if self.data.min() < 0.0 or self.data.max() > 1.0:
            raise ParameterError(
                "Image values must lie in [0, 1]; use PlanarImage.clamped() to clip"
            )

    @classmethod
    def clamped(cls, data: np.ndarray) -> "PlanarImage":
        return cls(np.clip(np.asarray(data, dtype=np.float64), 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class Kernel2D:
    """Square convolution kernel of side ``2 * radius + 1``."""

    radius: int
    weights: np.ndarray

    def __post_init__(self) -> None:
        if self.radius < 0:
            raise ParameterError("Kernel radius must be non-negative")
        weights = np.array(self.weights, dtype=np.float64)
        side = 2 * self.radius + 1
        if weights.shape != (side, side):
            raise DimensionError(
                f"Kernel of radius {self.radius} needs {side}x{side} weights, got {weights.shape}"
            )
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def is_smoothing(self) -> bool:
        """Non-negative weights summing to one."""
        return bool(np.all(self.weights >= 0.0) and abs(self.weights.sum() - 1.0) <= 1e-12)

    @classmethod
    def identity(cls) -> "Kernel2D":
        return cls(0, np.ones((1, 1)))

    @classmethod
    def box(cls, radius: int) -> "Kernel2D":
        side = 2 * radius + 1
        return cls(radius, np.full((side, side), 1.0 / (side * side)))


# --------------------------------------------------------------------------- codecs


def _decode(raw: bytes, path: Path) -> np.ndarray:
    if not (raw.startswith(PNG_SIGNATURE) or raw.startswith(PPM_MAGIC)):
        raise ImageFormatError(f"{path.name}: only PNG and binary PPM (P6) are supported")
    # imdecode instead of imread keeps non-ASCII Windows paths working
    decoded = cv2.imdecode(np.frombuffer(raw, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if decoded is None:
        raise ImageFormatError(f"{path.name}: file could not be decoded")
    return decoded


def load_image(path: Path | str) -> PlanarImage:
    """Read a PNG (8/16-bit) or P6 PPM file as a 3-channel image in [0, 1]."""

    path = Path(path)
    raw = path.read_bytes()
    decoded = _decode(raw, path)

    if decoded.dtype == np.uint8:
        scale = 255.0
    elif decoded.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ImageFormatError(f"{path.name}: unsupported sample type {decoded.dtype}")

    samples = decoded.astype(np.float64) / scale
    if samples.ndim == 2:
        samples = np.repeat(samples[:, :, np.newaxis], 3, axis=2)
    elif samples.shape[2] == 4:
        samples = samples[:, :, 2::-1]
    else:
        samples = samples[:, :, ::-1]  # BGR -> RGB

    logger.debug("Loaded %s (%dx%d, %s)", path, samples.shape[0], samples.shape[1], decoded.dtype)
    return PlanarImage.from_hwc(samples)


def quantize(img: PlanarField) -> np.ndarray:
    """8-bit samples, rounding half away from zero."""
    clipped = np.clip(img.data, 0.0, 1.0)
    return np.floor(clipped * 255.0 + 0.5).astype(np.uint8)


def save_image(img: PlanarField, path: Path | str) -> None:
    """Write an 8-bit PNG."""

    path = Path(path)
    if path.suffix.lower() != ".png":
        raise ImageFormatError(f"{path.name}: only PNG output is supported")

    samples = np.moveaxis(quantize(img), 0, -1)
    if samples.shape[2] == 1:
        samples = samples[:, :, 0]
    else:
        samples = np.ascontiguousarray(samples[:, :, ::-1])

    ok, buffer = cv2.imencode(".png", samples)
    if not ok:
        raise OSError(f"Could not encode {path}")
    path.write_bytes(buffer.tobytes())
    logger.debug("Saved %s", path)


# --------------------------------------------------------------------------- operators


def to_gray(img: PlanarImage) -> PlanarImage:
    """Unweighted channel mean; 1-channel input is returned unchanged."""

    if img.channels == 1:
        return img
    return PlanarImage.clamped(img.data.sum(axis=0, keepdims=True) / 3.0)


def gaussian_kernel(sigma: float) -> Kernel2D:
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    y, x = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    weights = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    return Kernel2D(radius, weights / weights.sum())


def convolve_planes(planes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Per-channel 2-D convolution of a (C, H, W) array with replicate boundaries."""
    return np.stack(
        [ndimage.convolve(plane, weights, mode="nearest") for plane in planes]
    )


def convolve(img: FieldT, kernel: Kernel2D) -> PlanarField:
    """Convolve every channel with ``kernel``.

    A ``PlanarImage`` filtered with a smoothing kernel stays a ``PlanarImage``;
    anything else comes back as a ``PlanarField``.
    """

    result = convolve_planes(img.data, kernel.weights)
    if isinstance(img, PlanarImage) and kernel.is_smoothing:
        return PlanarImage.clamped(result)
    return PlanarField(result)


def _pad_edges(planes: np.ndarray) -> np.ndarray:
    return np.pad(planes, ((0, 0), (1, 1), (1, 1)), mode="edge")


def gradient_planes(planes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Central differences along rows (x) and columns (y)."""
    padded = _pad_edges(planes)
    grad_x = (padded[:, 2:, 1:-1] - padded[:, :-2, 1:-1]) / 2.0
    grad_y = (padded[:, 1:-1, 2:] - padded[:, 1:-1, :-2]) / 2.0
    return grad_x, grad_y


def laplacian_planes(planes: np.ndarray) -> np.ndarray:
    """Five-point Laplacian of a (C, H, W) array.

    Summed as neighbour differences so a constant field gives exactly zero.
    """
    padded = _pad_edges(planes)
    return (
        (padded[:, 2:, 1:-1] - planes)
        + (padded[:, :-2, 1:-1] - planes)
        + (padded[:, 1:-1, 2:] - planes)
        + (padded[:, 1:-1, :-2] - planes)
    )


def gradient(img: PlanarField) -> Tuple[PlanarField, PlanarField]:
    grad_x, grad_y = gradient_planes(img.data)
    return PlanarField(grad_x), PlanarField(grad_y)


def laplacian(img: PlanarField) -> PlanarField:
    return PlanarField(laplacian_planes(img.data))
