"""Atmospheric scattering model: dark channel prior estimation and fog synthesis.

A foggy observation is ``u = J * T + A * (1 - T)`` with scene radiance ``J``,
transmission ``T`` and scalar airlight ``A``. The estimator inverts this model
to produce the guidance image for the PDE solver; ``synthesize_fog`` applies it
forward to build test inputs with known ground truth.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import ndimage

from .config import SolverConfig
from .errors import DimensionError, ParameterError
from .image_core import PlanarImage, convolve, gaussian_kernel, to_gray

logger = logging.getLogger(__name__)

AIRLIGHT_MIN = 0.05
DEFAULT_FOG_AIRLIGHT = 0.9
FOG_MODES = ("homogeneous", "depth")


@dataclass(frozen=True, eq=False)
class HazeEstimate:
    dark_channel: PlanarImage
    airlight: float
    transmission: PlanarImage


@dataclass(frozen=True)
class FogSpec:
    """Synthetic fog strength; ``level`` 0.2 corresponds to 20% fog."""

    level: float
    airlight: float = DEFAULT_FOG_AIRLIGHT
    mode: str = "homogeneous"
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.level < 1.0:
            raise ParameterError(f"Fog level must lie in [0, 1), got {self.level}")
        if not 0.0 < self.airlight <= 1.0:
            raise ParameterError(f"Fog airlight must lie in (0, 1], got {self.airlight}")
        if self.mode not in FOG_MODES:
            raise ParameterError(f"Unknown fog mode {self.mode!r}")
        if self.noise < 0.0:
            raise ParameterError(f"Noise sigma must be non-negative, got {self.noise}")


def dark_channel(img: PlanarImage, patch_radius: int) -> PlanarImage:
    """Minimum over the colour channels and a (2r+1)^2 patch truncated at the borders."""

    if patch_radius < 1:
        raise ParameterError("patch_radius must be a positive integer")
    channel_min = img.data.min(axis=0)
    # replicated border samples already belong to the truncated patch
    patch_min = ndimage.minimum_filter(channel_min, size=2 * patch_radius + 1, mode="nearest")
    return PlanarImage(patch_min)


def estimate_airlight(img: PlanarImage, dark: PlanarImage, top_fraction: float) -> float:
    """Brightest gray-mean intensity among the haziest dark channel pixels."""

    if not 0.0 < top_fraction <= 1.0:
        raise ParameterError(f"top_fraction must lie in (0, 1], got {top_fraction}")
    flat_dark = dark.data.ravel()
    count = math.ceil(round(top_fraction * flat_dark.size, 9))
    # stable sort on the negated values keeps smaller row-major indices first on ties
    selected = np.argsort(-flat_dark, kind="stable")[:count]
    gray = to_gray(img).data.ravel()
    airlight = float(gray[selected].max())
    return min(max(airlight, AIRLIGHT_MIN), 1.0)


def transmission(dark: PlanarImage, A: float, omega: float) -> PlanarImage:
    if A <= 0.0:
        raise ParameterError("Airlight must be positive")
    if not 0.0 < omega < 1.0:
        raise ParameterError("omega must lie in (0, 1)")
    return PlanarImage.clamped(1.0 - omega * dark.data / A)


def refine_transmission(t_rough: PlanarImage, sigma: float) -> PlanarImage:
    """Gaussian smoothing against patch block artifacts, clamped to [0, 1]."""
    refined = convolve(t_rough, gaussian_kernel(sigma))
    return PlanarImage.clamped(refined.data)


def recover_radiance(img: PlanarImage, T: PlanarImage, A: float, t_floor: float) -> PlanarImage:
    if not 0.0 < t_floor < 1.0:
        raise ParameterError("t_floor must lie in (0, 1)")
    if T.channels != 1 or T.height != img.height or T.width != img.width:
        raise DimensionError("Transmission must be a single plane matching the image")
    floored = np.maximum(T.data, t_floor)
    return PlanarImage.clamped((img.data - A) / floored + A)


def fog_transmission(spec: FogSpec, height: int, width: int) -> PlanarImage:
    """The ground-truth transmission used by ``synthesize_fog``."""

    if spec.mode == "homogeneous":
        return PlanarImage(np.full((1, height, width), 1.0 - spec.level))
    base = 1.0 - spec.level
    rows = np.linspace(base * base, base, height)
    return PlanarImage(np.broadcast_to(rows[np.newaxis, :, np.newaxis], (1, height, width)))


def synthesize_fog_depth(clean: PlanarImage, spec: FogSpec) -> PlanarImage:
    """Fog that thickens towards the top row, like a receding ground plane."""
    T = fog_transmission(FogSpec(spec.level, spec.airlight, "depth"), clean.height, clean.width)
    return PlanarImage.clamped(clean.data * T.data + spec.airlight * (1.0 - T.data))


def add_sensor_noise(img: PlanarImage, sigma: float, seed: int = 0) -> PlanarImage:
    """Seeded zero-mean Gaussian noise per sample, clamped to [0, 1]."""
    rng = np.random.default_rng(seed)
    return PlanarImage.clamped(img.data + rng.normal(0.0, sigma, size=img.shape))


def synthesize_fog(clean: PlanarImage, spec: FogSpec) -> PlanarImage:
    if spec.mode == "depth":
        foggy = synthesize_fog_depth(clean, spec)
    else:
        foggy = PlanarImage.clamped(clean.data * (1.0 - spec.level) + spec.airlight * spec.level)
    if spec.noise > 0.0:
        foggy = add_sensor_noise(foggy, spec.noise, spec.seed)
    return foggy


def estimate(img: PlanarImage, cfg: SolverConfig) -> Tuple[HazeEstimate, PlanarImage]:
    """Run the dark channel prior chain and return the estimate with the guidance image."""

    if img.channels != 3:
        raise DimensionError("Haze estimation needs a 3-channel image")

    dark = dark_channel(img, cfg.patch_radius)
    airlight = estimate_airlight(img, dark, cfg.airlight_fraction)
    rough = transmission(dark, airlight, cfg.omega)
    refined = refine_transmission(rough, cfg.refine_sigma)
    guidance = recover_radiance(img, refined, airlight, cfg.t_floor)

    logger.info(
        "Haze estimate: A=%.4f, T in [%.3f, %.3f]",
        airlight,
        float(refined.data.min()),
        float(refined.data.max()),
    )
    return HazeEstimate(dark, airlight, refined), guidance
