"""Full-reference and no-reference quality measures for defogged images.

Entropy, AG, CRI and SSIM work on the gray-mean plane. The FADE value is a
deterministic surrogate ("fade-s1"): the learned weights of the published
evaluator are not available, so only orderings are meaningful.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Tuple

import numpy as np
from skimage.metrics import structural_similarity

from .errors import DimensionError
from .haze_model import dark_channel
from .image_core import PlanarImage, gradient_planes, to_gray

FADE_VERSION = "fade-s1"
FADE_PATCH_RADIUS = 7
SSIM_SIGMA = 1.5
SSIM_WINDOW = 11
CRI_UNDEFINED = 0.0


@dataclass(frozen=True)
class MetricReport:
    fade: float
    cri: float
    entropy: float
    ag: float
    mse: float | None = None
    ssim: float | None = None
    psnr: float | None = None
    flags: Tuple[str, ...] = ()

    def as_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["flags"] = list(self.flags)
        if data["psnr"] is not None and math.isinf(data["psnr"]):
            data["psnr"] = None
        return data


def _check_shapes(ref: PlanarImage, test: PlanarImage) -> None:
    if ref.shape != test.shape:
        raise DimensionError(f"Shape mismatch: {ref.shape} vs {test.shape}")


def mse(ref: PlanarImage, test: PlanarImage) -> float:
    _check_shapes(ref, test)
    return float(np.mean((ref.data - test.data) ** 2))


def psnr(ref: PlanarImage, test: PlanarImage) -> float:
    """Peak signal-to-noise ratio in dB for unit peak; ``inf`` for identical images."""
    error = mse(ref, test)
    if error == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / error)


def _ssim_window(height: int, width: int) -> int:
    side = min(SSIM_WINDOW, height, width)
    return side if side % 2 == 1 else side - 1


def ssim(ref: PlanarImage, test: PlanarImage) -> float:
    """Mean SSIM with an 11x11 Gaussian window (sigma 1.5), C1=1e-4, C2=9e-4."""

    _check_shapes(ref, test)
    ref_plane = to_gray(ref).data[0]
    test_plane = to_gray(test).data[0]
    return float(
        structural_similarity(
            ref_plane,
            test_plane,
            win_size=_ssim_window(*ref_plane.shape),
            gaussian_weights=True,
            sigma=SSIM_SIGMA,
            use_sample_covariance=False,
            data_range=1.0,
            K1=0.01,
            K2=0.03,
        )
    )


def ag(img: PlanarImage) -> float:
    """Average gradient magnitude of the gray plane."""
    grad_x, grad_y = gradient_planes(to_gray(img).data)
    return float(np.mean(np.sqrt(grad_x**2 + grad_y**2)))


def entropy(img: PlanarImage) -> float:
    """Shannon entropy in bits of the 256-bin gray histogram."""
    gray = to_gray(img).data.ravel()
    bins = np.clip(np.floor(gray * 255.0), 0, 255).astype(np.int64)
    counts = np.bincount(bins, minlength=256)
    probabilities = counts[counts > 0] / gray.size
    return float(-np.sum(probabilities * np.log2(probabilities))) + 0.0


def cri(foggy: PlanarImage, restored: PlanarImage) -> float:
    """Ratio of restored to input gray dynamic range; ``CRI_UNDEFINED`` for flat input."""
    foggy_plane = to_gray(foggy).data
    restored_plane = to_gray(restored).data
    input_range = float(foggy_plane.max() - foggy_plane.min())
    if input_range <= 0.0:
        return CRI_UNDEFINED
    return float(restored_plane.max() - restored_plane.min()) / input_range


def fade_surrogate(img: PlanarImage) -> float:
    """Fog density proxy: bright dark channel over weak gradients and contrast.

    ``100 * mean(dark) / (AG + std(gray) + 1e-3)``; higher means foggier.
    """
    dark = dark_channel(img, FADE_PATCH_RADIUS)
    contrast = float(np.std(to_gray(img).data))
    return 100.0 * float(np.mean(dark.data)) / (ag(img) + contrast + 1e-3)


def evaluate(
    restored: PlanarImage,
    foggy: PlanarImage,
    reference: PlanarImage | None = None,
) -> MetricReport:
    """All no-reference measures, plus MSE/SSIM/PSNR when ``reference`` is given."""

    flags: list[str] = []
    contrast_index = cri(foggy, restored)
    gray = to_gray(foggy).data
    if gray.max() - gray.min() <= 0.0:
        flags.append("cri_undefined")

    full_reference: Dict[str, float] = {}
    if reference is not None:
        full_reference = {
            "mse": mse(reference, restored),
            "ssim": ssim(reference, restored),
            "psnr": psnr(reference, restored),
        }

    return MetricReport(
        fade=fade_surrogate(restored),
        cri=contrast_index,
        entropy=entropy(restored),
        ag=ag(restored),
        flags=tuple(flags),
        **full_reference,
    )
