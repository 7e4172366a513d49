"""Procedural test scenes so experiments run without external datasets.

Clean scenes combine a saturated gradient sky, a neutral cloud and softly
shaded, strongly coloured blocks. Every block keeps one channel low, which is
what the dark channel prior expects from haze-free outdoor content; the cloud
is the only bright neutral region, so it is where the airlight gets picked.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict

import numpy as np

from .haze_model import FogSpec, synthesize_fog
from .image_core import PlanarImage, convolve, gaussian_kernel, save_image

logger = logging.getLogger(__name__)

SKY_TOP = np.array([0.04, 0.22, 0.62])
SKY_HORIZON = np.array([0.14, 0.42, 0.80])
CLOUD = 0.93
EDGE_SIGMA = 1.5
SHADE_AMPLITUDE = 0.06


def _sky(height: int, width: int) -> np.ndarray:
    weights = np.linspace(0.0, 1.0, height)[:, np.newaxis, np.newaxis]
    band = SKY_TOP * (1.0 - weights) + SKY_HORIZON * weights
    return np.broadcast_to(band, (height, width, 3)).copy()


def _block_colour(rng: np.random.Generator) -> np.ndarray:
    colour = rng.uniform(0.3, 0.85, size=3)
    colour[rng.integers(0, 3)] = rng.uniform(0.02, 0.10)
    return colour


def _blocks(rng: np.random.Generator, height: int, width: int, block: int) -> np.ndarray:
    scene = np.empty((height, width, 3))
    for top in range(0, height, block):
        for left in range(0, width, block):
            scene[top : top + block, left : left + block] = _block_colour(rng)
    return scene


def _shading(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    rows, cols = np.mgrid[0:height, 0:width]
    phase = rng.uniform(0.0, 2.0 * np.pi, size=2)
    wave = np.sin(2.0 * np.pi * rows / 23.0 + phase[0]) * np.cos(2.0 * np.pi * cols / 29.0 + phase[1])
    return 1.0 + SHADE_AMPLITUDE * wave[:, :, np.newaxis]


def _compose(rng: np.random.Generator, height: int, width: int, ground: np.ndarray) -> PlanarImage:
    sky_rows = height // 4
    scene = ground * _shading(rng, height, width)
    scene[:sky_rows] = _sky(sky_rows, width)
    left = width - sky_rows - 4
    scene[:sky_rows, left : left + sky_rows] = CLOUD
    raw = PlanarImage.from_hwc(np.clip(scene, 0.02, 0.98))
    # soft edges, like an optical point spread
    return PlanarImage.clamped(convolve(raw, gaussian_kernel(EDGE_SIGMA)).data)


def sky_blocks(seed: int = 7, height: int = 64, width: int = 64) -> PlanarImage:
    rng = np.random.default_rng(seed)
    return _compose(rng, height, width, _blocks(rng, height, width, block=16))


def stripes(seed: int = 11, height: int = 64, width: int = 64) -> PlanarImage:
    rng = np.random.default_rng(seed)
    palette = np.stack([_block_colour(rng) for _ in range(5)])
    rows, cols = np.mgrid[0:height, 0:width]
    index = ((rows + cols) // 14) % len(palette)
    return _compose(rng, height, width, palette[index])


def wide_field(seed: int = 23, height: int = 64, width: int = 96) -> PlanarImage:
    rng = np.random.default_rng(seed)
    ground = _blocks(rng, height, width, block=16)
    # darker towards the foreground
    shade = np.linspace(1.0, 0.75, height)[:, np.newaxis, np.newaxis]
    return _compose(rng, height, width, ground * shade)


def clean_scenes() -> Dict[str, PlanarImage]:
    return {
        "sky_blocks": sky_blocks(),
        "stripes": stripes(),
        "wide_field": wide_field(),
    }


def foggy_scenes() -> Dict[str, PlanarImage]:
    """Fogged scenes without a published clean counterpart."""
    return {
        "hazy_blocks": synthesize_fog(sky_blocks(seed=101), FogSpec(0.3, 0.9, "depth", noise=0.01, seed=1)),
        "hazy_stripes": synthesize_fog(stripes(seed=202), FogSpec(0.25, 0.85, noise=0.01, seed=2)),
    }


def write_corpus(directory: Path | str) -> Dict[str, Path]:
    """Save the corpus as ``clean/*.png`` and ``foggy/*.png`` under ``directory``."""

    base = Path(directory)
    written: Dict[str, Path] = {}
    for group, scenes in (("clean", clean_scenes()), ("foggy", foggy_scenes())):
        target = base / group
        target.mkdir(parents=True, exist_ok=True)
        for name, image in scenes.items():
            path = target / f"{name}.png"
            save_image(image, path)
            written[f"{group}/{name}"] = path
    logger.info("Wrote %d corpus images to %s", len(written), base)
    return written
