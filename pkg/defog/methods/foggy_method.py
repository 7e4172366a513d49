"""Identity baseline: the foggy input itself."""
from __future__ import annotations

from ..config import SolverConfig
from ..image_core import PlanarImage
from .base import DefogMethod, Restoration


class FoggyBaseline(DefogMethod):
    """Report the input unchanged so metrics have a reference row."""

    def __init__(self) -> None:
        super().__init__(name="foggy")

    def restore(self, foggy: PlanarImage, cfg: SolverConfig) -> Restoration:  # type: ignore[override]
        return Restoration(method=self.name, image=foggy)
