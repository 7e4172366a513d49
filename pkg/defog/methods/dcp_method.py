"""Classic dark channel prior restoration."""
from __future__ import annotations

from .. import haze_model
from ..config import SolverConfig
from ..image_core import PlanarImage
from .base import DefogMethod, Restoration


class DarkChannelMethod(DefogMethod):
    """Invert the scattering model with the estimated airlight and transmission.

    This is the guidance image the PDE method starts from.
    """

    def __init__(self) -> None:
        super().__init__(name="dcp")

    def restore(self, foggy: PlanarImage, cfg: SolverConfig) -> Restoration:  # type: ignore[override]
        estimate, guidance = haze_model.estimate(foggy, cfg)
        return Restoration(method=self.name, image=guidance, estimate=estimate)
