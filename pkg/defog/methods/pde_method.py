"""Restoration with the fourth-order telegraph PDE."""
from __future__ import annotations

from ..config import SolverConfig
from ..image_core import PlanarImage
from ..pde_solver import solve
from .base import DefogMethod, Restoration


class TelegraphPDEMethod(DefogMethod):
    def __init__(self, progress: bool = False) -> None:
        super().__init__(name="proposed")
        self.progress = progress

    def restore(self, foggy: PlanarImage, cfg: SolverConfig) -> Restoration:  # type: ignore[override]
        restored, state, estimate = solve(foggy, cfg, progress=self.progress)
        return Restoration(method=self.name, image=restored, state=state, estimate=estimate)
