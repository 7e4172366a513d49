"""Facade for restoring foggy images with multiple methods."""
from __future__ import annotations

import logging
import time
from typing import Dict, Iterable, List

from .config import SolverConfig
from .image_core import PlanarImage
from .methods.base import DefogMethod, Restoration
from .methods.dcp_method import DarkChannelMethod
from .methods.foggy_method import FoggyBaseline
from .methods.pde_method import TelegraphPDEMethod

logger = logging.getLogger(__name__)


class Restorer:
    """Registry for multiple methods."""

    def __init__(self, progress: bool = False) -> None:
        self._methods: Dict[str, DefogMethod] = {}
        self.register(FoggyBaseline())
        self.register(DarkChannelMethod())
        self.register(TelegraphPDEMethod(progress=progress))

    def register(self, method: DefogMethod) -> None:
        self._methods[method.name] = method

    @property
    def methods(self) -> List[str]:
        return list(self._methods)

    def _validate_selection(self, methods: Iterable[str] | None) -> List[DefogMethod]:
        if methods is None:
            return list(self._methods.values())

        selected = []
        for name in methods:
            if name not in self._methods:
                raise ValueError(f"Onbekende methode: {name}")
            selected.append(self._methods[name])
        return selected

    def restore(
        self,
        foggy: PlanarImage,
        cfg: SolverConfig,
        methods: Iterable[str] | None = None,
    ) -> List[Restoration]:
        """Run the selected methods; failures are reported in ``Restoration.error``."""

        selected = self._validate_selection(methods)
        results: List[Restoration] = []
        for method in selected:
            started = time.perf_counter()
            try:
                restoration = method.restore(foggy, cfg)
            except Exception as exc:
                logger.error("Method %s failed: %s", method.name, exc)
                restoration = Restoration(method=method.name, image=None, error=str(exc))
            restoration.wall_time_ms = (time.perf_counter() - started) * 1000.0
            results.append(restoration)
        return results
