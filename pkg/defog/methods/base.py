"""Abstract definitions for defogging methods."""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable

from ..config import SolverConfig
from ..haze_model import HazeEstimate
from ..image_core import PlanarImage
from ..pde_solver import EvolutionState


@dataclass
class Restoration:
    """Output of one method on one foggy image."""

    method: str
    image: PlanarImage | None
    state: EvolutionState | None = None
    estimate: HazeEstimate | None = None
    wall_time_ms: float = 0.0
    error: str | None = None

    @property
    def iterations(self) -> int:
        return self.state.iteration if self.state else 0

    @property
    def converged(self) -> bool:
        # single-pass methods have nothing to converge
        return self.state.converged if self.state else True

    @property
    def warnings(self) -> tuple[str, ...]:
        return self.state.warnings if self.state else ()


class DefogMethod(ABC):
    """Abstract interface that all methods must implement."""

    name: str

    def __init__(self, name: str) -> None:
        self.name = name

    @abstractmethod
    def restore(self, foggy: PlanarImage, cfg: SolverConfig) -> Restoration:
        """Return the restoration of ``foggy``."""


def summarize_restorations(restorations: Iterable[Restoration]) -> str:
    summary_lines = []
    for restoration in restorations:
        if restoration.error:
            summary_lines.append(f"{restoration.method}: error: {restoration.error}")
            continue
        line = f"{restoration.method}: {restoration.wall_time_ms:.1f} ms"
        if restoration.state is not None:
            state = restoration.state
            line += (
                f", {state.iteration} iterations, RelErr {state.final_rel_err:.3g}"
                f"{'' if state.converged else ' (not converged)'}"
            )
        summary_lines.append(line)
        summary_lines.extend(f"  warning: {message}" for message in restoration.warnings)
    return "\n".join(summary_lines)
