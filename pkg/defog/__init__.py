"""Single-image defogging with a dark channel prior guided telegraph PDE."""

from .config import SolverConfig
from .restorer import Restorer

__all__ = ["Restorer", "SolverConfig"]
