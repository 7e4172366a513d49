"""Explicit solver for the fourth-order telegraph defogging PDE.

The evolution

    u_tt + lambda * u_t = -Laplace(v * g * Laplace(u)) - lambda_f * T^2 * (u - J)

is integrated with central differences in time, starting from the guidance
image ``J`` with zero initial velocity. ``g`` is recomputed every step from the
Gaussian pre-smoothed iterate.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd
from tqdm import trange

from . import haze_model
from .config import SolverConfig
from .errors import DimensionError, DivergenceError, ParameterError
from .haze_model import HazeEstimate
from .image_core import (
    PlanarField,
    PlanarImage,
    convolve_planes,
    gaussian_kernel,
    laplacian_planes,
)

logger = logging.getLogger(__name__)

GRID_SPACING = 1.0
CLAMP_WARNING_FRACTION = 0.01
TRACE_COLUMNS = ("iter", "rel_err", "g_max", "clamped_fraction")


@dataclass(frozen=True, eq=False)
class EvolutionState:
    """Two time levels of the scheme plus the per-iteration run log."""

    current: PlanarImage
    previous: PlanarImage
    iteration: int = 0
    rel_err_history: Tuple[float, ...] = ()
    g_max_history: Tuple[float, ...] = ()
    clamped_fraction_history: Tuple[float, ...] = ()
    cfl_violations: Tuple[int, ...] = ()
    warnings: Tuple[str, ...] = field(default=())
    converged: bool = False

    def __post_init__(self) -> None:
        if self.current.shape != self.previous.shape:
            raise DimensionError("current and previous iterates differ in shape")

    @classmethod
    def start(cls, initial: PlanarImage) -> "EvolutionState":
        """Zero initial velocity: u^{-1} = u^0."""
        return cls(current=initial, previous=initial)

    @property
    def final_rel_err(self) -> float | None:
        return self.rel_err_history[-1] if self.rel_err_history else None


def cfl_bound(g_max: float, h: float) -> float:
    """Largest stable time step ``h / max g``; unbounded when g vanishes."""
    if h <= 0:
        raise ParameterError("Grid spacing must be positive")
    if g_max <= 0:
        return math.inf
    return h / g_max


def _coefficient_planes(u_smooth: np.ndarray, lap_smooth: np.ndarray, k: float, alpha: float) -> np.ndarray:
    if k <= 0 or alpha <= 0:
        raise ParameterError("k and alpha must be positive")
    magnitude = np.abs(u_smooth)
    peak = magnitude.max()
    if peak == 0:
        return np.zeros_like(u_smooth)

    powered = magnitude**alpha
    intensity_factor = 2.0 * powered / (peak**alpha + powered)
    edge_factor = 1.0 / (1.0 + (np.abs(lap_smooth) / k) ** 2)
    g = intensity_factor * edge_factor

    # both factors are bounded by one
    if g.min() < 0.0 or g.max() > 1.0 + 1e-12:
        raise ArithmeticError(f"Diffusion coefficient left [0, 1]: [{g.min()}, {g.max()}]")
    return g


def diffusion_coefficient(
    u_smooth: PlanarField, lap_smooth: PlanarField, k: float, alpha: float
) -> PlanarField:
    """Edge-adaptive coefficient, small in dark areas and across strong curvature.

    The intensity factor is normalised by the maximum of ``|u_smooth|`` over all
    pixels and channels.
    """
    return PlanarField(_coefficient_planes(u_smooth.data, lap_smooth.data, k, alpha))


def step(
    state: EvolutionState,
    guidance: PlanarImage,
    T: PlanarImage,
    cfg: SolverConfig,
) -> EvolutionState:
    """Advance the scheme by one time level."""

    if guidance.shape != state.current.shape:
        raise DimensionError("Guidance image does not match the iterate")
    if T.channels != 1 or (T.height, T.width) != (guidance.height, guidance.width):
        raise DimensionError("Transmission must be a single plane matching the image")

    u = state.current.data
    u_prev = state.previous.data

    u_smooth = convolve_planes(u, gaussian_kernel(cfg.xi).weights)
    g = _coefficient_planes(u_smooth, laplacian_planes(u_smooth), cfg.k, cfg.alpha)
    flux = laplacian_planes(cfg.v * g * laplacian_planes(u))
    fidelity = cfg.lambda_fid * T.data**2 * (u - guidance.data)

    # (2 + l*tau) u - u_prev - tau^2 F over (1 + l*tau), written as an increment
    damping = 1.0 + cfg.lambda_damp * cfg.tau
    raw = u + ((u - u_prev) - cfg.tau**2 * (flux + fidelity)) / damping

    iteration = state.iteration + 1
    if not np.all(np.isfinite(raw)):
        raise DivergenceError(iteration)

    # a pixel counts once however many of its channels leave [0, 1]
    clamped_fraction = float(np.mean(np.any((raw < 0.0) | (raw > 1.0), axis=0)))
    nxt = np.clip(raw, 0.0, 1.0)
    rel_err = float(np.linalg.norm(nxt - u) / (np.linalg.norm(u) + cfg.eps_rel))
    g_max = float(g.max())

    warnings = list(state.warnings)
    cfl_violations = state.cfl_violations
    if cfg.tau > cfl_bound(g_max, GRID_SPACING):
        cfl_violations = cfl_violations + (iteration,)
        if len(cfl_violations) == 1:
            message = (
                f"CFL violation at iteration {iteration}: tau={cfg.tau:g} exceeds "
                f"h/max g={cfl_bound(g_max, GRID_SPACING):g}"
            )
            logger.warning(message)
            warnings.append(message)
    if clamped_fraction > CLAMP_WARNING_FRACTION and not any(
        message.startswith("Clamping") for message in warnings
    ):
        message = f"Clamping active on {clamped_fraction:.1%} of pixels at iteration {iteration}"
        logger.warning(message)
        warnings.append(message)

    return EvolutionState(
        current=PlanarImage(nxt),
        previous=state.current,
        iteration=iteration,
        rel_err_history=state.rel_err_history + (rel_err,),
        g_max_history=state.g_max_history + (g_max,),
        clamped_fraction_history=state.clamped_fraction_history + (clamped_fraction,),
        cfl_violations=cfl_violations,
        warnings=tuple(warnings),
    )


def evolve(
    guidance: PlanarImage,
    T: PlanarImage,
    cfg: SolverConfig,
    progress: bool = False,
) -> EvolutionState:
    """Iterate from ``guidance`` until RelErr < toll or ``max_iters`` steps."""

    state = EvolutionState.start(guidance)
    iterations = trange(cfg.max_iters, desc="PDE", leave=False) if progress else range(cfg.max_iters)
    for _ in iterations:
        state = step(state, guidance, T, cfg)
        if state.rel_err_history[-1] < cfg.toll:
            logger.info("Converged after %d iterations", state.iteration)
            return dataclasses.replace(state, converged=True)

    logger.warning(
        "No convergence within %d iterations (RelErr %.3g)", cfg.max_iters, state.final_rel_err
    )
    return state


def solve(
    foggy: PlanarImage, cfg: SolverConfig, progress: bool = False
) -> Tuple[PlanarImage, EvolutionState, HazeEstimate]:
    """Estimate haze parameters, then restore ``foggy`` with the telegraph PDE."""

    estimate, guidance = haze_model.estimate(foggy, cfg)
    state = evolve(guidance, estimate.transmission, cfg, progress=progress)
    return state.current, state, estimate


def write_trace(state: EvolutionState, path: Path | str) -> None:
    """Write one CSV line per iteration: iter,rel_err,g_max,clamped_fraction."""
    frame = pd.DataFrame(
        {
            "iter": range(1, state.iteration + 1),
            "rel_err": state.rel_err_history,
            "g_max": state.g_max_history,
            "clamped_fraction": state.clamped_fraction_history,
        },
        columns=list(TRACE_COLUMNS),
    )
    frame.to_csv(path, index=False, lineterminator="\n")
