"""Solver configuration and INI file loading."""
from __future__ import annotations

import configparser
import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping

from .errors import ParameterError

logger = logging.getLogger(__name__)

# INI section -> SolverConfig fields
SECTIONS: Dict[str, tuple[str, ...]] = {
    "prior": ("omega", "patch_radius", "airlight_fraction", "refine_sigma", "t_floor"),
    "diffusion": ("lambda_damp", "lambda_fid", "k", "alpha", "xi", "v"),
    "time": ("tau", "toll", "max_iters", "eps_rel"),
}


@dataclass(frozen=True)
class SolverConfig:
    """Dark channel prior and telegraph PDE parameters.

    The defaults reproduce the published settings (tau=0.05, xi=2, lambda=1.5,
    k=2, omega=0.95, tolerance 1e-4); the prior parameters not given there use
    the usual dark channel choices.
    """

    omega: float = 0.95
    patch_radius: int = 7
    airlight_fraction: float = 0.001
    refine_sigma: float = 8.0
    t_floor: float = 0.1
    lambda_damp: float = 1.5
    lambda_fid: float = 1.5
    k: float = 2.0
    alpha: float = 2.0
    xi: float = 2.0
    v: float = 1.0
    tau: float = 0.05
    toll: float = 1e-4
    max_iters: int = 500
    eps_rel: float = 1e-12

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        checks = [
            (0.0 < self.omega < 1.0, "omega must lie in (0, 1)"),
            (self.patch_radius >= 1, "patch_radius must be a positive integer"),
            (0.0 < self.airlight_fraction <= 1.0, "airlight_fraction must lie in (0, 1]"),
            (self.refine_sigma > 0.0, "refine_sigma must be positive"),
            (0.0 < self.t_floor < 1.0, "t_floor must lie in (0, 1)"),
            (self.lambda_damp >= 0.0, "lambda_damp must be non-negative"),
            (self.lambda_fid >= 0.0, "lambda_fid must be non-negative"),
            (self.k > 0.0, "k must be positive"),
            (self.alpha > 0.0, "alpha must be positive"),
            (self.xi > 0.0, "xi must be positive"),
            (self.v > 0.0, "v must be positive"),
            (self.tau > 0.0, "tau must be positive"),
            (self.toll > 0.0, "toll must be positive"),
            (self.max_iters >= 1, "max_iters must be at least 1"),
            (self.eps_rel > 0.0, "eps_rel must be positive"),
        ]
        for ok, message in checks:
            if not ok:
                raise ParameterError(message)

    def replace(self, **overrides: Any) -> "SolverConfig":
        """Copy with the given fields changed; ``None`` values are ignored."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        unknown = set(changes) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ParameterError(f"Unknown solver parameters: {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def _coerce(name: str, raw: str) -> Any:
    field_types = {f.name: f.type for f in dataclasses.fields(SolverConfig)}
    try:
        if field_types[name] in ("int", int):
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ParameterError(f"{name}: cannot parse {raw!r}") from exc


def config_from_parser(parser: configparser.ConfigParser) -> SolverConfig:
    values: Dict[str, Any] = {}
    for section, names in SECTIONS.items():
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            if key not in names:
                raise ParameterError(f"Unknown key [{section}] {key}")
            values[key] = _coerce(key, raw)
    return SolverConfig(**values)


def read_ini(path: Path | str) -> configparser.ConfigParser:
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    with path.open(encoding="utf-8") as handle:
        parser.read_file(handle)
    return parser


def load_config(path: Path | str | None = None, overrides: Mapping[str, Any] | None = None) -> SolverConfig:
    """Solver settings from an INI file (or defaults) with optional overrides."""

    config = config_from_parser(read_ini(path)) if path else SolverConfig()
    if overrides:
        config = config.replace(**overrides)
    logger.debug("Solver config: %s", config)
    return config
