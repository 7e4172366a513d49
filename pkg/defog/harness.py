"""Batch experiments: fog sweeps with ground truth and no-reference runs."""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import pandas as pd
from openpyxl import Workbook

from .config import SolverConfig, config_from_parser, read_ini
from .errors import ParameterError, PlanError
from .haze_model import DEFAULT_FOG_AIRLIGHT, FOG_MODES, FogSpec, synthesize_fog
from .image_core import PlanarImage, load_image, save_image
from .methods.base import Restoration
from .metrics import MetricReport, evaluate
from .pde_solver import write_trace
from .restorer import Restorer

logger = logging.getLogger(__name__)

DEFAULT_FOG_LEVELS: Tuple[float, ...] = (0.1, 0.2, 0.3)
DEFAULT_METHODS: Tuple[str, ...] = ("dcp", "proposed")
PLAN_METHODS = ("dcp", "proposed")
METRIC_COLUMNS = ("mse", "ssim", "fade", "cri", "entropy", "ag")
CSV_COLUMNS = (
    ("image", "method", "fog_level") + METRIC_COLUMNS + ("iterations", "converged", "wall_time_ms")
)
PLAN_KEYS = (
    "inputs",
    "fog_levels",
    "methods",
    "output_dir",
    "emit_traces",
    "fog_airlight",
    "fog_mode",
    "fog_noise",
    "fog_seed",
    "record_timing",
    "excel",
)


@dataclass
class ExperimentPlan:
    inputs: List[Path]
    output_dir: Path
    fog_levels: List[float] = field(default_factory=lambda: list(DEFAULT_FOG_LEVELS))
    methods: List[str] = field(default_factory=lambda: list(DEFAULT_METHODS))
    config: SolverConfig = field(default_factory=SolverConfig)
    emit_traces: bool = False
    fog_airlight: float = DEFAULT_FOG_AIRLIGHT
    fog_mode: str = "homogeneous"
    fog_noise: float = 0.0
    fog_seed: int = 0
    record_timing: bool = True
    excel: bool = False

    def validate(self) -> None:
        if not self.inputs:
            raise PlanError("Plan bevat geen invoerbestanden")
        if not self.methods:
            raise PlanError("Plan bevat geen methodes")
        unknown = [name for name in self.methods if name not in PLAN_METHODS]
        if unknown:
            raise PlanError(f"Onbekende methode(s) in plan: {', '.join(unknown)}")
        bad_levels = [level for level in self.fog_levels if not 0.0 <= level < 1.0]
        if bad_levels:
            raise PlanError(f"Mistniveaus moeten in [0, 1) liggen: {bad_levels}")
        tags = [_fog_tag(level) for level in self.fog_levels]
        if len(set(tags)) != len(tags):
            raise PlanError(f"Mistniveaus vallen samen in de bestandsnamen: {self.fog_levels}")
        if self.fog_mode not in FOG_MODES:
            raise PlanError(f"Onbekende mistmodus: {self.fog_mode}")
        if not 0.0 < self.fog_airlight <= 1.0:
            raise PlanError("fog_airlight moet in (0, 1] liggen")
        if self.fog_noise < 0.0:
            raise PlanError("fog_noise mag niet negatief zijn")

    @classmethod
    def from_ini(cls, path: Path | str, output_dir: Path | str | None = None) -> "ExperimentPlan":
        """Read the ``[plan]`` section plus solver sections from one INI file.

        Relative input paths are resolved against the file's directory.
        """

        path = Path(path)
        parser = read_ini(path)
        try:
            config = config_from_parser(parser)
        except ParameterError as exc:
            raise PlanError(str(exc)) from exc

        section = parser["plan"] if parser.has_section("plan") else {}
        unknown = set(section) - set(PLAN_KEYS)
        if unknown:
            raise PlanError(f"Onbekende sleutel(s) in [plan]: {', '.join(sorted(unknown))}")

        def items(key: str) -> List[str]:
            raw = section.get(key, "")
            return [item.strip() for item in raw.replace("\n", ",").split(",") if item.strip()]

        def flag(key: str, default: bool) -> bool:
            if key not in section:
                return default
            return parser.getboolean("plan", key)

        try:
            fog_levels = [float(value) for value in items("fog_levels")] or list(DEFAULT_FOG_LEVELS)
            fog_airlight = float(section.get("fog_airlight", DEFAULT_FOG_AIRLIGHT))
            fog_noise = float(section.get("fog_noise", 0.0))
            fog_seed = int(section.get("fog_seed", 0))
            emit_traces = flag("emit_traces", False)
            record_timing = flag("record_timing", True)
            excel = flag("excel", False)
        except ValueError as exc:
            raise PlanError(f"{path.name}: {exc}") from exc

        base = path.parent
        target = Path(output_dir) if output_dir is not None else base / section.get("output_dir", "results")
        plan = cls(
            inputs=[(base / item) for item in items("inputs")],
            output_dir=target,
            fog_levels=fog_levels,
            methods=items("methods") or list(DEFAULT_METHODS),
            config=config,
            emit_traces=emit_traces,
            fog_airlight=fog_airlight,
            fog_mode=section.get("fog_mode", "homogeneous"),
            fog_noise=fog_noise,
            fog_seed=fog_seed,
            record_timing=record_timing,
            excel=excel,
        )
        plan.validate()
        return plan


@dataclass
class RunRecord:
    image_id: str
    method: str
    fog_level: float | None
    report: MetricReport | None
    iterations: int = 0
    converged: bool = True
    wall_time_ms: float = 0.0
    warnings: Tuple[str, ...] = ()
    error: str | None = None

    def as_row(self) -> Dict[str, Any]:
        metrics = {name: None for name in METRIC_COLUMNS}
        if self.report is not None:
            metrics.update({name: getattr(self.report, name) for name in METRIC_COLUMNS})
        return {
            "image": self.image_id,
            "method": self.method,
            "fog_level": self.fog_level,
            **metrics,
            "iterations": self.iterations,
            "converged": self.converged,
            "wall_time_ms": self.wall_time_ms,
        }

    def as_dict(self) -> Dict[str, Any]:
        return {
            "image": self.image_id,
            "method": self.method,
            "fog_level": self.fog_level,
            "report": self.report.as_dict() if self.report else None,
            "iterations": self.iterations,
            "converged": self.converged,
            "wall_time_ms": self.wall_time_ms,
            "warnings": list(self.warnings),
            "error": self.error,
        }


def worker_count() -> int:
    """Parallel plan entries, capped by ``DEFOG_THREADS`` (default 1)."""
    raw = os.environ.get("DEFOG_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("Ignoring invalid DEFOG_THREADS=%r", raw)
        return 1


def _unique_ids(paths: Sequence[Path]) -> List[str]:
    seen: set[str] = set()
    ids = []
    for path in paths:
        candidate = path.stem or "image"
        suffix = 1
        while candidate in seen:
            candidate = f"{path.stem}_{suffix}"
            suffix += 1
        seen.add(candidate)
        ids.append(candidate)
    return ids


def _fog_tag(level: float | None) -> str:
    """File tag for a fog level in percent: 0.2 -> fog20, 0.104 -> fog10p4."""
    if level is None:
        return "nr"
    percent = round(float(level) * 100, 6)
    if percent.is_integer():
        return f"fog{int(percent):02d}"
    return "fog" + f"{percent:g}".replace(".", "p")


def _record_from(
    plan: ExperimentPlan,
    image_id: str,
    level: float | None,
    restoration: Restoration,
    foggy: PlanarImage,
    reference: PlanarImage | None,
) -> RunRecord:
    wall_time = restoration.wall_time_ms if plan.record_timing else 0.0
    if restoration.error or restoration.image is None:
        return RunRecord(
            image_id,
            restoration.method,
            level,
            None,
            converged=False,
            wall_time_ms=wall_time,
            error=restoration.error,
        )

    report = evaluate(restoration.image, foggy, reference=reference)
    stem = f"{image_id}_{_fog_tag(level)}_{restoration.method}"
    if restoration.method != "foggy":
        restored_dir = plan.output_dir / "restored"
        restored_dir.mkdir(parents=True, exist_ok=True)
        save_image(restoration.image, restored_dir / f"{stem}.png")
    if plan.emit_traces and restoration.state is not None:
        trace_dir = plan.output_dir / "traces"
        trace_dir.mkdir(parents=True, exist_ok=True)
        write_trace(restoration.state, trace_dir / f"{stem}.csv")

    return RunRecord(
        image_id=image_id,
        method=restoration.method,
        fog_level=level,
        report=report,
        iterations=restoration.iterations,
        converged=restoration.converged,
        wall_time_ms=wall_time,
        warnings=restoration.warnings,
    )


def _failed_records(
    image_id: str, levels: Sequence[float | None], methods: Sequence[str], exc: Exception
) -> List[RunRecord]:
    logger.error("Skipping %s: %s", image_id, exc)
    return [
        RunRecord(image_id, method, level, None, converged=False, error=str(exc))
        for level in levels
        for method in methods
    ]


def _run_entries(entries: Sequence[Any], worker: Any) -> List[RunRecord]:
    threads = worker_count()
    if threads == 1:
        batches = [worker(entry) for entry in entries]
    else:
        # map keeps declaration order regardless of completion order
        with ThreadPoolExecutor(max_workers=threads) as executor:
            batches = list(executor.map(worker, entries))
    return [record for batch in batches for record in batch]


def run_reference_experiment(
    plan: ExperimentPlan, restorer: Restorer | None = None
) -> List[RunRecord]:
    """Fog every clean input at each level, restore it and score against the original."""

    plan.validate()
    restorer = restorer or Restorer()
    plan.output_dir.mkdir(parents=True, exist_ok=True)

    def run_image(entry: Tuple[str, Path]) -> List[RunRecord]:
        image_id, path = entry
        try:
            clean = load_image(path)
        except (OSError, ValueError) as exc:
            return _failed_records(image_id, plan.fog_levels, plan.methods, exc)

        records: List[RunRecord] = []
        for level in plan.fog_levels:
            spec = FogSpec(level, plan.fog_airlight, plan.fog_mode, plan.fog_noise, plan.fog_seed)
            foggy = synthesize_fog(clean, spec)
            foggy_dir = plan.output_dir / "foggy"
            foggy_dir.mkdir(parents=True, exist_ok=True)
            save_image(foggy, foggy_dir / f"{image_id}_{_fog_tag(level)}.png")
            for restoration in restorer.restore(foggy, plan.config, methods=plan.methods):
                records.append(_record_from(plan, image_id, level, restoration, foggy, clean))
        logger.info("Finished %s (%d records)", image_id, len(records))
        return records

    return _run_entries(list(zip(_unique_ids(plan.inputs), plan.inputs)), run_image)


def run_noreference_experiment(
    plan: ExperimentPlan, restorer: Restorer | None = None
) -> List[RunRecord]:
    """Restore real foggy inputs; the first row per image is the foggy baseline."""

    plan.validate()
    restorer = restorer or Restorer()
    plan.output_dir.mkdir(parents=True, exist_ok=True)
    methods = ["foggy"] + [name for name in plan.methods if name != "foggy"]

    def run_image(entry: Tuple[str, Path]) -> List[RunRecord]:
        image_id, path = entry
        try:
            foggy = load_image(path)
        except (OSError, ValueError) as exc:
            return _failed_records(image_id, [None], methods, exc)
        return [
            _record_from(plan, image_id, None, restoration, foggy, None)
            for restoration in restorer.restore(foggy, plan.config, methods=methods)
        ]

    return _run_entries(list(zip(_unique_ids(plan.inputs), plan.inputs)), run_image)


def records_frame(records: Sequence[RunRecord]) -> pd.DataFrame:
    return pd.DataFrame([record.as_row() for record in records], columns=list(CSV_COLUMNS))


def _format_cell(value: Any) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def frame_to_markdown(frame: pd.DataFrame) -> str:
    """Render a flat frame as a markdown table."""

    if frame.empty:
        raise ValueError("Lege tabel kan niet naar markdown worden omgezet")
    header = [str(column) for column in frame.columns]
    lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join(["---"] * len(header)) + " |",
    ]
    for row in frame.itertuples(index=False):
        lines.append("| " + " | ".join(_format_cell(value) for value in row) + " |")
    return "\n".join(lines)


def summarize_records(records: Sequence[RunRecord]) -> pd.DataFrame:
    """One row per image and fog level, one column per metric and method."""

    frame = records_frame([record for record in records if record.error is None])
    if frame.empty:
        return frame
    frame["fog"] = [_fog_tag(None if pd.isna(level) else level) for level in frame["fog_level"]]
    metrics = [name for name in METRIC_COLUMNS if frame[name].notna().any()]
    frame[metrics] = frame[metrics].astype(float)
    pivot = frame.pivot_table(index=["image", "fog"], columns="method", values=metrics, aggfunc="first")
    pivot.columns = [f"{metric}[{method}]" for metric, method in pivot.columns]
    return pivot.reset_index()


def _excel_value(value: Any) -> Any:
    if _format_cell(value) == "":
        return None
    return value.item() if hasattr(value, "item") else value


def _write_workbook(frame: pd.DataFrame, path: Path) -> None:
    workbook = Workbook()
    default_sheet = workbook.active
    workbook.remove(default_sheet)
    for method, rows in frame.groupby("method", sort=False):
        worksheet = workbook.create_sheet(str(method)[:31] or "result")
        worksheet.append(list(frame.columns))
        for row in rows.itertuples(index=False):
            worksheet.append([_excel_value(value) for value in row])
    workbook.save(path)


def emit_report(records: Sequence[RunRecord], directory: Path | str, excel: bool = False) -> Dict[str, Path]:
    """Write report.csv, report.json and summary.md (plus report.xlsx on request)."""

    if not records:
        raise ParameterError("Geen resultaten om te rapporteren")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    frame = records_frame(records)
    outputs = {
        "csv": directory / "report.csv",
        "json": directory / "report.json",
        "summary": directory / "summary.md",
    }
    frame.to_csv(outputs["csv"], index=False, lineterminator="\n")
    outputs["json"].write_text(
        json.dumps([record.as_dict() for record in records], ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )

    summary = summarize_records(records)
    summary_text = frame_to_markdown(summary) if not summary.empty else "Geen geslaagde runs"
    outputs["summary"].write_text(summary_text + "\n", encoding="utf-8")

    if excel:
        outputs["excel"] = directory / "report.xlsx"
        _write_workbook(frame, outputs["excel"])
    logger.info("Report written to %s", directory)
    return outputs
