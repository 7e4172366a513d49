"""CLI applicatie om mistige beelden te herstellen en experimenten te draaien."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import List, NoReturn, Optional

import typer

from defog.config import load_config
from defog.corpus import write_corpus
from defog.errors import DefogError
from defog.haze_model import DEFAULT_FOG_AIRLIGHT, FogSpec, synthesize_fog
from defog.harness import (
    ExperimentPlan,
    RunRecord,
    emit_report,
    run_noreference_experiment,
    run_reference_experiment,
)
from defog.image_core import load_image, save_image
from defog.methods.base import summarize_restorations
from defog.metrics import evaluate
from defog.pde_solver import write_trace
from defog.restorer import Restorer

app = typer.Typer(help="Ontnevel beelden met een vierde-orde telegraaf-PDE en vergelijk methodes")


@app.callback()
def main(
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="Meer logregels (-vv voor debug)"),
) -> None:
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@app.command()
def list_methods() -> None:
    """Toon beschikbare methodes."""
    restorer = Restorer()
    typer.echo("Beschikbare methodes:")
    for method in restorer.methods:
        typer.echo(f"- {method}")


def _fail(message: str, code: int) -> NoReturn:
    typer.secho(f"Fout: {message}", fg=typer.colors.RED)
    raise typer.Exit(code=code)


@app.command()
def single(
    input_path: Path = typer.Argument(..., exists=True, readable=True, help="Pad naar het mistige beeld"),
    output_path: Path = typer.Argument(..., help="Pad voor het herstelde PNG-bestand"),
    method: str = typer.Option("proposed", "--method", "-m", help="Naam van de methode"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", exists=True, help="INI-bestand met solverinstellingen"),
    trace: Optional[Path] = typer.Option(None, "--trace", help="Schrijf de convergentietrace als CSV"),
    progress: bool = typer.Option(False, "--progress", help="Toon een voortgangsbalk"),
    omega: Optional[float] = typer.Option(None, "--omega"),
    patch_radius: Optional[int] = typer.Option(None, "--patch-radius"),
    airlight_fraction: Optional[float] = typer.Option(None, "--airlight-fraction"),
    refine_sigma: Optional[float] = typer.Option(None, "--refine-sigma"),
    t_floor: Optional[float] = typer.Option(None, "--t-floor"),
    lambda_damp: Optional[float] = typer.Option(None, "--lambda-damp"),
    lambda_fid: Optional[float] = typer.Option(None, "--lambda-fid"),
    k: Optional[float] = typer.Option(None, "--k"),
    alpha: Optional[float] = typer.Option(None, "--alpha"),
    xi: Optional[float] = typer.Option(None, "--xi"),
    v: Optional[float] = typer.Option(None, "--v"),
    tau: Optional[float] = typer.Option(None, "--tau"),
    toll: Optional[float] = typer.Option(None, "--toll"),
    max_iters: Optional[int] = typer.Option(None, "--max-iters"),
    eps_rel: Optional[float] = typer.Option(None, "--eps-rel"),
) -> None:
    """Herstel een enkel beeld."""
    overrides = dict(
        omega=omega,
        patch_radius=patch_radius,
        airlight_fraction=airlight_fraction,
        refine_sigma=refine_sigma,
        t_floor=t_floor,
        lambda_damp=lambda_damp,
        lambda_fid=lambda_fid,
        k=k,
        alpha=alpha,
        xi=xi,
        v=v,
        tau=tau,
        toll=toll,
        max_iters=max_iters,
        eps_rel=eps_rel,
    )
    try:
        solver_config = load_config(config, overrides)
    except (DefogError, ValueError) as exc:
        _fail(str(exc), code=2)

    try:
        foggy = load_image(input_path)
        restorations = Restorer(progress=progress).restore(foggy, solver_config, methods=[method])
    except (DefogError, OSError, ValueError) as exc:
        _fail(str(exc), code=1)

    restoration = restorations[0]
    typer.secho(f"Resultaten voor {restoration.method}", fg=typer.colors.GREEN, bold=True)
    typer.echo(summarize_restorations(restorations))
    if restoration.error or restoration.image is None:
        raise typer.Exit(code=1)

    save_image(restoration.image, output_path)
    typer.echo(f"Hersteld beeld opgeslagen in {output_path}")

    if trace and restoration.state is not None:
        write_trace(restoration.state, trace)
        typer.echo(f"Trace opgeslagen in {trace}")

    report = evaluate(restoration.image, foggy)
    for name in ("fade", "cri", "entropy", "ag"):
        typer.echo(f"  {name}: {getattr(report, name):.4f}")


@app.command()
def synth(
    input_path: Path = typer.Argument(..., exists=True, readable=True, help="Pad naar het heldere beeld"),
    output_path: Path = typer.Argument(..., help="Pad voor het mistige PNG-bestand"),
    level: float = typer.Option(..., "--level", help="Miststerkte als fractie, bv. 0.2"),
    airlight: float = typer.Option(DEFAULT_FOG_AIRLIGHT, "--airlight", help="Atmosferisch licht"),
    mode: str = typer.Option("homogeneous", "--mode", help="homogeneous of depth"),
    noise: float = typer.Option(0.0, "--noise", help="Standaardafwijking van gesimuleerde sensorruis"),
    seed: int = typer.Option(0, "--seed", help="Seed voor de sensorruis"),
) -> None:
    """Voeg synthetische mist toe aan een beeld."""
    try:
        spec = FogSpec(level, airlight, mode, noise, seed)
        save_image(synthesize_fog(load_image(input_path), spec), output_path)
    except (DefogError, OSError, ValueError) as exc:
        _fail(str(exc), code=1)
    typer.echo(f"Mistig beeld opgeslagen in {output_path}")


def _load_plan(config: Path, output_dir: Optional[Path]) -> ExperimentPlan:
    try:
        return ExperimentPlan.from_ini(config, output_dir=output_dir)
    except (DefogError, OSError, ValueError) as exc:
        _fail(f"ongeldig plan: {exc}", code=2)


def _finish(records: List[RunRecord], plan: ExperimentPlan, excel: bool) -> None:
    outputs = emit_report(records, plan.output_dir, excel=excel or plan.excel)

    typer.secho("Samenvatting per run", fg=typer.colors.BLUE, bold=True)
    failures = 0
    for record in records:
        label = f"- {record.image_id} [{record.method}"
        label += "]" if record.fog_level is None else f", {record.fog_level:.0%}]"
        if record.error:
            failures += 1
            typer.secho(f"{label} fout: {record.error}", fg=typer.colors.RED)
            continue
        typer.secho(label, fg=typer.colors.GREEN, bold=True)
        report = record.report
        if report is not None and report.mse is not None:
            typer.echo(f"  mse: {report.mse:.6f}  ssim: {report.ssim:.4f}")
        if report is not None:
            typer.echo(f"  fade: {report.fade:.3f}  cri: {report.cri:.3f}  entropy: {report.entropy:.3f}  ag: {report.ag:.4f}")
        for message in record.warnings:
            typer.secho(f"  waarschuwing: {message}", fg=typer.colors.YELLOW)

    for kind, path in outputs.items():
        typer.echo(f"{kind} opgeslagen in {path}")
    if failures:
        raise typer.Exit(code=1)


@app.command()
def bench_ref(
    config: Path = typer.Argument(..., exists=True, readable=True, help="INI-bestand met het experimentplan"),
    output_dir: Optional[Path] = typer.Option(None, "--output-dir", "-o", help="Overschrijf de uitvoermap"),
    excel: bool = typer.Option(False, "--excel", help="Schrijf ook report.xlsx met een blad per methode"),
    progress: bool = typer.Option(False, "--progress", help="Toon een voortgangsbalk per PDE-run"),
) -> None:
    """Mistsweep met grondwaarheid: MSE/SSIM en alle no-reference metrics."""
    plan = _load_plan(config, output_dir)
    records = run_reference_experiment(plan, Restorer(progress=progress))
    _finish(records, plan, excel)


@app.command()
def bench_nr(
    config: Path = typer.Argument(..., exists=True, readable=True, help="INI-bestand met het experimentplan"),
    output_dir: Optional[Path] = typer.Option(None, "--output-dir", "-o", help="Overschrijf de uitvoermap"),
    excel: bool = typer.Option(False, "--excel", help="Schrijf ook report.xlsx met een blad per methode"),
    progress: bool = typer.Option(False, "--progress", help="Toon een voortgangsbalk per PDE-run"),
) -> None:
    """Echte mistige beelden zonder referentie: FADE, CRI, entropie en AG."""
    plan = _load_plan(config, output_dir)
    records = run_noreference_experiment(plan, Restorer(progress=progress))
    _finish(records, plan, excel)


@app.command()
def make_corpus(
    output_dir: Path = typer.Argument(..., file_okay=False, help="Map voor de procedurele testbeelden"),
) -> None:
    """Schrijf de meegeleverde procedurele scènes als PNG."""
    written = write_corpus(output_dir)
    for name, path in written.items():
        typer.echo(f"- {name}: {path}")


if __name__ == "__main__":
    app()
