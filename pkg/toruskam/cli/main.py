import json
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import typer
from pydantic import ValidationError

from toruskam import __version__
from toruskam.automorphy import (
    ConstantFactor,
    NonDiagonalFactor,
    NotHermitian,
    linear_deck,
    trivialize_over_cylinder,
)
from toruskam.callbacks import LoggingCallbackHandler
from toruskam.cli.config import ExperimentConfig
from toruskam.cli.instances import gen_instance, instance_deck, instance_summary
from toruskam.cohomology import ResonantDivisor
from toruskam.diophantine import (
    ResonantInput,
    diophantine_fit,
    nonresonance_scan,
    splitting_divisor_check,
)
from toruskam.kam import InvalidParams, KamParams, KamReport, NoConvergence, rows_to_csv, run
from toruskam.loaders import ConfigLoaderException, DocumentLoader, ExperimentConfigLoader
from toruskam.matcom import NotCommuting
from toruskam.runnables import RunnableConfig, RunnableResult, RunnableStatus
from toruskam.series import series_to_dict
from toruskam.utils import JsonEncoder, encode_complex_array, format_duration, generate_uuid
from toruskam.utils.logger import logger, set_quiet

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RESONANCE = 2
EXIT_NO_CONVERGENCE = 3
EXIT_FAILURE = 4

CONFIG_ERRORS = (
    ConfigLoaderException,
    ValidationError,
    InvalidParams,
    NotHermitian,
    NotCommuting,
    KeyError,
    json.JSONDecodeError,
)
RESONANCE_ERRORS = (ResonantInput, ResonantDivisor)
MAX_WITNESSES = 20

app = typer.Typer(
    name="torus-kam",
    help="Linearize commuting deck transformations near a complex torus.",
    add_completion=False,
    no_args_is_help=True,
)

ConfigOption = typer.Option(..., "--config", "-c", help="Config (or input document) path.")
OutOption = typer.Option(None, "--out", "-o", help="Write the JSON document here instead of stdout.")
SeedOption = typer.Option(None, "--seed", help="Override instance.seed.")
QuietOption = typer.Option(False, "--quiet", "-q", help="Only log warnings and errors.")


def exit_code(error: BaseException) -> int:
    """Exit status for a failed command."""
    if isinstance(error, CONFIG_ERRORS):
        return EXIT_CONFIG
    if isinstance(error, RESONANCE_ERRORS):
        return EXIT_RESONANCE
    if isinstance(error, NoConvergence):
        return EXIT_NO_CONVERGENCE
    return EXIT_FAILURE


def write_document(document: dict, out: Path | None):
    text = json.dumps(document, cls=JsonEncoder, indent=2)
    if out is None:
        typer.echo(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text + "\n")
    logger.info(f"Wrote report to '{out}'")


def execute(command: str, out: Path | None, quiet: bool, func: Callable[[], tuple[Any, Path | None]]):
    """
    Run a command body and emit {"metadata", "status", "result" | "error"}.

    `func` returns the result payload and the report path from the config (used when --out is
    not given). Metadata holds everything that varies between identical runs.

    Raises:
        typer.Exit: With the mapped exit code.
    """
    set_quiet(quiet)
    run_id = generate_uuid()
    started_at = datetime.now()
    configured_out = None
    try:
        output, configured_out = func()
        result = RunnableResult(status=RunnableStatus.SUCCESS, output=output)
        code = EXIT_OK
    except Exception as e:
        code = exit_code(e)
        logger.error(f"Command '{command}' failed with exit code {code}. Error: {e}")
        result = RunnableResult(status=RunnableStatus.FAILURE, error=e)

    serialized = result.to_dict()
    document = {
        "metadata": {
            "run_id": run_id,
            "started_at": started_at,
            "duration": format_duration(started_at, datetime.now()),
            "version": __version__,
            "command": command,
        },
        "status": serialized["status"],
    }
    if code == EXIT_OK:
        document["result"] = serialized["output"]
    else:
        document["error"] = serialized["error"]
    write_document(document, out or configured_out)
    raise typer.Exit(code=code)


def _report_path(cfg: ExperimentConfig) -> Path | None:
    return Path(cfg.output.report_path) if cfg.output.report_path else None


def _write_csv(text: str, path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    logger.info(f"Wrote CSV to '{path}'")


def _kam_params(cfg: ExperimentConfig) -> KamParams:
    """cfg.kam with the scan cutoff and exponent of the dioph section."""
    return KamParams.model_validate(
        {**cfg.kam.model_dump(), "N_scan": cfg.dioph.N_scan, "tau_exp": cfg.dioph.tau_exp}
    )


def linearize_experiment(cfg: ExperimentConfig, seed: int | None = None) -> dict:
    """
    Generate or load the instance, fit the Diophantine constant and run the Newton iteration.

    Raises:
        ResonantInput: If the scan finds a vanishing divisor.
        NoConvergence: If the iteration fails; the CSV of completed rows is still written.
    """
    instance = gen_instance(cfg, seed)
    sys = instance.system
    params = _kam_params(cfg)
    fit = None
    if params.D_fit is None and not sys.is_linear:
        fit = diophantine_fit(sys.linear, params.N_scan, params.tau_exp)

    config = RunnableConfig(callbacks=[LoggingCallbackHandler()])
    try:
        Phi, report = run(sys, params, fit=fit, config=config)
    except NoConvergence as e:
        if cfg.output.csv_path:
            _write_csv(rows_to_csv(e.rows), cfg.output.csv_path)
        raise
    if cfg.output.csv_path:
        _write_csv(report.to_csv(), cfg.output.csv_path)

    phi_true_error = None
    if instance.phi_true is not None:
        difference = Phi - instance.phi_true
        phi_true_error = difference.max_abs()
    return {
        "instance": instance_summary(instance),
        "fit": fit.to_dict() if fit else None,
        "report": report.to_dict(),
        "phi_true_error": phi_true_error,
        "phi_total": series_to_dict(Phi),
    }


def diophantine_check(cfg: ExperimentConfig) -> dict:
    """Non-resonance verdict, fitted constant and worst divisor for the configured deck."""
    deck = instance_deck(cfg)
    N, tau_exp = cfg.dioph.N_scan, cfg.dioph.tau_exp
    ok, witnesses = nonresonance_scan(deck, N)
    if ok:
        fit = diophantine_fit(deck, N, tau_exp)
        D_fit, worst = fit.D_fit, fit.worst
    else:
        D_fit, worst = 0.0, witnesses[0]
    return {
        "ok": ok,
        "D_fit": D_fit,
        "tau_exp": tau_exp,
        "N_scan": N,
        "worst": worst.to_dict() if worst else None,
        "witnesses": [witness.to_dict() for witness in witnesses[:MAX_WITNESSES]],
        "splitting_ok": splitting_divisor_check(deck, N),
    }


def trivialize_factor(data: dict) -> dict:
    """Trivialize a constant factor over the cylinder and read off the model deck when diagonal."""
    factor = ConstantFactor.from_dict(data)
    flow_logs, trivial = trivialize_over_cylinder(factor)
    identity = np.eye(factor.d)
    try:
        deck = linear_deck(trivial).to_dict()
    except NonDiagonalFactor:
        logger.info("Trivialized vertical generators are not diagonal; no linear deck reported")
        deck = None
    return {
        "flow_logs": [encode_complex_array(log) for log in flow_logs],
        "factor": trivial.to_dict(),
        "horizontal_defect": max(float(np.abs(mat - identity).max()) for mat in trivial.horizontal),
        "linear_deck": deck,
    }


def render_report(data: dict) -> tuple[KamReport, dict]:
    """Read a linearize document (or a bare report) back."""
    result = data.get("result", data)
    report = KamReport.from_dict(result.get("report", result))
    last = report.rows[-1] if report.rows else None
    summary = {
        "converged": report.converged,
        "jet_exhausted": report.jet_exhausted,
        "steps": report.steps,
        "final_residual": last.residual_bound if last else report.initial_residual,
        "final_v_min": last.v_min if last else None,
        "dilation": report.dilation,
        "conjugacy_defect": report.conjugacy_defect,
        "sampled_defect": report.sampled_defect,
        "within_schedule": report.within_schedule,
    }
    return report, summary


@app.command()
def linearize(
    config: Path = ConfigOption,
    out: Optional[Path] = OutOption,
    seed: Optional[int] = SeedOption,
    quiet: bool = QuietOption,
):
    """Run the KAM linearization on the configured instance."""

    def body():
        cfg = ExperimentConfigLoader.load(config)
        return linearize_experiment(cfg, seed), _report_path(cfg)

    execute("linearize", out, quiet, body)


@app.command("check-diophantine")
def check_diophantine(
    config: Path = ConfigOption,
    out: Optional[Path] = OutOption,
    seed: Optional[int] = SeedOption,
    quiet: bool = QuietOption,
):
    """Scan the small divisors of the configured deck."""

    def body():
        cfg = ExperimentConfigLoader.load(config)
        return diophantine_check(cfg), _report_path(cfg)

    execute("check-diophantine", out, quiet, body)


@app.command()
def trivialize(
    config: Path = ConfigOption,
    out: Optional[Path] = OutOption,
    seed: Optional[int] = SeedOption,
    quiet: bool = QuietOption,
):
    """Trivialize a constant factor of automorphy read from --config."""

    def body():
        return trivialize_factor(DocumentLoader.loads(config)), None

    execute("trivialize", out, quiet, body)


@app.command("gen-instance")
def gen_instance_command(
    config: Path = ConfigOption,
    out: Optional[Path] = OutOption,
    seed: Optional[int] = SeedOption,
    quiet: bool = QuietOption,
):
    """Generate the configured instance with its known linearizer."""

    def body():
        cfg = ExperimentConfigLoader.load(config)
        instance = gen_instance(cfg, seed)
        return {"summary": instance_summary(instance), **instance.to_dict()}, _report_path(cfg)

    execute("gen-instance", out, quiet, body)


@app.command()
def report(
    config: Path = ConfigOption,
    out: Optional[Path] = OutOption,
    seed: Optional[int] = SeedOption,
    quiet: bool = QuietOption,
    csv: Optional[Path] = typer.Option(None, "--csv", help="Write the step table here."),
):
    """Re-render the step table and a summary from a linearize document."""

    def body():
        kam_report, summary = render_report(DocumentLoader.loads(config))
        text = kam_report.to_csv()
        if csv is None:
            return {"summary": summary, "csv": text}, None
        _write_csv(text, csv)
        return {"summary": summary}, None

    execute("report", out, quiet, body)


if __name__ == "__main__":
    app()
