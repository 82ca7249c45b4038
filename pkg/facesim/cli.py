from __future__ import annotations

import importlib
import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, TypeVar

import typer

try:
    from facesim import __version__
except Exception:
    __version__ = "0.1.0"

from facesim.audits.reproducibility import AUDIT_MODES
from facesim.command_catalog import get_command_catalog
from facesim.pipeline.orchestrator import Orchestrator
from facesim.recognizer import MODEL_CONFIGS, ModelConfig
from facesim.utils.types import Lighting, Viewpoint

PACKAGE_NAME = "facesim"
EXIT_BAD_ARGUMENT = 2
EXIT_RUNTIME_FAILURE = 3

T = TypeVar("T")

app = typer.Typer(help="Simulate 3D-face adversarial patches and test them under pose, lighting and 2D warps.")

CONFIG_OPTION = typer.Option(None, "--config", help="Experiment config (JSON or YAML). Defaults to ./facesim.yaml.")
OUT_OPTION = typer.Option(None, "--out", help="Output directory; overrides output_dir from the config.")
SEED_OPTION = typer.Option(None, "--seed", help="Global seed; overrides seed from the config.")
THREADS_OPTION = typer.Option(None, "--threads", help="Worker threads; never changes outputs.")


def _version_callback(value: bool) -> None:
    if value:
        typer.echo(__version__)
        raise typer.Exit()


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    try:
        from rich.console import Console
        from rich.logging import RichHandler

        handler: logging.Handler = RichHandler(console=Console(stderr=True), show_path=False)
    except Exception:
        handler = logging.StreamHandler()
    logging.basicConfig(level=level, format="%(message)s", handlers=[handler], force=True)


@app.callback()
def main(
    version: bool = typer.Option(
        False,
        "--version",
        callback=_version_callback,
        is_eager=True,
        help="Show facesim version and exit.",
    ),
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="Log progress (-v info, -vv debug)."),
) -> None:
    del version
    _configure_logging(verbose)


def _overrides(seed: Optional[int], threads: Optional[int], extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    overrides: Dict[str, Any] = dict(extra or {})
    if seed is not None:
        overrides["seed"] = seed
    if threads is not None:
        if threads < 1:
            raise typer.BadParameter("--threads must be >= 1")
        overrides["threads"] = threads
    return overrides


def _run(action: Callable[[], T]) -> T:
    """Map failures onto exit codes: 2 for invalid arguments, 3 for everything else."""
    try:
        return action()
    except typer.Exit:
        raise
    except ValueError as exc:
        typer.echo(f"error: {exc}", err=True)
        raise typer.Exit(code=EXIT_BAD_ARGUMENT) from exc
    except Exception as exc:
        typer.echo(f"error: {exc}", err=True)
        raise typer.Exit(code=EXIT_RUNTIME_FAILURE) from exc


def _orchestrator(
    config: Optional[Path],
    out: Optional[Path],
    seed: Optional[int],
    threads: Optional[int],
    extra: Optional[Dict[str, Any]] = None,
) -> Orchestrator:
    overrides = _overrides(seed, threads, extra)
    return _run(lambda: Orchestrator.from_path(config, overrides, out))


def _echo_artifacts(orchestrator: Orchestrator, artifacts: Dict[str, Path]) -> None:
    typer.echo(f"Output: {orchestrator.out_dir}")
    for path in sorted(set(artifacts.values())):
        typer.echo(f"- {path.relative_to(orchestrator.out_dir).as_posix()}")


@app.command()
def synth(
    seed: int = typer.Option(0, "--seed", help="Identity seed."),
    out: Optional[Path] = OUT_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
) -> None:
    """Write identity parameters, base texture, shape dump and a neutral render."""
    orchestrator = _orchestrator(config, out, None, None)
    _echo_artifacts(orchestrator, _run(lambda: orchestrator.synth(seed)))


@app.command()
def render(
    seed: int = typer.Option(0, "--seed", help="Identity seed."),
    yaw: float = typer.Option(0.0, help="Yaw in degrees."),
    pitch: float = typer.Option(0.0, help="Pitch in degrees."),
    azimuth: float = typer.Option(0.0, help="Light azimuth in degrees."),
    texture: Optional[Path] = typer.Option(None, help="Texture override (.npy or .ppm)."),
    out: Optional[Path] = OUT_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
) -> None:
    """Render a synthetic identity under one viewpoint and lighting."""
    try:
        viewpoint = Viewpoint(yaw, pitch)
        lighting = Lighting(azimuth_deg=azimuth)
    except ValueError as exc:
        raise typer.BadParameter(str(exc)) from exc
    orchestrator = _orchestrator(config, out, None, None)
    _echo_artifacts(orchestrator, _run(lambda: orchestrator.render(seed, viewpoint, lighting, texture)))


@app.command()
def fit(
    target: Path = typer.Argument(..., help="Target image (.npy or .ppm) at the model input size."),
    init_seed: Optional[int] = typer.Option(None, help="Identity seed to start from (default: --seed)."),
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    threads: Optional[int] = THREADS_OPTION,
) -> None:
    """Recover texture coefficients from a single neutral-view image."""
    orchestrator = _orchestrator(config, out, seed, threads)
    _echo_artifacts(orchestrator, _run(lambda: orchestrator.fit(target, init_seed)))


@app.command()
def attack(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    method: Optional[str] = typer.Option(None, help="Run only this method (MIM, EOT, Face3DAdv_x, Face3DAdv_w)."),
) -> None:
    """Craft adversarial patch textures for the first attacker/victim pair."""
    extra = {"attack": {"methods": [method]}} if method is not None else None
    orchestrator = _orchestrator(config, out, seed, threads, extra)
    results, artifacts = _run(orchestrator.attack)
    for name, result in results.items():
        final = f", final loss = {result.loss_trace[-1]:.6f}" if result.loss_trace else ""
        typer.echo(f"{name}: success at neutral = {result.success_at_neutral}{final}")
    _echo_artifacts(orchestrator, artifacts)


@app.command()
def protocol(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    texture: Optional[Path] = typer.Option(None, help="Adversarial texture to evaluate instead of crafting one."),
) -> None:
    """Evaluate a patch texture over the protocol sweeps on every configured model."""
    extra = {"protocol": {"texture_path": str(texture)}} if texture is not None else None
    orchestrator = _orchestrator(config, out, seed, threads, extra)
    _echo_artifacts(orchestrator, _run(orchestrator.protocol))


@app.command()
def bench(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    threads: Optional[int] = THREADS_OPTION,
) -> None:
    """Full cross matrix: identities x white-box models x methods, evaluated on every model and sweep."""
    orchestrator = _orchestrator(config, out, seed, threads)
    _echo_artifacts(orchestrator, _run(orchestrator.bench))


@app.command()
def audit(
    out_dir: Path = typer.Argument(..., help="Output directory written by any facesim command."),
    mode: str = typer.Option("soft", help="soft reports failures; hard also exits 1 on them."),
    as_json: bool = typer.Option(False, "--as-json", help="Print the full audit report as JSON."),
) -> None:
    """Check a run directory for config-hash, artifact, feasibility and ASR consistency."""
    if mode not in AUDIT_MODES:
        raise typer.BadParameter(f"mode must be one of: {', '.join(AUDIT_MODES)}")
    orchestrator = _orchestrator(None, out_dir, None, None)
    report = _run(lambda: orchestrator.audit(mode=mode))
    failed = [check["check_id"] for check in report["checks"] if check["required"] and not check["passed"]]

    if as_json:
        typer.echo(json.dumps(report, indent=2))
    else:
        typer.echo(f"Audited {out_dir} ({mode})")
        typer.echo(f"Passed: {report['passed']}")
        for check_id in failed:
            typer.echo(f"- failed: {check_id}")
    if failed and mode == "hard":
        raise typer.Exit(code=1)


# (module, required) pairs checked by `facesim doctor`.
DOCTOR_MODULES = (
    ("numpy", True),
    ("numba", True),
    ("jsonschema", True),
    ("typer", True),
    ("rich", False),
    ("yaml", False),
)
_STATUS_STYLE = {"ok": "green", "warn": "yellow", "fail": "red"}


def _doctor_entry(name: str, required: bool, ok: bool, message: str) -> Dict[str, Any]:
    status = "ok" if ok else ("fail" if required else "warn")
    return {"check": name, "status": status, "required": required, "message": message}


def _module_status(module_name: str, required: bool) -> Dict[str, Any]:
    name = f"python_module:{module_name}"
    try:
        version = getattr(importlib.import_module(module_name), "__version__", "unknown")
    except Exception as exc:
        return _doctor_entry(name, required, False, f"import failed: {exc}")
    return _doctor_entry(name, required, True, f"version {version}")


def _model_registry_status() -> Dict[str, Any]:
    seeds = {config.seed for config in MODEL_CONFIGS.values()}
    round_trips = all(ModelConfig.from_dict(config.to_dict()) == config for config in MODEL_CONFIGS.values())
    ok = round_trips and len(seeds) == len(MODEL_CONFIGS)
    message = f"{len(MODEL_CONFIGS)} configs, {len(seeds)} distinct seeds"
    return _doctor_entry("model_registry", True, ok, message if ok else f"{message}; registry is inconsistent")


def _print_doctor_table(checks: List[Dict[str, Any]], passed: bool) -> None:
    try:
        from rich.console import Console
        from rich.table import Table
    except ImportError:
        for check in checks:
            typer.echo(f"{check['status']:>4}  {check['check']}  {check['message']}")
        typer.echo(f"Overall: {'PASS' if passed else 'FAIL'}")
        return

    table = Table(title=f"{PACKAGE_NAME} {__version__}")
    for column in ("Check", "Status", "Required", "Message"):
        table.add_column(column)
    for check in checks:
        style = _STATUS_STYLE[check["status"]]
        table.add_row(
            check["check"],
            f"[{style}]{check['status']}[/{style}]",
            "yes" if check["required"] else "no",
            check["message"],
        )
    console = Console()
    console.print(table)
    console.print(f"Overall: {'PASS' if passed else 'FAIL'}")


@app.command()
def doctor(
    as_json: bool = typer.Option(False, "--as-json", help="Print doctor report as JSON."),
    strict: bool = typer.Option(False, "--strict", help="Exit non-zero if any optional check fails."),
) -> None:
    """Check that the numeric and CLI dependencies import and the model registry is consistent."""
    checks = [_module_status(name, required) for name, required in DOCTOR_MODULES]
    checks.append(_model_registry_status())
    failed = [check for check in checks if check["status"] != "ok"]
    required_failures = sum(1 for check in failed if check["required"])
    passed = required_failures == 0
    if as_json:
        report = {
            "package": PACKAGE_NAME,
            "version": __version__,
            "passed": passed,
            "required_failures": required_failures,
            "optional_failures": len(failed) - required_failures,
            "checks": checks,
        }
        typer.echo(json.dumps(report, indent=2))
    else:
        _print_doctor_table(checks, passed)
    if not passed or (strict and failed):
        raise typer.Exit(code=1)


@app.command()
def models() -> None:
    """Print the committed embedding-model configurations as JSON."""
    typer.echo(json.dumps({key: config.to_dict() for key, config in MODEL_CONFIGS.items()}, indent=2, sort_keys=True))


@app.command("command-catalog")
def command_catalog() -> None:
    for command in get_command_catalog():
        typer.echo(command)


if __name__ == "__main__":
    app()
