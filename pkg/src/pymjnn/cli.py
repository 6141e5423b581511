"""Command line interface.

Every command reads a model document, runs one workflow of the
[`Designer`](designer.md) and writes its artifacts to `--out`, together with the
effective configuration as `effective_config.json`. Flags override environment
variables, which override the defaults of [`Settings`](settings.md).

Exit codes: `0` on success, `1` when the model is invalid or the request is infeasible,
`2` when a file cannot be read or written, or is not a JSON object.

!!! Example
    ```bash
    pymjnn validate model.json
    pymjnn synthesize model.json --gamma-bracket 0.1 10 --out out/
    pymjnn simulate model.json --gains out/gains.json --runs 100 --seed 7
    ```
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path
from typing import TYPE_CHECKING, Any

import click
from loguru import logger
from pydantic import ValidationError

from pymjnn.core import check_model
from pymjnn.designer import Designer
from pymjnn.errors import DocumentFormatError, NumericOverflow, PymjnnError
from pymjnn.io import (
    bisection_frame,
    ccl_trace_frame,
    dump_gains,
    ensemble_frame,
    load_gains,
    load_model,
    mode_path_frame,
    node_schedule_frame,
    trajectory_frame,
    write_csv,
)
from pymjnn.logger import configure_logging
from pymjnn.models.config import RunConfig
from pymjnn.simulation import lyapunov_delta_check

if TYPE_CHECKING:
    from collections.abc import Callable

    from pymjnn.models.gains import EstimatorGains
    from pymjnn.models.plant import MjnnModel
    from pymjnn.models.results import SolveOutcome, SynthesisResult

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


def _exit_codes(func: Callable[..., int]) -> Callable[..., None]:
    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> None:  # noqa: ANN401
        try:
            code = func(*args, **kwargs)
        except (OSError, json.JSONDecodeError, DocumentFormatError) as e:
            click.echo(f"IOError: {e}", err=True)
            code = EXIT_IO
        except (PymjnnError, ValidationError, ValueError) as e:
            click.echo(f"{type(e).__name__}: {e}", err=True)
            code = EXIT_INVALID
        sys.exit(code)

    return wrapper


def _designer(ctx: click.Context, **flags: Any) -> Designer:  # noqa: ANN401
    overrides = {k: v for k, v in flags.items() if v is not None}
    if ctx.obj.get("workers") is not None:
        overrides["workers"] = ctx.obj["workers"]
    return Designer(**overrides)


def _prepare(config: RunConfig, designer: Designer) -> None:
    config.out.mkdir(parents=True, exist_ok=True)
    effective = {
        "run": config.model_dump(mode="json"),
        "settings": designer.model_dump(mode="json"),
    }
    (config.out / "effective_config.json").write_text(
        json.dumps(effective, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def _gains(config: RunConfig) -> EstimatorGains:
    return load_gains(config.gains_path or config.model_path)


def _write_certificate(outcome: SolveOutcome, path: Path) -> None:
    path.write_text(outcome.model_dump_json(indent=2) + "\n", encoding="utf-8")


def _write_synthesis(result: SynthesisResult, out: Path) -> None:
    write_csv(ccl_trace_frame(result), out / "ccl_trace.csv")
    if result.gains is not None:
        dump_gains(result.gains, out / "gains.json")
    if result.certificate is not None:
        _write_certificate(result.certificate, out / "certificate.json")


def _load(path: Path) -> MjnnModel:
    model = load_model(path)
    logger.info(f"Loaded model {model.name or path} with {model.N} mode(s)")
    return model


def _model_argument(func: Callable[..., Any]) -> Callable[..., Any]:
    return click.argument(
        "model_path",
        type=click.Path(path_type=Path, dir_okay=False),
    )(func)


def _run_options(func: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option(
            "--gains",
            "gains_path",
            type=click.Path(path_type=Path),
            default=None,
            help="Gain grid document.",
        ),
        click.option("--gamma", type=float, default=None, help="Performance level."),
        click.option(
            "--gamma-bracket",
            type=(float, float),
            default=None,
            help="Bisection bracket LO HI.",
        ),
        click.option(
            "--steps",
            type=int,
            default=12,
            show_default=True,
            help="Bisection halvings.",
        ),
        click.option(
            "--horizon",
            type=int,
            default=200,
            show_default=True,
            help="Simulation steps.",
        ),
        click.option(
            "--runs",
            type=int,
            default=1,
            show_default=True,
            help="Ensemble size.",
        ),
        click.option("--seed", type=int, default=None, help="Root seed."),
        click.option(
            "--mu",
            type=float,
            default=None,
            help="Synthesis stopping threshold.",
        ),
        click.option(
            "--max-iters",
            type=int,
            default=None,
            help="Synthesis iteration limit.",
        ),
        click.option(
            "--literal-exponent/--no-literal-exponent",
            default=None,
            help="Power-tower disturbance envelope.",
        ),
        click.option(
            "--out",
            type=click.Path(path_type=Path, file_okay=False),
            default=Path("out"),
            show_default=True,
            help="Output directory.",
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _config_and_designer(
    ctx: click.Context,
    command: str,
    model_path: Path,
    **kw: Any,  # noqa: ANN401
) -> tuple[RunConfig, Designer]:
    designer = _designer(
        ctx,
        seed=kw["seed"],
        ccl_mu=kw["mu"],
        ccl_max_iters=kw["max_iters"],
        literal_exponent=kw["literal_exponent"],
    )
    config = RunConfig(
        command=command,
        model_path=model_path,
        gains_path=kw["gains_path"],
        gamma=kw["gamma"],
        gamma_bracket=kw["gamma_bracket"],
        steps=kw["steps"],
        horizon=kw["horizon"],
        runs=kw["runs"],
        seed=designer.seed,
        mu=designer.ccl_mu,
        max_iters=designer.ccl_max_iters,
        literal_exponent=designer.literal_exponent,
        out=kw["out"],
    )
    return config, designer


@click.group()
@click.option("-v", "--verbose", count=True, help="Log INFO, or DEBUG when repeated.")
@click.option(
    "--workers",
    type=int,
    default=None,
    help="Worker processes for ensembles.",
)
@click.pass_context
def cli(ctx: click.Context, verbose: int, workers: int | None) -> None:
    """Design and check state estimators for Markovian jumping neural networks."""
    configure_logging(["WARNING", "INFO", "DEBUG"][min(verbose, 2)])
    ctx.ensure_object(dict)
    ctx.obj["workers"] = workers


@cli.command()
@_model_argument
@_exit_codes
def validate(model_path: Path) -> int:
    """Check a model document and list every violation."""
    report = check_model(_load(model_path))
    for violation in report.violations:
        click.echo(str(violation))
    for warning in report.warnings:
        click.echo(f"warning: {warning}")
    if report.valid:
        click.echo("valid")
        return EXIT_OK
    return EXIT_INVALID


@cli.command()
@_model_argument
@_run_options
@click.pass_context
@_exit_codes
def synthesize(ctx: click.Context, model_path: Path, **kw: Any) -> int:  # noqa: ANN401
    """Synthesize gains at `--gamma`, or at the tightest level of `--gamma-bracket`."""
    config, designer = _config_and_designer(ctx, "synthesize", model_path, **kw)
    model = designer.validate(_load(model_path))
    _prepare(config, designer)
    if config.gamma_bracket is not None:
        sweep = designer.sweep(model, *config.gamma_bracket, steps=config.steps)
        write_csv(bisection_frame(sweep), config.out / "sweep.csv")
        result = sweep.synthesis
    else:
        result = designer.synthesize(model, config.gamma)  # type: ignore[arg-type]
    assert result is not None  # noqa: S101
    _write_synthesis(result, config.out)
    click.echo(f"{result.status} at gamma={result.gamma:.17g}")
    return EXIT_OK if result.converged else EXIT_INVALID


@cli.command()
@_model_argument
@_run_options
@click.pass_context
@_exit_codes
def verify(ctx: click.Context, model_path: Path, **kw: Any) -> int:  # noqa: ANN401
    """Check a gain grid at `--gamma`, or find its tightest level in a bracket."""
    config, designer = _config_and_designer(ctx, "verify", model_path, **kw)
    model = designer.validate(_load(model_path))
    gains = _gains(config)
    _prepare(config, designer)
    if config.gamma_bracket is not None:
        sweep = designer.sweep(
            model,
            *config.gamma_bracket,
            steps=config.steps,
            gains=gains,
        )
        write_csv(bisection_frame(sweep), config.out / "sweep.csv")
        result = sweep.verification
    else:
        result = designer.verify(model, gains, config.gamma)  # type: ignore[arg-type]
    assert result is not None  # noqa: S101
    if not result.feasible:
        click.echo(f"infeasible at gamma={result.gamma:.17g}")
        return EXIT_INVALID
    _write_certificate(result.outcome, config.out / "certificate.json")
    click.echo(f"Feasible at gamma={result.gamma:.17g}")
    return EXIT_OK


@cli.command()
@_model_argument
@_run_options
@click.pass_context
@_exit_codes
def simulate(ctx: click.Context, model_path: Path, **kw: Any) -> int:  # noqa: ANN401
    """Simulate the closed loop and write trajectory and ensemble tables.

    With `--gamma`, the gains are verified first and the certificate's Lyapunov
    functional is written into the `V` column.
    """
    config, designer = _config_and_designer(ctx, "simulate", model_path, **kw)
    model = designer.validate(_load(model_path))
    gains = _gains(config)
    _prepare(config, designer)
    try:
        trajectory = designer.simulate(model, gains, horizon=config.horizon)
        metrics = designer.ensemble(
            model,
            gains,
            runs=config.runs,
            horizon=config.horizon,
        )
    except NumericOverflow as e:
        click.echo(f"diverged at step {e.step}")
        return EXIT_INVALID
    lyapunov = None
    if config.gamma is not None:
        check = designer.verify(model, gains, config.gamma)
        if check.feasible:
            lyapunov = lyapunov_delta_check(trajectory, check.outcome.assignment, model)
    write_csv(trajectory_frame(trajectory, lyapunov), config.out / "trajectory.csv")
    write_csv(node_schedule_frame(trajectory, model), config.out / "node_schedule.csv")
    write_csv(mode_path_frame(trajectory), config.out / "mode_path.csv")
    write_csv(ensemble_frame(metrics), config.out / "ensemble.csv")
    (config.out / "metrics.json").write_text(
        metrics.model_dump_json(indent=2) + "\n",
        encoding="utf-8",
    )
    click.echo(f"ratio={metrics.empirical_ratio} ({metrics.ratio_status})")
    return EXIT_OK


@cli.command()
@_model_argument
@_run_options
@click.pass_context
@_exit_codes
def sweep(ctx: click.Context, model_path: Path, **kw: Any) -> int:  # noqa: ANN401
    """Bisect `--gamma-bracket`, synthesizing gains unless `--gains` is given."""
    config, designer = _config_and_designer(ctx, "sweep", model_path, **kw)
    model = designer.validate(_load(model_path))
    gains = _gains(config) if config.gains_path is not None else None
    _prepare(config, designer)
    lo, hi = config.gamma_bracket  # type: ignore[misc]
    result = designer.sweep(model, lo, hi, steps=config.steps, gains=gains)
    write_csv(bisection_frame(result), config.out / "sweep.csv")
    if result.synthesis is not None:
        _write_synthesis(result.synthesis, config.out)
    click.echo(f"gamma={result.gamma:.17g} lower={result.lower:.17g}")
    return EXIT_OK


def main() -> None:
    """Run the `pymjnn` command line."""
    cli(obj={})
