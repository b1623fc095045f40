"""
Command-line interface for the weather edge-case generator.
"""

import json
import sys
from collections.abc import Callable
from enum import Enum
from functools import wraps
from pathlib import Path
from typing import Any, List, Optional, TypeVar

import click
import typer
from rich.console import Console
from rich.table import Table

from . import catalog as scene_catalog
from .config import HarnessConfig, load_settings
from .errors import ReplayMismatchError, WxEdgeError
from .harness import EdgeCaseHarness, load_report
from .log import configure_logging
from .models.records import AgentAggregate, AgentKind

app = typer.Typer(
    name="wxedge",
    help="Weather edge-case generator - Command Line Interface",
    no_args_is_help=True,
)
console = Console()

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2

F = TypeVar("F", bound=Callable[..., Any])


class ReportFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


def cli_errors(func: F) -> F:
    """Print wxedge and I/O failures in red and exit with the runtime-failure code."""

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except ReplayMismatchError as e:
            console.print("[red]✗ Totals mismatch[/red]")
            for mismatch in e.mismatches:
                console.print(f"  [red]-[/red] {mismatch}")
            raise typer.Exit(EXIT_FAILURE)
        except (WxEdgeError, OSError) as e:
            console.print(f"[red]✗ {e}[/red]")
            raise typer.Exit(EXIT_FAILURE)

    return wrapper  # type: ignore[return-value]


def get_harness(config: Optional[Path]) -> EdgeCaseHarness:
    """Build a harness from a config file and the WXEDGE_* environment."""
    return EdgeCaseHarness(HarnessConfig.load(config), load_settings())


def aggregates_table(aggregates: list[AgentAggregate], title: str) -> Table:
    table = Table(title=title)
    table.add_column("Agent", style="cyan")
    table.add_column("Episodes", justify="right")
    table.add_column("Mean λ_c", justify="right")
    table.add_column("Mean λ_p", justify="right")
    table.add_column("Σ deficit", justify="right")
    table.add_column("Collisions", justify="right")
    table.add_column("Failure modes")

    for aggregate in aggregates:
        modes = ", ".join(
            f"{mode}={count}" for mode, count in aggregate.failure_modes.items() if count
        )
        table.add_row(
            aggregate.agent,
            str(aggregate.episodes),
            f"{aggregate.mean_lambda_c:.3f}",
            f"{aggregate.mean_lambda_p:.3f}",
            f"{aggregate.deficit_sum:.2f}",
            str(aggregate.collisions),
            modes or "-",
        )
    return table


@app.callback()
@cli_errors
def main_callback(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable debug logging"),
) -> None:
    """Weather edge-case generator."""
    configure_logging("DEBUG" if verbose else load_settings().log_level)


@app.command("gen-scenes")
@cli_errors
def gen_scenes(
    out: Path = typer.Option(..., "--out", help="Catalog file to write"),
    count: Optional[int] = typer.Option(None, "--count", min=0, help="Number of scenes (default: generator.count)"),
    seed: int = typer.Option(0, "--seed", min=0, help="Generator seed"),
    config: Optional[Path] = typer.Option(None, "--config", help="Harness config file"),
) -> None:
    """Generate a scene catalog."""

    generator = HarnessConfig.load(config).generator
    if count is not None:
        generator = generator.model_copy(update={"count": count})

    catalog = scene_catalog.generate(generator, seed)
    scene_catalog.save(catalog, out)

    cut_ins = sum(1 for scene in catalog.scenes if scene.cut_in is not None)
    console.print(f"[green]✓ Wrote {len(catalog)} scenes to {out}[/green]")
    console.print(f"[dim]seed={seed} cut-ins={cut_ins}[/dim]")


@app.command()
@cli_errors
def train(
    config: Path = typer.Option(..., "--config", help="Harness config file"),
    out: Path = typer.Option(..., "--out", help="Output directory"),
    catalog: Path = typer.Option(Path("catalog.json"), "--catalog", help="Scene catalog file"),
    resume: Optional[Path] = typer.Option(None, "--resume", help="Checkpoint to continue from"),
) -> None:
    """Train the PPO weather agent."""

    harness = get_harness(config)
    scenes = scene_catalog.load(catalog)
    ppo = harness.config.ppo

    console.print(
        f"[yellow]Training {ppo.num_updates} updates of {ppo.batch_size} steps "
        f"on {len(scenes)} scenes (seed {ppo.seed}, from {harness.seed_source})...[/yellow]"
    )
    result = harness.train(scenes, out, catalog_path=catalog, resume=resume)

    console.print(f"[green]✓ Training finished after update {result.updates}[/green]")
    console.print(f"Checkpoint: {result.checkpoint}")
    console.print(f"Training curve: {result.curve}")


@app.command("eval")
@cli_errors
def evaluate(
    config: Path = typer.Option(..., "--config", help="Harness config file"),
    catalog: Path = typer.Option(..., "--catalog", help="Scene catalog file"),
    out: Path = typer.Option(..., "--out", help="Output directory"),
    checkpoint: Optional[Path] = typer.Option(None, "--checkpoint", help="Policy checkpoint"),
    agent: Optional[List[AgentKind]] = typer.Option(
        None, "--agent", help="Agent to evaluate (repeatable; default: eval.agents)"
    ),
) -> None:
    """Benchmark agents on the fixed-seed test subset."""

    harness = get_harness(config)
    scenes = scene_catalog.load(catalog)

    console.print(
        f"[yellow]Evaluating {harness.config.eval.subset_size} scenes "
        f"(subset seed {harness.config.eval.subset_seed})...[/yellow]"
    )
    report = harness.evaluate(
        scenes, out, catalog_path=catalog, checkpoint=checkpoint, agents=agent or None
    )

    console.print(aggregates_table(report.aggregates, "Evaluation"))
    console.print(f"[green]✓ Report written to {out}[/green]")


@app.command()
@cli_errors
def replay(
    episode: Path = typer.Option(..., "--episode", help="Episode JSONL file"),
    config: Optional[Path] = typer.Option(None, "--config", help="Harness config used for the run"),
) -> None:
    """Re-verify an episode's totals from its rows."""

    totals = get_harness(config).replay(episode)
    console.print("[green]✓ Totals match rows[/green]")
    console.print(
        f"λ_c={totals.lambda_c:.6f} λ_p={totals.lambda_p:.6f} "
        f"reward={totals.reward_sum:.6f} deficit={totals.deficit_sum:.6f}"
    )


@app.command()
@cli_errors
def report(
    in_dir: Path = typer.Option(..., "--in", help="Evaluation output directory"),
    fmt: ReportFormat = typer.Option(ReportFormat.JSON, "--format", help="Output format"),
) -> None:
    """Print evaluation aggregates recomputed from the per-episode table."""

    _, aggregates = load_report(in_dir)

    if fmt == ReportFormat.JSON:
        data = [aggregate.model_dump(mode="json") for aggregate in aggregates]
        typer.echo(json.dumps(data, indent=2))
        return

    columns = ["agent", "episodes", "mean_lambda_c", "mean_lambda_p", "mean_reward", "deficit_sum", "collisions"]
    typer.echo(",".join(columns))
    for aggregate in aggregates:
        values = aggregate.model_dump()
        typer.echo(",".join(repr(values[c]) if isinstance(values[c], float) else str(values[c]) for c in columns))


@app.command()
def version() -> None:
    """Show version information."""

    from . import __version__

    console.print(f"[cyan]wxedge[/cyan] {__version__}")


def main(argv: Optional[list[str]] = None) -> int:
    """Run the CLI and return its exit code (0 ok, 1 usage error, 2 failure)."""
    try:
        result = app(args=argv, prog_name="wxedge", standalone_mode=False)
    except click.exceptions.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except click.exceptions.Exit as e:
        return e.exit_code
    return result if isinstance(result, int) else EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
