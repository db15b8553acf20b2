import logging
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np
import typer  # type: ignore
from rich.console import Console  # type: ignore
from rich.logging import RichHandler  # type: ignore
from rich.table import Table  # type: ignore

from . import bench, suite
from ._version import __version__
from .config import load_config
from .errors import ParameterError, PlanarError
from .lqr_solver import bellman_residual, closed_loop_spectral_radius, solve_dare, task_system
from .rendering import write_png, write_ppm
from .results.store import EvalRow, ResultStore

app = typer.Typer(help="Planar continuous-control benchmark suite.", no_args_is_help=True)
lqr_app = typer.Typer(help="Linear-quadratic regulator tools.", no_args_is_help=True)
app.add_typer(lqr_app, name="lqr")
results_app = typer.Typer(help="Evaluation rows kept in the configured result store.", no_args_is_help=True)
app.add_typer(results_app, name="results")
console = Console()
logger = logging.getLogger(__name__)


class Tag(str, Enum):
    benchmarking = "benchmarking"
    extra = "extra"


class AgentName(str, Enum):
    random = "random"
    lqr = "lqr"
    ddpg = "ddpg"


class FrameFormat(str, Enum):
    ppm = "ppm"
    png = "png"


def _fail(error: PlanarError) -> None:
    console.print(f"[bold red]Error:[/bold red] {error}")
    raise typer.Exit(code=1)


@app.callback()  # type: ignore
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level."),
) -> None:
    """Console script for planarsuite."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True)],
        force=True,
    )


@app.command("list")  # type: ignore
def list_tasks(
    tag: Optional[Tag] = typer.Option(None, help="Only tasks in this set."),
) -> None:
    """List catalog tasks with their dimensions."""
    table = Table(title="Tasks")
    table.add_column("domain")
    table.add_column("task")
    table.add_column("set")
    table.add_column("dim S / A / O", justify="right")
    for entry in suite.iter_task_defs(tag.value if tag else None):
        env = suite.load(entry.domain, entry.task, seed=0)
        state, action, observation = suite.dimensions(env)
        table.add_row(entry.domain, entry.task, ",".join(entry.tags), f"{state} / {action} / {observation}")
    console.print(table)


@app.command()  # type: ignore
def run(
    domain: str = typer.Option(..., help="Domain name, e.g. cartpole."),
    task: str = typer.Option(..., help="Task name, e.g. swingup."),
    agent: AgentName = typer.Option(AgentName.random, help="Agent to run."),
    seed: int = typer.Option(0, help="Seed of the environment and agent."),
    episodes: int = typer.Option(1, min=1, help="Number of episodes."),
    csv: Optional[Path] = typer.Option(None, help="Write per-episode returns to this CSV."),
    train: bool = typer.Option(False, help="Let a learning agent train while acting."),
) -> None:
    """Run episodes of one task and print their returns."""
    try:
        env_seed, _, agent_seed = bench.job_seeds(domain, task, seed)
        env = suite.load(domain, task, seed=env_seed)
        player = bench.build_agent(agent.value, env, agent_seed)
        rows = []
        for index in range(episodes):
            result = bench.run_episode(env, player, explore=train, train=train, episode=index, seed=seed)
            console.print(
                f"{domain}:{task} episode {index}: return [bold]{result.episode_return:.2f}[/bold] "
                f"({result.steps} steps, {result.wallclock_s:.2f}s)"
            )
            rows.append(
                EvalRow(
                    domain=domain,
                    task=task,
                    agent=agent.value,
                    seed=seed,
                    env_steps=(index + 1) * result.steps,
                    mean_return=result.episode_return,
                    wallclock_s=round(result.wallclock_s, 6),
                )
            )
    except PlanarError as e:
        _fail(e)
        return
    if csv is not None:
        bench.write_csv(rows, csv)
        console.print(f"[green]Wrote {csv}[/green]")


@app.command("bench")  # type: ignore
def run_bench(
    config: Path = typer.Option(..., exists=True, dir_okay=False, help="YAML benchmark configuration."),
) -> None:
    """Run a benchmark configuration and emit its CSV and plot."""
    try:
        settings = load_config(config)
        rows = bench.run_benchmark(settings)
        curves = bench.curves_from_rows(rows)
    except PlanarError as e:
        _fail(e)
        return

    table = Table(title=f"{settings.agent}: final evaluation")
    table.add_column("task")
    table.add_column("steps", justify="right")
    table.add_column("p5", justify="right")
    table.add_column("median", justify="right")
    table.add_column("p95", justify="right")
    for curve in curves:
        table.add_row(
            curve.label,
            str(curve.steps[-1]),
            f"{curve.p5[-1]:.1f}",
            f"{curve.median[-1]:.1f}",
            f"{curve.p95[-1]:.1f}",
        )
    console.print(table)
    if len(curves) > 1:
        mean = bench.aggregate(curves)
        console.print(f"Mean over tasks of the median: [bold]{mean.median[-1]:.1f}[/bold]")


@app.command()  # type: ignore
def render(
    domain: str = typer.Option(..., help="Domain name."),
    task: str = typer.Option(..., help="Task name."),
    out: Path = typer.Option(..., help="Output prefix; frames get a _NNNN suffix."),
    frames: int = typer.Option(1, min=1, help="Number of frames."),
    width: int = typer.Option(320, min=1),
    height: int = typer.Option(240, min=1),
    camera: str = typer.Option("-1", help="Camera name or index."),
    seed: int = typer.Option(0),
    fmt: FrameFormat = typer.Option(FrameFormat.ppm, "--format", help="Image format."),
) -> None:
    """Render frames of a random-agent rollout."""
    view = int(camera) if camera.lstrip("-").isdigit() else camera
    writer = write_png if fmt is FrameFormat.png else write_ppm
    try:
        env = suite.load(domain, task, seed=seed, visualize_reward=True)
        agent = bench.build_agent("random", env, seed)
        time_step = env.reset()
        out.parent.mkdir(parents=True, exist_ok=True)
        for index in range(frames):
            path = out.parent / f"{out.name}_{index:04d}.{fmt.value}"
            writer(env.render(width, height, view), path)
            logger.debug("Wrote %s", path)
            if time_step.last():
                time_step = env.reset()
            time_step = env.step(agent.select_action(time_step))
    except PlanarError as e:
        _fail(e)
        return
    console.print(f"[green]Wrote {frames} frame(s) to {out.parent}[/green]")


@lqr_app.command("solve")  # type: ignore
def lqr_solve(
    domain: str = typer.Option("lqr", help="Domain name."),
    task: str = typer.Option("lqr_2_1", help="Task name."),
) -> None:
    """Solve the Riccati equation of a linear task and print P and K."""
    try:
        env = suite.load(domain, task, seed=0)
        system = task_system(env)
        solution = solve_dare(system)
    except PlanarError as e:
        _fail(e)
        return
    with np.printoptions(precision=6, suppress=True, linewidth=120):
        console.print("[bold]P[/bold] =")
        console.print(str(solution.P), markup=False)
        console.print("[bold]K[/bold] =")
        console.print(str(solution.K), markup=False)
    console.print(f"iterations: {solution.iterations}")
    console.print(f"residual: {bellman_residual(system, solution.P):.3e}")
    console.print(f"spectral radius of A-BK: {closed_loop_spectral_radius(system, solution):.6f}")


def _open_store(config: Path) -> ResultStore:
    settings = load_config(config)
    return ResultStore(settings.store.backend, **settings.store.options)


@results_app.command("export")  # type: ignore
def results_export(
    config: Path = typer.Option(..., exists=True, dir_okay=False, help="Configuration naming the store."),
    csv: Path = typer.Option(..., help="CSV file to write."),
    plot: Optional[Path] = typer.Option(None, help="Also plot the learning curves to this SVG."),
    tag: Optional[str] = typer.Option(None, help="Only rows with this tag, e.g. agent:ddpg."),
) -> None:
    """Write stored rows to a CSV file (and optionally a plot)."""
    try:
        rows = _open_store(config).rows(tag)
        if not rows:
            raise ParameterError(f"No stored rows tagged {tag}" if tag else "No stored rows")
        bench.write_csv(rows, csv)
        if plot is not None:
            bench.plot_curves(bench.curves_from_rows(rows), plot)
    except PlanarError as e:
        _fail(e)
        return
    console.print(f"[green]Wrote {len(rows)} rows to {csv}[/green]")


@results_app.command("clear")  # type: ignore
def results_clear(
    config: Path = typer.Option(..., exists=True, dir_okay=False, help="Configuration naming the store."),
    tag: str = typer.Option(..., help="Remove rows with this tag, e.g. task:cartpole:swingup."),
) -> None:
    """Remove stored rows by tag."""
    try:
        removed = _open_store(config).delete_by_tag(tag)
    except PlanarError as e:
        _fail(e)
        return
    console.print(f"Removed {removed} rows tagged {tag}")


@app.command()  # type: ignore
def version() -> None:
    """Print the installed version."""
    console.print(__version__)


if __name__ == "__main__":
    app()
