"""Benchmark harness: episode runner, seeded learning curves, CSV and SVG output."""

import csv
import logging
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import suite
from .agents import Agent, make_agent
from .config import BenchConfig
from .environment import ControlEnvironment, TimeStep
from .errors import ParameterError, PhysicsDivergenceError
from .results.store import EvalRow, ResultStore

logger = logging.getLogger(__name__)

CSV_FIELDS = ("domain", "task", "agent", "seed", "env_steps", "mean_return", "wallclock_s")
PERCENTILES = (5.0, 50.0, 95.0)
THROUGHPUT_ENV = "PLANAR_MIN_STEPS_PER_SEC"
DEFAULT_MIN_STEPS_PER_SEC = 200.0
RANDOM_UNBOUNDED_SCALE = 1.0


@dataclass(frozen=True)
class EpisodeResult:
    """Return and length of one episode."""

    domain: str
    task: str
    agent: str
    seed: Optional[int]
    episode: int
    episode_return: float
    steps: int
    wallclock_s: float


@dataclass(frozen=True, eq=False)
class LearningCurve:
    """Evaluation returns of one (domain, task, agent) across seeds.

    ``steps`` is strictly increasing; the bands hold the 5th, 50th and 95th
    percentiles across seeds at each step.
    """

    domain: str
    task: str
    agent: str
    steps: np.ndarray
    p5: np.ndarray
    median: np.ndarray
    p95: np.ndarray
    n_seeds: int

    def __post_init__(self) -> None:
        steps = np.asarray(self.steps, dtype=np.int64)
        if steps.ndim != 1 or steps.size == 0:
            raise ParameterError("A learning curve needs at least one evaluation point")
        if np.any(np.diff(steps) <= 0):
            raise ParameterError(f"Curve steps must be strictly increasing, got {steps.tolist()}")
        object.__setattr__(self, "steps", steps)
        for band in ("p5", "median", "p95"):
            values = np.asarray(getattr(self, band), dtype=float)
            if values.shape != steps.shape:
                raise ParameterError(f"Band '{band}' has shape {values.shape}, expected {steps.shape}")
            object.__setattr__(self, band, values)

    @property
    def label(self) -> str:
        return f"{self.domain}:{self.task}"


def _split_name(env: ControlEnvironment) -> Tuple[str, str]:
    domain, _, task = env.name.partition(":")
    return domain, task


def run_episode(
    env: ControlEnvironment,
    agent: Agent,
    explore: bool = False,
    train: bool = False,
    episode: int = 0,
    seed: Optional[int] = None,
) -> EpisodeResult:
    """
    Run one full episode and sum its rewards.

    Args:
        env: Environment to reset and step
        agent: Agent choosing the actions
        explore: Let the agent add exploration noise
        train: Feed transitions to the agent and run its updates
        episode: Index recorded in the result
        seed: Seed recorded in the result

    Returns:
        The ``EpisodeResult``

    Raises:
        PhysicsDivergenceError: If the simulation diverges; the message names
            the task, agent and step
    """
    domain, task = _split_name(env)
    start = time.perf_counter()
    agent.begin_episode()
    time_step = env.reset()
    total = 0.0
    steps = 0
    while not time_step.last():
        action = agent.select_action(time_step, explore=explore)
        try:
            next_step = env.step(action)
        except PhysicsDivergenceError as e:
            logger.error("%s diverged under %s at step %d", env.name, agent.name, steps)
            raise PhysicsDivergenceError(
                f"{env.name} with agent '{agent.name}', episode {episode}, step {steps}: {e}"
            ) from e
        if train:
            agent.observe(time_step, action, next_step)
            agent.update()
        total += float(next_step.reward or 0.0)
        steps += 1
        time_step = next_step
    return EpisodeResult(
        domain=domain,
        task=task,
        agent=agent.name,
        seed=seed,
        episode=episode,
        episode_return=total,
        steps=steps,
        wallclock_s=time.perf_counter() - start,
    )


def job_seeds(domain: str, task: str, seed: int) -> Tuple[int, int, int]:
    """Independent (training env, evaluation env, agent) seeds of one job."""
    label = zlib.crc32(f"{domain}:{task}".encode("utf-8"))
    children = np.random.SeedSequence([seed, label]).spawn(3)
    return tuple(int(child.generate_state(1, np.uint32)[0]) for child in children)  # type: ignore[return-value]


def build_agent(name: str, env: ControlEnvironment, seed: Optional[int], overrides: Optional[Dict] = None) -> Agent:
    """``make_agent`` with a Gaussian fallback for random agents on unbounded actions."""
    overrides = dict(overrides or {})
    if name == "random" and not env.action_spec().bounded:
        overrides.setdefault("unbounded_scale", RANDOM_UNBOUNDED_SCALE)
    return make_agent(name, env, seed=seed, **overrides)


class _Trainer:
    """Steps a training environment across episode boundaries."""

    def __init__(self, env: ControlEnvironment, agent: Agent) -> None:
        self._env = env
        self._agent = agent
        self._time_step: Optional[TimeStep] = None
        self.env_steps = 0
        self.episodes = 0

    def advance(self, target_steps: int) -> None:
        while self.env_steps < target_steps:
            if self._time_step is None or self._time_step.last():
                self._agent.begin_episode()
                self._time_step = self._env.reset()
            action = self._agent.select_action(self._time_step, explore=True)
            try:
                next_step = self._env.step(action)
            except PhysicsDivergenceError as e:
                raise PhysicsDivergenceError(
                    f"{self._env.name} while training '{self._agent.name}' at env step {self.env_steps}: {e}"
                ) from e
            self._agent.observe(self._time_step, action, next_step)
            self._agent.update()
            self._time_step = next_step
            self.env_steps += 1
            if next_step.last():
                self.episodes += 1


def evaluate(env: ControlEnvironment, agent: Agent, episodes: int, seed: Optional[int] = None) -> float:
    """Mean exploration-free return over ``episodes`` episodes."""
    returns = [run_episode(env, agent, explore=False, episode=i, seed=seed).episode_return for i in range(episodes)]
    return float(np.mean(returns))


def run_job(config: BenchConfig, domain: str, task: str, seed: int) -> List[EvalRow]:
    """
    Train and evaluate one (task, seed) pair.

    Agents that do not learn skip training: only their evaluations run, at the
    same evaluation points.

    Returns:
        One row per evaluation point
    """
    train_seed, eval_seed, agent_seed = job_seeds(domain, task, seed)
    train_env = suite.load(domain, task, seed=train_seed, episode_length=config.episode_length)
    eval_env = suite.load(domain, task, seed=eval_seed, episode_length=config.episode_length)
    agent = build_agent(config.agent, train_env, agent_seed, config.ddpg)
    trainer = _Trainer(train_env, agent)
    logger.info("Running %s:%s seed=%d agent=%s", domain, task, seed, config.agent)

    rows = []
    start = time.perf_counter()
    for point in config.eval_points:
        if agent.is_learning:
            trainer.advance(point)
        mean_return = evaluate(eval_env, agent, config.eval_episodes, seed)
        wallclock = time.perf_counter() - start if config.record_wallclock else 0.0
        logger.debug("%s:%s seed=%d step=%d return=%.2f", domain, task, seed, point, mean_return)
        rows.append(
            EvalRow(
                domain=domain,
                task=task,
                agent=config.agent,
                seed=seed,
                env_steps=point,
                mean_return=mean_return,
                wallclock_s=round(wallclock, 6),
            )
        )
    return rows


def _run_job_args(args: Tuple[BenchConfig, str, str, int]) -> List[EvalRow]:
    return run_job(*args)


def stored_job(store: ResultStore, config: BenchConfig, domain: str, task: str, seed: int) -> Optional[List[EvalRow]]:
    """Rows of a job already complete in ``store``, i.e. at every evaluation point of ``config``."""
    rows = store.job_rows(domain, task, config.agent, seed)
    if tuple(row.env_steps for row in rows) != config.eval_points:
        return None
    return rows


def run_benchmark(config: BenchConfig, store: Optional[ResultStore] = None) -> List[EvalRow]:
    """
    Run every (task, seed) job of ``config`` and collect the evaluation rows.

    Jobs run in worker processes when ``config.workers > 1``; this function is
    the only writer to ``store`` and to the CSV and plot files. With
    ``config.resume`` set, jobs whose rows are already complete in the store
    are reused instead of run again.

    Args:
        config: The validated benchmark description
        store: Result store to write rows to (built from ``config.store`` if None)

    Returns:
        All rows, sorted by (domain, task, agent, seed, env_steps)
    """
    if store is None:
        store = ResultStore(config.store.backend, **config.store.options)

    rows: List[EvalRow] = []
    jobs = []
    for domain, task in config.tasks:
        for seed in config.seeds:
            reused = stored_job(store, config, domain, task, seed) if config.resume else None
            if reused is None:
                jobs.append((config, domain, task, seed))
            else:
                logger.info("Reusing stored %s:%s seed=%d", domain, task, seed)
                rows.extend(reused)
    logger.info(
        "Benchmark: %d jobs (%d reused), agent=%s, workers=%d",
        len(jobs), len(config.tasks) * len(config.seeds) - len(jobs), config.agent, config.workers,
    )

    def collect(job_rows: List[EvalRow]) -> None:
        removed = store.put_job(job_rows)
        if removed:
            logger.debug("Replaced %d stale rows of %s", removed, job_rows[0].job_tag)
        rows.extend(job_rows)

    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            for job_rows in executor.map(_run_job_args, jobs):
                collect(job_rows)
    else:
        for job in jobs:
            collect(run_job(*job))

    rows.sort(key=EvalRow.sort_key)
    if config.csv is not None:
        write_csv(rows, config.csv)
    if config.plot is not None:
        plot_curves(curves_from_rows(rows), config.plot)
    return rows


def write_csv(rows: Iterable[EvalRow], path: Union[str, Path]) -> Path:
    """Write rows with the ``domain,task,agent,seed,env_steps,mean_return,wallclock_s`` header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_FIELDS)
        for row in sorted(rows, key=EvalRow.sort_key):
            writer.writerow(
                [row.domain, row.task, row.agent, row.seed, row.env_steps, repr(row.mean_return), repr(row.wallclock_s)]
            )
    logger.info("Wrote %s", path)
    return path


def read_csv(path: Union[str, Path]) -> List[EvalRow]:
    """Read rows written by ``write_csv``."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ParameterError(f"{path} does not have the header {','.join(CSV_FIELDS)}")
        return [
            EvalRow(
                domain=record["domain"],
                task=record["task"],
                agent=record["agent"],
                seed=int(record["seed"]),
                env_steps=int(record["env_steps"]),
                mean_return=float(record["mean_return"]),
                wallclock_s=float(record["wallclock_s"]),
            )
            for record in reader
        ]


def curves_from_rows(rows: Iterable[EvalRow]) -> List[LearningCurve]:
    """Group rows by (domain, task, agent) and take percentiles across seeds."""
    grouped: Dict[Tuple[str, str, str], Dict[int, Dict[int, float]]] = {}
    for row in rows:
        by_seed = grouped.setdefault((row.domain, row.task, row.agent), {})
        by_seed.setdefault(row.seed, {})[row.env_steps] = row.mean_return

    curves = []
    for (domain, task, agent), by_seed in sorted(grouped.items()):
        steps = sorted({step for points in by_seed.values() for step in points})
        table = np.full((len(by_seed), len(steps)), np.nan)
        for i, points in enumerate(by_seed.values()):
            for j, step in enumerate(steps):
                table[i, j] = points.get(step, np.nan)
        p5, median, p95 = np.nanpercentile(table, PERCENTILES, axis=0)
        curves.append(
            LearningCurve(
                domain=domain, task=task, agent=agent, steps=np.asarray(steps),
                p5=p5, median=median, p95=p95, n_seeds=len(by_seed),
            )
        )
    return curves


def _hold(steps: np.ndarray, values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    # Zero-order hold; points before the first evaluation take its value.
    index = np.clip(np.searchsorted(steps, grid, side="right") - 1, 0, len(steps) - 1)
    return values[index]


def aggregate(curves: Sequence[LearningCurve]) -> LearningCurve:
    """
    Mean across tasks of each task's per-seed median.

    Curves with differing abscissae are resampled onto the union of their
    steps by step interpolation.

    Raises:
        ParameterError: If ``curves`` is empty
    """
    if not curves:
        raise ParameterError("Cannot aggregate an empty set of curves")
    grid = np.unique(np.concatenate([curve.steps for curve in curves]))
    bands = {
        band: np.mean([_hold(curve.steps, getattr(curve, band), grid) for curve in curves], axis=0)
        for band in ("p5", "median", "p95")
    }
    agents = sorted({curve.agent for curve in curves})
    return LearningCurve(
        domain="suite",
        task="mean",
        agent=",".join(agents),
        steps=grid,
        n_seeds=min(curve.n_seeds for curve in curves),
        **bands,
    )


def plot_curves(curves: Sequence[LearningCurve], path: Union[str, Path], columns: int = 4) -> Path:
    """
    Draw one panel per curve: median line over a 5th-95th percentile band.

    The format follows the file suffix (SVG by default).
    """
    from matplotlib.figure import Figure

    if not curves:
        raise ParameterError("Nothing to plot")
    path = Path(path)
    columns = max(1, min(columns, len(curves)))
    rows = -(-len(curves) // columns)
    figure = Figure(figsize=(3.2 * columns, 2.6 * rows))
    for index, curve in enumerate(curves):
        axes = figure.add_subplot(rows, columns, index + 1)
        axes.fill_between(curve.steps, curve.p5, curve.p95, alpha=0.3, linewidth=0)
        axes.plot(curve.steps, curve.median, linewidth=1.5)
        axes.set_title(curve.label, fontsize=9)
        axes.set_xlabel("environment steps", fontsize=8)
        if curve.domain != "lqr":
            axes.set_ylim(0, 1000)
        axes.tick_params(labelsize=7)
    figure.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(path, format=path.suffix.lstrip(".") or "svg")
    logger.info("Wrote %s", path)
    return path


def min_steps_per_sec() -> float:
    """
    Throughput threshold, in control steps per second, for one simulation process.

    The default of 200 steps/s is sized for the pure-numpy simulator in this
    package, which integrates one joint-space model per Python call. Figures
    around 10**5 steps/s quoted for compiled physics engines do not apply
    here. Set ``PLANAR_MIN_STEPS_PER_SEC`` to hold a faster machine or
    backend to a stricter bar.
    """
    raw = os.environ.get(THROUGHPUT_ENV)
    if raw is None:
        return DEFAULT_MIN_STEPS_PER_SEC
    try:
        return float(raw)
    except ValueError as e:
        raise ParameterError(f"{THROUGHPUT_ENV} must be a number, got {raw!r}") from e


def measure_throughput(
    domain: str = "pendulum", task: str = "swingup", steps: int = 2000, seed: int = 0
) -> float:
    """Control steps per second of a random agent, resets included."""
    env = suite.load(domain, task, seed=seed)
    agent = build_agent("random", env, seed)
    time_step = env.reset()
    start = time.perf_counter()
    for _ in range(steps):
        if time_step.last():
            time_step = env.reset()
        time_step = env.step(agent.select_action(time_step))
    elapsed = time.perf_counter() - start
    return steps / elapsed if elapsed > 0 else float("inf")
