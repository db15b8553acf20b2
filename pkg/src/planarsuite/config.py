"""Versioned YAML configuration of benchmark runs.

Example::

    version: 1
    agent: ddpg
    tasks: [point_mass:easy, cartpole:balance]
    seeds: [0, 1, 2]
    total_steps: 200000
    eval_every: 20000
    resume: true          # reuse jobs already complete in the store
    csv: results/ddpg.csv
    plot: results/ddpg.svg
    store:
      backend: memory
    ddpg:
      batch_size: 64
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import yaml

from . import suite
from .agents import AGENTS, DdpgConfig
from .errors import ConfigurationError, PlanarError
from .results.store import BACKENDS

logger = logging.getLogger(__name__)

CONFIG_VERSION = 1
TASK_SETS = {
    "benchmarking": lambda: suite.BENCHMARKING,
    "extra": lambda: suite.EXTRA,
    "all": lambda: suite.ALL_TASKS,
}
_STORE_OPTIONS = {"host", "port", "db", "password", "prefix"}
_KEYS = {
    "version", "agent", "tasks", "seeds", "total_steps", "eval_every", "eval_episodes",
    "episode_length", "workers", "record_wallclock", "resume", "csv", "plot", "store", "ddpg",
}
_REQUIRED = ("agent", "tasks", "seeds", "total_steps", "eval_every")


@dataclass(frozen=True)
class StoreConfig:
    backend: str = "memory"
    options: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class BenchConfig:
    """A validated benchmark run description."""

    agent: str
    tasks: Tuple[Tuple[str, str], ...]
    seeds: Tuple[int, ...]
    total_steps: int
    eval_every: int
    eval_episodes: int = 10
    episode_length: int = 1000
    workers: int = 1
    record_wallclock: bool = True
    resume: bool = False
    csv: Optional[Path] = None
    plot: Optional[Path] = None
    store: StoreConfig = field(default_factory=StoreConfig)
    ddpg: Dict[str, Any] = field(default_factory=dict)
    version: int = CONFIG_VERSION

    def __post_init__(self) -> None:
        if self.agent not in AGENTS:
            raise ConfigurationError(f"Unknown agent '{self.agent}'; expected one of {', '.join(AGENTS)}")
        if not self.tasks:
            raise ConfigurationError("At least one task is required")
        if not self.seeds:
            raise ConfigurationError("At least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError(f"Seeds must be distinct, got {list(self.seeds)}")
        for key in ("total_steps", "eval_every", "eval_episodes", "episode_length", "workers"):
            value = getattr(self, key)
            if not isinstance(value, int) or value <= 0:
                raise ConfigurationError(f"{key} must be a positive integer, got {value!r}")
        if self.eval_every > self.total_steps:
            raise ConfigurationError(
                f"eval_every ({self.eval_every}) exceeds total_steps ({self.total_steps})"
            )
        if self.store.backend not in BACKENDS:
            raise ConfigurationError(f"Unsupported backend: {self.store.backend}")
        unknown = set(self.store.options) - _STORE_OPTIONS
        if unknown:
            raise ConfigurationError(f"Unknown store settings: {', '.join(sorted(unknown))}")
        if self.agent == "ddpg":
            try:
                DdpgConfig.from_mapping(self.ddpg)
            except PlanarError as e:
                raise ConfigurationError(f"Invalid ddpg settings: {e}") from e
        elif self.ddpg:
            raise ConfigurationError(f"ddpg settings given for agent '{self.agent}'")

    @property
    def eval_points(self) -> Tuple[int, ...]:
        """Environment-step counts at which the policy is evaluated."""
        return tuple(range(self.eval_every, self.total_steps + 1, self.eval_every))


def parse_tasks(entries: Any) -> Tuple[Tuple[str, str], ...]:
    """Expand ``domain:task`` strings and task-set names into catalog pairs."""
    if isinstance(entries, str):
        entries = [entries]
    if not isinstance(entries, (list, tuple)):
        raise ConfigurationError(f"tasks must be a list, got {type(entries).__name__}")
    tasks = []
    for entry in entries:
        if not isinstance(entry, str):
            raise ConfigurationError(f"Task entries must be strings, got {entry!r}")
        if entry in TASK_SETS:
            expanded = TASK_SETS[entry]()
        else:
            domain, sep, task = entry.partition(":")
            if not sep:
                raise ConfigurationError(f"Task '{entry}' must look like domain:task")
            try:
                suite.task_def(domain, task)
            except PlanarError as e:
                raise ConfigurationError(str(e)) from e
            expanded = ((domain, task),)
        tasks.extend(pair for pair in expanded if pair not in tasks)
    return tuple(tasks)


def config_from_mapping(document: Mapping[str, Any]) -> BenchConfig:
    """Validate a parsed configuration document."""
    if not isinstance(document, Mapping):
        raise ConfigurationError("A benchmark configuration must be a mapping")
    unknown = set(document) - _KEYS
    if unknown:
        raise ConfigurationError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")
    version = document.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigurationError(f"Unsupported configuration version {version!r}; expected {CONFIG_VERSION}")
    missing = [key for key in _REQUIRED if key not in document]
    if missing:
        raise ConfigurationError(f"Missing configuration keys: {', '.join(missing)}")

    store = dict(document.get("store") or {})
    backend = store.pop("backend", "memory")
    seeds = document["seeds"]
    if isinstance(seeds, int):
        seeds = list(range(seeds))
    if not isinstance(seeds, (list, tuple)) or not all(isinstance(s, int) for s in seeds):
        raise ConfigurationError(f"seeds must be a list of integers or a count, got {seeds!r}")

    def path(key: str) -> Optional[Path]:
        value = document.get(key)
        return None if value is None else Path(value)

    return BenchConfig(
        agent=document["agent"],
        tasks=parse_tasks(document["tasks"]),
        seeds=tuple(seeds),
        total_steps=document["total_steps"],
        eval_every=document["eval_every"],
        eval_episodes=document.get("eval_episodes", 10),
        episode_length=document.get("episode_length", 1000),
        workers=document.get("workers", 1),
        record_wallclock=bool(document.get("record_wallclock", True)),
        resume=bool(document.get("resume", False)),
        csv=path("csv"),
        plot=path("plot"),
        store=StoreConfig(backend=backend, options=store),
        ddpg=dict(document.get("ddpg") or {}),
        version=version,
    )


def load_config(source: Union[str, Path]) -> BenchConfig:
    """Read and validate a YAML configuration file."""
    path = Path(source)
    try:
        document = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigurationError(f"Cannot read configuration {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Invalid YAML in {path}: {e}") from e
    config = config_from_mapping(document or {})
    logger.debug("Loaded configuration %s: %d tasks x %d seeds", path, len(config.tasks), len(config.seeds))
    return config


def dump_config(config: BenchConfig) -> str:
    """Serialise a configuration back to YAML."""
    document: Dict[str, Any] = {
        "version": config.version,
        "agent": config.agent,
        "tasks": [f"{domain}:{task}" for domain, task in config.tasks],
        "seeds": list(config.seeds),
        "total_steps": config.total_steps,
        "eval_every": config.eval_every,
        "eval_episodes": config.eval_episodes,
        "episode_length": config.episode_length,
        "workers": config.workers,
        "record_wallclock": config.record_wallclock,
        "resume": config.resume,
        "store": {"backend": config.store.backend, **config.store.options},
    }
    if config.csv is not None:
        document["csv"] = str(config.csv)
    if config.plot is not None:
        document["plot"] = str(config.plot)
    if config.ddpg:
        document["ddpg"] = dict(config.ddpg)
    return yaml.safe_dump(document, sort_keys=False)
