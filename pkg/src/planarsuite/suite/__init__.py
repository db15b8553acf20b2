"""Catalog of planar control tasks.

Usage:
    >>> from planarsuite import suite
    >>> env = suite.load("cartpole", "swingup", seed=0)
    >>> time_step = env.reset()
"""

import logging
from typing import Dict, Iterator, Optional, Tuple

from ..environment import DEFAULT_EPISODE_LENGTH, ControlEnvironment, dimensions
from ..errors import UnknownTaskError
from . import acrobot, cartpole, lqr, point_mass, pendulum, reacher, swimmer
from .base import BENCHMARKING as BENCHMARKING_TAG
from .base import EXTRA as EXTRA_TAG
from .base import TaskDef

logger = logging.getLogger(__name__)

__all__ = [
    "ALL_TASKS",
    "BENCHMARKING",
    "EXTRA",
    "TASKS_BY_DOMAIN",
    "TaskDef",
    "dimensions",
    "iter_task_defs",
    "load",
    "task_def",
]

_DOMAINS = {
    "pendulum": pendulum,
    "acrobot": acrobot,
    "cartpole": cartpole,
    "point_mass": point_mass,
    "reacher": reacher,
    "swimmer": swimmer,
    "lqr": lqr,
}


def _tasks_tagged(tag: str) -> Tuple[Tuple[str, str], ...]:
    return tuple(
        (domain_name, task_name)
        for domain_name, domain in _DOMAINS.items()
        for task_name in domain.SUITE.tagged(tag)
    )


ALL_TASKS: Tuple[Tuple[str, str], ...] = tuple(
    (domain_name, task_name)
    for domain_name, domain in _DOMAINS.items()
    for task_name in domain.SUITE
)
BENCHMARKING = _tasks_tagged(BENCHMARKING_TAG)
EXTRA = _tasks_tagged(EXTRA_TAG)

TASKS_BY_DOMAIN: Dict[str, Tuple[str, ...]] = {
    domain_name: domain.SUITE.names() for domain_name, domain in _DOMAINS.items()
}


def _unknown(domain: str, task: str) -> UnknownTaskError:
    listing = ", ".join(f"{d}:{t}" for d, t in ALL_TASKS)
    return UnknownTaskError(f"Unknown task '{domain}:{task}'; valid tasks are: {listing}")


def task_def(domain: str, task: str) -> TaskDef:
    """Catalog entry of ``(domain, task)``."""
    module = _DOMAINS.get(domain)
    if module is None or task not in module.SUITE:
        raise _unknown(domain, task)
    return TaskDef(
        domain=domain,
        task=task,
        factory=module.SUITE.get(task),
        tags=tuple(sorted(module.SUITE.tags_of(task))),
    )


def iter_task_defs(tag: Optional[str] = None) -> Iterator[TaskDef]:
    """Catalog entries in order, optionally restricted to ``tag``."""
    for domain, task in ALL_TASKS:
        entry = task_def(domain, task)
        if tag is None or tag in entry.tags:
            yield entry


def load(
    domain: str,
    task: str,
    seed: Optional[int] = None,
    episode_length: int = DEFAULT_EPISODE_LENGTH,
    n_sub_steps: Optional[int] = None,
    visualize_reward: bool = False,
) -> ControlEnvironment:
    """
    Build the environment of a catalog task.

    Args:
        domain: Domain name, e.g. ``"cartpole"``
        task: Task name within the domain, e.g. ``"swingup"``
        seed: Seed of the environment's random stream
        episode_length: Control steps per episode
        n_sub_steps: Physics timesteps per control step (suite default if None)
        visualize_reward: Tint rendered frames by the last reward

    Returns:
        A ``ControlEnvironment``

    Raises:
        UnknownTaskError: If ``(domain, task)`` is not in the catalog
    """
    entry = task_def(domain, task)
    environment_kwargs = {
        "episode_length": episode_length,
        "n_sub_steps": n_sub_steps,
        "visualize_reward": visualize_reward,
    }
    logger.debug("Loading %s:%s (seed=%s)", domain, task, seed)
    return entry.factory(seed=seed, environment_kwargs=environment_kwargs)

