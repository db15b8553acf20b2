"""Baseline agents and the factory used by the benchmark harness."""

from typing import Any, Optional

from ..environment import ControlEnvironment, dimensions
from ..errors import ConfigurationError
from .base import Agent
from .baselines import LqrAgent, RandomAgent
from .ddpg import DdpgAgent, DdpgConfig
from .nn import Adam, AdamMoments, Mlp, adam_step
from .noise import OuNoise
from .replay import Batch, ReplayBuffer

AGENTS = ("random", "lqr", "ddpg")

__all__ = [
    "AGENTS",
    "Adam",
    "AdamMoments",
    "Agent",
    "Batch",
    "DdpgAgent",
    "DdpgConfig",
    "LqrAgent",
    "Mlp",
    "OuNoise",
    "RandomAgent",
    "ReplayBuffer",
    "adam_step",
    "make_agent",
]


def make_agent(
    name: str, env: ControlEnvironment, seed: Optional[int] = None, **overrides: Any
) -> Agent:
    """
    Build an agent for an environment.

    Args:
        name: The agent to use ('random', 'lqr' or 'ddpg')
        env: Environment whose specs the agent must match
        seed: Seed of the agent's own random streams
        **overrides: Additional arguments; ``DdpgConfig`` fields for 'ddpg',
            ``unbounded_scale`` for 'random'

    Returns:
        The agent
    """
    if name == "random":
        return RandomAgent(env.action_spec(), seed=seed, **overrides)
    if name == "lqr":
        if overrides:
            raise ConfigurationError(f"The lqr agent takes no settings, got {sorted(overrides)}")
        return LqrAgent.for_environment(env)
    if name == "ddpg":
        _, _, observation_dim = dimensions(env)
        return DdpgAgent(observation_dim, env.action_spec(), DdpgConfig.from_mapping(overrides), seed)
    raise ConfigurationError(f"Unsupported agent: {name}; expected one of {', '.join(AGENTS)}")
