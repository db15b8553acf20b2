"""Deep deterministic policy gradient agent on the numpy MLP substrate."""

import dataclasses
import logging
import pickle
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np

from ..environment import ArraySpec, TimeStep, flatten_observation
from ..errors import ConfigurationError, ParameterError
from .base import Agent
from .nn import Adam, Mlp
from .noise import OuNoise
from .replay import Batch, ReplayBuffer

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class DdpgConfig:
    """Hyperparameters; the defaults are the benchmark settings."""

    actor_layers: Tuple[int, ...] = (300, 200)
    critic_layers: Tuple[int, ...] = (400, 300)
    actor_lr: float = 1e-4
    critic_lr: float = 1e-4
    discount: float = 0.99
    tau: float = 1e-3
    batch_size: int = 64
    replay_capacity: int = 10**6
    ou_theta: float = 0.15
    ou_sigma: float = 0.3
    ou_dt: float = 1.0
    actor_grad_clip: float = 1.0
    warmup_steps: Optional[int] = None
    updates_per_step: int = 1
    final_init: float = 3e-3

    def __post_init__(self) -> None:
        object.__setattr__(self, "actor_layers", tuple(int(n) for n in self.actor_layers))
        object.__setattr__(self, "critic_layers", tuple(int(n) for n in self.critic_layers))
        if len(self.critic_layers) < 2:
            raise ParameterError("The critic needs at least two hidden layers")
        positive = {
            "actor_lr": self.actor_lr,
            "critic_lr": self.critic_lr,
            "batch_size": self.batch_size,
            "replay_capacity": self.replay_capacity,
            "ou_dt": self.ou_dt,
            "actor_grad_clip": self.actor_grad_clip,
            "updates_per_step": self.updates_per_step,
            "final_init": self.final_init,
        }
        for key, value in positive.items():
            if value <= 0:
                raise ParameterError(f"{key} must be positive, got {value}")
        if not 0.0 <= self.discount <= 1.0:
            raise ParameterError(f"discount must lie in [0, 1], got {self.discount}")
        if not 0.0 < self.tau <= 1.0:
            raise ParameterError(f"tau must lie in (0, 1], got {self.tau}")
        if self.ou_theta < 0 or self.ou_sigma < 0:
            raise ParameterError("OU parameters must be non-negative")
        if self.warmup_steps is not None and self.warmup_steps < 0:
            raise ParameterError(f"warmup_steps must be non-negative, got {self.warmup_steps}")
        if any(n <= 0 for n in self.actor_layers + self.critic_layers):
            raise ParameterError("Layer sizes must be positive")

    @property
    def effective_warmup(self) -> int:
        return self.batch_size if self.warmup_steps is None else self.warmup_steps

    @classmethod
    def from_mapping(cls, overrides: Optional[Mapping[str, Any]]) -> "DdpgConfig":
        """Build a config from a (YAML) mapping, rejecting unknown keys."""
        overrides = dict(overrides or {})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigurationError(f"Unknown ddpg settings: {', '.join(unknown)}")
        return cls(**overrides)


class DdpgAgent(Agent):
    """
    Actor-critic agent with target networks, replay and OU exploration.

    The actor maps a flattened observation through ReLU layers to a tanh
    output scaled onto the action bounds. The critic sees the observation,
    with the (normalised) action joining at its second layer. Both learn
    with independent Adam optimisers; the actor's parameter gradients are
    clipped elementwise.
    """

    name = "ddpg"

    def __init__(
        self,
        observation_dim: int,
        action_spec: ArraySpec,
        config: Optional[DdpgConfig] = None,
        seed: Optional[int] = None,
    ) -> None:
        if not action_spec.bounded:
            raise ConfigurationError("DDPG needs a bounded action spec")
        self.config = config or DdpgConfig()
        self.observation_dim = observation_dim
        self.action_spec = action_spec
        self.seed = seed
        action_dim = action_spec.size
        self._low = np.asarray(action_spec.minimum, dtype=float).ravel()
        self._high = np.asarray(action_spec.maximum, dtype=float).ravel()
        self._center = (self._high + self._low) / 2.0
        self._half_range = (self._high - self._low) / 2.0

        cfg = self.config
        net_seed, buffer_seed, noise_seed, act_seed = np.random.SeedSequence(seed).spawn(4)
        init_rng = np.random.default_rng(net_seed)
        self.actor = Mlp(
            observation_dim, cfg.actor_layers, action_dim, init_rng,
            output_activation="tanh", final_init=cfg.final_init,
        )
        self.critic = Mlp(
            observation_dim, cfg.critic_layers, 1, init_rng,
            extra_dim=action_dim, extra_at=1, final_init=cfg.final_init,
        )
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_optimizer = Adam(self.actor, lr=cfg.actor_lr)
        self.critic_optimizer = Adam(self.critic, lr=cfg.critic_lr)
        self.buffer = ReplayBuffer(
            cfg.replay_capacity, observation_dim, action_dim, rng=np.random.default_rng(buffer_seed)
        )
        self.noise = OuNoise(
            action_dim, theta=cfg.ou_theta, sigma=cfg.ou_sigma, dt=cfg.ou_dt,
            rng=np.random.default_rng(noise_seed),
        )
        self._rng = np.random.default_rng(act_seed)
        self.steps = 0
        self.updates = 0

    @property
    def is_learning(self) -> bool:
        return True

    def begin_episode(self) -> None:
        self.noise.reset()

    # -- acting --------------------------------------------------------------

    def _to_action(self, normalized: np.ndarray) -> np.ndarray:
        return self._center + self._half_range * normalized

    def _to_normalized(self, action: np.ndarray) -> np.ndarray:
        scale = np.where(self._half_range > 0, self._half_range, 1.0)
        return (np.asarray(action, dtype=float) - self._center) / scale

    def policy(self, observation: np.ndarray) -> np.ndarray:
        """Deterministic action for a flattened observation."""
        normalized = self.actor.forward(observation[None, :])[0]
        return self._to_action(normalized)

    def select_action(self, time_step: TimeStep, explore: bool = True) -> np.ndarray:
        observation = flatten_observation(time_step.observation)
        if explore and self.steps < self.config.effective_warmup:
            action = self._rng.uniform(self._low, self._high)
        else:
            normalized = self.actor.forward(observation[None, :])[0]
            if explore:
                normalized = normalized + self.noise.sample()
            action = self._to_action(np.clip(normalized, -1.0, 1.0))
        return action.reshape(self.action_spec.shape)

    def observe(self, time_step: TimeStep, action: np.ndarray, next_time_step: TimeStep) -> None:
        self.buffer.add(
            flatten_observation(time_step.observation),
            self._to_normalized(np.ravel(action)),
            float(next_time_step.reward),
            float(next_time_step.discount),
            flatten_observation(next_time_step.observation),
        )
        self.steps += 1

    # -- learning ------------------------------------------------------------

    def update(self) -> Dict[str, float]:
        cfg = self.config
        if len(self.buffer) < cfg.batch_size or self.steps < cfg.effective_warmup:
            return {}
        diagnostics: Dict[str, float] = {}
        for _ in range(cfg.updates_per_step):
            diagnostics = self.train_on_batch(self.buffer.sample(cfg.batch_size))
        return diagnostics

    def train_on_batch(self, batch: Batch) -> Dict[str, float]:
        """
        One critic and one actor step, followed by the soft target update.

        Returns:
            ``critic_loss`` (mean squared TD error) and ``actor_objective``
            (mean critic value of the actor's actions)
        """
        cfg = self.config
        size = len(batch.reward)

        next_action = self.target_actor.forward(batch.next_observation)
        next_value = self.target_critic.forward(batch.next_observation, next_action)[:, 0]
        target = batch.reward + cfg.discount * batch.discount * next_value

        value = self.critic.forward(batch.observation, batch.action)[:, 0]
        td_error = value - target
        critic_loss = float(np.mean(td_error**2))
        critic_grads, _, _ = self.critic.backward((2.0 / size) * td_error[:, None])
        self.critic_optimizer.step(critic_grads)

        action = self.actor.forward(batch.observation)
        actor_objective = float(np.mean(self.critic.forward(batch.observation, action)))
        _, _, grad_action = self.critic.backward(np.full((size, 1), -1.0 / size))
        actor_grads, _, _ = self.actor.backward(grad_action)
        clip = cfg.actor_grad_clip
        self.actor_optimizer.step([np.clip(g, -clip, clip) for g in actor_grads])

        self._soft_update(self.target_actor, self.actor)
        self._soft_update(self.target_critic, self.critic)
        self.updates += 1
        return {"critic_loss": critic_loss, "actor_objective": actor_objective}

    def _soft_update(self, target: Mlp, online: Mlp) -> None:
        tau = self.config.tau
        target.set_params(
            [(1.0 - tau) * t + tau * o for t, o in zip(target.parameters, online.parameters)]
        )

    # -- checkpoints ---------------------------------------------------------

    def state_dict(self) -> Dict[str, Any]:
        return {
            "version": CHECKPOINT_VERSION,
            "config": dataclasses.asdict(self.config),
            "observation_dim": self.observation_dim,
            "action_spec": {
                "shape": self.action_spec.shape,
                "name": self.action_spec.name,
                "minimum": self._low.copy(),
                "maximum": self._high.copy(),
            },
            "seed": self.seed,
            "actor": self.actor.get_params(),
            "critic": self.critic.get_params(),
            "target_actor": self.target_actor.get_params(),
            "target_critic": self.target_critic.get_params(),
            "actor_optimizer": self.actor_optimizer.state_dict(),
            "critic_optimizer": self.critic_optimizer.state_dict(),
            "noise": self.noise.state_dict(),
            "buffer": self.buffer.state_dict(),
            "rng": self._rng.bit_generator.state,
            "steps": self.steps,
            "updates": self.updates,
        }

    def save(self, path: Union[str, Path]) -> Path:
        """Write a versioned pickle checkpoint."""
        path = Path(path)
        with open(path, "wb") as handle:
            pickle.dump(self.state_dict(), handle, protocol=pickle.HIGHEST_PROTOCOL)
        logger.debug("Saved DDPG checkpoint to %s (%d steps)", path, self.steps)
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "DdpgAgent":
        """Restore an agent written by ``save``; further behaviour is bit-identical."""
        with open(path, "rb") as handle:
            state = pickle.load(handle)
        version = state.get("version") if isinstance(state, dict) else None
        if version != CHECKPOINT_VERSION:
            raise ConfigurationError(
                f"Unsupported checkpoint version {version!r}; expected {CHECKPOINT_VERSION}"
            )
        spec_state = state["action_spec"]
        spec = ArraySpec(
            shape=tuple(spec_state["shape"]),
            name=spec_state["name"],
            minimum=spec_state["minimum"].reshape(spec_state["shape"]),
            maximum=spec_state["maximum"].reshape(spec_state["shape"]),
        )
        agent = cls(state["observation_dim"], spec, DdpgConfig(**state["config"]), state["seed"])
        agent.actor.set_params(state["actor"])
        agent.critic.set_params(state["critic"])
        agent.target_actor.set_params(state["target_actor"])
        agent.target_critic.set_params(state["target_critic"])
        agent.actor_optimizer.load_state_dict(state["actor_optimizer"])
        agent.critic_optimizer.load_state_dict(state["critic_optimizer"])
        agent.noise.load_state_dict(state["noise"])
        agent.buffer.load_state_dict(state["buffer"])
        agent._rng.bit_generator.state = state["rng"]
        agent.steps = state["steps"]
        agent.updates = state["updates"]
        return agent
