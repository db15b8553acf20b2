"""Observation wrappers: pixel rendering and frame stacking."""

import collections
import logging
from typing import Any, Deque, Union

import numpy as np

from .environment import ArraySpec, Environment, TimeStep
from .errors import ConfigurationError, ParameterError

logger = logging.getLogger(__name__)

PIXELS_KEY = "pixels"


class Wrapper(Environment):
    """Forwards everything not overridden to the wrapped environment."""

    def __init__(self, env: Environment) -> None:
        self._env = env

    @property
    def unwrapped(self) -> Environment:
        env = self._env
        while isinstance(env, Wrapper):
            env = env._env
        return env

    def reset(self) -> TimeStep:
        return self._env.reset()

    def step(self, action: Any) -> TimeStep:
        return self._env.step(action)

    def action_spec(self) -> ArraySpec:
        return self._env.action_spec()

    def observation_spec(self):
        return self._env.observation_spec()

    def __getattr__(self, name: str) -> Any:
        if name.startswith("_"):
            raise AttributeError(name)
        return getattr(self._env, name)


class PixelWrapper(Wrapper):
    """Adds (or substitutes) rendered RGB frames to the observation map."""

    def __init__(
        self,
        env: Environment,
        width: int = 84,
        height: int = 84,
        pixels_only: bool = True,
        camera: Union[int, str] = -1,
        observation_key: str = PIXELS_KEY,
    ) -> None:
        """
        Args:
            env: An environment exposing ``render(width, height, camera)``
            width: Frame width in pixels
            height: Frame height in pixels
            pixels_only: Drop the feature observations
            camera: Camera name or index passed to ``render``
            observation_key: Key of the frame in the observation map

        Raises:
            ConfigurationError: If ``env`` cannot render or the key clashes
        """
        super().__init__(env)
        if not callable(getattr(env, "render", None)):
            raise ConfigurationError(f"{type(env).__name__} has no renderer; cannot add pixels")
        if width <= 0 or height <= 0:
            raise ParameterError(f"Frame size must be positive, got {width}x{height}")
        features = env.observation_spec()
        if not pixels_only and observation_key in features:
            raise ConfigurationError(f"Observation key '{observation_key}' already exists")
        self._width = width
        self._height = height
        self._pixels_only = pixels_only
        self._camera = camera
        self._key = observation_key

        pixel_spec = ArraySpec(
            shape=(height, width, 3), dtype=np.uint8, name=observation_key, minimum=0, maximum=255
        )
        spec: "collections.OrderedDict[str, ArraySpec]" = collections.OrderedDict()
        if not pixels_only:
            spec.update(features)
        spec[observation_key] = pixel_spec
        self._observation_spec = spec
        # Fail early on an unknown camera.
        self._render()

    def observation_spec(self):
        return self._observation_spec

    def _render(self) -> np.ndarray:
        return self._env.render(self._width, self._height, self._camera)  # type: ignore[attr-defined]

    def _add_pixels(self, time_step: TimeStep) -> TimeStep:
        observation: "collections.OrderedDict[str, np.ndarray]" = collections.OrderedDict()
        if not self._pixels_only:
            observation.update(time_step.observation)
        observation[self._key] = self._render()
        return time_step._replace(observation=observation)

    def reset(self) -> TimeStep:
        return self._add_pixels(self._env.reset())

    def step(self, action: Any) -> TimeStep:
        return self._add_pixels(self._env.step(action))


class FrameStackWrapper(Wrapper):
    """Concatenates the last ``num_frames`` frames along the channel axis."""

    def __init__(self, env: Environment, num_frames: int = 3, key: str = PIXELS_KEY) -> None:
        super().__init__(env)
        if num_frames < 1:
            raise ParameterError(f"num_frames must be >= 1, got {num_frames}")
        spec = env.observation_spec()
        if key not in spec:
            raise ConfigurationError(f"Observation has no '{key}' entry to stack")
        base = spec[key]
        self._key = key
        self._num_frames = num_frames
        self._frames: Deque[np.ndarray] = collections.deque(maxlen=num_frames)
        stacked = collections.OrderedDict(spec)
        stacked[key] = ArraySpec(
            shape=base.shape[:-1] + (base.shape[-1] * num_frames,),
            dtype=base.dtype,
            name=key,
            minimum=None if base.minimum is None else float(np.min(base.minimum)),
            maximum=None if base.maximum is None else float(np.max(base.maximum)),
        )
        self._observation_spec = stacked

    def observation_spec(self):
        return self._observation_spec

    def _stacked(self, time_step: TimeStep) -> TimeStep:
        observation = collections.OrderedDict(time_step.observation)
        observation[self._key] = np.concatenate(list(self._frames), axis=-1)
        return time_step._replace(observation=observation)

    def reset(self) -> TimeStep:
        time_step = self._env.reset()
        frame = time_step.observation[self._key]
        self._frames.clear()
        for _ in range(self._num_frames):
            self._frames.append(frame)
        return self._stacked(time_step)

    def step(self, action: Any) -> TimeStep:
        time_step = self._env.step(action)
        self._frames.append(time_step.observation[self._key])
        return self._stacked(time_step)
