import math

import numpy as np
import pytest

from planarsuite import suite
from planarsuite.environment import (
    ArraySpec,
    StepType,
    discount_from_time_constant,
    flatten_observation,
    time_constant_from_discount,
)
from planarsuite.errors import (
    ConfigurationError,
    ContractError,
    EpisodeProtocolError,
    ParameterError,
)
from planarsuite.physics import Physics
from planarsuite.rendering import BACKGROUND, FrameBuffer, read_ppm, render_frame, write_ppm
from planarsuite.wrappers import FrameStackWrapper, PixelWrapper


class TestArraySpec:
    """Test suite for array specs."""

    def test_bounds_broadcast(self):
        spec = ArraySpec(shape=(3,), minimum=-1, maximum=1, name="action")
        assert spec.bounded
        np.testing.assert_array_equal(spec.minimum, [-1, -1, -1])
        assert spec.size == 3

    def test_unbounded(self):
        assert not ArraySpec(shape=(2,)).bounded
        assert not ArraySpec(shape=(2,), minimum=-np.inf, maximum=np.inf).bounded

    def test_validate_shape(self):
        spec = ArraySpec(shape=(2,), name="action")
        with pytest.raises(ContractError, match="action"):
            spec.validate([1.0, 2.0, 3.0])

    def test_clip(self):
        spec = ArraySpec(shape=(2,), minimum=-1, maximum=1)
        np.testing.assert_array_equal(spec.clip(np.array([-3.0, 0.5])), [-1.0, 0.5])

    def test_inverted_bounds(self):
        with pytest.raises(ParameterError):
            ArraySpec(shape=(1,), minimum=1, maximum=0)


class TestDiscountHelpers:
    """Test suite for discount/time-constant conversions."""

    def test_round_trip(self):
        gamma = discount_from_time_constant(0.5, 0.02)
        assert gamma == pytest.approx(math.exp(-0.04))
        assert time_constant_from_discount(gamma, 0.02) == pytest.approx(0.5)

    def test_invalid(self):
        with pytest.raises(ParameterError):
            time_constant_from_discount(1.0, 0.02)
        with pytest.raises(ParameterError):
            discount_from_time_constant(0.0, 0.02)


class TestControlEnvironment:
    """Test suite for the episodic environment contract."""

    def setup_method(self):
        self.env = suite.load("pendulum", "swingup", seed=3, episode_length=5)

    def test_first_step(self):
        time_step = self.env.reset()
        assert time_step.step_type is StepType.FIRST
        assert time_step.first()
        assert time_step.reward is None and time_step.discount is None
        assert list(time_step.observation) == ["orientation", "velocity"]

    def test_episode_ends_after_episode_length(self):
        time_step = self.env.reset()
        types = []
        while not time_step.last():
            time_step = self.env.step([0.0])
            types.append(time_step.step_type)
        assert types == [StepType.MID] * 4 + [StepType.LAST]
        assert time_step.discount == 1.0

    def test_step_before_reset(self):
        with pytest.raises(EpisodeProtocolError):
            self.env.step([0.0])

    def test_step_after_last(self):
        self.env.reset()
        for _ in range(5):
            self.env.step([0.0])
        with pytest.raises(EpisodeProtocolError):
            self.env.step([0.0])

    def test_wrong_action_shape(self):
        self.env.reset()
        with pytest.raises(ContractError):
            self.env.step([0.0, 0.0])

    def test_non_finite_action(self):
        self.env.reset()
        with pytest.raises(ContractError, match="finite"):
            self.env.step([np.nan])

    def test_out_of_range_action_is_clipped(self):
        self.env.reset()
        self.env.step([7.0])
        np.testing.assert_allclose(self.env.physics.data.ctrl, [1.0])

    def test_observations_are_copies(self):
        time_step = self.env.reset()
        time_step.observation["velocity"][:] = 99.0
        assert self.env.physics.data.qvel[0] != 99.0

    def test_control_timestep(self):
        assert self.env.control_timestep() == pytest.approx(self.env.physics.timestep * self.env.n_sub_steps)

    def test_name(self):
        assert self.env.name == "pendulum:swingup"

    def test_same_seed_same_trajectory(self):
        other = suite.load("pendulum", "swingup", seed=3, episode_length=5)
        a, b = self.env.reset(), other.reset()
        for _ in range(5):
            np.testing.assert_array_equal(flatten_observation(a.observation), flatten_observation(b.observation))
            a, b = self.env.step([0.3]), other.step([0.3])
        assert a.reward == b.reward

    def test_flatten_observation(self):
        time_step = self.env.reset()
        assert flatten_observation(time_step.observation).shape == (3,)
        assert flatten_observation({}).shape == (0,)

    def test_invalid_lengths(self):
        with pytest.raises(ParameterError):
            suite.load("pendulum", "swingup", episode_length=0)


class TestRendering:
    """Test suite for the planar rasteriser."""

    def setup_method(self):
        self.env = suite.load("cartpole", "balance", seed=0)
        self.env.reset()

    def test_frame_size(self):
        frame = render_frame(self.env.physics, width=84, height=84)
        assert isinstance(frame, FrameBuffer)
        assert len(frame.tobytes()) == 84 * 84 * 3 == len(frame)

    def test_empty_scene_is_background(self):
        physics = Physics.from_xml_string("<mujoco><worldbody/></mujoco>")
        pixels = physics.render(16, 12)
        expected = np.round(np.array(BACKGROUND) * 255).astype(np.uint8)
        assert np.all(pixels == expected)

    def test_reward_tint_changes_geoms_only(self):
        physics = self.env.physics
        dim = render_frame(physics, width=64, height=64, reward_tint=0.0).pixels
        lit = render_frame(physics, width=64, height=64, reward_tint=1.0).pixels
        assert not np.array_equal(dim, lit)
        corner = (0, 0)
        np.testing.assert_array_equal(dim[corner], lit[corner])

    def test_unknown_camera(self):
        with pytest.raises(ConfigurationError):
            render_frame(self.env.physics, camera="missing")
        with pytest.raises(ConfigurationError):
            render_frame(self.env.physics, camera=17)

    def test_render_is_deterministic(self):
        a = self.env.render(32, 24)
        b = self.env.render(32, 24)
        np.testing.assert_array_equal(a, b)

    def test_ppm_round_trip(self, tmp_path):
        pixels = self.env.render(20, 10)
        path = write_ppm(pixels, tmp_path / "frame.ppm")
        np.testing.assert_array_equal(read_ppm(path), pixels)


class TestWrappers:
    """Test suite for pixel observations and frame stacking."""

    def setup_method(self):
        self.env = suite.load("pendulum", "swingup", seed=0, episode_length=4)

    def test_pixels_only(self):
        env = PixelWrapper(self.env)
        time_step = env.reset()
        assert list(time_step.observation) == ["pixels"]
        assert time_step.observation["pixels"].shape == (84, 84, 3)
        assert time_step.observation["pixels"].dtype == np.uint8
        assert env.observation_spec()["pixels"].shape == (84, 84, 3)

    def test_pixels_with_features(self):
        env = PixelWrapper(self.env, pixels_only=False)
        time_step = env.reset()
        assert list(time_step.observation) == ["orientation", "velocity", "pixels"]

    def test_key_clash(self):
        with pytest.raises(ConfigurationError):
            PixelWrapper(self.env, pixels_only=False, observation_key="velocity")

    def test_unknown_camera_fails_early(self):
        with pytest.raises(ConfigurationError):
            PixelWrapper(self.env, camera="missing")

    def test_frame_stack(self):
        env = FrameStackWrapper(PixelWrapper(self.env), num_frames=3)
        assert env.observation_spec()["pixels"].shape == (84, 84, 9)
        time_step = env.reset()
        stacked = time_step.observation["pixels"]
        assert stacked.shape == (84, 84, 9)
        np.testing.assert_array_equal(stacked[..., :3], stacked[..., 6:])
        time_step = env.step([1.0])
        assert time_step.observation["pixels"].shape == (84, 84, 9)

    def test_frame_stack_needs_pixels(self):
        with pytest.raises(ConfigurationError):
            FrameStackWrapper(self.env)

    def test_wrapper_forwards_attributes(self):
        env = PixelWrapper(self.env)
        assert env.physics is self.env.physics
        assert env.unwrapped is self.env
