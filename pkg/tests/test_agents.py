import pickle

import numpy as np
import pytest
from scipy import stats

from planarsuite import bench, suite
from planarsuite.agents import (
    AdamMoments,
    DdpgAgent,
    DdpgConfig,
    LqrAgent,
    Mlp,
    OuNoise,
    RandomAgent,
    ReplayBuffer,
    adam_step,
    make_agent,
)
from planarsuite.config import config_from_mapping
from planarsuite.environment import ArraySpec, flatten_observation
from planarsuite.errors import ConfigurationError, ContractError, ParameterError

SMALL_DDPG = {
    "actor_layers": (16, 16),
    "critic_layers": (16, 16),
    "batch_size": 8,
    "replay_capacity": 500,
}


def fill_agent(agent, env, steps, seed=0):
    """Drive ``agent`` through ``steps`` exploring transitions of ``env``."""
    time_step = env.reset()
    agent.begin_episode()
    for _ in range(steps):
        if time_step.last():
            time_step = env.reset()
            agent.begin_episode()
        action = agent.select_action(time_step, explore=True)
        next_time_step = env.step(action)
        agent.observe(time_step, action, next_time_step)
        time_step = next_time_step


class TestMlp:
    """Test suite for the numpy network and its gradients."""

    def setup_method(self):
        self.rng = np.random.default_rng(0)
        self.net = Mlp(4, (8, 6), 2, self.rng, output_activation="tanh", extra_dim=3, extra_at=1)
        self.x = self.rng.standard_normal((5, 4))
        self.extra = self.rng.standard_normal((5, 3))
        self.weights = self.rng.standard_normal((5, 2))

    def loss(self):
        return float(np.sum(self.net.forward(self.x, self.extra) * self.weights))

    def test_output_shape_and_range(self):
        out = self.net.forward(self.x, self.extra)
        assert out.shape == (5, 2)
        assert np.all(np.abs(out) <= 1.0)

    def test_parameter_gradients_match_finite_differences(self):
        self.loss()
        grads, grad_x, grad_extra = self.net.backward(self.weights)
        eps = 1e-6
        for param, grad in zip(self.net.parameters, grads):
            for index in list(np.ndindex(param.shape))[:6]:
                original = param[index]
                param[index] = original + eps
                upper = self.loss()
                param[index] = original - eps
                lower = self.loss()
                param[index] = original
                numeric = (upper - lower) / (2 * eps)
                error = abs(grad[index] - numeric) / max(abs(grad[index]) + abs(numeric), 1e-8)
                assert error < 1e-4
        assert grad_x.shape == (5, 4)
        assert grad_extra.shape == (5, 3)

    def test_extra_input_gradient(self):
        self.loss()
        _, _, grad_extra = self.net.backward(self.weights)
        eps = 1e-6
        self.extra[2, 1] += eps
        upper = self.loss()
        self.extra[2, 1] -= 2 * eps
        lower = self.loss()
        self.extra[2, 1] += eps
        assert grad_extra[2, 1] == pytest.approx((upper - lower) / (2 * eps), rel=1e-4)

    def test_input_width_checked(self):
        with pytest.raises(ContractError):
            self.net.forward(np.zeros((1, 3)), self.extra[:1])
        with pytest.raises(ContractError, match="extra"):
            self.net.forward(self.x)

    def test_copy_is_independent(self):
        clone = self.net.copy()
        clone.parameters[0][...] = 0.0
        assert np.any(self.net.parameters[0] != 0.0)

    def test_invalid_layers(self):
        with pytest.raises(ParameterError):
            Mlp(4, (0,), 1, self.rng)


class TestAdam:
    """Test suite for the Adam update."""

    def test_first_step_moves_by_learning_rate(self):
        params = [np.array([1.0, -1.0])]
        grads = [np.array([0.5, -2.0])]
        moments = AdamMoments.zeros_like(params)
        updated = adam_step(params, grads, moments, lr=0.1)
        np.testing.assert_allclose(updated[0], [0.9, -0.9], atol=1e-6)
        assert moments.step == 1
        np.testing.assert_array_equal(params[0], [1.0, -1.0])

    def test_minimises_quadratic(self):
        params = [np.array([3.0])]
        moments = AdamMoments.zeros_like(params)
        for _ in range(2000):
            params = adam_step(params, [2 * params[0]], moments, lr=0.05)
        assert abs(params[0][0]) < 0.1


class TestReplayBuffer:
    """Test suite for the replay buffer."""

    def add(self, buffer, value):
        buffer.add(np.full(2, value), np.array([value]), value, 1.0, np.full(2, value + 1))

    def test_fifo_eviction(self):
        buffer = ReplayBuffer(3, 2, 1, seed=0)
        for value in range(5):
            self.add(buffer, value)
        assert len(buffer) == 3
        assert buffer.cursor == 2
        assert set(buffer.gather(np.arange(3)).reward) == {2.0, 3.0, 4.0}

    def test_grows_past_initial_allocation(self):
        buffer = ReplayBuffer(3000, 2, 1, seed=0)
        for value in range(1500):
            self.add(buffer, value)
        assert len(buffer) == 1500
        assert buffer.gather(np.array([1499])).reward[0] == 1499.0

    def test_sampling_is_uniform(self):
        buffer = ReplayBuffer(10, 2, 1, seed=1)
        for value in range(10):
            self.add(buffer, value)
        rewards = buffer.sample(20000).reward.astype(int)
        counts = np.bincount(rewards, minlength=10)
        assert stats.chisquare(counts).pvalue > 1e-3

    def test_empty_sample(self):
        with pytest.raises(ContractError):
            ReplayBuffer(3, 2, 1).sample(1)

    def test_shape_checks(self):
        buffer = ReplayBuffer(3, 2, 1)
        with pytest.raises(ContractError):
            buffer.add(np.zeros(3), np.zeros(1), 0.0, 1.0, np.zeros(2))
        with pytest.raises(ContractError):
            buffer.add(np.zeros(2), np.zeros(2), 0.0, 1.0, np.zeros(2))

    def test_load_smaller_state_into_grown_buffer(self):
        small = ReplayBuffer(3000, 2, 1, seed=2)
        for value in range(10):
            self.add(small, value)
        grown = ReplayBuffer(3000, 2, 1, seed=9)
        for value in range(2500):
            self.add(grown, -value)
        grown.load_state_dict(small.state_dict())
        assert len(grown) == 10
        assert grown.cursor == 10
        np.testing.assert_array_equal(grown.sample(50).reward, small.sample(50).reward)
        self.add(grown, 10)
        assert grown.gather(np.array([10])).reward[0] == 10.0

    def test_load_larger_state_into_fresh_buffer(self):
        big = ReplayBuffer(5000, 2, 1, seed=3)
        for value in range(4000):
            self.add(big, value)
        fresh = ReplayBuffer(10, 2, 1, seed=0)
        fresh.load_state_dict(big.state_dict())
        assert (fresh.capacity, len(fresh)) == (5000, 4000)
        np.testing.assert_array_equal(fresh.gather(np.arange(4000)).reward, np.arange(4000))
        np.testing.assert_array_equal(fresh.sample(50).reward, big.sample(50).reward)


class TestOuNoise:
    """Test suite for Ornstein-Uhlenbeck noise."""

    def test_deterministic_decay(self):
        noise = OuNoise(2, theta=0.15, sigma=0.0, dt=0.5)
        noise.x = np.ones(2)
        np.testing.assert_allclose(noise.sample(), np.full(2, 1 - 0.15 * 0.5))
        noise.reset()
        np.testing.assert_array_equal(noise.x, [0.0, 0.0])

    def test_seeded(self):
        a = OuNoise(3, seed=4)
        b = OuNoise(3, seed=4)
        np.testing.assert_array_equal(a.sample(), b.sample())

    def test_invalid(self):
        with pytest.raises(ParameterError):
            OuNoise(1, sigma=-1.0)


class TestBaselineAgents:
    """Test suite for the random and LQR agents."""

    def test_random_agent_in_bounds(self):
        spec = ArraySpec(shape=(2,), minimum=[-1, 0], maximum=[1, 2])
        agent = RandomAgent(spec, seed=0)
        for _ in range(100):
            action = agent.select_action()
            assert np.all(action >= spec.minimum) and np.all(action <= spec.maximum)
        assert not agent.is_learning

    def test_random_agent_unbounded(self):
        with pytest.raises(ConfigurationError, match="unbounded"):
            RandomAgent(ArraySpec(shape=(1,)))
        agent = RandomAgent(ArraySpec(shape=(1,)), seed=0, unbounded_scale=2.0)
        assert agent.select_action().shape == (1,)

    def test_lqr_agent_uses_gain(self):
        env = suite.load("lqr", "lqr_2_1", seed=0)
        agent = LqrAgent.for_environment(env)
        time_step = env.reset()
        expected = -agent.solution.K @ flatten_observation(time_step.observation)
        np.testing.assert_allclose(agent.select_action(time_step), expected)

    def test_lqr_agent_beats_zero_control(self):
        agent = LqrAgent.for_environment(suite.load("lqr", "lqr_2_1"))
        returns = {}
        for name in ("lqr", "zero"):
            env = suite.load("lqr", "lqr_2_1", seed=3, episode_length=200)
            time_step = env.reset()
            total = 0.0
            while not time_step.last():
                action = agent.select_action(time_step) if name == "lqr" else np.zeros(1)
                time_step = env.step(action)
                total += time_step.reward
            returns[name] = total
        assert returns["lqr"] > returns["zero"]


class TestDdpgConfig:
    """Test suite for DDPG hyperparameters."""

    def test_defaults(self):
        config = DdpgConfig()
        assert config.actor_layers == (300, 200)
        assert config.critic_layers == (400, 300)
        assert config.effective_warmup == config.batch_size

    def test_from_mapping(self):
        config = DdpgConfig.from_mapping({"actor_layers": [32, 32], "tau": 0.01})
        assert config.actor_layers == (32, 32)
        assert config.tau == 0.01

    def test_unknown_keys(self):
        with pytest.raises(ConfigurationError, match="learning_rate"):
            DdpgConfig.from_mapping({"learning_rate": 1e-3})

    @pytest.mark.parametrize(
        "overrides",
        [{"tau": 0.0}, {"discount": 1.5}, {"batch_size": 0}, {"critic_layers": (10,)}, {"ou_sigma": -0.1}],
    )
    def test_invalid(self, overrides):
        with pytest.raises(ParameterError):
            DdpgConfig(**overrides)


class TestDdpgAgent:
    """Test suite for the DDPG agent."""

    def setup_method(self):
        self.env = suite.load("point_mass", "easy", seed=0, episode_length=20)
        self.agent = make_agent("ddpg", self.env, seed=1, **SMALL_DDPG)

    def test_actions_in_bounds(self):
        time_step = self.env.reset()
        spec = self.env.action_spec()
        for explore in (True, False):
            for _ in range(20):
                action = self.agent.select_action(time_step, explore=explore)
                assert action.shape == spec.shape
                assert np.all(action >= spec.minimum) and np.all(action <= spec.maximum)

    def test_update_waits_for_warmup(self):
        assert self.agent.update() == {}
        fill_agent(self.agent, self.env, 10)
        diagnostics = self.agent.update()
        assert set(diagnostics) == {"critic_loss", "actor_objective"}
        assert self.agent.updates == 1

    def test_train_on_batch_moves_targets_by_tau(self):
        fill_agent(self.agent, self.env, 16)
        before = self.agent.target_actor.get_params()
        self.agent.train_on_batch(self.agent.buffer.sample(8))
        tau = self.agent.config.tau
        for old, target, online in zip(
            before, self.agent.target_actor.parameters, self.agent.actor.parameters
        ):
            np.testing.assert_allclose(target, (1 - tau) * old + tau * online)

    def test_checkpoint_round_trip(self, tmp_path):
        fill_agent(self.agent, self.env, 30)
        for _ in range(3):
            self.agent.update()
        path = self.agent.save(tmp_path / "agent.pkl")
        restored = DdpgAgent.load(path)

        time_step = self.env.reset()
        for _ in range(5):
            np.testing.assert_array_equal(
                self.agent.select_action(time_step), restored.select_action(time_step)
            )
        a = self.agent.update()
        b = restored.update()
        assert a == b
        for x, y in zip(self.agent.critic.parameters, restored.critic.parameters):
            np.testing.assert_array_equal(x, y)

    def test_checkpoint_version(self, tmp_path):
        path = tmp_path / "old.pkl"
        path.write_bytes(pickle.dumps({"version": 0}))
        with pytest.raises(ConfigurationError, match="version"):
            DdpgAgent.load(path)

    def test_needs_bounded_actions(self):
        with pytest.raises(ConfigurationError):
            DdpgAgent(4, ArraySpec(shape=(1,)))

    @pytest.mark.slow
    def test_trains_without_divergence(self):
        env = suite.load("cartpole", "balance", seed=0)
        agent = make_agent("ddpg", env, seed=0, actor_layers=(64, 64), critic_layers=(64, 64))
        time_step = env.reset()
        losses = []
        for _ in range(3000):
            if time_step.last():
                time_step = env.reset()
                agent.begin_episode()
            action = agent.select_action(time_step)
            next_time_step = env.step(action)
            agent.observe(time_step, action, next_time_step)
            diagnostics = agent.update()
            if diagnostics:
                losses.append(diagnostics["critic_loss"])
            time_step = next_time_step
        assert losses and np.all(np.isfinite(losses))

    @pytest.mark.slow
    def test_learns_point_mass(self):
        config = config_from_mapping(
            {
                "agent": "ddpg",
                "tasks": ["point_mass:easy"],
                "seeds": 5,
                "total_steps": 200_000,
                "eval_every": 20_000,
                "eval_episodes": 5,
                "workers": 5,
                "record_wallclock": False,
            }
        )
        rows = bench.run_benchmark(config)
        by_seed = {seed: [row for row in rows if row.seed == seed] for seed in config.seeds}
        solved = [seed for seed, seed_rows in by_seed.items() if max(r.mean_return for r in seed_rows) >= 500]
        assert len(solved) >= 3

        env = suite.load("point_mass", "easy", seed=100)
        random_mean = bench.evaluate(env, RandomAgent(env.action_spec(), seed=100), episodes=10)
        final_mean = np.mean([seed_rows[-1].mean_return for seed_rows in by_seed.values()])
        assert final_mean >= 5 * random_mean


class TestMakeAgent:
    """Test suite for the agent factory."""

    def test_dispatch(self):
        env = suite.load("pendulum", "swingup", seed=0)
        assert isinstance(make_agent("random", env, seed=0), RandomAgent)
        assert isinstance(make_agent("ddpg", env, seed=0, **SMALL_DDPG), DdpgAgent)
        assert isinstance(make_agent("lqr", suite.load("lqr", "lqr_2_1")), LqrAgent)

    def test_unknown_agent(self):
        with pytest.raises(ConfigurationError, match="Unsupported agent"):
            make_agent("ppo", suite.load("pendulum", "swingup"))

    def test_lqr_takes_no_settings(self):
        with pytest.raises(ConfigurationError):
            make_agent("lqr", suite.load("lqr", "lqr_2_1"), gain=1.0)
