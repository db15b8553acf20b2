import numpy as np
import pytest

from planarsuite import bench, suite
from planarsuite.agents import Agent, RandomAgent
from planarsuite.config import config_from_mapping
from planarsuite.environment import StepType, TimeStep
from planarsuite.errors import ParameterError, PhysicsDivergenceError
from planarsuite.results.store import EvalRow, ResultStore


class ConstantRewardEnv:
    """Episodes of ``length`` steps that each pay ``reward``."""

    name = "stub:constant"

    def __init__(self, length=1000, reward=1.0, diverge_at=None):
        self.length = length
        self.reward = reward
        self.diverge_at = diverge_at
        self.t = 0

    def reset(self):
        self.t = 0
        return TimeStep(StepType.FIRST, None, None, {"x": np.zeros(1)})

    def step(self, action):
        if self.t == self.diverge_at:
            raise PhysicsDivergenceError("joint 'slider' diverged")
        self.t += 1
        kind = StepType.LAST if self.t == self.length else StepType.MID
        return TimeStep(kind, self.reward, 1.0, {"x": np.zeros(1)})


class ZeroAgent(Agent):
    name = "zero"

    def __init__(self):
        self.observed = 0

    def select_action(self, time_step, explore=True):
        return np.zeros(1)

    def observe(self, time_step, action, next_time_step):
        self.observed += 1


def small_config(**changes):
    document = {
        "agent": "random",
        "tasks": ["pendulum:swingup", "point_mass:easy"],
        "seeds": 3,
        "total_steps": 50,
        "eval_every": 10,
        "eval_episodes": 1,
        "episode_length": 10,
        "record_wallclock": False,
    }
    document.update(changes)
    return config_from_mapping(document)


class TestRunEpisode:
    """Test suite for single episodes."""

    def test_unit_rewards_sum_to_episode_length(self):
        result = bench.run_episode(ConstantRewardEnv(), ZeroAgent(), seed=4)
        assert result.episode_return == 1000.0
        assert result.steps == 1000
        assert (result.domain, result.task, result.agent, result.seed) == ("stub", "constant", "zero", 4)

    def test_training_observes_transitions(self):
        agent = ZeroAgent()
        bench.run_episode(ConstantRewardEnv(length=7), agent, train=True)
        assert agent.observed == 7

    def test_divergence_names_task_and_step(self):
        with pytest.raises(PhysicsDivergenceError) as excinfo:
            bench.run_episode(ConstantRewardEnv(diverge_at=3), ZeroAgent(), episode=2)
        message = str(excinfo.value)
        assert "stub:constant" in message
        assert "'zero'" in message
        assert "episode 2, step 3" in message
        assert "slider" in message

    def test_random_return_is_in_range(self):
        env = suite.load("cartpole", "balance", seed=0, episode_length=50)
        agent = RandomAgent(env.action_spec(), seed=0)
        result = bench.run_episode(env, agent)
        assert result.steps == 50
        assert 0.0 <= result.episode_return <= 50.0


class TestSeeds:
    """Test suite for per-job seed derivation."""

    def test_seeds_are_deterministic_and_distinct(self):
        seeds = bench.job_seeds("cartpole", "swingup", 0)
        assert seeds == bench.job_seeds("cartpole", "swingup", 0)
        assert len(set(seeds)) == 3
        assert seeds != bench.job_seeds("cartpole", "swingup", 1)
        assert seeds != bench.job_seeds("cartpole", "balance", 0)

    def test_random_agent_on_unbounded_actions(self):
        agent = bench.build_agent("random", suite.load("lqr", "lqr_2_1"), seed=0)
        assert agent.select_action().shape == (1,)


class TestRunBenchmark:
    """Test suite for full benchmark runs."""

    def test_row_count_and_order(self):
        store = ResultStore()
        rows = bench.run_benchmark(small_config(), store=store)
        assert len(rows) == 2 * 3 * 5
        assert rows == sorted(rows, key=EvalRow.sort_key)
        assert {row.env_steps for row in rows} == {10, 20, 30, 40, 50}
        assert store.rows() == rows
        assert all(row.wallclock_s == 0.0 for row in rows)
        assert all(0.0 <= row.mean_return <= 10.0 for row in rows)

    def test_deterministic(self):
        assert bench.run_benchmark(small_config()) == bench.run_benchmark(small_config())

    def test_resume_reuses_complete_jobs(self, monkeypatch):
        store = ResultStore()
        done = [EvalRow("pendulum", "swingup", "random", 0, steps, -7.0) for steps in (10, 20, 30, 40, 50)]
        partial = [EvalRow("pendulum", "swingup", "random", 1, 10, -7.0), EvalRow("pendulum", "swingup", "random", 1, 25, -7.0)]
        store.put_job(done)
        store.put_job(partial)
        ran = []
        run_job = bench.run_job
        monkeypatch.setattr(bench, "run_job", lambda *job: ran.append(job[1:]) or run_job(*job))

        rows = bench.run_benchmark(small_config(resume=True), store=store)
        assert len(rows) == 2 * 3 * 5
        assert ("pendulum", "swingup", 0) not in ran
        assert ("pendulum", "swingup", 1) in ran
        assert [row.mean_return for row in rows if row.seed == 0 and row.domain == "pendulum"] == [-7.0] * 5
        job = store.job_rows("pendulum", "swingup", "random", 1)
        assert [row.env_steps for row in job] == [10, 20, 30, 40, 50]
        assert all(row.mean_return >= 0 for row in job)
        assert store.rows() == rows

    def test_without_resume_jobs_are_rerun(self):
        store = ResultStore()
        store.put_job([EvalRow("pendulum", "swingup", "random", 0, steps, -7.0) for steps in (10, 20, 30, 40, 50)])
        rows = bench.run_benchmark(small_config(), store=store)
        assert all(row.mean_return >= 0 for row in rows)
        assert store.rows() == rows

    def test_writes_csv_and_plot(self, tmp_path):
        config = small_config(csv=str(tmp_path / "out" / "rows.csv"), plot=str(tmp_path / "out" / "curves.svg"))
        rows = bench.run_benchmark(config)
        assert bench.read_csv(config.csv) == rows
        assert config.plot.read_text().lstrip().startswith("<?xml")

    def test_lqr_agent_on_lqr_task(self):
        config = small_config(agent="lqr", tasks=["lqr:lqr_2_1"], seeds=1)
        rows = bench.run_benchmark(config)
        assert len(rows) == 5
        assert all(row.mean_return < 0 for row in rows)

    def test_learning_agent_trains_between_points(self):
        config = small_config(
            agent="ddpg",
            tasks=["point_mass:easy"],
            seeds=1,
            total_steps=20,
            eval_every=10,
            ddpg={"actor_layers": [8, 8], "critic_layers": [8, 8], "batch_size": 4},
        )
        rows = bench.run_benchmark(config)
        assert [row.env_steps for row in rows] == [10, 20]

    @pytest.mark.slow
    def test_workers_match_serial_run(self):
        assert bench.run_benchmark(small_config(workers=2)) == bench.run_benchmark(small_config())


class TestCsv:
    """Test suite for the results file."""

    def test_round_trip(self, tmp_path, sample_rows):
        path = bench.write_csv(sample_rows, tmp_path / "rows.csv")
        header = path.read_text().splitlines()[0]
        assert header == "domain,task,agent,seed,env_steps,mean_return,wallclock_s"
        assert bench.read_csv(path) == sorted(sample_rows, key=EvalRow.sort_key)

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "rows.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ParameterError, match="header"):
            bench.read_csv(path)


class TestCurves:
    """Test suite for learning curves and their aggregate."""

    def test_percentiles_across_seeds(self, sample_rows):
        curves = bench.curves_from_rows(sample_rows)
        assert [curve.label for curve in curves] == ["cartpole:balance", "pendulum:swingup"]
        curve = curves[0]
        np.testing.assert_array_equal(curve.steps, [10, 20, 30])
        np.testing.assert_allclose(curve.median, [100.5, 200.5, 300.5])
        np.testing.assert_allclose(curve.p5, [100.05, 200.05, 300.05])
        np.testing.assert_allclose(curve.p95, [100.95, 200.95, 300.95])
        assert curve.n_seeds == 2

    def test_steps_must_increase(self):
        with pytest.raises(ParameterError, match="strictly increasing"):
            bench.LearningCurve("d", "t", "a", [10, 10], [0, 0], [0, 0], [0, 0], 1)
        with pytest.raises(ParameterError):
            bench.LearningCurve("d", "t", "a", [10, 20], [0], [0, 0], [0, 0], 1)

    def test_aggregate_of_one_curve_is_itself(self, sample_rows):
        curve = bench.curves_from_rows(sample_rows)[0]
        mean = bench.aggregate([curve])
        np.testing.assert_array_equal(mean.steps, curve.steps)
        np.testing.assert_allclose(mean.median, curve.median)
        assert mean.label == "suite:mean"

    def test_aggregate_averages_tasks(self):
        low = bench.LearningCurve("a", "x", "r", [10, 20], [0, 0], [0, 0], [0, 0], 3)
        high = bench.LearningCurve("b", "y", "r", [10, 20], [1000, 1000], [1000, 1000], [1000, 1000], 3)
        np.testing.assert_allclose(bench.aggregate([low, high]).median, [500, 500])

    def test_aggregate_resamples_onto_union(self):
        a = bench.LearningCurve("a", "x", "r", [10, 30], [0, 100], [0, 100], [0, 100], 1)
        b = bench.LearningCurve("b", "y", "r", [20], [50], [50], [50], 1)
        mean = bench.aggregate([a, b])
        np.testing.assert_array_equal(mean.steps, [10, 20, 30])
        np.testing.assert_allclose(mean.median, [25, 25, 75])

    def test_aggregate_of_nothing(self):
        with pytest.raises(ParameterError):
            bench.aggregate([])

    def test_plot_svg(self, tmp_path, sample_rows):
        curves = bench.curves_from_rows(sample_rows)
        path = bench.plot_curves(curves + [bench.aggregate(curves)], tmp_path / "curves.svg")
        text = path.read_text()
        assert "<svg" in text

    def test_plot_nothing(self, tmp_path):
        with pytest.raises(ParameterError):
            bench.plot_curves([], tmp_path / "curves.svg")


class TestThroughput:
    """Test suite for the simulation throughput gate."""

    def test_default_threshold(self, monkeypatch):
        monkeypatch.delenv(bench.THROUGHPUT_ENV, raising=False)
        assert bench.min_steps_per_sec() == bench.DEFAULT_MIN_STEPS_PER_SEC

    def test_threshold_from_environment(self, monkeypatch):
        monkeypatch.setenv(bench.THROUGHPUT_ENV, "50")
        assert bench.min_steps_per_sec() == 50.0
        monkeypatch.setenv(bench.THROUGHPUT_ENV, "fast")
        with pytest.raises(ParameterError):
            bench.min_steps_per_sec()

    def test_measure_is_positive(self):
        assert bench.measure_throughput(steps=20) > 0

    @pytest.mark.slow
    def test_meets_threshold(self):
        assert bench.measure_throughput() >= bench.min_steps_per_sec()
