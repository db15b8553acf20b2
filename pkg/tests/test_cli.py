import yaml
from typer.testing import CliRunner

from planarsuite import bench, cli
from planarsuite._version import __version__
from planarsuite.cli import app
from planarsuite.rendering import read_ppm
from planarsuite.results.store import ResultStore

runner = CliRunner()


class TestCli:
    """Test suite for the planarctl command line."""

    STORE_CONFIG = {
        "agent": "random",
        "tasks": ["pendulum:swingup"],
        "seeds": 1,
        "total_steps": 10,
        "eval_every": 10,
    }

    def test_version(self):
        result = runner.invoke(app, ["version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_list_extra(self):
        result = runner.invoke(app, ["list", "--tag", "extra"])
        assert result.exit_code == 0
        assert "two_poles" in result.output
        assert "lqr_2_1" in result.output
        assert "swimmer6" not in result.output

    def test_run_writes_csv(self, tmp_path):
        path = tmp_path / "returns.csv"
        result = runner.invoke(
            app,
            ["run", "--domain", "pendulum", "--task", "swingup", "--episodes", "2", "--csv", str(path)],
        )
        assert result.exit_code == 0, result.output
        assert "episode 1" in result.output
        rows = bench.read_csv(path)
        assert len(rows) == 2
        assert all(0.0 <= row.mean_return <= 1000.0 for row in rows)

    def test_unknown_task_exits_with_error(self):
        result = runner.invoke(app, ["run", "--domain", "cartpole", "--task", "juggle"])
        assert result.exit_code == 1
        assert "Unknown task" in result.output

    def test_lqr_solve(self):
        result = runner.invoke(app, ["lqr", "solve"])
        assert result.exit_code == 0, result.output
        assert "P =" in result.output and "K =" in result.output
        assert "spectral radius" in result.output

    def test_lqr_solve_rejects_nonlinear_task(self):
        result = runner.invoke(app, ["lqr", "solve", "--domain", "pendulum", "--task", "swingup"])
        assert result.exit_code == 1

    def test_render_frames(self, tmp_path):
        out = tmp_path / "frames" / "cartpole"
        result = runner.invoke(
            app,
            [
                "render", "--domain", "cartpole", "--task", "balance", "--out", str(out),
                "--frames", "2", "--width", "32", "--height", "24",
            ],
        )
        assert result.exit_code == 0, result.output
        frame = read_ppm(tmp_path / "frames" / "cartpole_0001.ppm")
        assert frame.shape == (24, 32, 3)

    def test_render_unknown_camera(self, tmp_path):
        result = runner.invoke(
            app,
            ["render", "--domain", "cartpole", "--task", "balance", "--out", str(tmp_path / "f"), "--camera", "missing"],
        )
        assert result.exit_code == 1

    def test_bench(self, tmp_path):
        config = tmp_path / "bench.yaml"
        csv = tmp_path / "rows.csv"
        config.write_text(
            yaml.safe_dump(
                {
                    "agent": "random",
                    "tasks": ["pendulum:swingup", "point_mass:easy"],
                    "seeds": 2,
                    "total_steps": 20,
                    "eval_every": 10,
                    "eval_episodes": 1,
                    "episode_length": 10,
                    "csv": str(csv),
                    "plot": str(tmp_path / "curves.svg"),
                }
            )
        )
        result = runner.invoke(app, ["bench", "--config", str(config)])
        assert result.exit_code == 0, result.output
        assert "pendulum:swingup" in result.output
        assert "Mean over tasks" in result.output
        assert len(bench.read_csv(csv)) == 2 * 2 * 2

    def test_bench_invalid_config(self, tmp_path):
        config = tmp_path / "bench.yaml"
        config.write_text("agent: random\n")
        result = runner.invoke(app, ["bench", "--config", str(config)])
        assert result.exit_code == 1
        assert "Missing configuration keys" in result.output

    def test_results_export_and_clear(self, tmp_path, monkeypatch, sample_rows):
        store = ResultStore()
        store.put_rows(sample_rows)
        monkeypatch.setattr(cli, "_open_store", lambda config: store)
        config = tmp_path / "bench.yaml"
        config.write_text(yaml.safe_dump(self.STORE_CONFIG))
        csv = tmp_path / "export.csv"

        result = runner.invoke(
            app, ["results", "export", "--config", str(config), "--csv", str(csv), "--tag", "task:cartpole:balance"]
        )
        assert result.exit_code == 0, result.output
        assert bench.read_csv(csv) == store.rows("task:cartpole:balance")

        result = runner.invoke(app, ["results", "clear", "--config", str(config), "--tag", "seed:0"])
        assert result.exit_code == 0, result.output
        assert "Removed 6 rows" in result.output
        assert {row.seed for row in store.rows()} == {1}

    def test_results_export_of_empty_store(self, tmp_path):
        config = tmp_path / "bench.yaml"
        config.write_text(yaml.safe_dump(self.STORE_CONFIG))
        result = runner.invoke(app, ["results", "export", "--config", str(config), "--csv", str(tmp_path / "x.csv")])
        assert result.exit_code == 1
        assert "No stored rows" in result.output
