"""End-to-end command tests at toy scale.

Every command runs through ``main`` exactly as a shell invocation would,
against a market small enough that train/eval finish in well under a
second each. Byte-level determinism of the written CSVs is asserted here;
the full-scale behaviour lives in the acceptance suite.
"""

import numpy as np
import pytest

from overbook.cli import main
from overbook.metrics import read_metrics_csv
from overbook.network import load_weights

TINY_CONFIG = """
capacity=6
class_means=4,4,4
cancel_rate=0.2
train_episodes=30
buffer_capacity=256
batch_size=8
warmup_steps=16
target_sync_interval=25
eval_episodes=8
seed=3
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_CONFIG)
    return path


def run(*argv):
    return main([str(a) for a in argv])


class TestTrainCommand:
    def test_writes_metrics_and_weights(self, config_file, tmp_path, capsys):
        out = tmp_path / "run"
        assert run("train", "--config", config_file, "--out", out) == 0
        lines = (out / "train_metrics.csv").read_text().splitlines()
        assert len(lines) == 1 + 30
        net = load_weights(out / "weights.txt")
        assert net.layer_dims == (6, 128, 128, 2)
        stdout = capsys.readouterr().out
        assert "training:" in stdout

    def test_reruns_are_byte_identical(self, config_file, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("train", "--config", config_file, "--out", a) == 0
        assert run("train", "--config", config_file, "--out", b) == 0
        assert (a / "train_metrics.csv").read_bytes() == (b / "train_metrics.csv").read_bytes()
        assert (a / "weights.txt").read_bytes() == (b / "weights.txt").read_bytes()

    def test_seed_flag_changes_run(self, config_file, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("train", "--config", config_file, "--out", a) == 0
        assert run("train", "--config", config_file, "--seed", 99, "--out", b) == 0
        assert (a / "train_metrics.csv").read_bytes() != (b / "train_metrics.csv").read_bytes()


class TestEvalCommand:
    def test_eval_after_train(self, config_file, tmp_path, capsys):
        out = tmp_path / "run"
        assert run("train", "--config", config_file, "--out", out) == 0
        assert run("eval", "--config", config_file, "--out", out) == 0
        cols = read_metrics_csv(out / "eval_metrics.csv")
        assert len(cols["episode"]) == 8
        summary = (out / "summary.csv").read_text().splitlines()
        assert len(summary) == 2
        assert summary[1].startswith("0.2,0,")  # rate label, uncatalogued mix
        assert "eval:" in capsys.readouterr().out

    def test_eval_without_weights_fails(self, config_file, tmp_path, capsys):
        assert run("eval", "--config", config_file, "--out", tmp_path / "empty") == 1
        assert "error:" in capsys.readouterr().err

    def test_zero_eval_episodes_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "z.cfg"
        cfg.write_text(TINY_CONFIG + "eval_episodes=0\n")
        assert run("eval", "--config", cfg, "--out", tmp_path) == 1
        assert "eval_episodes" in capsys.readouterr().err


class TestOracleCommand:
    def test_prints_header_and_rows(self, config_file, capsys):
        assert run("oracle", "--config", config_file) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "episode,oracle_revenue,arrivals,accepted_c1,accepted_c2,accepted_c3"
        assert len(lines) == 1 + 8
        first = lines[1].split(",")
        assert first[0] == "0"
        assert float(first[1]) >= 0.0

    def test_deterministic(self, config_file, capsys):
        run("oracle", "--config", config_file)
        a = capsys.readouterr().out
        run("oracle", "--config", config_file)
        assert capsys.readouterr().out == a


class TestGridCommand:
    def test_all_nine_cells(self, tmp_path):
        # Exploration-only training keeps this a wiring test, not a
        # learning test: warmup larger than the step budget means no
        # gradient updates ever run.
        cfg = tmp_path / "grid.cfg"
        cfg.write_text(
            "train_episodes=2\neval_episodes=2\nwarmup_steps=100000\nseed=5\n"
        )
        out = tmp_path / "grid"
        assert run("grid", "--config", cfg, "--out", out) == 0
        summary = (out / "summary.csv").read_text().splitlines()
        assert len(summary) == 1 + 9
        rates = [row.split(",")[0] for row in summary[1:]]
        dists = [row.split(",")[1] for row in summary[1:]]
        assert rates == ["0.0"] * 3 + ["0.1"] * 3 + ["0.2"] * 3
        assert dists == ["1", "2", "3"] * 3
        for rate_label in ("0", "10", "20"):
            for dist in ("1", "2", "3"):
                cell = out / f"cell_{rate_label}_{dist}"
                assert (cell / "train_metrics.csv").exists()
                assert (cell / "eval_metrics.csv").exists()
                assert (cell / "weights.txt").exists()

    def test_zero_eval_episodes_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "z.cfg"
        cfg.write_text("eval_episodes=0\n")
        assert run("grid", "--config", cfg, "--out", tmp_path) == 1
        assert "error:" in capsys.readouterr().err


class TestChecksCommand:
    def test_gradcheck_only(self, capsys):
        assert run("checks", "--only", "gradcheck") == 0
        out = capsys.readouterr().out
        assert out.startswith("gradcheck: PASS")

    def test_unknown_check_rejected(self, capsys):
        assert run("checks", "--only", "nonsense") == 1
        assert "unknown check" in capsys.readouterr().err


class TestReportCommand:
    def test_renders_figures_for_existing_csvs(self, config_file, tmp_path, capsys):
        out = tmp_path / "run"
        assert run("train", "--config", config_file, "--out", out) == 0
        capsys.readouterr()
        assert run("report", "--config", config_file, "--out", out, "--window", 10) == 0
        for name in (
            "train_optimal_reward.png",
            "train_acceptance_rate.png",
            "train_load_factor.png",
            "train_seat_distribution.png",
        ):
            path = out / name
            assert path.exists() and path.stat().st_size > 0
        assert not (out / "eval_optimal_reward.png").exists()
        assert capsys.readouterr().out.count("wrote") == 4

    def test_no_csvs_is_an_error(self, tmp_path, capsys):
        assert run("report", "--out", tmp_path / "nothing") == 1
        assert "no metrics CSVs" in capsys.readouterr().err


class TestErrorHandling:
    def test_missing_config_file(self, tmp_path, capsys):
        assert run("train", "--config", tmp_path / "absent.cfg", "--out", tmp_path) == 1
        assert "error:" in capsys.readouterr().err

    def test_invalid_config_line(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("fares=100,200,300\n")
        assert run("train", "--config", cfg, "--out", tmp_path) == 1
        err = capsys.readouterr().err
        assert "line 1" in err
