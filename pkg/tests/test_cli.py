"""Tests for the command-line interface."""
from pathlib import Path
from unittest.mock import patch

import pandas as pd
import pytest

from ucwhittle.cli import EXIT_INPUT, EXIT_OK, EXIT_RUNTIME, main, resolve_output_dir
from ucwhittle.config import get_settings
from ucwhittle.domains.dataset import COLUMNS
from ucwhittle.harness.reporting import SWEEP_COLUMNS, read_sweep_csv
from ucwhittle.learners import Oracle
from ucwhittle.models import ExperimentConfig

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def whittle_args(p0_pass, p0_act, p1_pass, p1_act, *extra):
    return [
        "whittle",
        "--p0-pass", str(p0_pass),
        "--p0-act", str(p0_act),
        "--p1-pass", str(p1_pass),
        "--p1-act", str(p1_act),
        *extra,
    ]


class TestRun:
    """Test cases for ``run``."""

    def test_short_experiment(self, tmp_path, capsys):
        """Two episodes of the comparison config write a full summary."""
        code = main([
            "run", str(CONFIG_DIR / "fig1.cfg"),
            "--override", "T=2",
            "--override", "seeds=0",
            "--output-dir", str(tmp_path),
        ])
        assert code == EXIT_OK
        summary = pd.read_csv(tmp_path / "summary.csv")
        assert len(summary) == 6 * 2
        assert set(summary["algo"]) == {"ucw-value", "ucw-penalty", "extreme", "wiql", "random", "oracle"}
        out = capsys.readouterr().out
        assert "final_cum_regret=" in out
        assert f"outputs written to {tmp_path}" in out
        oracle = summary[summary["algo"] == "oracle"]
        assert (oracle["mean"] == 0.0).all()

    def test_repeat_runs_write_identical_summary(self, tmp_path):
        """The same config and seeds give a byte-identical summary."""
        for name in ("first", "second"):
            code = main([
                "run", str(CONFIG_DIR / "fig1.cfg"),
                "--override", "T=3",
                "--override", "seeds=0-1",
                "--output-dir", str(tmp_path / name),
            ])
            assert code == EXIT_OK
        assert (tmp_path / "first" / "summary.csv").read_bytes() == (tmp_path / "second" / "summary.csv").read_bytes()

    def test_sweep_writes_each_point(self, tmp_path, capsys):
        """A sweep config runs every point into its own directory and summarizes them."""
        code = main([
            "run", str(CONFIG_DIR / "budget_ratio.cfg"),
            "--override", "T=1",
            "--override", "seeds=0",
            "--override", "algorithms=random,oracle",
            "--override", "sweep_values=1,4",
            "--output-dir", str(tmp_path),
        ])
        assert code == EXIT_OK
        assert (tmp_path / "K=1" / "summary.csv").is_file()
        assert (tmp_path / "K=4" / "summary.csv").is_file()
        sweep = read_sweep_csv(tmp_path / "sweep_summary.csv")
        assert list(sweep.columns) == SWEEP_COLUMNS
        assert list(sweep["value"]) == ["1", "1", "4", "4"]
        assert set(sweep["algo"]) == {"oracle", "random"}
        assert (sweep[sweep["algo"] == "oracle"]["final_cum_regret"] == 0.0).all()
        out = capsys.readouterr().out
        assert "[K=1]" in out
        assert "sweep summary written to" in out

    def test_bad_sweep_is_input_error(self, capsys):
        """A sweep over an unknown key is refused before running."""
        code = main(["run", str(CONFIG_DIR / "budget_ratio.cfg"), "--override", "sweep_key=bogus"])
        assert code == EXIT_INPUT
        assert "sweep" in capsys.readouterr().err

    def test_shipped_dataset_config(self, tmp_path):
        """The dataset config finds its bundled population."""
        code = main([
            "run", str(CONFIG_DIR / "dataset.cfg"),
            "--override", "T=1",
            "--override", "seeds=0",
            "--override", "algorithms=random",
            "--output-dir", str(tmp_path),
        ])
        assert code == EXIT_OK
        assert (tmp_path / "regret_random.csv").is_file()

    def test_missing_config(self, tmp_path, capsys):
        """A missing config file is an input error."""
        assert main(["run", str(tmp_path / "absent.cfg")]) == EXIT_INPUT
        assert "config" in capsys.readouterr().err

    def test_unknown_override(self, capsys):
        """Overrides of unknown keys are input errors."""
        assert main(["run", str(CONFIG_DIR / "fig1.cfg"), "--override", "bogus=1"]) == EXIT_INPUT
        assert "bogus" in capsys.readouterr().err

    def test_every_run_failing(self, tmp_path, capsys):
        """When the oracle fails on every seed the run exits with a runtime error."""
        with patch.object(Oracle, "_plan", side_effect=RuntimeError("no oracle")):
            code = main([
                "run", str(CONFIG_DIR / "fig1.cfg"),
                "--override", "T=1",
                "--override", "seeds=0",
                "--override", "algorithms=random",
                "--output-dir", str(tmp_path),
            ])
        assert code == EXIT_RUNTIME
        assert "every run failed" in capsys.readouterr().err
        assert not (tmp_path / "summary.csv").exists()

    def test_missing_dataset(self, tmp_path, write_config, capsys):
        """A dataset config pointing at no file is an input error."""
        path = write_config(
            "[domain]\ndomain = dataset\ndataset_path = {}\n[problem]\nN = 2\nK = 1\nH = 2\nT = 1\n"
            "[experiment]\nseeds = 0\n".format(tmp_path / "missing.csv")
        )
        assert main(["run", str(path), "--output-dir", str(tmp_path / "out")]) == EXIT_INPUT
        assert "dataset not found" in capsys.readouterr().err

    def test_output_dir_precedence(self, monkeypatch):
        """The flag beats the config, which beats UCW_OUT_DIR."""
        monkeypatch.setenv("UCW_OUT_DIR", "from-env")
        get_settings.cache_clear()
        try:
            assert resolve_output_dir("flag", ExperimentConfig(output_dir="cfg")) == Path("flag")
            assert resolve_output_dir(None, ExperimentConfig(output_dir="cfg")) == Path("cfg")
            assert resolve_output_dir(None, ExperimentConfig()) == Path("from-env")
        finally:
            get_settings.cache_clear()


class TestWhittle:
    """Test cases for ``whittle``."""

    def test_action_independent_arm(self, capsys):
        """An arm whose actions do not matter has index zero."""
        assert main(whittle_args(0.3, 0.3, 0.6, 0.6)) == EXIT_OK
        assert capsys.readouterr().out.strip() == "0.0000"

    def test_deterministic_arm(self, capsys):
        """Pulling from bad into an absorbing good state is worth about nine."""
        assert main(whittle_args(0, 1, 1, 1, "--state", "0")) == EXIT_OK
        assert float(capsys.readouterr().out) == pytest.approx(9.0, abs=1e-3)

    def test_bad_gamma(self, capsys):
        """Discounts outside (0, 1) are input errors."""
        assert main(whittle_args(0.3, 0.5, 0.6, 0.8, "--gamma", "1.5")) == EXIT_INPUT
        assert "gamma" in capsys.readouterr().err

    def test_bad_kernel(self, capsys):
        """Probabilities outside [0, 1] are input errors."""
        assert main(whittle_args(1.3, 0.5, 0.6, 0.8)) == EXIT_INPUT
        assert "invalid kernel" in capsys.readouterr().err

    def test_bad_state(self):
        """Only states 0 and 1 exist."""
        assert main(whittle_args(0.3, 0.5, 0.6, 0.8, "--state", "2")) == EXIT_INPUT


class TestGen:
    """Test cases for ``gen``."""

    def test_thin_dataset(self, tmp_path, capsys):
        """A thin dataset has the requested rows inside the thin interval."""
        out = tmp_path / "thin.csv"
        assert main(["gen", "thin", "100", "3", str(out)]) == EXIT_OK
        assert capsys.readouterr().out.strip() == str(out)
        rows = pd.read_csv(out)
        assert list(rows.columns) == COLUMNS
        assert len(rows) == 100
        assert rows.to_numpy().min() >= 0.2 - 1e-12
        assert rows.to_numpy().max() <= 0.4 + 1e-12

    def test_zero_arms(self, tmp_path):
        """Zero arms write the header alone."""
        out = tmp_path / "empty.csv"
        assert main(["gen", "wide", "0", "0", str(out)]) == EXIT_OK
        assert out.read_text() == "p0_pass,p0_act,p1_pass,p1_act\n"

    def test_negative_arms(self, tmp_path):
        """Negative sizes are input errors."""
        assert main(["gen", "wide", "-1", "0", str(tmp_path / "x.csv")]) == EXIT_INPUT

    def test_unknown_domain(self, tmp_path):
        """Unknown domains are usage errors."""
        with pytest.raises(SystemExit) as excinfo:
            main(["gen", "tall", "5", "0", str(tmp_path / "x.csv")])
        assert excinfo.value.code == EXIT_INPUT


class TestDiag:
    """Test cases for ``diag``."""

    def setup_method(self):
        """Set up test cases."""
        self.template = (
            "[domain]\ndomain = dataset\ndataset_path = {path}\n"
            "[problem]\nN = 1\nK = 1\nH = {horizon}\n"
            "[experiment]\nseeds = 0\n"
        )

    def write_dataset(self, tmp_path, row="0.1,0.1,0.9,0.9"):
        path = tmp_path / "arms.csv"
        path.write_text(",".join(COLUMNS) + "\n" + row + "\n")
        return path

    def test_short_horizon(self, tmp_path, write_config, capsys):
        """A horizon below the requirement exits 2."""
        config = write_config(self.template.format(path=self.write_dataset(tmp_path), horizon=5))
        assert main(["diag", str(config)]) == EXIT_RUNTIME
        out = capsys.readouterr().out
        assert "omega2 = 0.800000" in out
        assert "H_required = 7.7657" in out

    def test_long_horizon(self, tmp_path, write_config, capsys):
        """A horizon above the requirement exits 0."""
        config = write_config(self.template.format(path=self.write_dataset(tmp_path), horizon=10))
        assert main(["diag", str(config)]) == EXIT_OK
        assert "status = ok" in capsys.readouterr().out

    def test_horizon_override(self, tmp_path, write_config):
        """Overrides apply to the diagnosed config."""
        config = write_config(self.template.format(path=self.write_dataset(tmp_path), horizon=5))
        assert main(["diag", str(config), "--override", "H=8"]) == EXIT_OK

    def test_non_ergodic(self, tmp_path, write_config, capsys):
        """Absorbing arms exit 2 with a non-ergodic status."""
        dataset = self.write_dataset(tmp_path, row="0.0,0.0,1.0,1.0")
        config = write_config(self.template.format(path=dataset, horizon=20))
        assert main(["diag", str(config)]) == EXIT_RUNTIME
        assert "non-ergodic" in capsys.readouterr().out

    def test_bad_dataset(self, tmp_path, write_config, capsys):
        """Schema errors in the dataset are input errors."""
        dataset = self.write_dataset(tmp_path, row="1.2,0.1,0.9,0.9")
        config = write_config(self.template.format(path=dataset, horizon=10))
        assert main(["diag", str(config)]) == EXIT_INPUT
        assert "line 2" in capsys.readouterr().err
