import json
import math
import os
import subprocess
import sys

import pytest

from gcflab import cli
from gcflab.config import FlowConfig, load_config, parse_items, parse_text
from gcflab.errors import ConfigInvalid

QUICK_CLOSED = ["--set", "grid_size=128", "--set", "t_stop=0.05", "--set", "sample_interval=0.01"]


class TestConfig:
    def test_defaults_validate(self):
        assert FlowConfig().validate().mode == "closed"

    def test_parse_text(self):
        cfg = parse_text(
            """
            # a comment
            mode = graph
            n = 2
            alpha = 1.5   # trailing comment
            domain = polygon
            vertices = -1:-1; 1:-1; 0:1
            plots = speed_err, profile_err
            tol_speed = 0.05
            amplitude = none
            """
        )
        assert (cfg.mode, cfg.n, cfg.alpha) == ("graph", 2, 1.5)
        assert cfg.vertices == ((-1.0, -1.0), (1.0, -1.0), (0.0, 1.0))
        assert cfg.plots == ("speed_err", "profile_err")
        assert cfg.tolerances == {"speed": 0.05}
        assert cfg.amplitude is None

    @pytest.mark.parametrize(
        "text, key",
        [
            ("colour = red", "colour"),
            ("alpha = fast", "alpha"),
            ("n = 4", "n"),
            ("mode = graph\nalpha = 0.5", "alpha"),
            ("tol_speed = -1", "tol_speed"),
            ("tol_banana = 1", "tol_banana"),
            ("spacing = 0", "spacing"),
            ("boundary_mode = free", "boundary_mode"),
            ("just words", "just words"),
        ],
    )
    def test_errors_name_the_key(self, text, key):
        with pytest.raises(ConfigInvalid) as info:
            parse_text(text)
        assert info.value.key == key

    def test_closed_mode_allows_small_alpha(self):
        assert parse_items([("alpha", "0.3")]).alpha == 0.3

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigInvalid) as info:
            load_config(tmp_path / "nope.cfg")
        assert info.value.key == "config"

    def test_later_items_win(self):
        assert parse_items([("alpha", "2"), ("alpha", "3")]).alpha == 3.0

    def test_example_config_parses(self):
        here = os.path.dirname(__file__)
        cfg = load_config(os.path.join(here, "..", "configs", "example.cfg"))
        assert cfg.mode == "closed" and cfg.shape == "ellipse"


class TestCli:
    def test_lambda(self, capsys):
        assert cli.main(["lambda", "--n", "2", "--alpha", "1"]) == cli.EXIT_PASS
        out = capsys.readouterr().out
        line = [x for x in out.splitlines() if x.startswith("lambda=")][0]
        assert float(line.split("=")[1]) == pytest.approx(2.0, rel=1e-12)
        assert "Lambda=" in out

    def test_lambda_by_area(self, capsys):
        assert cli.main(["lambda", "--n", "1", "--alpha", "1", "--area", "2"]) == 0
        line = [x for x in capsys.readouterr().out.splitlines() if x.startswith("lambda=")][0]
        assert float(line.split("=")[1]) == pytest.approx(math.pi / 2, rel=1e-12)

    def test_lambda_divergent_exits_one(self, capsys):
        assert cli.main(["lambda", "--n", "1", "--alpha", "0.5"]) == cli.EXIT_ERROR
        assert "gcf-lab" in capsys.readouterr().err

    def test_missing_config_exits_one(self, tmp_path, capsys):
        code = cli.main(["closed", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)])
        assert code == cli.EXIT_ERROR
        assert "ConfigInvalid [config]" in capsys.readouterr().err

    def test_bad_set_exits_one(self, tmp_path, capsys):
        assert cli.main(["closed", "--set", "alpha=x", "--out", str(tmp_path)]) == 1
        assert "[alpha]" in capsys.readouterr().err

    def test_closed_run_writes_artifacts(self, tmp_path, capsys):
        code = cli.main(["closed", *QUICK_CLOSED, "--set", "run_id=c1", "--set", "plots=N", "--out", str(tmp_path)])
        assert code == cli.EXIT_PASS
        run = tmp_path / "c1"
        for name in ("series.csv", "summary.json", "N.svg"):
            assert (run / name).exists()
        summary = json.loads((run / "summary.json").read_text())
        assert summary["config"]["size"] == "128"
        assert "PASS radius" in capsys.readouterr().out

    def test_failing_tolerance_exits_two(self, tmp_path, capsys):
        code = cli.main(["closed", *QUICK_CLOSED, "--set", "tol_radius=1e-15", "--out", str(tmp_path)])
        assert code == cli.EXIT_FAIL
        assert "FAIL radius" in capsys.readouterr().out

    def test_env_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "env"))
        assert cli.main(["closed", *QUICK_CLOSED, "--set", "run_id=e"]) == 0
        assert (tmp_path / "env" / "e" / "summary.json").exists()

    def test_flag_beats_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "env"))
        assert cli.main(["closed", *QUICK_CLOSED, "--set", "run_id=f", "--out", str(tmp_path / "flag")]) == 0
        assert (tmp_path / "flag" / "f").exists()
        assert not (tmp_path / "env").exists()

    def test_report_recomputes(self, tmp_path, capsys):
        cli.main(["closed", *QUICK_CLOSED, "--set", "run_id=r", "--out", str(tmp_path)])
        capsys.readouterr()
        assert cli.main(["report", "--run", str(tmp_path / "r"), "--plot", "J"]) == 0
        assert (tmp_path / "r" / "J.svg").exists()

    def test_report_detects_tampering(self, tmp_path, capsys):
        cli.main(["closed", *QUICK_CLOSED, "--set", "run_id=r", "--out", str(tmp_path)])
        path = tmp_path / "r" / "summary.json"
        summary = json.loads(path.read_text())
        summary["checks"]["radius"]["pass"] = False
        path.write_text(json.dumps(summary))
        capsys.readouterr()
        assert cli.main(["report", "--run", str(tmp_path / "r")]) != 0

    def test_graph_mode_mismatch(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("mode = closed\n")
        assert cli.main(["graph", "--config", str(cfg), "--out", str(tmp_path)]) == 1
        assert "[mode]" in capsys.readouterr().err

    def test_polygon_needs_transport(self, tmp_path, capsys):
        args = ["graph", "--set", "n=2", "--set", "domain=polygon", "--set", "vertices=-1:-1;1:-1;0:1",
                "--out", str(tmp_path)]
        assert cli.main(args) == 1
        assert "boundary_mode" in capsys.readouterr().err

    def test_soliton_shooting(self, tmp_path, capsys):
        args = ["soliton", "--set", "n=2", "--set", "domain=disk", "--set", "run_id=s", "--out", str(tmp_path)]
        assert cli.main(args) == 0
        assert (tmp_path / "s" / "profile.txt").exists()
        summary = json.loads((tmp_path / "s" / "summary.json").read_text())
        assert float(summary["lambda_target"]) == pytest.approx(2.0)

    def test_soliton_closed_form(self, tmp_path):
        args = ["soliton", "--set", "method=closed-form", "--set", "run_id=g", "--out", str(tmp_path)]
        assert cli.main(args) == 0

    def test_console_script_entry(self, tmp_path):
        res = subprocess.run([sys.executable, "-m", "gcflab.cli", "lambda", "--n", "1", "--alpha", "1"],
                             capture_output=True, text=True)
        assert res.returncode == 0
        assert "lambda=" in res.stdout


@pytest.mark.slow
def test_verify_quick(tmp_path, capsys):
    assert cli.main(["verify", "--suite", "quick", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") >= 13
    assert (tmp_path / "verify.json").exists()
