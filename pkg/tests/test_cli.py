import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import study_config_dict

GPMEAN = [sys.executable, "-m", "gpmean.cli"]


def run_cli(*args):
    return subprocess.run(GPMEAN + list(args), capture_output=True, text=True)


@pytest.fixture()
def tiny_config(tmp_path):
    raw = study_config_dict(
        cases=[{"n": 40, "eps": 0.1}], replications=6, master_seed=17
    )
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return path


class TestSimulateEstimate:
    def test_roundtrip(self, tiny_config, tmp_path):
        sim_dir = tmp_path / "sims"
        res = run_cli("simulate", "--config", str(tiny_config), "--out", str(sim_dir))
        assert res.returncode == 0, res.stderr
        csvs = sorted(sim_dir.glob("*.csv"))
        assert len(csvs) == 6
        est = tmp_path / "fit.json"
        res = run_cli(
            "estimate", "--config", str(tiny_config), "--obs", str(csvs[0]),
            "--eps", "0.1", "--out", str(est),
        )
        assert res.returncode == 0, res.stderr
        payload = json.loads(est.read_text())
        assert -6 < payload["theta_hat"][0] < -2
        assert set(payload) >= {
            "theta_hat", "phi", "qgaic", "sigma_n", "boundary_flag", "optimizer_stats",
        }

    def test_estimate_json_observation(self, tiny_config, tmp_path):
        sim_dir = tmp_path / "sims"
        run_cli("simulate", "--config", str(tiny_config), "--out", str(sim_dir))
        obs_json = sorted(sim_dir.glob("*.json"))[0]
        out = tmp_path / "fit.json"
        res = run_cli(
            "estimate", "--config", str(tiny_config), "--obs", str(obs_json),
            "--out", str(out),
        )
        assert res.returncode == 0, res.stderr

    def test_estimate_csv_requires_eps(self, tiny_config, tmp_path):
        sim_dir = tmp_path / "sims"
        run_cli("simulate", "--config", str(tiny_config), "--out", str(sim_dir))
        csv = sorted(sim_dir.glob("*.csv"))[0]
        res = run_cli(
            "estimate", "--config", str(tiny_config), "--obs", str(csv),
            "--out", str(tmp_path / "x.json"),
        )
        assert res.returncode == 2


class TestMc:
    def test_outputs_and_seed_override(self, tiny_config, tmp_path):
        out = tmp_path / "mc"
        res = run_cli("mc", "--config", str(tiny_config), "--seed", "99", "--out", str(out))
        assert res.returncode == 0, res.stderr
        summary = json.loads((out / "summary.json").read_text())
        assert summary["master_seed"] == 99
        for name in ["table1.csv", "standardized.csv", "histogram.csv", "qq.csv", "paths.csv"]:
            assert (out / name).exists()

    def test_rerun_byte_identical(self, tiny_config, tmp_path):
        out1, out2 = tmp_path / "m1", tmp_path / "m2"
        run_cli("mc", "--config", str(tiny_config), "--seed", "5", "--out", str(out1))
        run_cli("mc", "--config", str(tiny_config), "--seed", "5", "--out", str(out2))
        for name in ["summary.json", "table1.csv", "standardized.csv"]:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestOtherSubcommands:
    def test_qgaic_bias(self, tmp_path):
        raw = study_config_dict(cases=[{"n": 100, "eps": 0.1}], replications=10, master_seed=4)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(raw))
        out = tmp_path / "bias"
        res = run_cli("qgaic-bias", "--config", str(cfg), "--out", str(out))
        assert res.returncode == 0, res.stderr
        payload = json.loads((out / "qgaic_bias.json").read_text())
        assert payload["cases"][0]["pairs"] == 5

    def test_rate_table(self, tiny_config, tmp_path):
        out = tmp_path / "rt"
        res = run_cli("rate-table", "--config", str(tiny_config), "--out", str(out))
        assert res.returncode == 0, res.stderr
        lines = (out / "rate_table.csv").read_text().splitlines()
        assert lines[0] == "n,eps,sup_error,ratio,flagged"
        assert len(lines) == 2

    def test_lan_check(self, tiny_config, tmp_path):
        out = tmp_path / "lan"
        res = run_cli("lan-check", "--config", str(tiny_config), "--out", str(out))
        assert res.returncode == 0, res.stderr
        payload = json.loads((out / "lan_check.json").read_text())
        resids = [abs(c["identity_residual"]) for c in payload["checks"]]
        assert max(resids) < 1e-10


class TestExitCodes:
    def test_malformed_config_is_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        res = run_cli("mc", "--config", str(bad), "--out", str(tmp_path / "o"))
        assert res.returncode == 2

    def test_unknown_preset_is_2(self, tmp_path):
        res = run_cli("mc", "--preset", "nope", "--out", str(tmp_path / "o"))
        assert res.returncode == 2

    def test_numerical_error_is_3(self, tmp_path):
        raw = study_config_dict(cases=[{"n": 30, "eps": 0.1}], replications=4, master_seed=1)
        # duplicated basis function makes the information matrix singular
        raw["model"]["basis"] = [raw["model"]["basis"][0]] * 2
        raw["model"]["box"] = {"lower": [-10.0, -10.0], "upper": [10.0, 10.0]}
        raw["theta0"] = [-4.0, 0.0]
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(raw))
        res = run_cli("mc", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert res.returncode == 3
