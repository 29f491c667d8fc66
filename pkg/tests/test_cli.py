import subprocess
import sys

import pytest

from accperc import cli
from accperc.errors import ConfigError
from accperc.experiments import read_results
from accperc.verification import CheckResult


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "accperc.cli", *args],
        capture_output=True, text=True,
    )


class TestExitCodes:
    def test_trivial_simulate_succeeds(self):
        res = run_cli("simulate", "--n", "1", "--height", "1",
                      "--trials", "10", "--seed", "7")
        assert res.returncode == 0
        assert "p_hat=1.0" in res.stdout

    def test_alpha_and_n_mutually_exclusive(self):
        res = run_cli("simulate", "--n", "2", "--alpha", "0.5",
                      "--height", "3", "--trials", "5", "--seed", "1")
        assert res.returncode == 1
        assert "usage" in res.stderr

    def test_unknown_flag_is_usage_error(self):
        res = run_cli("simulate", "--n", "2", "--height", "3", "--frobnicate")
        assert res.returncode == 1
        assert "usage" in res.stderr

    def test_missing_subcommand_is_usage_error(self):
        res = run_cli()
        assert res.returncode == 1

    def test_size_guard_exit(self):
        res = run_cli("enumerate", "--n", "10", "--height", "8",
                      "--trials", "2", "--seed", "1")
        assert res.returncode == 2
        assert "size guard" in res.stderr


class TestDeterminism:
    def test_identical_invocations_identical_stdout(self):
        args = ("simulate", "--n", "3", "--height", "6",
                "--trials", "500", "--seed", "42")
        assert run_cli(*args).stdout == run_cli(*args).stdout

    def test_moments_payload(self):
        res = run_cli("moments", "--alpha", "0.75", "--height", "40")
        assert res.returncode == 0
        for key in ("log_expected_paths", "log_restricted_mean_lower",
                    "pz_lower", "markov_bound"):
            assert key in res.stdout


class TestSweepCommand:
    def test_flags_only_sweep_round_trips(self, tmp_path):
        out = tmp_path / "sweep.csv"
        res = run_cli("sweep", "--alpha-grid", "0.4,0.8", "--h-grid", "5,7",
                      "--trials", "300", "--seed", "5", "--out", str(out))
        assert res.returncode == 0
        rows = read_results(out)
        assert len(rows) == 4
        assert all(r.trials == 300 for r in rows)

    def test_config_file_with_overrides(self, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(
            "# small grid\n"
            "alpha_grid = 0.4, 0.8\n"
            "h_grid = 5\n"
            "seed = 11\n"
        )
        out = tmp_path / "sweep.json"
        res = run_cli("sweep", "--config", str(cfg), "--trials", "200",
                      "--out", str(out), "--format", "json")
        assert res.returncode == 0
        assert "# default applied: trials=10000" in res.stdout
        rows = read_results(out)
        assert all(r.trials == 200 for r in rows)  # flag overrides default

    def test_malformed_config_cites_line(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("alpha_grid = 0.4\nwhat is this\n")
        out = tmp_path / "never.csv"
        res = run_cli("sweep", "--config", str(cfg), "--out", str(out))
        assert res.returncode == 1
        assert ":2:" in res.stderr
        assert not out.exists()

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "bad2.cfg"
        cfg.write_text("alpa_grid = 0.4\n")
        res = run_cli("sweep", "--config", str(cfg), "--out",
                      str(tmp_path / "x.csv"))
        assert res.returncode == 1
        assert ":1:" in res.stderr

    def test_grids_required(self):
        res = run_cli("sweep", "--out", "/tmp/x.csv")
        assert res.returncode == 1


class TestLoadConfig:
    def test_grid_parsing(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("alpha_grid = 0.25,0.5,1.0\nh_grid = 4,8\ntrials = 50\n")
        values, defaulted = cli.load_config(cfg)
        assert values["alpha_grid"] == (0.25, 0.5, 1.0)
        assert values["h_grid"] == (4, 8)
        assert values["trials"] == 50
        assert "trials" not in defaulted

    def test_defaults_reported(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("alpha_grid = 0.5\nh_grid = 4\n")
        values, defaulted = cli.load_config(cfg)
        assert values["trials"] == 10_000
        assert "trials" in defaulted

    def test_bad_value_raises_with_line(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("h_grid = 4\nalpha_grid = x,y\n")
        with pytest.raises(ConfigError, match=":2:"):
            cli.load_config(cfg)


class TestOtherCommands:
    def test_levels_output(self):
        res = run_cli("levels", "--n", "50", "--height", "6", "--levels", "3",
                      "--eps", "0.5", "--trials", "300", "--seed", "3")
        assert res.returncode == 0
        assert "level=3" in res.stdout
        assert "shortfall_bound=" in res.stdout

    def test_regime_output(self):
        res = run_cli("regime", "--beta", "log(h)**2/h", "--h-min", "10",
                      "--h-max", "13", "--trials", "200", "--seed", "2")
        assert res.returncode == 0
        assert "verdict=" in res.stdout

    def test_regime_rejects_rogue_names(self):
        res = run_cli("regime", "--beta", "__import__('os')", "--h-min", "10",
                      "--h-max", "12", "--trials", "10", "--seed", "0")
        assert res.returncode == 1

    def test_coupled_simulate(self):
        res = run_cli("simulate", "--n", "2", "--height", "4", "--coupled", "4",
                      "--trials", "400", "--seed", "9")
        assert res.returncode == 0
        lines = [l for l in res.stdout.splitlines() if l.startswith("n=")]
        assert len(lines) == 4
        p_hats = [float(l.split("p_hat=")[1].split()[0]) for l in lines]
        assert p_hats == sorted(p_hats)


class TestVerifyCommand:
    def _fake_results(self, ok: bool):
        return [CheckResult(check_name="stub", status="pass" if ok else "fail",
                            measured=0, tolerance=0, details="stubbed")]

    def test_exit_zero_on_pass(self, monkeypatch, capsys, tmp_path):
        monkeypatch.setattr(cli, "run_verification_suite",
                            lambda budget, seed: self._fake_results(True))
        out = tmp_path / "report.json"
        code = cli.main(["verify", "--out", str(out)])
        assert code == 0
        assert "stub: PASS" in capsys.readouterr().out
        assert out.exists()

    def test_exit_three_on_failure(self, monkeypatch, capsys):
        monkeypatch.setattr(cli, "run_verification_suite",
                            lambda budget, seed: self._fake_results(False))
        assert cli.main(["verify"]) == 3
