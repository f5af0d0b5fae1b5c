import csv
import json
import subprocess
import sys

import pytest

from repchain import __version__
from repchain.cli import main
from repchain.config import (
    ConfigError,
    config_echo,
    echo_to_ini,
    emit_results,
    format_json,
    load_config,
    parse_overrides,
)
from repchain.hardware import BASELINE, DEFAULT_BOUNDS

FAST = ["--set", "total_distance=40", "--set", "chain.realizations=6", "--set", "chain.alpha=0.3"]


class TestLoadConfig:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.ini"
        path.write_text("")
        cfg, ocfg, targets = load_config(path)
        assert cfg.hw == BASELINE
        assert (targets.F_t, targets.R_t) == (0.8, 1.0)
        assert ocfg.bounds == DEFAULT_BOUNDS
        assert cfg.strategy.scheme == "swap-asap"

    def test_override(self):
        cfg, _, _ = load_config(overrides=["T2=10"])
        assert cfg.hw.T2 == 10.0

    def test_file_then_override(self):
        text = "[hardware]\nT2_s = 5\np2 = 0.01\n[chain]\nnum_repeaters = 3\nstrategy = bdcz-dejmps-2\n"
        cfg, ocfg, _ = load_config(text=text, overrides=["hardware.T2=7"])
        assert (cfg.hw.T2, cfg.hw.p2, cfg.num_repeaters) == (7.0, 0.01, 3)
        assert cfg.strategy.rounds == 2

    def test_dephasing_bound(self):
        with pytest.raises(ConfigError, match="T2"):
            load_config(overrides=["T2=10000"])

    @pytest.mark.parametrize(
        "text",
        ["[hardware]\nbogus = 1\n", "[nowhere]\nx = 1\n", "[chain]\nnum_repeaters = two\n", "no section"],
    )
    def test_bad_files(self, text):
        with pytest.raises(ConfigError):
            load_config(text=text)

    def test_bad_override(self):
        with pytest.raises(ConfigError):
            parse_overrides(["T2"])
        with pytest.raises(ConfigError):
            parse_overrides(["warp.T2=1"])

    def test_bounds(self):
        _, ocfg, _ = load_config(text="[bounds]\nT2 = 1, 100\n")
        assert ocfg.bounds.T2 == (1.0, 100.0)

    def test_echo_round_trip(self):
        cfg, ocfg, targets = load_config(
            overrides=["T2=3.5", "num_repeaters=1", "strategy=bdcz-epl", "F_t=0.9", "population=30"]
        )
        again = load_config(text=echo_to_ini(config_echo(cfg, ocfg, targets)))
        assert again == (cfg, ocfg, targets)


class TestEmit:
    def test_significant_digits(self):
        record = json.loads(format_json({"x": 1 / 3, "n": 4, "inf": float("inf")}))
        assert record == {"x": 0.333333333333, "n": 4, "inf": "inf"}

    def test_csv(self, tmp_path):
        path = tmp_path / "rows.csv"
        emit_results([{"a": 1, "b": 2 / 3}, {"a": 2, "b": 0.5}], path, "csv")
        rows = list(csv.DictReader(path.open()))
        assert rows == [{"a": "1", "b": "0.666666666667"}, {"a": "2", "b": "0.5"}]

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError):
            emit_results({"a": 1}, tmp_path / "missing" / "x.json")


class TestCli:
    def run_json(self, capsys, argv):
        assert main(argv) == 0
        return json.loads(capsys.readouterr().out)

    def test_simulate_schema(self, capsys):
        rec = self.run_json(capsys, ["simulate", "--seed", "3", *FAST])
        assert 0 <= rec["mean_fidelity"] <= 1 and rec["rate_hz"] > 0
        assert rec["realizations"] == 6 and rec["seed"] == 3
        assert rec["version"] == __version__ and rec["wall_time"] >= 0
        assert set(rec["std_errors"]) == {"fidelity", "rate", "duration"}
        assert rec["config"]["hardware"]["T2"] == 1.0

    def test_simulate_threads_identical(self, tmp_path):
        bodies = []
        for threads in ("1", "3"):
            out = tmp_path / f"sim{threads}.json"
            assert main(["simulate", "--seed", "5", "--threads", threads, "--out", str(out), *FAST]) == 0
            rec = json.loads(out.read_text())
            rec.pop("wall_time")
            bodies.append(json.dumps(rec, sort_keys=True))
        assert bodies[0] == bodies[1]

    def test_simulate_csv(self, capsys):
        assert main(["simulate", "--format", "csv", *FAST]) == 0
        rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
        assert len(rows) == 6 and set(rows[0]) == {"realization", "fidelity", "duration"}

    def test_optimize_log(self, tmp_path):
        out = tmp_path / "ga.csv"
        argv = ["optimize", "--seed", "2", "--out", str(out), "--no-refine", *FAST,
                "--set", "population=5", "--set", "generations=3", "--set", "optimizer.realizations=4"]
        assert main(argv) == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 4
        assert list(rows[0])[:4] == ["generation", "best_cost", "mean_cost", "feasible_fraction"]
        best = json.loads((tmp_path / "ga.best.json").read_text())
        assert best["best_genome"]["link_protocol"] == "single-click"
        assert float(rows[-1]["best_cost"]) == pytest.approx(best["cost"]["total"], rel=1e-11)

    def test_max_distance(self, capsys):
        rec = self.run_json(capsys, ["analyze", "max-distance", "--repeaters", "0", "1"])
        assert [row["repeaters"] for row in rec["table"]] == [0, 1]
        assert set(rec["table"][0]) == {"repeaters", "rate_only_km", "swap_asap_km", "alpha"}
        assert rec["table"][0]["alpha"] == pytest.approx(0.2)

    def test_skr(self, capsys):
        rec = self.run_json(capsys, ["analyze", "skr", "--rate", "2", "--qber", "0"])
        assert rec["skr_hz"] == 2.0 and rec["fidelity"] == 1.0

    def test_waiting_time(self, capsys):
        rec = self.run_json(capsys, ["analyze", "waiting-time", "--p-gen", "0.5", "--rounds", "1", "--p-succ", "0.5",
                                     "--set", "total_distance=100"])
        T0 = (3.8e-6 + 100 / 2e5) / 0.5
        assert rec["link_time_s"] == pytest.approx(T0)
        assert rec["purified_time_s"] == pytest.approx(4 * T0)

    def test_validation_exit_code(self, capsys):
        assert main(["simulate", "--set", "T2=10000"]) == 1
        assert "T2" in capsys.readouterr().err

    def test_runtime_exit_code(self, capsys):
        # two memory slots cannot hold a pair while purifying the next one
        argv = ["simulate", "--set", "N_qb=2", "--set", "strategy=bdcz-epl", "--set", "num_repeaters=1",
                "--set", "realizations=1", "--set", "total_distance=40"]
        assert main(argv) == 2
        assert "deadlock" in capsys.readouterr().err

    def test_never_succeeding_link_is_invalid(self, capsys):
        assert main(["simulate", "--set", "alpha_att=1e6", "--set", "realizations=1"]) == 1

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "repchain", "analyze", "skr", "--rate", "1", "--fidelity", "1"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["qber"] == 0.0
