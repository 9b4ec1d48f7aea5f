import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from dikin_oco import run_experiment
from dikin_oco.cli import SWEEP_COLUMNS, main, trace_columns
from dikin_oco.config import dump_config, load_config, parse_config
from dikin_oco.errors import ConfigParse

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SQUARE = {
    "domain": {"kind": "box", "bounds": [[-1, 1], [-1, 1]]},
    "adversary": {"kind": "iid_linear", "params": {"radius": 1.0}},
    "learner": [{"kind": "ip"}, {"kind": "ftl"}],
    "horizon": 256,
    "seed": 0,
}


def write(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


class TestRun:
    def test_outputs(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--config", write(tmp_path, SQUARE), "--out", str(out)]) == 0
        for name in ("trace_ip.csv", "trace_ftl.csv", "summary.txt", "report.json"):
            assert (out / name).exists()
        report = json.loads((out / "report.json").read_text())
        assert report["properties"] and all(p["passed"] for p in report["properties"])

    def test_csv_schema(self, tmp_path):
        out = tmp_path / "out"
        main(["run", "--config", write(tmp_path, SQUARE), "--out", str(out)])
        with open(out / "trace_ip.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "x_0", "x_1", "loss", "grad_norm", "min_slack", "local_step_norm", "cum_regret"]
        assert rows[0] == trace_columns(2)
        assert len(rows) == 257 and rows[1][0] == "1"
        # 17 significant digits: values round-trip exactly
        tr = run_experiment(load_config(write(tmp_path, SQUARE))[0])["ip"]
        np.testing.assert_array_equal([float(r[1]) for r in rows[1:]], tr.iterates[:, 0])
        with open(out / "trace_ftl.csv") as fh:
            ftl = list(csv.DictReader(fh))
        assert ftl[0]["local_step_norm"] == "nan"

    @pytest.mark.parametrize("T", [0, 1])
    def test_bad_horizon_in_file(self, tmp_path, capsys, T):
        assert main(["run", "--config", write(tmp_path, {**SQUARE, "horizon": T})]) == 1
        assert "horizon" in capsys.readouterr().err

    def test_bad_horizon_exception_names_key(self):
        with pytest.raises(ConfigParse) as info:
            parse_config({**SQUARE, "horizon": 0})
        assert info.value.key == "horizon"

    def test_bad_horizon_flag(self, tmp_path, capsys):
        assert main(["run", "--config", write(tmp_path, SQUARE), "--horizon", "0", "--out", str(tmp_path)]) == 1
        assert "horizon" in capsys.readouterr().err

    def test_bound_violation_exit(self, tmp_path, caplog):
        cfg = {**SQUARE, "learner": [{"kind": "ip", "grad_bound": 1e-6}]}
        assert main(["run", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2
        assert "exceeds the bound" in caplog.text and "from round" in caplog.text
        assert "FAIL (exceeds at round" in (tmp_path / "o" / "summary.txt").read_text()

    def test_overrides(self, tmp_path):
        out = tmp_path / "o"
        main(["run", "--config", write(tmp_path, SQUARE), "--out", str(out), "--horizon", "64", "--seed", "3"])
        assert "horizon 64  seed 3" in (out / "summary.txt").read_text()

    def test_missing_file(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 1

    @pytest.mark.parametrize("patch, key", [
        ({"domain": {"kind": "cube"}}, "domain.kind"),
        ({"adversary": {"kind": "iid_linear"}, "learner": [{"kind": "sgd"}]}, "learner[0].kind"),
        ({"learner": [{"kind": "ip", "step": 1}]}, "learner[0].step"),
        ({"x1": [1.0, 0.0]}, "x1"),
        ({"domain": {"kind": "polytope", "A": [[1.0]], "b": [-1.0]}}, "x1"),
        ({"sweep": {"horizons": [], "seeds": [0]}}, "sweep.horizons"),
    ])
    def test_errors_name_key(self, patch, key):
        with pytest.raises(ConfigParse) as info:
            parse_config({**SQUARE, **patch})
        assert info.value.key == key


class TestConfigRoundTrip:
    @pytest.mark.parametrize("name", ["square_iid", "alternating", "ball_quadratic", "hexagon_piecewise"])
    def test_trace_identical(self, tmp_path, name):
        cfg, sweep = load_config(CONFIGS / f"{name}.yaml")
        cfg = cfg.with_overrides(horizon=128)
        again, _ = load_config(write(tmp_path, yaml.safe_load(dump_config(cfg, sweep))))
        a, b = run_experiment(cfg), run_experiment(again)
        assert list(a) == list(b)
        for k in a:
            np.testing.assert_array_equal(a[k].iterates, b[k].iterates)


class TestVerify:
    def test_default_all_pass(self, tmp_path, capsys):
        assert main(["verify", "--out", str(tmp_path)]) == 0
        table = capsys.readouterr().out.splitlines()
        rows = [line for line in table[1:] if line.strip()]
        assert len(rows) >= 12
        assert all(line.endswith("PASS") for line in rows)
        props = {line.split()[1] for line in rows}
        assert {"derivatives", "self_concordance", "hessian_sandwich", "eigenvalue_bounds", "boundary_growth",
                "per_step_inequality", "bregman_step_bound"} <= props
        assert json.loads((tmp_path / "verify.json").read_text())[0]["samples"] == 1000

    def test_quick_mode(self, tmp_path, capsys):
        main(["verify", "--samples", "1000"])
        full = [line.split()[:2] for line in capsys.readouterr().out.splitlines()]
        assert main(["verify", "--samples", "10", "--out", str(tmp_path)]) == 0
        quick = [line.split()[:2] for line in capsys.readouterr().out.splitlines()]
        assert quick == full
        assert json.loads((tmp_path / "verify.json").read_text())[0]["samples"] == 10

    def test_fault_injection(self, capsys):
        assert main(["verify", "--samples", "10", "--fault-gradient-scale", "1.1"]) == 2
        rows = capsys.readouterr().out.splitlines()
        deriv = [line for line in rows if " derivatives " in line]
        assert deriv and all(line.endswith("FAIL") for line in deriv)

    def test_config_block(self, tmp_path, capsys):
        path = write(tmp_path, {"verify": {"samples": 5, "domains": ["box1d"]}})
        assert main(["verify", "--config", path]) == 0
        rows = capsys.readouterr().out.splitlines()[1:]
        assert {line.split()[0] for line in rows} == {"box1d", "box2d"}


class TestSweep:
    def test_alternating_cross_product(self, tmp_path):
        out = tmp_path / "sw"
        assert main(["sweep", "--config", str(CONFIGS / "sweep_alternating.yaml"), "--out", str(out), "--workers", "3"]) == 0
        with open(out / "summary.csv") as fh:
            reader = csv.DictReader(fh)
            assert reader.fieldnames[:6] == SWEEP_COLUMNS[:6]
            rows = list(reader)
        assert len(rows) == 18
        assert [(int(r["T"]), int(r["seed"])) for r in rows[::2]] == [(T, s) for T in (256, 1024, 4096) for s in (0, 1, 2)]
        assert all(float(r["ratio"]) < 1 for r in rows if r["learner"] == "ip")
        ftl = {int(r["T"]): float(r["final_regret"]) for r in rows if r["learner"] == "ftl" and r["seed"] == "0"}
        assert ftl[1024] / ftl[256] >= 3.5 and ftl[4096] / ftl[1024] >= 3.5
        assert (out / "config.yaml").exists()

    def test_partial_failure_recorded(self, tmp_path):
        cfg = {**SQUARE, "learner": ["ip"], "sweep": {"horizons": [16, 32], "seeds": [0]},
               "adversary": {"kind": "piecewise_linear", "params": {"segments": [[16, [1.0, 0.0]]]}}}
        out = tmp_path / "sw"
        assert main(["sweep", "--config", write(tmp_path, cfg), "--out", str(out)]) == 1
        with open(out / "summary.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["error"] == "" and "LengthMismatch" in rows[1]["error"]

    def test_needs_sweep_block(self, tmp_path):
        assert main(["sweep", "--config", write(tmp_path, SQUARE)]) == 1


def test_console_entry_point(tmp_path):
    env = {**os.environ, "DIKIN_OCO_LOG": "info"}
    proc = subprocess.run([sys.executable, "-m", "dikin_oco", "verify", "--samples", "3"], capture_output=True, text=True, env=env)
    assert proc.returncode == 0 and "PASS" in proc.stdout
