import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from cheapsub.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    return [dict(zip(header, r)) for r in body]


@pytest.fixture
def mean_csv(tmp_path):
    path = tmp_path / "values.csv"
    path.write_text("1\n2\n3\n4\n")
    return path


@pytest.fixture
def dgm_csv(tmp_path, capsys):
    path = tmp_path / "dgm.csv"
    code = main(["generate", "--n", "400", "--seed", "12",
                 "--out", str(path)])
    capsys.readouterr()
    assert code == 0
    return path


class TestGenerate:
    def test_deterministic_stdout(self, capsys):
        code1, out1, _ = run_cli(capsys, "generate", "--n", "50", "--seed", "7")
        code2, out2, _ = run_cli(capsys, "generate", "--n", "50", "--seed", "7")
        assert code1 == code2 == 0
        assert out1 == out2
        assert out1.splitlines()[0] == "W0,A0,C1,Y1,W1,A1,C2,Y2"

    def test_file_output_with_sidecar(self, tmp_path, capsys):
        out = tmp_path / "data.csv"
        code, _, _ = run_cli(capsys, "generate", "--n", "30", "--seed", "3",
                             "--out", str(out))
        assert code == 0
        assert out.exists()
        sidecar = json.loads((tmp_path / "data.csv.config.json").read_text())
        assert sidecar == {"command": "generate", "n": 30, "seed": 3}


class TestTruth:
    def test_deterministic_json(self, capsys):
        args = ("truth", "--regime", "1", "--mc-draws", "10000000", "--seed", "0")
        code1, out1, _ = run_cli(capsys, *args)
        code2, out2, _ = run_cli(capsys, *args)
        assert code1 == code2 == 0
        assert out1 == out2
        payload = json.loads(out1)
        assert 0.0 < payload["psi_truth"] < 1.0
        assert abs(payload["quadrature"] - payload["monte_carlo"]) <= 5e-4
        assert payload["config"]["regime"] == 1


class TestCi:
    def test_mean_interval_centered_and_deterministic(self, capsys, mean_csv):
        args = ("ci", str(mean_csv), "--estimator", "mean", "--m", "2",
                "--B", "1", "--seed", "5")
        code, out1, _ = run_cli(capsys, *args)
        assert code == 0
        row = parse_csv(out1)[0]
        assert float(row["point"]) == 2.5
        assert float(row["lower"]) + float(row["upper"]) == pytest.approx(5.0)
        assert row["method"] == "cheap-subsampling"
        assert int(row["B"]) == 1 and int(row["m"]) == 2 and int(row["n"]) == 4
        _, out2, _ = run_cli(capsys, *args)
        assert out1 == out2

    def test_m_not_below_n_is_a_data_error(self, capsys, mean_csv):
        code, _, err = run_cli(capsys, "ci", str(mean_csv), "--m", "4")
        assert code == 2
        assert "m < n" in err

    def test_json_output_embeds_config(self, capsys, mean_csv):
        code, out, _ = run_cli(capsys, "ci", str(mean_csv), "--m", "2",
                               "--B", "3", "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["config"]["m"] == 2
        assert payload["n"] == 4
        assert payload["diagnostics"]["realized_B"] == 3
        assert len(payload["interval"]["replicate_estimates"]) == 3

    def test_longitudinal_end_to_end(self, capsys, dgm_csv):
        code, out, _ = run_cli(capsys, "ci", str(dgm_csv), "--estimator",
                               "longitudinal", "--eta", "0.632", "--B", "25",
                               "--seed", "4")
        assert code == 0
        row = parse_csv(out)[0]
        assert 0.0 <= float(row["lower"]) <= float(row["upper"]) <= 1.0
        assert int(row["m"]) == int(0.632 * 400)

    def test_logistic_asymptotic(self, capsys, tmp_path):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(500)
        y = (rng.random(500) < 1 / (1 + np.exp(-x))).astype(int)
        path = tmp_path / "logit.csv"
        with open(path, "w") as fh:
            fh.write("y,x\n")
            for yi, xi in zip(y, x):
                fh.write(f"{yi},{float(xi)!r}\n")
        code, out, _ = run_cli(capsys, "ci", str(path), "--estimator",
                               "logistic", "--method", "asymptotic-if")
        assert code == 0
        row = parse_csv(out)[0]
        assert float(row["lower"]) < 1.0 < float(row["upper"]) * 2  # slope near 1

    def test_estimator_failure_exit_code(self, capsys, tmp_path):
        # perfectly separated outcome: the full-data fit cannot converge
        path = tmp_path / "sep.csv"
        with open(path, "w") as fh:
            fh.write("y,x\n")
            for i in range(40):
                xi = (i - 20) / 5.0
                fh.write(f"{int(xi > 0)},{float(xi)!r}\n")
        code, _, err = run_cli(capsys, "ci", str(path), "--estimator",
                               "logistic", "--method", "asymptotic-if")
        assert code == 3
        assert "estimator failure" in err

    def test_missing_input(self, capsys):
        code, _, err = run_cli(capsys, "ci", "--estimator", "mean")
        assert code == 2
        assert "input" in err

    def test_explicit_m_wins_over_eta(self, capsys, mean_csv):
        code, out, _ = run_cli(capsys, "ci", str(mean_csv), "--m", "2",
                               "--eta", "0.75", "--B", "2")
        assert code == 0
        assert int(parse_csv(out)[0]["m"]) == 2

    def test_rerun_from_sidecar_reproduces_output(self, tmp_path, capsys,
                                                  mean_csv):
        first = tmp_path / "ci.csv"
        code, _, _ = run_cli(capsys, "ci", str(mean_csv), "--eta", "0.5",
                             "--B", "4", "--seed", "11", "--out", str(first))
        assert code == 0
        second = tmp_path / "ci2.csv"
        code, _, _ = run_cli(capsys, "ci", "--config",
                             str(first) + ".config.json", "--out", str(second))
        assert code == 0
        assert first.read_bytes() == second.read_bytes()

    def test_unknown_flag_is_an_error(self, mean_csv):
        with pytest.raises(SystemExit) as exc:
            main(["ci", str(mean_csv), "--frobnicate"])
        assert exc.value.code == 2


SIM_ARGS = ("simulate", "--estimator", "mean", "--n", "60", "--eta", "0.5",
            "--B", "4", "--n-sim", "12", "--seed", "21")


class TestSimulate:
    def test_stdout_csv(self, capsys):
        code, out, _ = run_cli(capsys, *SIM_ARGS)
        assert code == 0
        rows = parse_csv(out)
        assert [r["method"] for r in rows] == [
            "cheap-subsampling", "cheap-bootstrap", "jackknife-limit",
            "asymptotic-if"]
        for r in rows:
            assert 0.0 <= float(r["coverage"]) <= 1.0
            assert r["seed"] == "21"

    def test_file_outputs_and_raw(self, tmp_path, capsys):
        out = tmp_path / "report.csv"
        raw = tmp_path / "raw.csv"
        code, _, _ = run_cli(capsys, *SIM_ARGS, "--out", str(out),
                             "--raw-out", str(raw))
        assert code == 0
        assert out.exists()
        report = json.loads((tmp_path / "report.csv.json").read_text())
        assert report["scenario"]["n"] == 60
        sidecar = json.loads((tmp_path / "report.csv.config.json").read_text())
        assert sidecar["seed"] == 21 and sidecar["command"] == "simulate"
        raw_rows = parse_csv(raw.read_text())
        assert len(raw_rows) == 12 * 4

    def test_worker_count_does_not_change_output_bytes(self, tmp_path, capsys):
        out1, out2 = tmp_path / "w1.csv", tmp_path / "w2.csv"
        assert run_cli(capsys, *SIM_ARGS, "--workers", "1", "--out", str(out1))[0] == 0
        assert run_cli(capsys, *SIM_ARGS, "--workers", "2", "--out", str(out2))[0] == 0
        assert out1.read_bytes() == out2.read_bytes()
        assert (tmp_path / "w1.csv.json").read_bytes() == \
            (tmp_path / "w2.csv.json").read_bytes()

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "estimator": "mean", "n": 60, "eta": 0.5, "B": 4, "n_sim": 6,
            "seed": 9, "methods": "cheap-subsampling"}))
        out = tmp_path / "rep.csv"
        code, _, _ = run_cli(capsys, "simulate", "--config", str(cfg),
                             "--n-sim", "8", "--out", str(out))
        assert code == 0
        sidecar = json.loads((tmp_path / "rep.csv.config.json").read_text())
        assert sidecar["n_sim"] == 8  # flag wins
        assert sidecar["seed"] == 9  # config survives

    def test_rerun_from_sidecar_reproduces_report(self, tmp_path, capsys):
        first = tmp_path / "a.csv"
        assert run_cli(capsys, *SIM_ARGS, "--out", str(first))[0] == 0
        second = tmp_path / "b.csv"
        code, _, _ = run_cli(capsys, "simulate", "--config",
                             str(first) + ".config.json", "--out", str(second))
        assert code == 0
        assert first.read_bytes() == second.read_bytes()

    def test_config_for_wrong_command_rejected(self, tmp_path, capsys):
        first = tmp_path / "a.csv"
        assert run_cli(capsys, *SIM_ARGS, "--out", str(first))[0] == 0
        code, _, err = run_cli(capsys, "truth", "--config",
                               str(first) + ".config.json")
        assert code == 2
        assert "simulate" in err

    def test_unknown_config_field(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        code, _, err = run_cli(capsys, "simulate", "--config", str(cfg))
        assert code == 2
        assert "bogus" in err

    def test_invalid_method_name(self, capsys):
        code, _, err = run_cli(capsys, "simulate", "--estimator", "mean",
                               "--n", "50", "--n-sim", "2", "--B", "2",
                               "--methods", "percentile")
        assert code == 2
        assert "percentile" in err

    def test_longitudinal_smoke_scenario(self, tmp_path, capsys):
        out = tmp_path / "smoke.csv"
        code, _, _ = run_cli(capsys, "simulate", "--n", "500", "--eta",
                             "0.632", "--B", "25", "--n-sim", "200",
                             "--seed", "77", "--out", str(out))
        assert code == 0
        rows = parse_csv(out.read_text())
        assert len(rows) == 4  # one row per method
        for r in rows:
            assert r["m"] == "316"
            assert 0.0 <= float(r["coverage"]) <= 1.0
            assert float(r["mean_width"]) > 0.0


class TestSeedExperiment:
    def test_outputs(self, tmp_path, capsys):
        out = tmp_path / "seed.csv"
        code, _, _ = run_cli(capsys, "seed-experiment", "--estimator", "mean",
                             "--n", "120", "--eta-grid", "0.5,0.8",
                             "--b-grid", "3,6", "--n-seeds", "3",
                             "--seed", "2", "--out", str(out))
        assert code == 0
        detail = parse_csv(out.read_text())
        assert len(detail) == 2 * 2 * 3
        summary = parse_csv((tmp_path / "seed.csv.summary.csv").read_text())
        assert len(summary) == 4
        for row in summary:
            assert float(row["upper_range"]) >= 0.0

    def test_single_seed_zero_spread(self, capsys):
        code, out, _ = run_cli(capsys, "seed-experiment", "--estimator", "mean",
                               "--n", "100", "--eta-grid", "0.5",
                               "--b-grid", "4", "--n-seeds", "1")
        assert code == 0
        rows = parse_csv(out)
        assert len(rows) == 1


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "cheapsub.cli", "generate", "--n", "5",
         "--seed", "1"],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert proc.stdout.startswith("W0,A0,C1,Y1,W1,A1,C2,Y2")
