"""Command-line interface: exit codes, seed precedence, deterministic
output bytes, and report serialization round trips."""
import json

import numpy as np
import pytest

from nphkit import AnalysisReport, SurvivalDataset, write_dataset_csv
from nphkit.cli import main

from conftest import make_dataset

SMALL_CONFIG = {
    "scenario": "delayed1",
    "design": {"n_total": 60, "target_events": 40},
    "replicates": 6,
    "seed": 99,
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(SMALL_CONFIG))
    return str(path)


@pytest.fixture
def dataset_csv(tmp_path):
    ds = make_dataset(
        [1, 2, 3, 4, 5, 6, 2.5, 3.5, 4.5, 7.0],
        [1, 1, 1, 1, 1, 1, 0, 0, 1, 0],
        [0, 0, 1, 1, 0, 1, 0, 1, 0, 1],
    )
    path = tmp_path / "data.csv"
    write_dataset_csv(ds, path)
    return str(path)


class TestSimulate:
    def test_runs_and_writes_json(self, config_path, tmp_path):
        out = tmp_path / "out.json"
        assert main(["simulate", config_path, str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["replicates"] == 6
        assert payload["config"]["seed"] == 99
        assert set(payload["methods"]) >= {"logrank", "maxcombo"}

    def test_reruns_are_byte_identical(self, config_path, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        main(["simulate", config_path, str(out1)])
        main(["simulate", config_path, str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_jobs_do_not_change_bytes(self, config_path, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        main(["simulate", config_path, str(out1), "--jobs", "1"])
        main(["simulate", config_path, str(out2), "--jobs", "2"])
        assert out1.read_bytes() == out2.read_bytes()

    def test_csv_format(self, config_path, tmp_path):
        out = tmp_path / "out.csv"
        assert main(["simulate", config_path, str(out), "--format", "csv"]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "section,name,value,mc_se,n_rejected,n_failed"
        assert any(line.startswith("rejection_pct,logrank") for line in lines)

    def test_seed_precedence(self, config_path, tmp_path, monkeypatch):
        # Flag beats environment beats config file.
        out_flag = tmp_path / "flag.json"
        out_env = tmp_path / "env.json"
        out_cfg = tmp_path / "cfg.json"
        monkeypatch.setenv("NPH_SEED", "1234")
        main(["simulate", config_path, str(out_env)])
        assert json.loads(out_env.read_text())["config"]["seed"] == 1234
        main(["simulate", config_path, str(out_flag), "--seed", "77"])
        assert json.loads(out_flag.read_text())["config"]["seed"] == 77
        monkeypatch.delenv("NPH_SEED")
        main(["simulate", config_path, str(out_cfg)])
        assert json.loads(out_cfg.read_text())["config"]["seed"] == 99

    def test_bad_env_seed(self, config_path, tmp_path, monkeypatch):
        monkeypatch.setenv("NPH_SEED", "not-a-number")
        assert main(["simulate", config_path, str(tmp_path / "o.json")]) == 2

    def test_missing_config_exits_2(self, tmp_path):
        assert main(["simulate", str(tmp_path / "nope.json"), str(tmp_path / "o")]) == 2

    def test_invalid_json_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["simulate", str(bad), str(tmp_path / "o")]) == 2

    def test_unknown_key_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({**SMALL_CONFIG, "scenari0": 1}))
        assert main(["simulate", str(bad), str(tmp_path / "o")]) == 2
        assert "scenari0" in capsys.readouterr().err

    def test_unwritable_output_exits_3(self, config_path, tmp_path):
        out = tmp_path / "missing-dir" / "out.json"
        assert main(["simulate", config_path, str(out)]) == 3

    def test_bad_jobs_exits_2(self, config_path, tmp_path):
        assert main(["simulate", config_path, str(tmp_path / "o"), "--jobs", "0"]) == 2


class TestAnalyze:
    def test_report_structure(self, dataset_csv, tmp_path):
        out = tmp_path / "report.json"
        rc = main(["analyze", dataset_csv, str(out), "--cuts", "3", "--tau", "4"])
        assert rc == 0
        payload = json.loads(out.read_text())
        methods = {m["method"] for m in payload["methods"]}
        assert methods == {
            "logrank", "fh01", "fh10", "fh11", "rmst", "wkm",
            "breslow", "maxcombo", "lee", "cox",
        }
        assert payload["metadata"]["n"] == 10
        assert payload["metadata"]["cuts"] == [3.0]
        assert payload["metadata"]["direction"] == "experimental"
        assert len(payload["piecewise"]) == 2

    def test_json_round_trip(self, dataset_csv, tmp_path):
        out = tmp_path / "report.json"
        main(["analyze", dataset_csv, str(out)])
        payload = json.loads(out.read_text())
        report = AnalysisReport.from_dict(payload)
        assert report.to_dict() == payload

    def test_reruns_byte_identical(self, dataset_csv, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        main(["analyze", dataset_csv, str(out1)])
        main(["analyze", dataset_csv, str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_direction_control_mirrors_p(self, dataset_csv, tmp_path):
        out_e, out_c = tmp_path / "e.json", tmp_path / "c.json"
        main(["analyze", dataset_csv, str(out_e)])
        main(["analyze", dataset_csv, str(out_c), "--direction", "control"])
        pe = json.loads(out_e.read_text())
        pc = json.loads(out_c.read_text())
        row_e = next(m for m in pe["methods"] if m["method"] == "logrank")
        row_c = next(m for m in pc["methods"] if m["method"] == "logrank")
        assert row_c["p_one_sided"] == pytest.approx(1 - row_e["p_one_sided"], abs=1e-12)
        assert row_c["p_two_sided"] == pytest.approx(row_e["p_two_sided"], abs=1e-12)
        assert pc["metadata"]["direction"] == "control"

    def test_csv_format_p_digits(self, dataset_csv, tmp_path):
        out = tmp_path / "report.csv"
        main(["analyze", dataset_csv, str(out), "--format", "csv"])
        lines = out.read_text().splitlines()
        assert lines[0].startswith("section,name,")
        logrank = next(l for l in lines if l.startswith("method,logrank"))
        p_field = logrank.split(",")[2]
        # 4 significant digits
        assert p_field == f"{float(p_field):.4g}"

    def test_missing_csv_exits_3(self, tmp_path):
        assert main(["analyze", str(tmp_path / "no.csv"), str(tmp_path / "o")]) == 3

    def test_malformed_csv_exits_3(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("id,arm,time,event\n1,C,-3,1\n")
        assert main(["analyze", str(bad), str(tmp_path / "o")]) == 3

    def test_single_arm_exits_3(self, tmp_path):
        bad = tmp_path / "one.csv"
        bad.write_text("id,arm,time,event\n1,C,1,1\n2,C,2,1\n")
        assert main(["analyze", str(bad), str(tmp_path / "o")]) == 3

    def test_bad_cuts_exit_2(self, dataset_csv, tmp_path):
        assert main(["analyze", dataset_csv, str(tmp_path / "o"), "--cuts", "5,3"]) == 2
        assert main(["analyze", dataset_csv, str(tmp_path / "o"), "--cuts", "x"]) == 2

    def test_bad_tau_exits_2(self, dataset_csv, tmp_path):
        assert main(["analyze", dataset_csv, str(tmp_path / "o"), "--tau", "-1"]) == 2

    def test_bad_alpha_exits_2(self, dataset_csv, tmp_path):
        assert main(["analyze", dataset_csv, str(tmp_path / "o"), "--alpha", "0.7"]) == 2

    def test_numeric_failure_exits_4(self, dataset_csv, tmp_path, monkeypatch):
        from nphkit.errors import MvnFailureError
        import nphkit.cli as cli

        def boom(*args, **kwargs):
            raise MvnFailureError("integration failed")

        monkeypatch.setattr(cli, "analyze_dataset", boom)
        assert main(["analyze", dataset_csv, str(tmp_path / "o")]) == 4


class TestGrids:
    def test_table_small(self, tmp_path):
        out = tmp_path / "table.csv"
        rc = main([
            "table2", str(out), "--replicates", "8", "--seed", "5", "--enrollment", "12"
        ])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == (
            "sample_size,logrank,fh01,fh10,fh11,rmst,wkm,breslow,maxcombo,lee"
        )
        assert len(lines) == 4
        assert [l.split(",")[0] for l in lines[1:]] == ["300", "600", "1200"]
        # Every cell renders as a 3-decimal percentage.
        for line in lines[1:]:
            for cell in line.split(",")[1:]:
                assert cell == f"{float(cell):.3f}"

    def test_power_small(self, tmp_path):
        out = tmp_path / "power.csv"
        rc = main([
            "power", str(out), "--scenario", "delayed1",
            "--replicates", "6", "--seed", "5",
        ])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "scenario,sample_size,method,power_pct,mc_se_pct"
        assert len(lines) == 1 + 3 * 9

    def test_power_unknown_scenario_exits_2(self, tmp_path):
        assert main(["power", str(tmp_path / "o"), "--scenario", "nope"]) == 2

    def test_table_json_format(self, tmp_path):
        out = tmp_path / "table.json"
        main([
            "table2", str(out), "--replicates", "4", "--seed", "5",
            "--format", "json",
        ])
        payload = json.loads(out.read_text())
        assert payload["seed"] == 5
        assert len(payload["rows"]) == 3


class TestTopLevel:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "nphkit" in capsys.readouterr().out

    def test_missing_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
