import json
import subprocess
import sys

import pytest

from qtesters import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, json.loads(out.out), out.err


class TestVerify:
    def test_ppovm_suite_lists_100_checks(self, capsys):
        code, report, _ = run_cli(capsys, "verify", "--suite", "ppovm", "--seed", "7")
        assert code == 0 and report["status"] == "pass"
        checks = report["payload"]["suites"]["ppovm"]["checks"]
        assert len(checks) == 100
        assert all(c["pass"] for c in checks)

    def test_payloads_byte_identical_across_runs(self, capsys):
        _, r1, _ = run_cli(capsys, "verify", "--suite", "muub", "--seed", "3", "--json-only")
        _, r2, _ = run_cli(capsys, "verify", "--suite", "muub", "--seed", "3", "--json-only")
        assert json.dumps(r1["payload"], sort_keys=True) == json.dumps(r2["payload"], sort_keys=True)

    def test_json_only_suppresses_stderr(self, capsys):
        _, _, err = run_cli(capsys, "verify", "--suite", "qmath", "--seed", "0", "--json-only")
        assert err == ""
        _, _, err = run_cli(capsys, "verify", "--suite", "qmath", "--seed", "0")
        assert "suite" in err


class TestBound:
    def test_mub_pair_payload(self, capsys):
        code, report, _ = run_cli(capsys, "bound", "--t1", "0Z", "--t2", "0X",
                                  "--starts", "8", "--seed", "1", "--json-only")
        assert code == 0
        payload = report["payload"]
        assert payload["value"] == pytest.approx(1.0, abs=1e-3)
        assert payload["classification"] == "maximal"
        assert len(payload["starts"]) == 8
        assert payload["minimizer"]["rows"] == 2

    def test_usage_error_exits_2(self, capsys):
        assert cli.main(["bound", "--t1", "0Z", "--badflag"]) == 2

    def test_unknown_tester_exits_2(self, capsys):
        code, report, _ = run_cli(capsys, "bound", "--t1", "0Z", "--t2", "9Q", "--json-only")
        assert code == 2 and report["status"] == "error"

    def test_tester_file_input(self, capsys, tmp_path):
        from qtesters.tester import named_tester

        path = tmp_path / "t.json"
        path.write_text(json.dumps(named_tester("+X").to_json()))
        code, report, _ = run_cli(capsys, "bound", "--t1", "0Z", "--t2", str(path),
                                  "--starts", "8", "--seed", "1", "--json-only")
        assert code == 0
        assert report["payload"]["value"] == pytest.approx(0.0, abs=1e-5)


class TestMuubCheck:
    def test_verdict_true_exits_0(self, capsys):
        code, report, _ = run_cli(capsys, "muub-check", "--b1", "rotation",
                                  "--b2", "hadamard-pair", "--json-only")
        assert code == 0
        assert report["payload"]["kappa"] == pytest.approx(2.0, abs=1e-6)

    def test_verdict_false_exits_1(self, capsys):
        code, report, _ = run_cli(capsys, "muub-check", "--b1", "pauli",
                                  "--b2", "pauli", "--json-only")
        assert code == 1 and report["status"] == "fail"


class TestBasis:
    def test_list(self, capsys):
        code, report, _ = run_cli(capsys, "basis", "list", "--json-only")
        assert code == 0 and "weyl" in report["payload"]["names"]

    def test_dump_weyl_d3(self, capsys):
        code, report, _ = run_cli(capsys, "basis", "dump", "--name", "weyl",
                                  "--d", "3", "--json-only")
        assert code == 0
        assert len(report["payload"]["elements"]) == 9
        assert report["payload"]["elements"][0]["rows"] == 3


class TestQkd:
    def test_lm05_run(self, capsys):
        code, report, _ = run_cli(capsys, "qkd", "lm05", "--rounds", "2000",
                                  "--control-fraction", "0.2", "--eve", "qmm",
                                  "--seed", "5", "--json-only")
        assert code == 0
        stats = report["payload"]["stats"]
        assert stats["rounds"] == 2000
        assert stats["eve_accuracy"] == 1.0

    def test_extended_with_config_file(self, capsys, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({
            "d": 2, "D": 2, "rounds": 1000,
            "eve": {"kind": "qmm-equivalent-tester"},
            "tester_sets": ["z", "xcomp"],
            "encoding_sets": ["rotation", "hadamard-pair"],
            "seed": 9,
        }))
        code, report, _ = run_cli(capsys, "qkd", "extended", "--config", str(cfgfile),
                                  "--json-only")
        assert code == 0
        assert report["payload"]["stats"]["sifted"] > 0

    def test_config_with_overrides_rejected(self, capsys, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({
            "rounds": 10, "tester_sets": ["z", "xcomp"],
            "encoding_sets": ["rotation", "hadamard-pair"],
        }))
        code, report, _ = run_cli(capsys, "qkd", "extended", "--config", str(cfgfile),
                                  "--rounds", "99", "--json-only")
        assert code == 2

    def test_trace_flag(self, capsys, tmp_path):
        path = tmp_path / "rounds.csv"
        code, _, _ = run_cli(capsys, "qkd", "extended", "--rounds", "100",
                             "--seed", "0", "--trace", str(path), "--json-only")
        assert code == 0
        assert len(path.read_text().strip().splitlines()) == 101


class TestEntryPoint:
    def test_console_script(self):
        proc = subprocess.run([sys.executable, "-m", "qtesters.cli", "basis", "list",
                               "--json-only"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["status"] == "pass"
