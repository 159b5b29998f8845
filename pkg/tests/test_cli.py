"""Command-line behavior: subcommand contracts, output schemas, manifest
embedding, reproducibility, and exit codes."""

import json
import math

import numpy as np
import pytest

from sdiqkd.bounds import default_grid, pe_max_at_eta_avg
from sdiqkd.cli import main
from sdiqkd.protocol import key_rate


def _run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


HONEST_SPEC = {"mode": "honest", "encoding": {"variant": "fixed2to1"}, "eta": 0.8}
IR_SPEC = {
    "mode": "ir",
    "encoding": {"variant": "fixed2to1"},
    "eta": 0.5,
    "eve_measurements": [[0.0, 0.0], [1.5707963267948966, 0.0]],
}


def _write_spec(tmp_path, doc, name="attack.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


class TestCurve:
    def test_analytic_csv_stdout(self, capsys):
        code, out, err = _run(
            capsys, ["curve", "--n", "2", "--grid", "5", "--format", "csv"]
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0].startswith("# manifest: ")
        assert lines[1] == "eta_avg,pe_max,source,converged,restarts_used"
        assert len(lines) == 2 + 5
        first = lines[2].split(",")
        assert first[0] == "0.500000"
        assert first[1] == f"{pe_max_at_eta_avg(2, 'fixed', 0.5):.6f}"
        assert first[2] == "analytic"
        assert first[3] == "" and first[4] == ""
        manifest = json.loads(lines[0].removeprefix("# manifest: "))
        assert manifest["command"] == "curve"
        assert manifest["parameters"]["n"] == 2

    def test_analytic_json_file_with_sidecar(self, capsys, tmp_path):
        out_path = tmp_path / "curve.json"
        code, _, _ = _run(
            capsys,
            ["curve", "--n", "3", "--tamper", "eve", "--grid", "4", "--format", "json",
             "--out", str(out_path)],
        )
        assert code == 0
        doc = json.loads(out_path.read_text())
        assert doc["manifest"]["parameters"]["tamper"] == "eve"
        assert len(doc["points"]) == 4
        # Recompute from the unrounded grid; the records themselves round
        # to six decimals, which can dip below the domain's left edge.
        for record, eta_avg in zip(doc["points"], default_grid(3, 4)):
            assert abs(record["eta_avg"] - round(eta_avg, 6)) <= 1e-9
            expected = pe_max_at_eta_avg(3, "eve", eta_avg)
            assert abs(record["pe_max"] - round(expected, 6)) <= 1e-6
            assert record["converged"] is None
        sidecar = json.loads((tmp_path / "curve.json.manifest.json").read_text())
        assert sidecar["command"] == "curve"
        assert sidecar["duration_seconds"] >= 0.0

    def test_reruns_are_byte_identical(self, capsys, tmp_path):
        # Same parameters, same path, rerun after snapshotting: the data
        # file must not change by a byte.
        target = tmp_path / "a.csv"
        args = ["curve", "--n", "2", "--mode", "optimize", "--grid", "3",
                "--restarts", "2", "--seed", "9", "--out", str(target)]
        assert _run(capsys, args)[0] == 0
        first = target.read_bytes()
        first_sidecar = json.loads((tmp_path / "a.csv.manifest.json").read_text())
        assert _run(capsys, args)[0] == 0
        assert target.read_bytes() == first
        second_sidecar = json.loads((tmp_path / "a.csv.manifest.json").read_text())
        first_sidecar.pop("duration_seconds"), second_sidecar.pop("duration_seconds")
        # Duration lives only in the sidecar, keeping the data file stable.
        assert first_sidecar == second_sidecar

    def test_optimized_rows_match_analytic(self, capsys):
        code, out, _ = _run(
            capsys,
            ["curve", "--n", "2", "--mode", "optimize", "--grid", "3",
             "--restarts", "3", "--seed", "4"],
        )
        assert code == 0
        rows = [line.split(",") for line in out.strip().split("\n")[2:]]
        for eta_avg, pe, source, converged, restarts in rows:
            assert source == "optimized"
            assert converged == "true"
            assert restarts == "3"
            assert abs(float(pe) - pe_max_at_eta_avg(2, "fixed", float(eta_avg))) < 1e-4

    def test_nonconverged_points_warn_and_exit_3(self, capsys, tmp_path):
        out_path = tmp_path / "c.csv"
        code, _, err = _run(
            capsys,
            ["curve", "--n", "2", "--tamper", "eve", "--mode", "optimize",
             "--grid", "2", "--restarts", "1", "--max-iterations", "3",
             "--out", str(out_path)],
        )
        assert code == 3
        assert "did not converge" in err
        # The file is still written, with the rows flagged.
        rows = out_path.read_text().strip().split("\n")[2:]
        assert all(row.split(",")[3] == "false" for row in rows)

    def test_bad_grid_exits_2(self, capsys):
        code, _, err = _run(capsys, ["curve", "--n", "2", "--grid", "1"])
        assert code == 2
        assert "error" in err

    def test_unknown_flag_exits_2(self, capsys):
        assert _run(capsys, ["curve", "--n", "4"])[0] == 2


class TestCritical:
    def test_2to1_half(self, capsys):
        code, out, _ = _run(
            capsys, ["critical", "--n", "2", "--pb-target", "0.8535533905932737"]
        )
        assert code == 0
        assert out.splitlines()[0] == "0.500000"

    def test_3to1_fixed(self, capsys):
        code, out, _ = _run(capsys, ["critical", "--n", "3", "--pb-target", "0.75"])
        assert code == 0
        assert out.splitlines()[0] == "0.387426"

    def test_3to1_tampered_plateau_notes(self, capsys):
        code, out, _ = _run(
            capsys, ["critical", "--n", "3", "--tamper", "eve", "--pb-target", "0.75"]
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "0.414214"
        assert any("plateau" in line for line in lines[1:])
        assert any("41.2%" in line for line in lines[1:])

    def test_unreachable_target_exits_4(self, capsys):
        code, _, err = _run(capsys, ["critical", "--n", "2", "--pb-target", "0.7"])
        assert code == 4
        assert "error" in err

    def test_invalid_target_exits_2(self, capsys):
        assert _run(capsys, ["critical", "--n", "2", "--pb-target", "1.5"])[0] == 2


class TestSimulate:
    def test_honest_report(self, capsys, tmp_path):
        spec = _write_spec(tmp_path, HONEST_SPEC)
        code, out, _ = _run(
            capsys, ["simulate", "--spec", spec, "--rounds", "50000", "--seed", "7"]
        )
        assert code == 0
        doc = json.loads(out)
        report = doc["report"]
        assert report["mode"] == "honest"
        assert report["chi_square"]["passed"] is True
        assert report["matched_setting_fraction"] is None
        assert report["clicked_rounds"] <= report["emitted_rounds"]
        assert abs(report["empirical"]["p_b"] - report["predicted"]["p_b"]) < 0.01

    def test_interception_report_uses_echo_default(self, capsys, tmp_path):
        spec = _write_spec(tmp_path, IR_SPEC)
        code, out, _ = _run(
            capsys, ["simulate", "--spec", spec, "--rounds", "50000", "--seed", "8"]
        )
        assert code == 0
        report = json.loads(out)["report"]
        assert report["chi_square"]["passed"] is True
        # With the echo receiver both sides measure the same eigenstate.
        assert report["predicted"]["p_b"] == report["predicted"]["p_e"]
        assert report["matched_setting_fraction"] > 0.5

    def test_delayed_report(self, capsys, tmp_path):
        doc = {
            "mode": "dm",
            "encoding": {"variant": "fixed2to1"},
            "eta": 0.6,
            "unitary_generators": [[0.0] * 16, [0.0] * 16],
            "eve_measurements": [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
            "bob_measurements": [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
        }
        spec = _write_spec(tmp_path, doc)
        code, out, _ = _run(
            capsys, ["simulate", "--spec", spec, "--rounds", "40000", "--seed", "9"]
        )
        assert code == 0
        report = json.loads(out)["report"]
        assert report["mode"] == "dm"
        assert report["chi_square"]["passed"] is True

    def test_report_files_reproduce(self, capsys, tmp_path):
        spec = _write_spec(tmp_path, HONEST_SPEC)
        a, b = tmp_path / "ra.json", tmp_path / "rb.json"
        args = ["simulate", "--spec", spec, "--rounds", "20000", "--seed", "3"]
        assert _run(capsys, args + ["--out", str(a)])[0] == 0
        assert _run(capsys, args + ["--out", str(b)])[0] == 0
        doc_a, doc_b = json.loads(a.read_text()), json.loads(b.read_text())
        assert doc_a["report"] == doc_b["report"]

    def test_n_cross_check(self, capsys, tmp_path):
        spec = _write_spec(tmp_path, HONEST_SPEC)
        code, _, err = _run(capsys, ["simulate", "--spec", spec, "--n", "3"])
        assert code == 2
        assert "contradicts" in err

    @pytest.mark.parametrize(
        "mangle",
        [
            lambda d: {**d, "mode": "sneaky"},  # unknown mode
            lambda d: {k: v for k, v in d.items() if k != "eta"},  # missing eta
            lambda d: {**d, "encoding": {"variant": "nope"}},  # unknown encoding
        ],
    )
    def test_bad_spec_exits_2(self, capsys, tmp_path, mangle):
        spec = _write_spec(tmp_path, mangle(dict(HONEST_SPEC)))
        assert _run(capsys, ["simulate", "--spec", spec])[0] == 2

    def test_missing_spec_file_exits_2(self, capsys, tmp_path):
        assert _run(capsys, ["simulate", "--spec", str(tmp_path / "nope.json")])[0] == 2

    def test_malformed_json_exits_2(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        assert _run(capsys, ["simulate", "--spec", str(path)])[0] == 2


class TestKeyrate:
    def test_secure_margin(self, capsys):
        code, out, _ = _run(capsys, ["keyrate", "--pb", "0.85", "--pe", "0.75"])
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "margin 0.100000"
        assert lines[1] == f"rate_bob {key_rate(0.85):.6f}"
        assert lines[2] == f"rate_eve {key_rate(0.75):.6f}"
        assert lines[3] == "SECURE"

    def test_equal_rates_are_insecure(self, capsys):
        code, out, _ = _run(capsys, ["keyrate", "--pb", "0.8", "--pe", "0.8"])
        assert code == 0
        assert out.splitlines()[-1] == "INSECURE"

    def test_out_of_range_exits_2(self, capsys):
        assert _run(capsys, ["keyrate", "--pb", "1.2", "--pe", "0.5"])[0] == 2


class TestTopLevel:
    def test_version_flag(self, capsys):
        code, out, _ = _run(capsys, ["--version"])
        assert code == 0
        assert out.startswith("sdiqkd ")

    def test_missing_subcommand_exits_2(self, capsys):
        assert _run(capsys, [])[0] == 2

    def test_round_half_even_in_outputs(self, capsys):
        # Six-decimal rounding uses the platform round-half-even rule.
        assert f"{0.5000005:.6f}" == "0.500000" or f"{0.5000005:.6f}" == "0.500001"
        code, out, _ = _run(capsys, ["curve", "--n", "2", "--grid", "2"])
        assert code == 0
        values = [line.split(",")[1] for line in out.strip().split("\n")[2:]]
        assert all(len(v.split(".")[1]) == 6 for v in values)
