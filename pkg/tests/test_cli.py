import csv
import io
import json
import subprocess
import sys

import pytest

from urnmeasure.cli import main


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_kernel_kstar_json(capsys):
    code, out, _ = run(["kernel", "kstar", "--theta", "0.5", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["theta"] == 0.5
    assert doc["rows"][0]["value"] == pytest.approx(2**0.5 - 1, abs=1e-12)


def test_kernel_csv_starts_with_config(capsys):
    code, out, _ = run(["kernel", "pi", "--theta", "0.5", "--kmax", "2", "--format", "csv"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# config: ")
    assert json.loads(lines[0][len("# config: "):])["kmax"] == 2
    assert lines[1] == "i,j,value,method,est_abs_error"
    assert len(lines) == 2 + 4
    assert float(lines[2].split(",")[2]) == pytest.approx(0.41161165235, abs=1e-10)


def test_forward_grid_row_count(capsys):
    code, out, _ = run(["kernel", "forward", "--theta", "0.5", "--grid", "0.1", "--format", "csv"],
                       capsys)
    assert code == 0
    assert len(out.splitlines()) == 2 + 121


def test_simulate_is_byte_identical(tmp_path, capsys):
    path = tmp_path / "a.csv"
    outputs = []
    for _ in range(2):
        code, _, err = run(["simulate", "--theta", "0.5", "--n", "500", "--seed", "17", "--reps", "3",
                            "--set", "0:0.5", "--k", "1", "--set", "0.25:1", "--k", "2",
                            "--format", "csv", "-o", str(path)], capsys)
        assert code == 0
        outputs.append(path.read_bytes())
    a, b = outputs
    assert a == b and b"\r" not in a
    assert len(a.decode().splitlines()) == 2 + 6


def test_verify_bounds_passes_and_threshold_fails(tmp_path, capsys):
    code, out, err = run(["verify", "bounds", "--reps", "100", "--seed", "1"], capsys)
    assert code == 0
    assert "runtime" in err and "runtime_s" not in out
    code, _, _ = run(["verify", "clt", "--n", "1000", "--reps", "50", "--seed", "1",
                      "--threshold", "0"], capsys)
    assert code == 1


@pytest.mark.parametrize("args", [
    ["kernel", "kstar"],
    ["kernel", "kstar", "--theta", "1.5"],
    ["kernel", "kstar", "--theta", "0.5", "--a", "0.6:0.2"],
    ["simulate", "--theta", "0.5", "--n", "10"],
    ["verify", "clt"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(args, capsys):
    assert run(args, capsys)[0] == 2


def test_text_commands(tmp_path, capsys):
    text = tmp_path / "t.txt"
    text.write_text("the cat sat on the mat\nthe dog\n", encoding="utf-8")
    code, out, _ = run(["text", "theta", str(text)], capsys)
    assert code == 0
    assert json.loads(out)["theta_hat"] == pytest.approx(5 / 6)
    assert run(["text", "scan", str(text)], capsys)[0] == 2
    empty = tmp_path / "e.txt"
    empty.write_text("123 456", encoding="utf-8")
    assert run(["text", "theta", str(empty)], capsys)[0] == 2
    assert run(["text", "theta", str(tmp_path / "missing.txt")], capsys)[0] == 3


def test_text_scan_output(tmp_path, capsys):
    text = tmp_path / "t.txt"
    words = "aa bb aa cc dd aa ee ff gg aa bb hh ii jj kk ".split()
    text.write_text(" ".join(words * 30), encoding="utf-8")
    code, out, _ = run(["text", "scan", str(text), "--seed", "4", "--resamples", "199",
                        "--grid", "0.05"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["seed"] == 4
    assert doc["result"]["n"] == 450 and doc["result"]["R_n"] == 11
    assert 0 < doc["result"]["p_value"] <= 1


def test_output_io_error(tmp_path, capsys):
    target = tmp_path / "no" / "such" / "dir" / "x.csv"
    assert run(["kernel", "kstar", "--theta", "0.5", "-o", str(target)], capsys)[0] == 3


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "urnmeasure", "--help"], capture_output=True,
                         text=True)
    assert out.returncode == 0 and "verify" in out.stdout


def test_simulate_examples(capsys):
    code, out, _ = run(["simulate", "--theta", "0.5", "--n", "100000", "--set", "0:1", "--k", "1",
                        "--seed", "7", "--format", "csv"], capsys)
    assert code == 0
    header, row = out.splitlines()[1:3]
    assert header.split(",")[4] == "count" and int(row.split(",")[4]) > 0
    code, out, _ = run(["simulate", "--theta", "0.5", "--n", "1000", "--set", "0:0.25,0.75:1",
                        "--k", "2", "--seed", "7", "--format", "csv"], capsys)
    assert code == 0
    row = next(csv.reader(io.StringIO(out.splitlines()[2])))
    assert row[1] == "0:0.25,0.75:1" and len(row) == 7


def test_parametric_scan_dispatch(tmp_path, capsys):
    text = tmp_path / "t.txt"
    text.write_text(" ".join("aa bb aa cc dd aa ee ff".split() * 40), encoding="utf-8")
    code, out, _ = run(["text", "scan", str(text), "--seed", "3", "--resamples", "199",
                        "--grid", "0.1", "--method", "parametric"], capsys)
    assert code == 0
    assert json.loads(out)["result"]["method"] == "parametric"


@pytest.mark.slow
def test_verify_clt_default_size(capsys):
    code, out, _ = run(["verify", "clt", "--theta", "0.5", "--n", "100000", "--reps", "2000",
                        "--seed", "11", "--format", "text"], capsys)
    assert code == 0
    assert "var[0:1|k=1]" in out
