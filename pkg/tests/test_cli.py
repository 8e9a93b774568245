import csv
import json
import subprocess
import sys

import pytest

from bistable_ring.cli import build_parser, parse_and_dispatch


def run(argv, capsys):
    code = parse_and_dispatch(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_landscape_json(capsys):
    code, out, _ = run(["landscape", "--n", "2", "--gamma", "0.2"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["summary"]["count"] == 9
    m = doc["manifest"]
    assert m["tool"] == "bistable-ring" and m["command"] == "landscape"
    assert m["config"]["gamma"] == 0.2 and m["config"]["n"] == 2


def test_rerun_is_byte_identical(tmp_path):
    outs = []
    path = tmp_path / "o.json"
    for _ in range(2):
        assert parse_and_dispatch(["graph", "--n", "3", "--gamma", "0.3", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["result"]["h"] is not None


def test_csv_with_manifest_sidecar(tmp_path):
    path = tmp_path / "pts.csv"
    assert parse_and_dispatch(["landscape", "--n", "3", "--gamma", "0.2", "--format", "csv", "--out", str(path)]) == 0
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 27
    assert {"value", "n_neg", "x0", "x2"} <= set(rows[0])
    side = json.loads((tmp_path / "pts.csv.manifest.json").read_text())
    assert side["config"]["format"] == "csv"


def test_csv_to_stdout_puts_manifest_on_stderr(capsys):
    code, out, err = run(["graph", "--n", "2", "--gamma", "0.4", "--format", "csv"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "source,target,saddle,barrier,resolved"
    assert json.loads(err)["command"] == "graph"


def test_invalid_input_exits_1(capsys):
    assert run(["landscape", "--n", "1", "--gamma", "0.2"], capsys)[0] == 1
    assert run(["landscape", "--gamma", "0.2"], capsys)[0] == 1
    assert run(["nonsense"], capsys)[0] == 1
    assert run(["simulate", "--n", "2", "--gamma", "0.6"], capsys)[0] == 1
    assert run(["simulate", "--n", "2", "--gamma", "0.6", "--sigma", "0.5", "--r", "0.5"], capsys)[0] == 1
    assert run(["n4", "--format", "csv"], capsys)[0] == 1


def test_numerical_failure_exits_2(capsys):
    # at gamma = 1/2 the N = 2 gate saddle is degenerate
    code, _, err = run(["graph", "--n", "2", "--gamma", "0.5"], capsys)
    assert code == 2
    assert "numerical failure" in err


def test_barrier_curve_and_plot_data(tmp_path, capsys):
    plot = tmp_path / "curve.csv"
    code, out, _ = run(["graph", "--n", "2", "--gamma-min", "0.4", "--gamma-max", "0.6", "--gamma-step", "0.05",
                        "--plot-data", str(plot)], capsys)
    assert code == 0
    curve = json.loads(out)["result"]["barrier_curve"]
    assert [c["gamma"] for c in curve] == [0.4, 0.45, 0.5, 0.55, 0.6]
    assert curve[2]["h"] == "nan"
    assert curve[-1]["h"] == pytest.approx(0.25)
    assert len(list(csv.reader(open(plot)))) == 6


def test_droplet_plot_data(tmp_path, capsys):
    plot = tmp_path / "path.csv"
    assert run(["graph", "--n", "3", "--gamma", "0.05", "--plot-data", str(plot)], capsys)[0] == 0
    rows = list(csv.DictReader(open(plot)))
    assert [r["state"] for r in rows][:3] == ["---", "0--", "+--"]


def test_n4_and_cm(capsys):
    code, out, _ = run(["n4", "--gamma", "0.2"], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert res["feasibility_end"] == pytest.approx(0.320377241, abs=1e-9)
    code, out, _ = run(["cm", "--n", "4"], capsys)
    assert json.loads(out)["result"]["c03"] == pytest.approx(1.0, abs=1e-12)


def test_simulate_csv(tmp_path):
    path = tmp_path / "hits.csv"
    argv = ["simulate", "--n", "2", "--gamma", "0.6", "--sigma", "0.7", "--trials", "5", "--format", "csv", "--out", str(path)]
    assert parse_and_dispatch(argv) == 0
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 5 and rows[0]["trial"] == "0"


def test_parser_defaults():
    a = build_parser().parse_args(["landscape"])
    assert a.r == 0.1 and a.R == 0.4 and a.max_time == 1e5 and a.seed == 0


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bistable_ring.cli", "symdyn"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["improved_threshold"] == pytest.approx(0.258, abs=1e-3)
