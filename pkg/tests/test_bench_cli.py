import json
import subprocess
import sys

import pytest

from conftest import make_t1
from mpdptw.bench_cli import CSV_HEADER, ReportRow, RunReport, derive_events, instance_seed, main, solve
from mpdptw.dynamic_planner import write_events, DynamicEvent
from mpdptw.evolution import GaConfig
from mpdptw.instance_model import Node, generate_synthetic, parse_lilim, serialize_lilim
from mpdptw.schedule_eval import Solution, hard_violations


@pytest.fixture
def syn_file(tmp_path):
    path = tmp_path / "syn4.txt"
    path.write_text(serialize_lilim(generate_synthetic(4, 0.5, 3, n_vehicles=3)))
    return path


def test_derive_events_arithmetic():
    inst = generate_synthetic(10, 0.5, 1)
    red, evs = derive_events(inst, 0.2, 0.3, seed=5)
    assert len(red.couples) == 8 and len(evs) == 2
    assert all(e.t_d == 0.3 * inst.horizon for e in evs)
    red2, evs2 = derive_events(inst, 0.2, 0.3, seed=5)
    assert red2 == red and evs2 == evs


def test_derive_events_partition():
    inst = generate_synthetic(7, 0.5, 2)
    red, evs = derive_events(inst, 0.4, 0.1, seed=9)
    key = lambda p, d: (p.x, p.y, p.q, p.e, p.l, p.s, d.x, d.y, d.e, d.l, d.s)
    orig = sorted(key(inst.nodes[c.pickup_id], inst.nodes[c.delivery_id]) for c in inst.couples)
    got = sorted([key(red.nodes[c.pickup_id], red.nodes[c.delivery_id]) for c in red.couples]
                 + [key(e.pickup, e.delivery) for e in evs])
    assert got == orig


@pytest.mark.parametrize("fraction", [0.0, 1.0, 0.999])
def test_derive_events_rejects_bad_fraction(fraction):
    with pytest.raises(ValueError):
        derive_events(generate_synthetic(3, 0.5, 1), fraction, 0.5, 0)


def test_table_row_shape():
    rows = [ReportRow(25, 234467.71, 63.95, 53.66, {})] + [ReportRow(25, 1.0 + i, 1.0, 1.0, {}) for i in range(4)]
    rep = RunReport("LRC101", "m1", 3, {}, {}, rows)
    lines = rep.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1] == "LRC101,m1,5,25,234467.71,63.95,53.66,3"


def test_empty_report_csv_is_header_only():
    assert RunReport("X", "static", 0, {}, {}).to_csv() == ",".join(CSV_HEADER) + "\n"


def test_report_round_trip_and_invariants():
    inst = generate_synthetic(3, 0.5, 4, n_vehicles=2)
    rep = solve(inst, "static", GaConfig(pop_size=8, generations=10, seed=2), oracle=True)
    text = rep.to_json()
    assert RunReport.from_json(text).to_json() == text
    doc = json.loads(text)
    assert doc["N_sol"] == len(doc["rows"]) >= 1
    pts = [(r["f1"], r["f2"]) for r in doc["rows"]]
    assert not any(a != b and a[0] <= b[0] and a[1] <= b[1] for a in pts for b in pts)
    for r in doc["rows"]:
        assert hard_violations(inst, Solution.from_dict(r["routes"])) == []
        assert r["f1"] >= doc["bounds"]["f1_bound"] and r["f2"] >= doc["bounds"]["f2_raw"]
    s = doc["summary"]
    assert doc["rows"][s["min_f1"]]["f1"] == min(p[0] for p in pts)
    assert doc["rows"][s["min_f2"]]["f2"] == min(p[1] for p in pts)
    assert doc["oracle_front"]


def test_cli_static(tmp_path, syn_file):
    out = tmp_path / "out"
    assert main(["--instance", str(syn_file), "--seed", "7", "--gens", "20", "--pop", "10",
                 "--out", str(out), "--format", "both"]) == 0
    doc = json.loads((out / "SYN4_static.json").read_text())
    assert doc["N_sol"] >= 1 and doc["seed"] == 7
    inst = parse_lilim(syn_file.read_text())
    for r in doc["rows"]:
        assert hard_violations(inst, Solution.from_dict(r["routes"])) == []
    csv_lines = (out / "SYN4_static.csv").read_text().splitlines()
    assert len(csv_lines) == doc["N_sol"] + 1


def test_cli_dynamic_with_event_file(tmp_path, capsys):
    t1 = tmp_path / "t1.txt"
    t1.write_text(serialize_lilim(make_t1(vehicles=2)))
    ev = tmp_path / "e.csv"
    ev.write_text(write_events([DynamicEvent(5.0, Node(-1, 2, 2, 3, 0, 1000, 0), Node(-1, 5, 1, -3, 0, 1000, 0))]))
    assert main(["--instance", str(t1), "--mode", "dynamic-m2", "--events", str(ev), "--gens", "5", "--pop", "6"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["method"] == "m2"
    assert [e["served"] for e in doc["events"]] == [True]
    assert doc["events"][0]["pickup_id"] == 3


def test_cli_deterministic_bytes(tmp_path, syn_file):
    args = ["--instance", str(syn_file), "--seed", "3", "--gens", "15", "--pop", "8", "--mode", "dynamic-m1",
            "--derive-events", "0.25", "0.2"]
    runs = []
    for name in ("a", "b"):
        assert main(args + ["--out", str(tmp_path / name)]) == 0
        runs.append((tmp_path / name / "SYN4_m1.json").read_bytes())
    assert runs[0] == runs[1]


def test_cli_timing_is_opt_in(tmp_path, syn_file, capsys):
    main(["--instance", str(syn_file), "--gens", "2", "--pop", "4", "--timing"])
    doc = json.loads(capsys.readouterr().out)
    assert doc["timing"]["seconds"] >= 0 and doc["timing"]["backend"] in ("cython", "python")


def test_cli_config_file_and_override(tmp_path, syn_file, capsys):
    cfg = tmp_path / "ga.cfg"
    cfg.write_text("pop_size = 6\ngenerations = 3\nseed = 11\n")
    assert main(["--instance", str(syn_file), "--config", str(cfg), "--seed", "12"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert (doc["config"]["pop_size"], doc["config"]["generations"], doc["seed"]) == (6, 3, 12)


def test_cli_directory_mode(tmp_path):
    folder = tmp_path / "in"
    folder.mkdir()
    for s in (1, 2):
        (folder / f"lrc10{s}.txt").write_text(serialize_lilim(generate_synthetic(3, 0.5, s, n_vehicles=2)))
    out = tmp_path / "out"
    assert main(["--instance-dir", str(folder), "--gens", "5", "--pop", "6", "--seed", "1", "--out", str(out),
                 "--format", "csv"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["LRC101_static.csv", "LRC102_static.csv"]
    first = (out / "LRC101_static.csv").read_text().splitlines()[1].split(",")
    assert int(first[-1]) == instance_seed(1, "LRC101")
    assert instance_seed(1, "LRC101") != instance_seed(1, "LRC102")


def test_cli_errors(tmp_path, syn_file, capsys):
    assert main(["--instance", str(tmp_path / "missing.txt")]) == 1
    assert "error" in capsys.readouterr().err
    bad = tmp_path / "bad.txt"
    bad.write_text("1 10 1\n0 0 0 0 0 100 0 0 0\n1 0 3 5 0 100 0 0 9\n")
    assert main(["--instance", str(bad)]) == 1
    assert "line 3" in capsys.readouterr().err
    assert main(["--instance", str(syn_file), "--derive-events", "0.5", "0.1"]) == 1
    with pytest.raises(SystemExit) as info:
        main(["--instance", str(syn_file), "--no-such-flag"])
    assert info.value.code != 0


def test_module_entry_point(syn_file):
    proc = subprocess.run([sys.executable, "-m", "mpdptw", "--instance", str(syn_file), "--gens", "2", "--pop", "4",
                           "--format", "csv"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == ",".join(CSV_HEADER)
