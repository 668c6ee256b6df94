"""End-to-end CLI behavior through bgt.cli.main (no subprocesses)."""

import csv
import json
from fractions import Fraction as F

import pytest

from bgt import load_instance
from bgt.cli import main

INSTANCE_715 = '{"rates": ["7/15", "1/3", "1/5"]}\n'


@pytest.fixture
def inst715(tmp_path):
    path = tmp_path / "inst.json"
    path.write_text(INSTANCE_715)
    return str(path)


def _out_doc(capsys):
    return json.loads(capsys.readouterr().out)


def test_oracle_opt_prints_bare_rational(inst715, capsys):
    assert main(["oracle", "opt", inst715]) == 0
    assert capsys.readouterr().out == "4/3\n"


def test_oracle_opt_writes_a_witness(inst715, tmp_path, capsys):
    sched_path = tmp_path / "witness.json"
    assert main(["oracle", "opt", inst715, "--schedule-out", str(sched_path)]) == 0
    capsys.readouterr()
    assert main(["verify", inst715, "--schedule", str(sched_path),
                 "--expect-global", "4/3"]) == 0
    doc = _out_doc(capsys)
    assert doc["global_max_matches"] is True


def test_oracle_pinwheel_json(capsys):
    assert main(["oracle", "pinwheel", "--freqs", "2,4,4"]) == 0
    assert _out_doc(capsys) == {"feasible": True, "freqs": [2, 4, 4]}
    assert main(["oracle", "pinwheel", "--freqs", "2,3,5"]) == 0
    assert _out_doc(capsys)["feasible"] is False


def test_oracle_feasible_cap(inst715, capsys):
    assert main(["oracle", "feasible", inst715, "--cap", "4/3"]) == 0
    assert _out_doc(capsys)["feasible"] is True
    assert main(["oracle", "feasible", inst715, "--cap", "13/10"]) == 0
    assert _out_doc(capsys)["feasible"] is False


def test_approx_main_verify_certifies_uniform16(tmp_path, capsys):
    path = tmp_path / "u16.json"
    path.write_text(json.dumps({"rates": ["1/16"] * 16}))
    assert main(["approx", "main", str(path), "--verify"]) == 0
    doc = _out_doc(capsys)
    assert doc["global_max"] == "7/4"
    assert doc["bound_satisfied"] is True
    assert doc["final_density"] == "5/8"


def test_approx_eightfifths_emits_certificate(inst715, capsys):
    assert main(["approx", "eightfifths", inst715, "--oracle"]) == 0
    doc = _out_doc(capsys)
    assert doc["case"] == 0
    assert doc["bound_satisfied"] is True
    assert "ratio_vs_oracle" in doc
    assert len(doc["schedule_prefix"]) > 0


def test_simulate_family_rm127_default_rounds(capsys):
    assert main(["simulate", "--family", "rm127", "--k", "10",
                 "--strategy", "reduce-max"]) == 0
    doc = _out_doc(capsys)
    assert doc["per_bamboo_max"][0] == "120/73"


def test_simulate_reduce_fastest_reports_divergence(capsys):
    assert main(["simulate", "--family", "rf-lb", "--x", "1/2", "--eps", "1/4",
                 "--strategy", "reduce-fastest", "--x", "1/2", "--rounds", "40"]) == 0
    assert _out_doc(capsys)["diverging_bamboo"] == 2


def test_simulate_trace_csv(inst715, tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    assert main(["simulate", inst715, "--strategy", "reduce-max", "--rounds", "12",
                 "--trace", str(trace)]) == 0
    rows = list(csv.reader(trace.open()))
    assert rows[0] == ["round", "cut", "max_height", "max_height_approx"]
    assert len(rows) == 13
    assert rows[1][1] == "1"  # the fastest bamboo is cut first


def test_malformed_rates_name_the_field(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"rates": ["1/2", "nope"]}')
    assert main(["oracle", "opt", str(path)]) == 2
    assert "rates[1]" in capsys.readouterr().err


def test_verify_bound_failure_is_exit_1(tmp_path, inst715, capsys):
    sched = tmp_path / "two.json"
    assert main(["approx", "two", inst715, "--out", str(sched)]) == 0
    capsys.readouterr()
    assert main(["verify", inst715, "--schedule", str(sched), "--bound", "2"]) == 0
    capsys.readouterr()
    assert main(["verify", inst715, "--schedule", str(sched), "--bound", "3/2"]) == 1
    doc = _out_doc(capsys)  # the failing run still emits its report
    assert doc["bound_satisfied"] is False


def test_gen_random_plants_the_head_ratio(tmp_path, capsys):
    path = tmp_path / "r.json"
    assert main(["gen", "random", "--n", "50", "--seed", "3",
                 "--head-ratio", "1/8", "--out", str(path)]) == 0
    rates = load_instance(path.open())
    assert rates.rate(1) / rates.H == F(1, 8)


def test_gen_freqs_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen", "freqs", "--f1", "64", "--seed", "5", "--out", str(a)]) == 0
    assert main(["gen", "freqs", "--f1", "64", "--seed", "5", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_bench_is_thread_count_invariant(tmp_path, capsys):
    one, four = tmp_path / "one.csv", tmp_path / "four.csv"
    base = ["bench", "--count", "6", "--seed", "1", "--n-max", "200"]
    assert main(base + ["--jobs", "1", "--out", str(one)]) == 0
    assert main(base + ["--jobs", "4", "--out", str(four)]) == 0
    assert one.read_bytes() == four.read_bytes()
    rows = list(csv.reader(one.open()))
    assert len(rows) == 7


def test_continuous_gen_run_and_lb(tmp_path, capsys):
    inst = tmp_path / "clusters.json"
    assert main(["continuous", "gen", "clusters", "--n", "8",
                 "--diameter", "1", "--out", str(inst)]) == 0
    capsys.readouterr()
    walk_csv = tmp_path / "walk.csv"
    assert main(["continuous", "run", str(inst), "--algo", "3", "--horizon", "40",
                 "--walk-out", str(walk_csv)]) == 0
    doc = _out_doc(capsys)
    assert doc["bound_satisfied"] is True
    rows = list(csv.reader(walk_csv.open()))
    assert rows[0] == ["step", "point", "time"]
    assert len(rows) > 10
    assert main(["continuous", "lb", str(inst)]) == 0
    lb = _out_doc(capsys)
    assert lb["diameter_bound"] == "1/4"  # D * h_max = 1 * 1/4


def test_oracle_budget_env(inst715, capsys, monkeypatch):
    monkeypatch.setenv("BGT_ORACLE_BUDGET", "2")
    assert main(["oracle", "opt", inst715]) == 1
    assert "budget" in capsys.readouterr().err
    monkeypatch.setenv("BGT_ORACLE_BUDGET", "zero")
    assert main(["oracle", "opt", inst715]) == 2
