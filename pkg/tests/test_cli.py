import csv
import json

import pytest

from pmsched.cli import main
from pmsched.core import instance_to_dict, read_instance, write_instance
from pmsched.fixtures import single_job_example, six_job_example

pytestmark = pytest.mark.usefixtures()


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_generate_construct_solve_validate_pipeline(tmp_path, capsys):
    inst = tmp_path / "i.json"
    code, out, _ = run(capsys, "generate", "--preset", "n10c1k2s5", "--seed", "3",
                       "--out", str(inst))
    assert code == 0
    info = json.loads(out)
    assert info["n"] == 10 and info["reference_cost"]["violations"] == 0

    # the generated reference schedule passes validation (exit 0)
    code, out, _ = run(capsys, "validate", "--instance", str(inst),
                       "--schedule", info["reference_out"])
    assert code == 0
    assert json.loads(out)["violations"] == 0

    ca = tmp_path / "ca.json"
    code, out, _ = run(capsys, "construct", "--instance", str(inst), "--out", str(ca))
    assert code == 0
    ca_cost = json.loads(out)["cost"]

    sa = tmp_path / "sa.json"
    stats = tmp_path / "stats.json"
    code, out, _ = run(capsys, "solve", "--instance", str(inst),
                       "--iteration-budget", "400", "--runs", "2", "--seed", "7",
                       "--out", str(sa), "--stats", str(stats))
    assert code == 0
    sa_cost = json.loads(out)["cost"]
    assert sa_cost["aggregate"] <= ca_cost["aggregate"]
    chains = json.loads(stats.read_text())["chains"]
    assert len(chains) == 2
    assert {"iterations", "accepted", "rejected", "best_aggregate",
            "final_temperature", "seed"} <= set(chains[0])

    code, _, _ = run(capsys, "validate", "--instance", str(inst), "--schedule", str(sa))
    assert code in (0, 3)


def test_round_trip_preserves_structure(tmp_path):
    inst = six_job_example()
    path = tmp_path / "six.json"
    write_instance(inst, path)
    again = read_instance(path)
    assert instance_to_dict(again) == instance_to_dict(inst)


def test_oracle_command_and_exit_codes(tmp_path, capsys):
    path = tmp_path / "one.json"
    write_instance(single_job_example(), path)
    code, out, _ = run(capsys, "oracle", "--instance", str(path))
    assert code == 0
    doc = json.loads(out)
    assert doc["status"] == "OPTIMAL" and doc["cost"]["aggregate"] == 5.0

    six = tmp_path / "six.json"
    write_instance(six_job_example(), six)
    code, out, _ = run(capsys, "oracle", "--instance", str(six), "--node-cap", "10")
    assert code == 4
    assert json.loads(out)["status"] == "BUDGET_EXCEEDED"


def test_validate_reports_violations_with_exit_3(tmp_path, capsys):
    inst_path = tmp_path / "six.json"
    write_instance(six_job_example(), inst_path)
    bad = {
        "instance_id": "six",
        "jobs": [
            {"id": j, "machine": 1, "start": 0, "end": 5, "setup_len": 1,
             "prev": "b1", "spanned": [], "violated": None}
            for j in (1, 2, 3, 4, 5, 6)
        ],
        "cost": {"T": 0, "C": 5, "S": 6, "violations": 0, "aggregate": 11},
    }
    bad_path = tmp_path / "bad.json"
    bad_path.write_text(json.dumps(bad))
    code, out, _ = run(capsys, "validate", "--instance", str(inst_path),
                       "--schedule", str(bad_path))
    assert code == 3
    assert json.loads(out)["violations"] > 0


def test_malformed_instance_gives_error_json_and_exit_2(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text("{\"version\": 1}")
    code, _, err = run(capsys, "construct", "--instance", str(bad))
    assert code == 2
    assert json.loads(err)["error"]["code"] == 2


def test_export_model_command(tmp_path, capsys):
    path = tmp_path / "six.json"
    write_instance(six_job_example(), path)
    code, out, _ = run(capsys, "export-model", "--instance", str(path),
                       "--out", str(tmp_path / "model"))
    assert code == 0
    doc = json.loads(out)
    mzn = open(doc["mzn"]).read()
    assert mzn.count("cumulative(") == 2
    assert "nPH = 5;" in open(doc["dzn"]).read()


def test_gantt_command_marks_downtime(tmp_path, capsys):
    inst_path = tmp_path / "six.json"
    write_instance(six_job_example(), inst_path)
    sched = tmp_path / "s.json"
    code, _, _ = run(capsys, "construct", "--instance", str(inst_path),
                     "--out", str(sched))
    assert code == 0
    svg_path = tmp_path / "chart.svg"
    code, _, _ = run(capsys, "gantt", "--instance", str(inst_path),
                     "--schedule", str(sched), "--out", str(svg_path))
    assert code == 0
    svg = svg_path.read_text()
    assert '<rect class="downtime" data-machine="2" data-start="6" data-end="8"' in svg
    assert 'fill="url(#hatch)"' in svg
    assert svg.count('class="capacity"') == 2


def test_bench_emits_versioned_csv_and_summary(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    summary = tmp_path / "summary.json"
    code, stdout, _ = run(capsys, "bench", "--preset", "n10c1k2s5", "--count", "3",
                          "--seed", "1", "--iteration-budget", "200", "--runs", "1",
                          "--out", str(out), "--summary", str(summary))
    assert code == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["version", "instance", "method", "seed", "makespan",
                       "tardiness", "setup_total", "violations", "tardy_jobs",
                       "aggregate", "wall_time_s"]
    assert len(rows) == 1 + 3 * 2
    methods = {r[2] for r in rows[1:]}
    assert methods == {"CA", "SA"}
    doc = json.loads(summary.read_text())
    assert doc["mean_relative_improvement"]["aggregate"] is not None
    assert doc["mean_relative_improvement"]["aggregate"] >= 0


def test_bench_accepts_instance_files(tmp_path, capsys):
    path = tmp_path / "six.json"
    write_instance(six_job_example(), path)
    out = tmp_path / "b.csv"
    code, stdout, _ = run(capsys, "bench", "--instances", str(path),
                          "--iteration-budget", "150", "--runs", "1",
                          "--out", str(out))
    assert code == 0
    assert json.loads(stdout)["instances"] == 1


def test_unknown_preset_fails_cleanly(tmp_path, capsys):
    code, _, err = run(capsys, "generate", "--preset", "nope",
                       "--out", str(tmp_path / "x.json"))
    assert code == 2
    assert "preset" in json.loads(err)["error"]["message"]
