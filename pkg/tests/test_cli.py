import csv
import io as stdio
import json

import pytest

from mcipsched import io
from mcipsched.cli import main
from mcipsched.model import (PREEMPTIVE, SETUP_CLASS, SPLITTABLE, Instance, Job, Part,
                             SplitSchedule, TrivialRun, validate)
from mcipsched.rng import generate

MODELS = (SETUP_CLASS, SPLITTABLE, PREEMPTIVE)


def gen(tmp_path, model, n=4, m=2, seed=1, extra=()):
    path = tmp_path / f"{model}-{seed}.json"
    assert main(["generate", "--model", model, "--n", str(n), "--m", str(m),
                 "--seed", str(seed), "-o", str(path), *extra]) == 0
    return path


def test_generate_is_byte_identical(tmp_path):
    a = gen(tmp_path, SPLITTABLE)
    first = a.read_bytes()
    gen(tmp_path, SPLITTABLE)
    assert a.read_bytes() == first


def test_generate_rejects_too_many_classes(tmp_path):
    assert main(["generate", "--model", SETUP_CLASS, "--n", "2", "--m", "1",
                 "--classes", "3"]) == 2


def test_generate_empty(tmp_path, capsys):
    assert main(["generate", "--model", PREEMPTIVE, "--n", "0", "--m", "3"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["jobs"] == []


@pytest.mark.parametrize("model", MODELS)
def test_solve_then_validate(tmp_path, model, capsys):
    inst = gen(tmp_path, model, n=4, m=2, seed=3)
    out, report = tmp_path / "s.json", tmp_path / "r.json"
    assert main(["solve", str(inst), "--model", model, "--epsilon", "1/2", "-o", str(out),
                 "--report", str(report), "--oracle"]) == 0
    rep = json.loads(report.read_text())
    assert rep["accepted"] and rep["iterations"] >= 1
    if rep["oracle"]["kind"] == "exact":
        assert rep["ratio"] >= 1
    assert main(["validate", str(inst), str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["valid"] is True


def test_solve_backends_and_flags(tmp_path):
    inst = gen(tmp_path, SPLITTABLE, n=2, m=2, seed=5)
    for flags in (["--backend", "augment"], ["--container-rounding", "on"],
                  ["--simple-schedule", "off"]):
        out = tmp_path / "s.json"
        assert main(["solve", str(inst), "-o", str(out), "--report", str(tmp_path / "r"),
                     *flags]) == 0
        assert main(["validate", str(inst), str(out)]) == 0


def test_corrupted_schedule_fails_validation(tmp_path, capsys):
    inst = gen(tmp_path, SPLITTABLE, n=3, m=2, seed=2)
    out = tmp_path / "s.json"
    assert main(["solve", str(inst), "-o", str(out), "--report", str(tmp_path / "r")]) == 0
    data = json.loads(out.read_text())
    part = data["parts"][0] if data["parts"] else data["trivialRuns"][0]
    part["length"] = str(io.rat(part["length"]) - 1)
    out.write_text(json.dumps(data))
    assert main(["validate", str(inst), str(out)]) == 1
    assert json.loads(capsys.readouterr().out.splitlines()[-1])["kind"] in ("mass", "length")


def test_fixed_t_below_lower_bound_rejects(tmp_path, capsys):
    inst = gen(tmp_path, PREEMPTIVE, n=3, m=2, seed=4)
    assert main(["solve", str(inst), "--fixed-T", "1/3"]) == 1
    report = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert report["accepted"] is False


def test_fixed_t_accepts_generous_guess(tmp_path, capsys):
    inst = gen(tmp_path, SETUP_CLASS, n=3, m=2, seed=4)
    assert main(["solve", str(inst), "--fixed-T", "100"]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["model"] == SETUP_CLASS
    assert json.loads(captured.err)["accepted"] is True


def test_model_flag_must_match(tmp_path):
    inst = gen(tmp_path, SPLITTABLE)
    assert main(["solve", str(inst), "--model", PREEMPTIVE]) == 2


def test_usage_errors(tmp_path):
    inst = gen(tmp_path, SPLITTABLE)
    assert main(["solve", str(inst), "--epsilon", "2/3"]) == 2
    assert main(["solve", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 2


def test_cap_exit_code(tmp_path):
    inst = gen(tmp_path, SETUP_CLASS, n=14, m=3, seed=1)
    assert main(["oracle", str(inst), "--cap", "100"]) == 3


def test_oracle_command(tmp_path, capsys):
    inst = gen(tmp_path, SETUP_CLASS, n=3, m=2, seed=6)
    assert main(["oracle", str(inst)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["kind"] == "exact" and "witness" in out


def test_bench_csv(tmp_path):
    path = tmp_path / "bench.csv"
    assert main(["bench", "--model", SPLITTABLE, "--n", "3", "--m", "2", "--seeds", "1:4",
                 "-o", str(path)]) == 0
    rows = list(csv.DictReader(stdio.StringIO(path.read_text())))
    assert len(rows) == 4
    for row in rows:
        assert float(row["ratio"]) >= 1
        assert float(row["bound_ratio"]) <= 2.5


# ------------------------------------------------------------------- io

@pytest.mark.parametrize("model", MODELS)
def test_instance_round_trip(model):
    inst = generate(model, 5, 3, 9, denominator=3)
    assert io.instance_from_json(json.loads(io.dump(io.instance_to_json(inst)))) == inst


def test_one_based_indices_on_disk():
    inst = Instance(SPLITTABLE, 3, (Job(io.rat(4), io.rat(1)),))
    sched = SplitSchedule((Part(0, 2, io.rat(1)),), (TrivialRun(0, 1, io.rat(3)),))
    data = io.schedule_to_json(inst, sched)
    assert data["parts"][0]["machine"] == 3 and data["trivialRuns"][0]["job"] == 1
    assert io.schedule_from_json(data, inst) == sched


def test_trivial_run_length_inferred():
    inst = Instance(SPLITTABLE, 4, (Job(io.rat(7), io.rat(1)),))
    data = {"model": SPLITTABLE, "parts": [{"job": 1, "machine": 1, "length": 1}],
            "trivialRuns": [{"job": 1, "count": 2}]}
    sched = io.schedule_from_json(data, inst)
    assert sched.trivial_runs == (TrivialRun(0, 2, io.rat(3)),)
    assert validate(inst, sched) is None


@pytest.mark.parametrize("bad", [
    {"model": SPLITTABLE, "machines": 1, "jobs": [{"p": 1}]},
    {"model": SPLITTABLE, "machines": "2", "jobs": []},
    {"model": SETUP_CLASS, "machines": 1, "jobs": [{"p": 1, "class": 0}], "classes": [{"s": 1}]},
    {"model": SPLITTABLE, "machines": 1, "jobs": [{"p": "0.5", "s": 1}]},
])
def test_malformed_instances(bad):
    with pytest.raises(ValueError):
        io.instance_from_json(bad)


def test_digest_is_stable():
    inst = generate(PREEMPTIVE, 4, 2, 1)
    assert io.digest(inst) == io.digest(generate(PREEMPTIVE, 4, 2, 1))
    assert len(io.digest(inst)) == 16
