"""JSON reading and writing.  Indices are 1-based on disk, 0-based in memory."""
from __future__ import annotations

import hashlib
import json
from fractions import Fraction

from .model import (PREEMPTIVE, SETUP_CLASS, SPLITTABLE, AssignmentSchedule, Instance, Job,
                    Part, PreemptiveSchedule, SplitSchedule, TimedPart, TrivialRun)
from .rational import fmt, rat


class FormatError(ValueError):
    pass


def instance_to_json(instance: Instance) -> dict:
    out = {"model": instance.model, "machines": instance.machines}
    if instance.model == SETUP_CLASS:
        out["jobs"] = [{"p": fmt(job.p), "class": job.cls + 1} for job in instance.jobs]
        out["classes"] = [{"s": fmt(s)} for s in instance.class_setups]
    else:
        out["jobs"] = [{"p": fmt(job.p), "s": fmt(job.s)} for job in instance.jobs]
    return out


def instance_from_json(data: dict) -> Instance:
    try:
        model = data["model"]
        m = data["machines"]
        if not isinstance(m, int) or isinstance(m, bool):
            raise FormatError("machines must be an integer")
        if model == SETUP_CLASS:
            jobs = tuple(Job(rat(j["p"]), cls=_index(j["class"])) for j in data["jobs"])
            setups = tuple(rat(c["s"]) for c in data.get("classes", []))
            return Instance(model, m, jobs, setups)
        jobs = tuple(Job(rat(j["p"]), rat(j["s"])) for j in data["jobs"])
        return Instance(model, m, jobs)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed instance: {exc!r}") from exc


def schedule_to_json(instance: Instance, schedule) -> dict:
    out = {"model": instance.model}
    if instance.model == SETUP_CLASS:
        out["assignment"] = [i + 1 for i in schedule.assignment]
    elif instance.model == SPLITTABLE:
        out["parts"] = [{"job": p.job + 1, "machine": p.machine + 1, "length": fmt(p.length)}
                        for p in schedule.parts]
        out["trivialRuns"] = [{"job": r.job + 1, "count": r.count, "length": fmt(r.length)}
                              for r in schedule.trivial_runs]
    else:
        out["parts"] = [{"job": p.job + 1, "machine": p.machine + 1, "length": fmt(p.length),
                         "start": fmt(p.start)} for p in schedule.parts]
    return out


def schedule_from_json(data: dict, instance: Instance | None = None):
    try:
        model = data.get("model", instance.model if instance else None)
        if model == SETUP_CLASS:
            return AssignmentSchedule(tuple(_index(i) for i in data["assignment"]))
        if model == SPLITTABLE:
            parts = tuple(Part(_index(p["job"]), _index(p["machine"]), rat(p["length"]))
                          for p in data.get("parts", []))
            runs = tuple(TrivialRun(_index(r["job"]), r["count"], _run_length(r, parts, instance))
                         for r in data.get("trivialRuns", []))
            return SplitSchedule(parts, runs)
        if model == PREEMPTIVE:
            return PreemptiveSchedule(tuple(
                TimedPart(_index(p["job"]), _index(p["machine"]), rat(p["length"]),
                          rat(p["start"])) for p in data.get("parts", [])))
    except (KeyError, TypeError, AttributeError) as exc:
        raise FormatError(f"malformed schedule: {exc!r}") from exc
    raise FormatError(f"unknown model {model!r}")


def _run_length(run: dict, parts, instance: Instance | None) -> Fraction:
    if "length" in run:
        return rat(run["length"])
    # without a length the run carries whatever the parts leave of the job
    if instance is None:
        raise FormatError("a trivial run without length needs the instance")
    j = _index(run["job"])
    rest = instance.jobs[j].p - sum((p.length for p in parts if p.job == j), Fraction(0))
    return rest / run["count"]


def _index(value) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise FormatError(f"indices are positive integers, got {value!r}")
    return value - 1


def load(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def dump(data, path: str | None = None) -> str:
    text = json.dumps(data, indent=1, sort_keys=False) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def digest(instance: Instance) -> str:
    text = json.dumps(instance_to_json(instance), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]
