"""Instances and schedules for the three setup-time models, with validators.

Times are exact Fractions.  Jobs, classes and machines are 0-based in memory;
the JSON layer in ``io`` converts to the 1-based external numbering.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BoundExceeded, ModelMismatch

SETUP_CLASS = "setup-class"
SPLITTABLE = "splittable"
PREEMPTIVE = "preemptive"
MODELS = (SETUP_CLASS, SPLITTABLE, PREEMPTIVE)


@dataclass(frozen=True)
class Job:
    p: Fraction
    s: Fraction | None = None   # own setup (splittable, preemptive)
    cls: int | None = None      # class index (setup-class)


@dataclass(frozen=True)
class Instance:
    model: str
    machines: int
    jobs: tuple[Job, ...]
    class_setups: tuple[Fraction, ...] = ()
    # intermediate instances of the preemptive pipeline carry zero setups
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.machines < 1:
            raise ValueError("need at least one machine")
        for j, job in enumerate(self.jobs):
            if job.p <= 0:
                raise ValueError(f"job {j}: processing time must be positive")
            if self.model == SETUP_CLASS:
                if job.cls is None or not 0 <= job.cls < len(self.class_setups):
                    raise ValueError(f"job {j}: bad class index {job.cls}")
            elif job.s is None or job.s < 0 or (self.strict and job.s == 0):
                raise ValueError(f"job {j}: setup time must be positive")
        if self.model == SETUP_CLASS:
            if any(s <= 0 for s in self.class_setups):
                raise ValueError("class setup times must be positive")
            if len(self.class_setups) > len(self.jobs):
                raise ValueError("more classes than jobs")

    @property
    def n(self) -> int:
        return len(self.jobs)

    def setup(self, j: int) -> Fraction:
        job = self.jobs[j]
        if self.model == SETUP_CLASS:
            return self.class_setups[job.cls]
        return job.s

    def with_machines(self, m: int) -> "Instance":
        return Instance(self.model, m, self.jobs, self.class_setups, self.strict)


@dataclass(frozen=True)
class AssignmentSchedule:
    """Setup-class: machine of every job; each class pays one setup per machine."""
    assignment: tuple[int, ...]


@dataclass(frozen=True)
class Part:
    job: int
    machine: int
    length: Fraction


@dataclass(frozen=True)
class TrivialRun:
    """`count` machines that each run job `job` alone for `length` time units."""
    job: int
    count: int
    length: Fraction


@dataclass(frozen=True)
class SplitSchedule:
    parts: tuple[Part, ...] = ()
    trivial_runs: tuple[TrivialRun, ...] = ()


@dataclass(frozen=True)
class TimedPart:
    """Preemptive part: setup occupies [start, start+s), processing follows."""
    job: int
    machine: int
    length: Fraction
    start: Fraction


@dataclass(frozen=True)
class PreemptiveSchedule:
    parts: tuple[TimedPart, ...] = ()


_VARIANT = {SETUP_CLASS: AssignmentSchedule, SPLITTABLE: SplitSchedule,
            PREEMPTIVE: PreemptiveSchedule}


@dataclass
class Outcome:
    """Result of one pipeline run at a fixed makespan guess T."""
    accepted: bool
    schedule: object | None
    transcript: object
    stats: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    job: int | None = None
    machine: int | None = None
    time: Fraction | None = None


def _check_variant(instance: Instance, schedule) -> None:
    if not isinstance(schedule, _VARIANT[instance.model]):
        raise ModelMismatch(
            f"{type(schedule).__name__} does not fit a {instance.model} instance")


def machine_loads(instance: Instance, schedule) -> dict[int, Fraction]:
    """Busy time per explicitly used machine (trivial runs excluded)."""
    _check_variant(instance, schedule)
    loads: dict[int, Fraction] = defaultdict(Fraction)
    if instance.model == SETUP_CLASS:
        seen = set()
        for j, i in enumerate(schedule.assignment):
            job = instance.jobs[j]
            loads[i] += job.p
            if (i, job.cls) not in seen:
                seen.add((i, job.cls))
                loads[i] += instance.class_setups[job.cls]
    else:
        for part in schedule.parts:
            loads[part.machine] += instance.jobs[part.job].s + part.length
    return dict(loads)


def makespan(instance: Instance, schedule) -> Fraction:
    _check_variant(instance, schedule)
    v = validate(instance, schedule)
    if v is not None:
        raise ValueError(f"invalid schedule: {v.kind}: {v.message}")
    if instance.model == PREEMPTIVE:
        return max((pt.start + instance.jobs[pt.job].s + pt.length
                    for pt in schedule.parts), default=Fraction(0))
    best = max(machine_loads(instance, schedule).values(), default=Fraction(0))
    if instance.model == SPLITTABLE:
        for run in schedule.trivial_runs:
            best = max(best, instance.jobs[run.job].s + run.length)
    return best


def _busy_intervals(instance: Instance, schedule) -> dict[int, list[tuple[Fraction, Fraction]]]:
    """Occupied windows per machine; non-preemptive models are packed from 0."""
    if instance.model == PREEMPTIVE:
        out: dict[int, list] = defaultdict(list)
        for pt in schedule.parts:
            out[pt.machine].append((pt.start, pt.start + instance.jobs[pt.job].s + pt.length))
        return dict(out)
    return {i: [(Fraction(0), load)] for i, load in machine_loads(instance, schedule).items()}


def validate(instance: Instance, schedule) -> Violation | None:
    """First violated schedule invariant, or None when the schedule is feasible."""
    if not isinstance(schedule, _VARIANT[instance.model]):
        return Violation("model-mismatch", f"{type(schedule).__name__} for {instance.model}")
    m, n = instance.machines, instance.n
    if instance.model == SETUP_CLASS:
        if len(schedule.assignment) != n:
            return Violation("shape", f"{len(schedule.assignment)} assignments for {n} jobs")
        for j, i in enumerate(schedule.assignment):
            if not 0 <= i < m:
                return Violation("machine-range", f"machine {i} out of range", job=j, machine=i)
        return None

    mass: dict[int, Fraction] = defaultdict(Fraction)
    for part in schedule.parts:
        if not 0 <= part.job < n:
            return Violation("job-range", f"job {part.job} out of range", job=part.job)
        if not 0 <= part.machine < m:
            return Violation("machine-range", f"machine {part.machine} out of range",
                             job=part.job, machine=part.machine)
        if part.length <= 0:
            return Violation("length", "part length must be positive",
                             job=part.job, machine=part.machine)
        mass[part.job] += part.length
    if instance.model == SPLITTABLE:
        for run in schedule.trivial_runs:
            if not 0 <= run.job < n:
                return Violation("job-range", f"job {run.job} out of range", job=run.job)
            if run.count < 1 or run.length <= 0:
                return Violation("trivial-run", "trivial runs need count >= 1 and positive length",
                                 job=run.job)
            mass[run.job] += run.count * run.length
        used = len({part.machine for part in schedule.parts})
        if used + sum(r.count for r in schedule.trivial_runs) > m:
            return Violation("machine-count", "more machines referenced than available")
    elif any(pt.start < 0 for pt in schedule.parts):
        bad = next(pt for pt in schedule.parts if pt.start < 0)
        return Violation("start", "negative start time", job=bad.job, machine=bad.machine,
                         time=bad.start)
    for j, job in enumerate(instance.jobs):
        if mass[j] != job.p:
            return Violation("mass", f"parts sum to {mass[j]}, need {job.p}", job=j)

    if instance.model == PREEMPTIVE:
        by_machine: dict[int, list] = defaultdict(list)
        by_job: dict[int, list] = defaultdict(list)
        for pt in schedule.parts:
            window = (pt.start, pt.start + instance.jobs[pt.job].s + pt.length, pt)
            by_machine[pt.machine].append(window)
            by_job[pt.job].append(window)
        for i in sorted(by_machine):
            hit = _first_overlap(by_machine[i])
            if hit is not None:
                return Violation("machine-overlap", "two parts overlap on one machine",
                                 job=hit.job, machine=i, time=hit.start)
        for j in sorted(by_job):
            hit = _first_overlap(by_job[j])
            if hit is not None:
                return Violation("job-overlap", "two parts of one job run in parallel",
                                 job=j, machine=hit.machine, time=hit.start)
    return None


def _first_overlap(windows):
    windows = sorted(windows, key=lambda w: (w[0], w[1]))
    for (a0, a1, _), (b0, b1, part) in zip(windows, windows[1:]):
        if b0 < a1:
            return part
    return None


def free_space(instance: Instance, schedule, bound: Fraction,
               layer_width: Fraction | None = None) -> Fraction:
    """Idle time below `bound` over all m machines.

    With `layer_width`, only slots [k*w, (k+1)*w) touched by no block count.
    """
    bound = Fraction(bound)
    if makespan(instance, schedule) > bound:
        raise BoundExceeded(f"makespan exceeds {bound}")
    m = instance.machines
    runs = schedule.trivial_runs if instance.model == SPLITTABLE else ()
    busy = _busy_intervals(instance, schedule)
    if layer_width is None:
        used = sum(b - a for ivs in busy.values() for a, b in ivs)
        used += sum(r.count * (instance.jobs[r.job].s + r.length) for r in runs)
        return m * bound - used
    width = Fraction(layer_width)
    slots = bound / width
    if slots.denominator != 1:
        raise ValueError("bound must be a multiple of the layer width")
    slots = int(slots)
    touched = 0
    for ivs in busy.values():
        hit = set()
        for a, b in ivs:
            if b > a:
                hit.update(range(math.floor(a / width), _ceil(b / width)))
        touched += len(hit)
    for r in runs:
        touched += r.count * _ceil((instance.jobs[r.job].s + r.length) / width)
    return width * (m * slots - touched)


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)
