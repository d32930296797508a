"""Dual approximation: binary search over the makespan guess T.

Each probe runs a model pipeline at a fixed T.  An accepted probe comes with a
schedule of makespan at most factor * T; a rejected one means the pipeline
ruled T out.  The search starts from the trivial bound B (everything on one
machine), which is at most b times the optimum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import preemptive, setup_class, splittable
from .model import (PREEMPTIVE, SETUP_CLASS, SPLITTABLE, AssignmentSchedule, Instance,
                    PreemptiveSchedule, SplitSchedule, makespan, validate)
from .rational import parse_epsilon

PIPELINES = {SETUP_CLASS: setup_class.solve, SPLITTABLE: splittable.solve,
             PREEMPTIVE: preemptive.solve}


@dataclass(frozen=True)
class Probe:
    T: Fraction
    accepted: bool
    makespan: Fraction | None
    factor: Fraction | None         # guarantee makespan <= factor * T for this probe

    def as_json(self):
        from .rational import fmt
        return {"T": fmt(self.T), "accepted": self.accepted,
                "makespan": None if self.makespan is None else fmt(self.makespan),
                "factor": None if self.factor is None else fmt(self.factor)}


@dataclass
class SearchResult:
    schedule: object
    makespan: Fraction
    T_star: Fraction                # smallest accepted guess
    B: Fraction
    b: int
    iterations: int
    probes: list[Probe] = field(default_factory=list)
    transcript: object = None       # of the probe that produced `schedule`
    stats: dict = field(default_factory=dict)


def initial_bound(instance: Instance) -> tuple[Fraction, int]:
    """All work on one machine: B >= OPT and B <= b * OPT."""
    total = sum((job.p for job in instance.jobs), Fraction(0))
    if instance.model == SETUP_CLASS:
        total += sum((instance.class_setups[k] for k in {job.cls for job in instance.jobs}),
                     Fraction(0))
        b = min(instance.machines, max(instance.n, 1))
    else:
        total += sum((job.s for job in instance.jobs), Fraction(0))
        b = instance.machines
        if instance.model == PREEMPTIVE:
            b = min(b, max(instance.n, 1))
    return total, b


def empty_schedule(instance: Instance):
    if instance.model == SETUP_CLASS:
        return AssignmentSchedule(())
    if instance.model == SPLITTABLE:
        return SplitSchedule()
    return PreemptiveSchedule()


def iteration_cap(b: int, eps: Fraction) -> int:
    return math.ceil(math.log2(Fraction(b) / eps)) + 1 if b > 1 else 1


def probe(instance: Instance, T, eps, **options):
    return PIPELINES[instance.model](instance, Fraction(T), eps, **options)


def search(instance: Instance, eps, on_probe=None, **options) -> SearchResult:
    """Binary search on [B/b, B] until the interval is at most eps*B/b wide.

    `on_probe(T, outcome)` is called after every pipeline run.
    """
    eps = parse_epsilon(eps)
    B, b = initial_bound(instance)
    if instance.n == 0:
        return SearchResult(empty_schedule(instance), Fraction(0), Fraction(0), B, b, 0)
    probes: list[Probe] = []
    best = None

    def run(T):
        nonlocal best
        out = probe(instance, T, eps, **options)
        if on_probe is not None:
            on_probe(T, out)
        if not out.accepted:
            probes.append(Probe(T, False, None, None))
            return False
        assert validate(instance, out.schedule) is None
        ms = makespan(instance, out.schedule)
        factor = out.transcript.factor
        assert ms <= factor * T, "pipeline broke its own guarantee"
        probes.append(Probe(T, True, ms, factor))
        if best is None or ms < best[1]:
            best = (out, ms)
        return True

    if not run(B):
        raise AssertionError("the trivial bound was rejected")
    lo, hi = B / b, B
    while hi - lo > eps * B / b:
        mid = (lo + hi) / 2
        if run(mid):
            hi = mid
        else:
            lo = mid
    iterations = len(probes)
    assert iterations <= iteration_cap(b, eps), "binary search ran too long"
    out, ms = best
    return SearchResult(out.schedule, ms, hi, B, b, iterations, probes, out.transcript,
                        out.stats)
