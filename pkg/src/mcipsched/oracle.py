"""Ground truth for tests: exact optima on tiny instances, lower bounds otherwise."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import CapExceeded
from .model import (PREEMPTIVE, SETUP_CLASS, SPLITTABLE, AssignmentSchedule, Instance, Part,
                    SplitSchedule, makespan)

ORACLE_CAP = 10**7


@dataclass(frozen=True)
class OracleResult:
    kind: str                   # "exact" or "lower-bound"
    value: Fraction
    witness: object | None = None


def _set_partitions(n: int, m: int):
    """Assignments of n items to at most m unlabeled machines (restricted growth)."""
    label = [0] * n

    def rec(j, used):
        if j == n:
            yield tuple(label)
            return
        for i in range(min(used + 1, m)):
            label[j] = i
            yield from rec(j + 1, max(used, i + 1))
    yield from rec(0, 0)


def exact_setup_class(instance: Instance, cap: int = ORACLE_CAP) -> OracleResult:
    if instance.model != SETUP_CLASS:
        raise ValueError("setup-class oracle needs a setup-class instance")
    m = min(instance.machines, max(instance.n, 1))
    if m ** instance.n > cap:
        raise CapExceeded(f"{m}^{instance.n} assignments exceed the oracle cap")
    if instance.n == 0:
        return OracleResult("exact", Fraction(0), AssignmentSchedule(()))
    best, arg = None, None
    for assignment in _set_partitions(instance.n, m):
        loads = [Fraction(0)] * m
        seen = set()
        for j, i in enumerate(assignment):
            job = instance.jobs[j]
            loads[i] += job.p
            if (i, job.cls) not in seen:
                seen.add((i, job.cls))
                loads[i] += instance.class_setups[job.cls]
        value = max(loads)
        if best is None or value < best:
            best, arg = value, assignment
    witness = AssignmentSchedule(arg)
    assert makespan(instance, witness) == best
    return OracleResult("exact", best, witness)


def _machine_sets(n: int, m: int):
    """Per machine, the set of jobs it runs; canonical up to machine order."""
    subsets = range(1 << n)
    for combo in itertools.combinations_with_replacement(subsets, m):
        cover = 0
        for c in combo:
            cover |= c
        if cover == (1 << n) - 1:
            yield combo


def _split_value(instance: Instance, machine_sets) -> Fraction:
    """Least T for which the given job-to-machine incidence admits a schedule.

    With capacities T - (setups on machine i), a transportation flow exists iff
    every job subset fits into its neighbourhood (Gale's condition).
    """
    n = instance.n
    setups = [sum((instance.jobs[j].s for j in range(n) if ms >> j & 1), Fraction(0))
              for ms in machine_sets]
    value = max(setups)
    for sub in range(1, 1 << n):
        hood = [i for i, ms in enumerate(machine_sets) if ms & sub]
        mass = sum(instance.jobs[j].p for j in range(n) if sub >> j & 1)
        value = max(value, (mass + sum(setups[i] for i in hood)) / len(hood))
    return value


def _split_witness(instance: Instance, machine_sets, T: Fraction) -> SplitSchedule:
    """Transportation flow at level T by shortest augmenting paths (exact)."""
    n = instance.n
    used = [i for i, ms in enumerate(machine_sets) if ms]
    room = {i: T - sum((instance.jobs[j].s for j in range(n) if machine_sets[i] >> j & 1),
                       Fraction(0)) for i in used}
    flow: dict[tuple[int, int], Fraction] = {}
    for j in range(n):
        need = instance.jobs[j].p
        while need > 0:
            path, end = _augmenting_path(j, machine_sets, used, room, flow, n)
            assert path is not None, "oracle flow failed"
            amount = min(need, room[end])
            for job, mach, forward in path:
                if not forward:
                    amount = min(amount, flow[(job, mach)])
            for job, mach, forward in path:
                flow[(job, mach)] = flow.get((job, mach), Fraction(0)) + (amount if forward else -amount)
            room[end] -= amount
            need -= amount
    parts = tuple(Part(j, used.index(i), v) for (j, i), v in sorted(flow.items()) if v > 0)
    return SplitSchedule(parts)


def _augmenting_path(source, machine_sets, used, room, flow, n):
    """BFS over the residual graph from a job to a machine with spare room."""
    parent = {("job", source): None}
    queue = [("job", source)]
    while queue:
        node = queue.pop(0)
        kind, x = node
        if kind == "job":
            nxt = [(("mach", i), (x, i, True)) for i in used if machine_sets[i] >> x & 1]
        else:
            nxt = [(("job", j), (j, x, False)) for j in range(n) if flow.get((j, x), 0) > 0]
        for child, edge in nxt:
            if child in parent:
                continue
            parent[child] = (node, edge)
            if child[0] == "mach" and room[child[1]] > 0:
                path, cur = [], child
                while parent[cur] is not None:
                    cur, edge = parent[cur]
                    path.append(edge)
                return path[::-1], child[1]
            queue.append(child)
    return None, None


def exact_splittable(instance: Instance, cap: int = ORACLE_CAP) -> OracleResult:
    if instance.model != SPLITTABLE:
        raise ValueError("splittable oracle needs a splittable instance")
    n = instance.n
    if n == 0:
        return OracleResult("exact", Fraction(0), SplitSchedule())
    m = instance.machines
    if math.comb((1 << n) + m - 1, m) > cap:
        raise CapExceeded("machine-subset enumeration exceeds the oracle cap")
    best, arg = None, None
    for combo in _machine_sets(n, m):
        value = _split_value(instance, combo)
        if best is None or value < best:
            best, arg = value, combo
    witness = _split_witness(instance, arg, best)
    assert makespan(instance, witness) <= best
    return OracleResult("exact", best, witness)


def bounds_preemptive(instance: Instance) -> OracleResult:
    if instance.model != PREEMPTIVE:
        raise ValueError("preemptive bound needs a preemptive instance")
    if instance.n == 0:
        return OracleResult("lower-bound", Fraction(0))
    total = sum(job.s + job.p for job in instance.jobs)
    value = max(max(job.s + job.p for job in instance.jobs), total / instance.machines)
    return OracleResult("lower-bound", value)


def lower_bound(instance: Instance) -> Fraction:
    """Cheap certified lower bound for any model."""
    if instance.n == 0:
        return Fraction(0)
    if instance.model == SETUP_CLASS:
        first = max(instance.class_setups[job.cls] + job.p for job in instance.jobs)
        total = sum(job.p for job in instance.jobs) + sum(
            instance.class_setups[k] for k in {job.cls for job in instance.jobs})
        return max(first, total / instance.machines)
    total = sum(job.s + job.p for job in instance.jobs)
    if instance.model == PREEMPTIVE:
        return bounds_preemptive(instance).value
    # splittable: every job pays at least one setup, parts may run in parallel
    return max(max(job.s for job in instance.jobs), total / instance.machines)


def exact(instance: Instance, cap: int = ORACLE_CAP) -> OracleResult:
    if instance.model == SETUP_CLASS:
        return exact_setup_class(instance, cap)
    if instance.model == SPLITTABLE:
        return exact_splittable(instance, cap)
    return bounds_preemptive(instance)
