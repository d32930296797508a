"""Approximation pipeline for the setup-class model.

For a makespan guess T the instance is simplified (small jobs of small-setup
classes removed, small setups raised, tiny jobs replaced by placeholders,
times rounded), the MCIP over class batches is solved, and the schedule is
carried back to the original instance.  All MCIP data lives on the grid
eps^5 * T, which is scaled to 1.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from . import mcip
from .model import SETUP_CLASS, AssignmentSchedule, Instance, Job, Outcome, machine_loads
from .rational import as_int, ceil_to, container_round, geometric_round, parse_epsilon


@dataclass
class SetupClassTranscript:
    T: Fraction
    eps: Fraction
    unit: Fraction                      # eps^5 T
    t_bar: Fraction
    t_breve: Fraction
    L: Fraction
    removed: tuple[int, ...]            # small jobs of small-setup classes
    Q: tuple[int, ...]                  # classes made only of removed jobs
    tiny: dict[int, tuple[int, ...]]    # class -> tiny jobs replaced by placeholders
    placeholders: dict[int, int]        # class -> number of placeholders
    origin: tuple[int | None, ...]      # reduced job -> original job (None: placeholder)
    classes: tuple[int, ...]            # reduced class -> original class
    job_class: tuple[int, ...]          # reduced job -> original class
    pre_round: tuple[Fraction, ...]     # reduced job times before rounding
    container_rounding: bool = False
    limit: int | None = None
    objective: int | None = None
    notes: list = field(default_factory=list)

    @property
    def factor(self) -> Fraction:
        """T_breve / T."""
        return self.t_breve / self.T


def bounds(T: Fraction, eps: Fraction, container_rounding: bool = False):
    t_bar = (1 + eps**2) * (1 + eps) * (1 + 3 * eps) * T
    if container_rounding:
        t_bar *= 1 + 2 * eps
    t_breve = (1 + eps) ** 2 * t_bar + 2 * eps**3 * T
    return t_bar, t_breve


def raised_setup(s, T, eps) -> Fraction:
    """Small setups are lifted to eps^3 T."""
    return max(Fraction(s), eps**3 * T)


def rounded_setup(s, T, eps) -> Fraction:
    return ceil_to(geometric_round(raised_setup(s, T, eps), 1 + eps, eps**3 * T), eps**5 * T)


def rounded_time(p, T, eps) -> Fraction:
    return ceil_to(geometric_round(p, 1 + eps, eps**4 * T), eps**5 * T)


def simplify(instance: Instance, T, eps, container_rounding: bool = False):
    """Return the reduced instance (big jobs, big setups, rounded) and the transcript."""
    if instance.model != SETUP_CLASS:
        raise ValueError("setup-class pipeline needs a setup-class instance")
    T = Fraction(T)
    eps = parse_epsilon(eps)
    unit = eps**5 * T
    small_setup = {k for k, s in enumerate(instance.class_setups) if s < eps**3 * T}
    removed = tuple(j for j, job in enumerate(instance.jobs)
                    if job.cls in small_setup and job.p < eps * T)
    gone = set(removed)
    members = defaultdict(list)
    for j, job in enumerate(instance.jobs):
        members[job.cls].append(j)
    Q = tuple(k for k in sorted(members) if all(j in gone for j in members[k]))
    L = sum((instance.jobs[j].p for j in removed), Fraction(0)) + \
        sum((instance.class_setups[k] for k in Q), Fraction(0))

    tiny = defaultdict(list)
    kept: list[tuple[int | None, int, Fraction]] = []    # (origin, class, p')
    for j, job in enumerate(instance.jobs):
        if j in gone:
            continue
        if job.cls not in small_setup and job.p < eps**4 * T:
            tiny[job.cls].append(j)
        else:
            kept.append((j, job.cls, job.p))
    placeholders = {}
    for k, jobs in sorted(tiny.items()):
        mass = sum(instance.jobs[j].p for j in jobs)
        count = -(-mass // (eps**4 * T))
        placeholders[k] = int(count)
        kept += [(None, k, eps**4 * T)] * int(count)

    classes = tuple(sorted({k for _, k, _ in kept}))
    index = {k: i for i, k in enumerate(classes)}
    setups = [rounded_setup(instance.class_setups[k], T, eps) for k in classes]
    jobs = [Job(rounded_time(p, T, eps), cls=index[k]) for _, k, p in kept]
    reduced = Instance(SETUP_CLASS, instance.machines, tuple(jobs), tuple(setups))
    t_bar, t_breve = bounds(T, eps, container_rounding)
    transcript = SetupClassTranscript(
        T, eps, unit, t_bar, t_breve, L, removed, Q,
        {k: tuple(v) for k, v in tiny.items()}, placeholders,
        tuple(o for o, _, _ in kept), classes, tuple(k for _, k, _ in kept),
        tuple(p for _, _, p in kept),
        container_rounding)
    return reduced, transcript


@dataclass(frozen=True)
class BatchModule:
    counts: tuple[int, ...]     # jobs per distinct processing time
    setup: int


def build_mcip(reduced: Instance, transcript: SetupClassTranscript, cap: int = mcip.CONFIG_CAP):
    """Classes are basic objects; modules are batches (job counts per time, setup)."""
    u = transcript.unit
    bound = int(transcript.t_bar / u)
    times = sorted({as_int(job.p / u) for job in reduced.jobs})
    pos = {p: i for i, p in enumerate(times)}
    K = len(reduced.class_setups)
    demands = [[0] * len(times) for _ in range(K)]
    for job in reduced.jobs:
        demands[job.cls][pos[as_int(job.p / u)]] += 1
    by_setup = defaultdict(list)
    for k, s in enumerate(reduced.class_setups):
        by_setup[as_int(s / u)].append(k)

    modules = []
    for s, ks in sorted(by_setup.items()):
        most = [max(demands[k][d] for k in ks) for d in range(len(times))]
        for counts in mcip.enumerate_configurations(times, bound - s, None, most, cap):
            if not any(counts):
                continue
            size = s + sum(c * p for c, p in zip(counts, times))
            if transcript.container_rounding:
                size = as_int(container_round(size, transcript.eps, 1 / transcript.eps**2,
                                              1 / transcript.eps))
                if size > bound:
                    continue
            eligible = frozenset(k for k in ks if all(c <= n for c, n in zip(counts, demands[k])))
            if eligible:
                modules.append(mcip.ModuleDef(tuple(counts), size, eligible, (BatchModule(tuple(counts), s),)))
                if len(modules) > cap:
                    raise mcip.CapExceeded(f"more than {cap} batch modules")
    spec = mcip.MCIPSpec(tuple(tuple(d) for d in demands), tuple(modules),
                         min(reduced.machines, max(reduced.n, 1)), bound)
    return spec, tuple(times)


def extract(reduced: Instance, spec: mcip.MCIPSpec, solution: mcip.MCIPSolution, times,
            transcript: SetupClassTranscript) -> AssignmentSchedule:
    """Machines take configurations; each batch is filled with concrete jobs."""
    u = transcript.unit
    pool = defaultdict(list)
    for j, job in enumerate(reduced.jobs):
        pool[(job.cls, as_int(job.p / u))].append(j)
    for lst in pool.values():
        lst.reverse()
    plan, _, leftovers = mcip.machine_plan(spec, solution)
    assert not leftovers, "modules left without slots"
    assignment = [None] * reduced.n
    for i, slots in enumerate(plan):
        used = 0
        for g, k, mi in slots:
            batch = spec.modules[mi].tags[0]
            for c, p in zip(batch.counts, times):
                for _ in range(c):
                    assignment[pool[(k, p)].pop()] = i
            used += spec.modules[mi].size
        assert used <= spec.bound
    assert all(a is not None for a in assignment), "job left unassigned"
    return AssignmentSchedule(tuple(assignment))


def desimplify(instance: Instance, reduced_schedule: AssignmentSchedule,
               transcript: SetupClassTranscript) -> AssignmentSchedule:
    """Undo rounding, swap placeholders for tiny jobs, reinsert the removed jobs."""
    eps, T = transcript.eps, transcript.T
    m = instance.machines
    assignment: list[int | None] = [None] * instance.n
    quota = Counter()
    for r, i in enumerate(reduced_schedule.assignment):
        origin = transcript.origin[r]
        if origin is None:
            quota[(i, transcript.job_class[r])] += 1
        else:
            assignment[origin] = i
    # placeholders back to tiny jobs: per (machine, class), overfill by at most one job
    for k, jobs in sorted(transcript.tiny.items()):
        queue = list(jobs)
        for i in range(m):
            want = quota[(i, k)] * eps**4 * T
            got = Fraction(0)
            while queue and got < want:
                j = queue.pop(0)
                assignment[j] = i
                got += instance.jobs[j].p
        assert not queue, "placeholders did not absorb every tiny job"

    loads = _loads(instance, assignment)
    present = defaultdict(set)
    for j, i in enumerate(assignment):
        if i is not None:
            present[i].add(instance.jobs[j].cls)

    groups = defaultdict(list)
    for j in transcript.removed:
        groups[instance.jobs[j].cls].append(j)
    Q = set(transcript.Q)
    threshold = transcript.t_bar
    items = []      # (jobs, length) in class order; a container carries its setup
    for k in sorted(groups):
        mass = sum(instance.jobs[j].p for j in groups[k])
        if mass <= eps**2 * T and k not in Q:
            hosts = [i for i in range(m) if k in present[i]]
            i = max(hosts, key=lambda h: (threshold - loads[h], -h))
            for j in groups[k]:
                assignment[j] = i
            loads[i] += mass
        elif mass <= eps**2 * T:
            items.append((groups[k], mass + instance.class_setups[k]))
        else:
            items += [([j], instance.jobs[j].p) for j in groups[k]]

    # next fit against t_bar; missing setups are paid implicitly by the schedule
    i = 0
    for jobs, length in items:
        while i < m - 1 and loads[i] >= threshold:
            i += 1
        for j in jobs:
            assignment[j] = i
        loads[i] += length
    return AssignmentSchedule(tuple(assignment))


def _loads(instance, assignment):
    loads = defaultdict(Fraction)
    seen = set()
    for j, i in enumerate(assignment):
        if i is None:
            continue
        job = instance.jobs[j]
        loads[i] += job.p
        if (i, job.cls) not in seen:
            seen.add((i, job.cls))
            loads[i] += instance.class_setups[job.cls]
    return loads


def solve(instance: Instance, T, eps, backend: str = "direct",
          container_rounding: bool = False) -> Outcome:
    """Schedule with makespan <= T_breve, or a reject meaning no schedule of makespan T."""
    T = Fraction(T)
    eps = parse_epsilon(eps)
    reduced, transcript = simplify(instance, T, eps, container_rounding)
    if any(instance.class_setups[job.cls] + job.p > T for job in instance.jobs):
        transcript.notes.append("some job does not fit below T with its setup")
        return Outcome(False, None, transcript)
    m = instance.machines
    u = transcript.unit
    limit_exact = m * transcript.t_bar / u - transcript.L / u
    if limit_exact < 0:
        return Outcome(False, None, transcript)
    transcript.limit = int(limit_exact)     # objective is integral
    if reduced.n == 0:
        schedule = desimplify(instance, AssignmentSchedule(()), transcript)
        return Outcome(True, schedule, transcript)
    spec, times = build_mcip(reduced, transcript)
    solution = mcip.solve(spec, backend, limit=transcript.limit)
    if solution is None:
        return Outcome(False, None, transcript, {"modules": len(spec.modules)})
    transcript.objective = solution.objective
    reduced_schedule = extract(reduced, spec, solution, times, transcript)
    loads = machine_loads(reduced, reduced_schedule)
    assert max(loads.values(), default=0) <= transcript.t_bar
    schedule = desimplify(instance, reduced_schedule, transcript)
    stats = {"modules": len(spec.modules), "groups": len(spec.groups)}
    stats.update(dict(solution.stats))
    return Outcome(True, schedule, transcript, stats)
