"""Approximation pipeline for the splittable model.

Jobs with small setups are set aside (their total size is the free-space
demand L), the rest is rounded to the eps^2*T grid and scheduled through the
MCIP over (piece, setup) modules.  Machines that run a single job at full
load are emitted as counted trivial runs, so the output size does not depend
on the machine count.
"""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from . import mcip
from .model import SPLITTABLE, Instance, Job, Outcome, Part, SplitSchedule, TrivialRun
from .rational import as_int, ceil_to, container_round, parse_epsilon


@dataclass
class SplittableTranscript:
    T: Fraction
    eps: Fraction
    unit: Fraction                  # eps^2 T
    t_bar: Fraction                 # bound used by the MCIP (container-inflated if on)
    t_full: Fraction                # unrounded full load (1+2eps)T
    t_breve: Fraction
    L: Fraction
    removed: tuple[int, ...]        # jobs with setup < eps T
    kept: tuple[int, ...]           # reduced job -> original job
    container_rounding: bool = False
    simple: bool = True
    simple_bound: int | None = None
    limit: int | None = None
    objective: int | None = None
    notes: list = field(default_factory=list)

    @property
    def factor(self) -> Fraction:
        return self.t_breve / self.T


def bounds(T: Fraction, eps: Fraction, container_rounding: bool = False):
    t_full = (1 + 2 * eps) * T
    t_bar = t_full * (1 + 2 * eps) if container_rounding else t_full
    return t_bar, t_full, t_bar + eps * T


def simple_bound(n: int) -> int:
    """Most nontrivial machines a simple schedule of n jobs needs."""
    # C(n,2) alone is too small for n <= 2 (one job alone on one machine)
    return max(math.comb(n, 2), n)


def simplify(instance: Instance, T, eps, container_rounding: bool = False, simple: bool = True):
    if instance.model != SPLITTABLE:
        raise ValueError("splittable pipeline needs a splittable instance")
    T = Fraction(T)
    eps = parse_epsilon(eps)
    unit = eps**2 * T
    removed = tuple(j for j, job in enumerate(instance.jobs) if job.s < eps * T)
    kept = tuple(j for j, job in enumerate(instance.jobs) if job.s >= eps * T)
    L = sum((instance.jobs[j].s + instance.jobs[j].p for j in removed), Fraction(0))
    jobs = tuple(Job(ceil_to(instance.jobs[j].p, unit), ceil_to(instance.jobs[j].s, unit))
                 for j in kept)
    reduced = Instance(SPLITTABLE, instance.machines, jobs)
    t_bar, t_full, t_breve = bounds(T, eps, container_rounding)
    transcript = SplittableTranscript(T, eps, unit, t_bar, t_full, t_breve, L, removed, kept,
                                      container_rounding, simple,
                                      simple_bound(len(kept)) if simple else None)
    return reduced, transcript


@dataclass(frozen=True)
class PieceModule:
    piece: int
    setup: int


def container(h: int, eps: Fraction) -> int:
    """Container size for a setup-plus-piece of h grid units (grid = eps^2 T)."""
    return as_int(container_round(Fraction(h), eps, Fraction(1), Fraction(1)))


def build_mcip(reduced: Instance, transcript: SplittableTranscript) -> mcip.MCIPSpec:
    """Jobs are basic objects with one value (their rounded size)."""
    u = transcript.unit
    bound = as_int(transcript.t_bar / u)
    full = as_int(transcript.t_full / u)
    sizes = [as_int(job.p / u) for job in reduced.jobs]
    setups = [as_int(job.s / u) for job in reduced.jobs]
    modules = []
    for s in sorted(set(setups)):
        owners = [j for j in range(reduced.n) if setups[j] == s]
        for q in range(1, max(sizes[j] for j in owners) + 1):
            size = s + q
            if transcript.container_rounding:
                size = container(size, transcript.eps)
            if s + q > full or size > bound:
                break
            eligible = frozenset(j for j in owners if q <= sizes[j])
            modules.append(mcip.ModuleDef((q,), size, eligible, (PieceModule(q, s),)))
    nontrivial = None
    if transcript.simple:
        nontrivial = mcip.NontrivialBound(transcript.simple_bound, full)
    return mcip.MCIPSpec(tuple((p,) for p in sizes), tuple(modules), reduced.machines, bound,
                         nontrivial=nontrivial)


def extract(reduced: Instance, spec: mcip.MCIPSpec, solution: mcip.MCIPSolution,
            transcript: SplittableTranscript) -> SplitSchedule:
    """Nontrivial configurations become explicit machines, the rest counted runs."""
    u = transcript.unit
    full = as_int(transcript.t_full / u)
    groups = spec.groups

    def trivial(config):
        return sum(config) == 1 and groups[config.index(1)].size >= full

    plan, _, leftovers = mcip.machine_plan(spec, solution, trivial)
    parts = []
    for i, slots in enumerate(plan):
        for _, k, mi in slots:
            parts.append(Part(k, i, spec.modules[mi].tags[0].piece * u))
    runs = Counter()
    for items in leftovers.values():
        for k, mi in items:
            runs[(k, spec.modules[mi].tags[0].piece)] += 1
    trivial_runs = tuple(TrivialRun(k, c, q * u) for (k, q), c in sorted(runs.items()))
    return SplitSchedule(_merge(parts), trivial_runs)


def _merge(parts):
    """One part per (job, machine)."""
    total = defaultdict(Fraction)
    for pt in parts:
        total[(pt.job, pt.machine)] += pt.length
    return tuple(Part(j, i, v) for (j, i), v in sorted(total.items(), key=lambda kv: (kv[0][1], kv[0][0])))


def unround(instance: Instance, reduced_schedule: SplitSchedule,
            transcript: SplittableTranscript) -> SplitSchedule:
    """Map reduced jobs back and trim the rounding excess of every job."""
    parts = [Part(transcript.kept[pt.job], pt.machine, pt.length) for pt in reduced_schedule.parts]
    runs = [TrivialRun(transcript.kept[r.job], r.count, r.length) for r in reduced_schedule.trivial_runs]
    mass = defaultdict(Fraction)
    for pt in parts:
        mass[pt.job] += pt.length
    for r in runs:
        mass[r.job] += r.count * r.length
    for j in transcript.kept:
        excess = mass[j] - instance.jobs[j].p
        assert 0 <= excess < transcript.unit
        # trim explicit parts first, smallest first
        for idx in sorted((i for i, pt in enumerate(parts) if pt.job == j),
                          key=lambda i: (parts[i].length, i)):
            if excess == 0:
                break
            cut = min(excess, parts[idx].length)
            parts[idx] = Part(j, parts[idx].machine, parts[idx].length - cut)
            excess -= cut
        for idx, r in enumerate(runs):
            if excess == 0:
                break
            if r.job == j:
                # spread evenly so the run stays one record
                assert excess < r.count * r.length
                runs[idx] = TrivialRun(j, r.count, r.length - excess / r.count)
                excess = 0
        assert excess == 0
    parts = [pt for pt in parts if pt.length > 0]
    return SplitSchedule(tuple(parts), tuple(runs))


def fill_small(instance: Instance, schedule: SplitSchedule,
               transcript: SplittableTranscript) -> SplitSchedule:
    """Next fit of the small-setup jobs into free space, then onto empty machines.

    Jobs go in order of nondecreasing processing time, each preceded by its
    setup.  The sequence fills every machine up to the bound and is cut there,
    setups included, so no free space is lost.  A job whose setup was cut or
    which continues from the previous machine gets its setup on top, which
    happens at most once per machine.  Whole machines filled by one job become
    a counted trivial run.

    With container rounding a trivial machine may sit below the bound, and the
    MCIP counts that gap as free space.  Such machines are peeled off their run
    one at a time once the other free space is gone.
    """
    bound = transcript.t_bar
    parts = list(schedule.parts)
    runs = list(schedule.trivial_runs)
    fill = defaultdict(Fraction)        # sequence space used below the bound
    for pt in parts:
        fill[pt.machine] += instance.jobs[pt.job].s + pt.length
    queue = sorted(fill)
    empty = instance.machines - len(queue) - sum(r.count for r in runs)
    next_id = max(queue, default=-1) + 1
    current = None

    for j in sorted(transcript.removed, key=lambda j: (instance.jobs[j].p, j)):
        owed = instance.jobs[j].s       # setup still to be laid into the sequence
        rest = instance.jobs[j].p
        while rest > 0:
            if current is None or fill[current] >= bound:
                whole = min(rest // bound, empty) if not queue and not owed else 0
                if whole:
                    runs.append(TrivialRun(j, int(whole), bound))
                    empty -= int(whole)
                    rest -= whole * bound
                    continue
                if queue:
                    current = queue.pop(0)
                elif empty > 0:
                    current, next_id, empty = next_id, next_id + 1, empty - 1
                else:
                    current = _peel(instance, runs, parts, fill, bound, next_id)
                    next_id += 1
            room = bound - fill[current]
            if owed:
                used = min(owed, room)
                fill[current] += used
                owed -= used
                room -= used
                if room == 0:
                    continue
            piece = min(rest, room)
            parts.append(Part(j, current, piece))
            fill[current] += piece
            rest -= piece
    return SplitSchedule(_merge(parts), tuple(runs))


def _peel(instance, runs, parts, fill, bound, machine):
    """Turn one machine of a trivial run with room below `bound` into an explicit one."""
    for idx, r in enumerate(runs):
        load = instance.jobs[r.job].s + r.length
        if load < bound:
            if r.count == 1:
                del runs[idx]
            else:
                runs[idx] = TrivialRun(r.job, r.count - 1, r.length)
            parts.append(Part(r.job, machine, r.length))
            fill[machine] = load
            return machine
    raise AssertionError("free space exhausted while inserting small jobs")


def make_simple(instance: Instance, schedule: SplitSchedule) -> SplitSchedule:
    """Rearrange a schedule so few machines are nontrivial; no load increases.

    1. While two composite machines share a pair of jobs, trade the smallest
       of the four (setup + piece) blocks for processing of the other job.
    2. Every job's plain machines are refilled to the makespan, drawing
       processing off composite machines into a partially filled one.
    3. Jobs on plain machines only are spread evenly if that attains the
       makespan, else packed as full machines plus one remainder.
    """
    setup = [job.s for job in instance.jobs]
    mach: dict[int, dict[int, Fraction]] = defaultdict(dict)
    for pt in schedule.parts:
        mach[pt.machine][pt.job] = mach[pt.machine].get(pt.job, Fraction(0)) + pt.length
    pool_runs = defaultdict(list)               # job -> [(count, length)]
    for r in schedule.trivial_runs:
        pool_runs[r.job].append((r.count, r.length))

    def load(i):
        return sum(setup[j] + x for j, x in mach[i].items())

    # step 1
    while True:
        owner = {}
        hit = None
        for i in sorted(mach):
            if len(mach[i]) < 2:
                continue
            jobs = sorted(mach[i])
            for x in range(len(jobs)):
                for y in range(x + 1, len(jobs)):
                    pair = (jobs[x], jobs[y])
                    if pair in owner:
                        hit = (owner[pair], i, pair)
                        break
                    owner[pair] = i
                if hit:
                    break
            if hit:
                break
        if hit is None:
            break
        m1, m2, (a, b) = hit
        blocks = [(setup[j] + mach[i][j], i, j) for i in (m1, m2) for j in (a, b)]
        _, X, y = min(blocks)
        Y = m2 if X == m1 else m1
        z = b if y == a else a
        piece = mach[X].pop(y)
        mach[Y][y] += piece
        w = min(piece + setup[y], mach[Y][z])
        mach[Y][z] -= w
        mach[X][z] += w
        if mach[Y][z] == 0:
            del mach[Y][z]

    top = max([load(i) for i in mach if mach[i]] +
              [setup[j] + ln for j, rs in pool_runs.items() for _, ln in rs], default=Fraction(0))

    def plain_pool(j):
        """Take job j's plain machines out of `mach`: (mass, machine count)."""
        mass, count = Fraction(0), 0
        for i in [i for i in mach if set(mach[i]) == {j}]:
            mass += mach.pop(i)[j]
            count += 1
        for c, ln in pool_runs.pop(j, []):
            mass += c * ln
            count += c
        return mass, count

    # step 2
    next_id = max(mach, default=-1) + 1
    full = defaultdict(int)                     # job -> machines at load `top`
    changed = True
    while changed:
        changed = False
        for j in range(instance.n):
            comps = [i for i in mach if j in mach[i] and len(mach[i]) > 1]
            if not comps:
                continue
            mass, count = plain_pool(j)
            cap = top - setup[j]
            used = int(mass // cap)
            rest = mass - used * cap
            for i in comps:
                if used + (rest > 0) >= count and rest == 0:
                    break                       # every plain machine is full
                take = min(cap - rest, mach[i][j])
                mach[i][j] -= take
                rest += take
                if mach[i][j] == 0:
                    del mach[i][j]
                    changed = True
                if rest == cap:
                    used, rest = used + 1, Fraction(0)
            full[j] += used
            if rest > 0:
                mach[next_id] = {j: rest}
                next_id += 1
        mach = defaultdict(dict, {i: d for i, d in mach.items() if d})

    # step 3
    on_comp = {j for i in mach if len(mach[i]) > 1 for j in mach[i]}
    pools = {}
    for j in range(instance.n):
        if j not in on_comp:
            mass, count = plain_pool(j)
            f = full.pop(j, 0)
            mass += f * (top - setup[j])
            count += f
            if mass > 0:
                pools[j] = (mass, count)
    level = max([load(i) for i in mach] +
                [top for j, f in full.items() if f] +
                [setup[j] + mass / count for j, (mass, count) in pools.items()],
                default=Fraction(0))
    runs = [TrivialRun(j, f, top - setup[j]) for j, f in sorted(full.items()) if f]
    for j, (mass, count) in sorted(pools.items()):
        if setup[j] + mass / count == level:
            runs.append(TrivialRun(j, count, mass / count))
            continue
        cap = level - setup[j]
        f = int(mass // cap)
        if f:
            runs.append(TrivialRun(j, f, cap))
        if mass - f * cap:
            mach[next_id] = {j: mass - f * cap}
            next_id += 1
    ids = {i: k for k, i in enumerate(sorted(i for i in mach if mach[i]))}
    parts = tuple(Part(j, ids[i], x) for i in sorted(ids) for j, x in sorted(mach[i].items()))
    return SplitSchedule(parts, tuple(runs))


def nontrivial_machines(instance: Instance, schedule: SplitSchedule) -> int:
    """Machines that are composite, or plain with load below the makespan."""
    from .model import makespan
    top = makespan(instance, schedule)
    jobs = defaultdict(set)
    load = defaultdict(Fraction)
    for pt in schedule.parts:
        jobs[pt.machine].add(pt.job)
        load[pt.machine] += instance.jobs[pt.job].s + pt.length
    count = sum(1 for i in jobs if len(jobs[i]) > 1 or load[i] != top)
    count += sum(r.count for r in schedule.trivial_runs
                 if instance.jobs[r.job].s + r.length != top)
    return count


def solve(instance: Instance, T, eps, backend: str = "direct",
          container_rounding: bool = False, simple: bool = True) -> Outcome:
    T = Fraction(T)
    eps = parse_epsilon(eps)
    reduced, transcript = simplify(instance, T, eps, container_rounding, simple)
    if any(job.s > T for job in instance.jobs):
        transcript.notes.append("a setup exceeds T")
        return Outcome(False, None, transcript)
    u = transcript.unit
    bound = as_int(transcript.t_bar / u)
    limit = instance.machines * bound - transcript.L / u
    if limit < 0:
        return Outcome(False, None, transcript)
    transcript.limit = math.floor(limit)
    stats = {}
    if reduced.n:
        spec = build_mcip(reduced, transcript)
        solution = mcip.solve(spec, backend, limit=transcript.limit)
        if solution is None:
            return Outcome(False, None, transcript, {"modules": len(spec.modules)})
        transcript.objective = solution.objective
        stats = {"modules": len(spec.modules), "groups": len(spec.groups)}
        stats.update(dict(solution.stats))
        reduced_schedule = extract(reduced, spec, solution, transcript)
    else:
        reduced_schedule = SplitSchedule()
    schedule = unround(instance, reduced_schedule, transcript)
    schedule = fill_small(instance, schedule, transcript)
    if simple:
        schedule = make_simple(instance, schedule)
    return Outcome(True, schedule, transcript, stats)
