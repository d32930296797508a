"""Approximation pipeline for the preemptive model.

For a makespan guess T the setups are split into a big, a medium and a small
band; the medium band is picked so that its jobs carry little total work.
Small jobs of the medium and small bands are set aside, the small-setup big
jobs lose their setups, and all times are rounded.  The MCIP over layered
modules then places every block at a multiple of the layer width
X = eps*delta*T.  Going back, blocks are un-rounded, the small small-setup
jobs fill the free slots (a setup window is opened in front of every layer),
and the small medium-setup jobs are stacked on top.  MCIP data lives on the
grid eps*mu*T, which is scaled to 1.
"""
from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction

from . import mcip
from .model import PREEMPTIVE, Instance, Job, Outcome, PreemptiveSchedule, TimedPart, validate
from .rational import as_int, ceil_to, parse_epsilon

BST, MST, SST = "bst", "mst", "sst"


@dataclass
class PreemptiveTranscript:
    T: Fraction
    eps: Fraction
    delta: Fraction
    mu: Fraction
    unit: Fraction                      # eps*mu*T, the scaled 1
    width: Fraction                     # layer width eps*delta*T
    layers: int
    t_bar: Fraction
    t_breve: Fraction
    L: Fraction                         # total s+p of the small small-setup jobs
    mst_small: tuple[int, ...]
    sst_small: tuple[int, ...]
    sst_big: tuple[int, ...]            # setups zeroed in the reduced instance
    kept: tuple[int, ...]               # reduced job -> original job
    kinds: tuple[str, ...]              # band of every reduced job
    limit: int | None = None
    objective: int | None = None
    t_prime: Fraction | None = None     # makespan before the medium small jobs return
    reduced: Instance | None = None
    layered: PreemptiveSchedule | None = None
    notes: list = field(default_factory=list)

    @property
    def factor(self) -> Fraction:
        return self.t_breve / self.T


def delta_candidates(eps: Fraction) -> list[Fraction]:
    eps = parse_epsilon(eps)
    return [eps**k for k in range(1, as_int(2 / eps**2) + 1)]


def medium_mass(instance: Instance, T, eps, delta) -> Fraction:
    mu = eps**2 * delta
    return sum((job.s + job.p for job in instance.jobs if mu * T <= job.s < delta * T),
               Fraction(0))


def choose_delta(instance: Instance, T, eps) -> Fraction | None:
    """Largest candidate whose medium band holds at most m*eps*T of work."""
    T = Fraction(T)
    eps = parse_epsilon(eps)
    for delta in delta_candidates(eps):
        if medium_mass(instance, T, eps, delta) <= instance.machines * eps * T:
            return delta
    return None


def bounds(T: Fraction, eps: Fraction, delta: Fraction):
    mu = eps**2 * delta
    gamma = eps * delta
    t_bar = (1 + 3 * eps) * T
    t_breve = (1 + mu / gamma) * t_bar + (mu + eps) * T + (eps + delta) * T
    return t_bar, t_breve


def band(job: Job, T, eps, delta) -> str:
    if job.s >= delta * T:
        return BST
    if job.s >= eps**2 * delta * T:
        return MST
    return SST


def simplify(instance: Instance, T, eps, delta):
    """Return the reduced (rounded) instance and the transcript."""
    if instance.model != PREEMPTIVE:
        raise ValueError("preemptive pipeline needs a preemptive instance")
    T = Fraction(T)
    eps = parse_epsilon(eps)
    delta = Fraction(delta)
    mu = eps**2 * delta
    unit = eps * mu * T
    width = eps * delta * T
    t_bar, t_breve = bounds(T, eps, delta)
    kinds = [band(job, T, eps, delta) for job in instance.jobs]
    small = [job.p < eps * T for job in instance.jobs]
    mst_small = tuple(j for j in range(instance.n) if kinds[j] == MST and small[j])
    sst_small = tuple(j for j in range(instance.n) if kinds[j] == SST and small[j])
    sst_big = tuple(j for j in range(instance.n) if kinds[j] == SST and not small[j])
    gone = set(mst_small) | set(sst_small)
    kept = tuple(j for j in range(instance.n) if j not in gone)
    L = sum((instance.jobs[j].s + instance.jobs[j].p for j in sst_small), Fraction(0))
    jobs = []
    for j in kept:
        job = instance.jobs[j]
        if kinds[j] == BST:
            s = ceil_to(job.s, width)
        elif kinds[j] == MST:
            s = ceil_to(job.s, unit)
        else:
            s = Fraction(0)
        jobs.append(Job(ceil_to(job.p, width), s))
    reduced = Instance(PREEMPTIVE, instance.machines, tuple(jobs), strict=False)
    transcript = PreemptiveTranscript(
        T, eps, delta, mu, unit, width, as_int(t_bar / width), t_bar, t_breve, L,
        mst_small, sst_small, sst_big, kept, tuple(kinds[j] for j in kept))
    transcript.reduced = reduced
    return reduced, transcript


@dataclass(frozen=True)
class LayerModule:
    kind: str
    layer: int          # 0-based starting layer
    piece: int
    setup: int
    buffer: int


def build_mcip(reduced: Instance, transcript: PreemptiveTranscript) -> mcip.MCIPSpec:
    """Jobs are basic objects; modules are blocks pinned to a starting layer."""
    u = transcript.unit
    X = as_int(transcript.width / u)
    bound = as_int(transcript.t_bar / u)
    N = transcript.layers
    sizes = [as_int(job.p / u) for job in reduced.jobs]
    setups = [as_int(job.s / u) for job in reduced.jobs]
    owners = defaultdict(list)
    for r, kind in enumerate(transcript.kinds):
        owners[(kind, setups[r])].append(r)

    modules = []
    for (kind, s), rs in sorted(owners.items()):
        most = max(sizes[r] for r in rs)
        if kind == SST:
            pieces = [X]
        elif kind == BST:
            pieces = range(X, most + 1, X)
        else:
            pieces = range(1, most + 1)
        for q in pieces:
            b = -(s + q) % X if kind == MST else 0
            size = s + q + b
            span = size // X
            for layer in range(N):
                if layer * X + size > bound:
                    break
                modules.append(mcip.ModuleDef(
                    (q,), size, frozenset(rs), (LayerModule(kind, layer, q, s, b),),
                    start=layer, layers=frozenset(range(layer, layer + span))))
    local = tuple(mcip.LocalInequality(tuple(int(l in mod.layers) for mod in modules), 1)
                  for l in range(N))
    return mcip.MCIPSpec(tuple((p,) for p in sizes), tuple(modules), reduced.machines,
                         bound, local)


def extract(reduced: Instance, spec: mcip.MCIPSpec, solution: mcip.MCIPSolution,
            transcript: PreemptiveTranscript) -> PreemptiveSchedule:
    """Each configuration slot becomes a block at its layer start; buffers stay idle."""
    u, X = transcript.unit, transcript.width
    plan, _, leftovers = mcip.machine_plan(spec, solution)
    assert not leftovers, "modules left without slots"
    parts = []
    for i, slots in enumerate(plan):
        for _, r, mi in slots:
            tag = spec.modules[mi].tags[0]
            assert tag.setup * u == reduced.jobs[r].s
            parts.append(TimedPart(r, i, tag.piece * u, tag.layer * X))
    parts.sort(key=lambda pt: (pt.machine, pt.start))
    return PreemptiveSchedule(tuple(parts))


def is_layered(schedule: PreemptiveSchedule, width: Fraction) -> bool:
    return all((pt.start / width).denominator == 1 for pt in schedule.parts)


# ----------------------------------------------------------- back to I

@dataclass
class _Block:
    job: int            # original index
    machine: int
    start: Fraction     # block start on the window-free time line
    length: Fraction    # processing only
    setup: Fraction     # setup paid in front of the block on that line


def unround(instance: Instance, layered: PreemptiveSchedule,
            transcript: PreemptiveTranscript) -> list[_Block]:
    """Real setups back (zero for small-setup jobs), rounding excess trimmed."""
    blocks = []
    for pt in layered.parts:
        j = transcript.kept[pt.job]
        s = Fraction(0) if transcript.kinds[pt.job] == SST else instance.jobs[j].s
        blocks.append(_Block(j, pt.machine, pt.start, pt.length, s))
    excess = defaultdict(Fraction)
    for b in blocks:
        excess[b.job] += b.length
    for j in transcript.kept:
        excess[j] -= instance.jobs[j].p
        assert 0 <= excess[j] < transcript.width
    # shortest blocks first so that fewer blocks survive
    for b in sorted(blocks, key=lambda b: (b.length, b.start, b.machine)):
        cut = min(excess[b.job], b.length)
        b.length -= cut
        excess[b.job] -= cut
    assert not any(excess.values())
    return [b for b in blocks if b.length > 0]


def free_slots(blocks: list[_Block], machines: int, transcript: PreemptiveTranscript):
    X = transcript.width
    busy = defaultdict(set)
    for b in blocks:
        first = math.floor(b.start / X)
        last = math.ceil((b.start + b.setup + b.length) / X)
        busy[b.machine].update(range(first, last))
    return [[l for l in range(transcript.layers) if l not in busy[i]] for i in range(machines)]


def fill_slots(instance: Instance, blocks: list[_Block],
               transcript: PreemptiveTranscript) -> list[tuple[int, int, Fraction, Fraction, bool]]:
    """Greedy pass of the small small-setup jobs through the free slots.

    Returns pieces (job, machine, processing start, length, inline) where
    `inline` means the setup sits right before the piece in the same slot;
    otherwise the piece starts a slot (or the tail) and gets a window setup.
    A job never leaves its machine: once the slots run out its rest goes
    to the tail after the last layer.
    """
    X, t_bar = transcript.width, transcript.t_bar
    slots = free_slots(blocks, instance.machines, transcript)
    queue = deque(transcript.sst_small)
    pieces = []
    rest = instance.jobs[queue[0]].p if queue else Fraction(0)
    fresh = True                        # setup of queue[0] not yet handled
    for i in range(instance.machines):
        if not queue:
            break
        for l in slots[i]:
            pos, end = l * X, (l + 1) * X
            while queue and pos < end:
                j = queue[0]
                s = instance.jobs[j].s
                inline = False
                if fresh:
                    fresh = False
                    if s >= end - pos:
                        break           # setup dropped; the job opens the next slot
                    pos += s
                    inline = True
                piece = min(rest, end - pos)
                pieces.append((j, i, pos, piece, inline))
                pos += piece
                rest -= piece
                if rest == 0:
                    queue.popleft()
                    fresh = True
                    rest = instance.jobs[queue[0]].p if queue else Fraction(0)
            if not queue:
                break
        if queue and not fresh:
            pieces.append((queue[0], i, t_bar, rest, False))
            queue.popleft()
            fresh = True
            rest = instance.jobs[queue[0]].p if queue else Fraction(0)
    assert not queue, "free slots exhausted while inserting small jobs"
    return pieces


def open_windows(instance: Instance, blocks: list[_Block], pieces,
                 transcript: PreemptiveTranscript) -> list[TimedPart]:
    """A window of width mu*T goes in front of every layer and of the tail.

    A point in layer l moves up by (l+1) windows; blocks spanning several
    layers stay contiguous, which keeps them below the next window.  Only
    small-setup jobs use the windows, so without them none are opened.
    """
    X, N = transcript.width, transcript.layers
    W = transcript.mu * transcript.T if transcript.sst_big or transcript.sst_small else 0

    def shift(t):
        return t + (min(math.floor(t / X), N) + 1) * W

    parts = []
    for b in blocks:
        s = instance.jobs[b.job].s
        if b.setup:
            parts.append(TimedPart(b.job, b.machine, b.length, shift(b.start)))
        else:
            parts.append(TimedPart(b.job, b.machine, b.length, shift(b.start) - s))
    for j, i, t, length, inline in pieces:
        s = instance.jobs[j].s
        if inline:
            parts.append(TimedPart(j, i, length, shift(t - s)))
        else:
            parts.append(TimedPart(j, i, length, shift(t) - s))
    return parts


def stack_medium(instance: Instance, parts: list[TimedPart],
                 transcript: PreemptiveTranscript) -> list[TimedPart]:
    """Small medium-setup jobs go machine by machine into [T'+delta T, T'+(delta+eps)T).

    A machine's first block has its setup in the gap [T', T'+delta T).  Only
    jobs with p+s <= eps*T are split at a machine end; that keeps the two
    pieces of the job apart in time.  The others come first, each opening a
    machine, so every machine that is left takes at least eps*T of work.
    """
    if not transcript.mst_small:
        return parts
    T, eps = transcript.T, transcript.eps
    t_prime = transcript.t_prime
    base = t_prime + transcript.delta * T
    top = base + eps * T
    jobs = instance.jobs
    order = sorted(transcript.mst_small, key=lambda j: (jobs[j].s + jobs[j].p <= eps * T, j))
    out = list(parts)
    i, pos = 0, base
    for j in order:
        s, rest = jobs[j].s, jobs[j].p
        while rest > 0:
            assert i < instance.machines, "medium small jobs exceed the reserved band"
            room = top - pos
            if pos == base:
                out.append(TimedPart(j, i, rest, base - s))
                pos += rest
                rest = 0
            elif s + rest <= room:
                out.append(TimedPart(j, i, rest, pos))
                pos += s + rest
                rest = 0
            elif s < room and s + jobs[j].p <= eps * T:
                out.append(TimedPart(j, i, room - s, pos))
                rest -= room - s
                i, pos = i + 1, base
            else:
                i, pos = i + 1, base
    return out


def desimplify(instance: Instance, layered: PreemptiveSchedule,
               transcript: PreemptiveTranscript) -> PreemptiveSchedule:
    blocks = unround(instance, layered, transcript)
    pieces = fill_slots(instance, blocks, transcript)
    parts = open_windows(instance, blocks, pieces, transcript)
    transcript.t_prime = max((pt.start + instance.jobs[pt.job].s + pt.length for pt in parts),
                             default=Fraction(0))
    parts = stack_medium(instance, parts, transcript)
    parts.sort(key=lambda pt: (pt.machine, pt.start, pt.job))
    return PreemptiveSchedule(tuple(parts))


def solve(instance: Instance, T, eps, backend: str = "direct") -> Outcome:
    """Schedule with makespan <= T_breve <= (1+9 eps)T, or a reject of T."""
    T = Fraction(T)
    eps = parse_epsilon(eps)
    if instance.model != PREEMPTIVE:
        raise ValueError("preemptive pipeline needs a preemptive instance")
    if any(job.s + job.p > T for job in instance.jobs):
        return Outcome(False, None, None, {"reason": "some job does not fit below T with its setup"})
    # with m >= n every job gets a private machine in some optimal schedule
    instance = instance.with_machines(min(instance.machines, max(instance.n, 1)))
    delta = choose_delta(instance, T, eps)
    if delta is None:
        return Outcome(False, None, None, {"reason": "every medium band is too heavy"})
    assert medium_mass(instance, T, eps, delta) <= instance.machines * eps * T
    reduced, transcript = simplify(instance, T, eps, delta)
    assert transcript.t_breve <= (1 + 9 * eps) * T
    u = transcript.unit
    limit = instance.machines * transcript.t_bar / u - transcript.L / u
    if limit < 0:
        return Outcome(False, None, transcript)
    transcript.limit = math.floor(limit)
    stats = {"delta": delta, "layers": transcript.layers}
    if reduced.n:
        spec = build_mcip(reduced, transcript)
        stats["modules"] = len(spec.modules)
        solution = mcip.solve(spec, backend, limit=transcript.limit)
        if solution is None:
            return Outcome(False, None, transcript, stats)
        transcript.objective = solution.objective
        stats["groups"] = len(spec.groups)
        stats.update(dict(solution.stats))
        layered = extract(reduced, spec, solution, transcript)
    else:
        layered = PreemptiveSchedule()
    assert validate(reduced, layered) is None
    assert is_layered(layered, transcript.width)
    transcript.layered = layered
    schedule = desimplify(instance, layered, transcript)
    return Outcome(True, schedule, transcript, stats)
