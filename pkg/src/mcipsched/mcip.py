"""Module configuration IPs: builder, configuration enumeration, n-fold assembly
and decoding, plus a direct branch-and-bound solver over the same program.

A machine runs one configuration, a multiset of module-size groups whose total
size stays within the bound.  Each basic object (a class or a job) is covered
exactly by the values of the modules chosen for it.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property

from . import nfold
from .errors import CapExceeded

CONFIG_CAP = 10**6
SEARCH_CAP = 2_000_000


@dataclass(frozen=True)
class ModuleDef:
    values: tuple[int, ...]
    size: int
    eligible: frozenset[int]
    tags: tuple = ()
    start: int | None = None                 # first layer used (layered models)
    layers: frozenset[int] = frozenset()     # layers touched (layered models)


@dataclass(frozen=True)
class Group:
    size: int
    start: int | None = None
    layers: frozenset[int] = frozenset()


@dataclass(frozen=True)
class LocalInequality:
    """sum(coefficients[M] * y_M) <= rhs, imposed in every brick."""
    coefficients: tuple[int, ...]
    rhs: int


@dataclass(frozen=True)
class NontrivialBound:
    """At most `rhs` machines may run a nontrivial configuration.

    A configuration is trivial when it is empty or a single group of size >= `full`.
    """
    rhs: int
    full: int

    def counts(self, config, groups) -> bool:
        total = sum(config)
        if total == 0:
            return False
        if total > 1:
            return True
        g = next(i for i, c in enumerate(config) if c)
        return groups[g].size < self.full


@dataclass(frozen=True)
class MCIPSpec:
    demands: tuple[tuple[int, ...], ...]
    modules: tuple[ModuleDef, ...]
    machines: int
    bound: int
    local: tuple[LocalInequality, ...] = ()
    nontrivial: NontrivialBound | None = None

    def __post_init__(self):
        D = len(self.demands[0]) if self.demands else 0
        for mod in self.modules:
            if len(mod.values) != D:
                raise ValueError("module value vector has the wrong length")
            if mod.size < 0 or any(v < 0 for v in mod.values):
                raise ValueError("module sizes and values must be non-negative")
        for ineq in self.local:
            if len(ineq.coefficients) != len(self.modules):
                raise ValueError("local inequality needs one coefficient per module")

    @property
    def layered(self) -> bool:
        return any(mod.start is not None for mod in self.modules)

    @cached_property
    def groups(self) -> tuple[Group, ...]:
        keys = sorted({(mod.size, -1 if mod.start is None else mod.start) for mod in self.modules})
        out = []
        for size, start in keys:
            layers = next((mod.layers for mod in self.modules
                           if mod.size == size and (mod.start if mod.start is not None else -1) == start),
                          frozenset())
            out.append(Group(size, None if start < 0 else start, layers))
        return tuple(out)

    @cached_property
    def group_of(self) -> tuple[int, ...]:
        index = {(g.size, g.start): i for i, g in enumerate(self.groups)}
        return tuple(index[(mod.size, mod.start)] for mod in self.modules)

    def config_size(self, config) -> int:
        return sum(c * g.size for c, g in zip(config, self.groups))

    def configurations(self, cap: int = CONFIG_CAP) -> list[tuple[int, ...]]:
        """All valid configurations, restricted to multiplicities that can be used."""
        most = Counter()
        for k, demand in enumerate(self.demands):
            for i, mod in enumerate(self.modules):
                if k in mod.eligible and any(mod.values):
                    most[self.group_of[i]] += _max_copies(mod.values, demand)
        caps = [most[g] for g in range(len(self.groups))]
        sizes = [g.size for g in self.groups]
        if self.layered:
            return enumerate_configurations(sizes, self.bound, [g.layers for g in self.groups],
                                            caps, cap)
        return enumerate_configurations(sizes, self.bound, None, caps, cap)


def _max_copies(values, demand) -> int:
    return min((d // v for v, d in zip(values, demand) if v), default=0)


def enumerate_configurations(sizes, bound: int, layer_sets=None, max_counts=None,
                             cap: int = CONFIG_CAP) -> list[tuple[int, ...]]:
    """Multiplicity vectors C with sum(C_h * h) <= bound.

    With `layer_sets`, groups touching a common layer exclude each other (so every
    multiplicity is 0 or 1).  Order: the last coordinate varies slowest.
    """
    sizes = list(sizes)
    if bound < 0:
        raise ValueError("bound must be non-negative")
    if any(h <= 0 for h in sizes):
        raise ValueError("sizes must be positive")
    k = len(sizes)
    if max_counts is None:
        max_counts = [bound // h for h in sizes]
    out: list[tuple[int, ...]] = []
    config = [0] * k

    if layer_sets is None:
        def rec(i, room):
            if i < 0:
                out.append(tuple(config))
                if len(out) > cap:
                    raise CapExceeded(f"more than {cap} configurations")
                return
            for c in range(min(room // sizes[i], max_counts[i]) + 1):
                config[i] = c
                rec(i - 1, room - c * sizes[i])
            config[i] = 0
        rec(k - 1, bound)
        return out

    masks = [sum(1 << l for l in layers) for layers in layer_sets]

    def rec_layered(i, room, used):
        if i < 0:
            out.append(tuple(config))
            if len(out) > cap:
                raise CapExceeded(f"more than {cap} configurations; try a larger epsilon")
            return
        rec_layered(i - 1, room, used)
        if max_counts[i] and sizes[i] <= room and not used & masks[i]:
            config[i] = 1
            rec_layered(i - 1, room - sizes[i], used | masks[i])
            config[i] = 0
    rec_layered(k - 1, bound, 0)
    return out


# ------------------------------------------------------------------ solutions

@dataclass(frozen=True)
class MCIPSolution:
    objective: int
    configurations: tuple[tuple[tuple[int, ...], int], ...]   # (configuration, machines)
    modules: tuple[tuple[tuple[int, int], ...], ...]         # per object: (module, count)
    stats: tuple = ()

    def module_counts(self, k: int) -> dict[int, int]:
        return dict(self.modules[k])


@dataclass(frozen=True)
class Layout:
    """Column positions inside one brick of the assembled program."""
    configs: tuple[tuple[int, ...], ...]
    n_modules: int
    n_local: int
    has_global_slack: bool

    @property
    def y0(self) -> int:
        return len(self.configs)

    @property
    def width(self) -> int:
        return len(self.configs) + self.n_modules + self.n_local + int(self.has_global_slack)


def assemble(spec: MCIPSpec, cap: int = CONFIG_CAP) -> tuple[nfold.NFoldProgram, Layout]:
    """One brick per basic object: x_C, y_M, local slacks, then the global slack."""
    if not spec.demands:
        raise ValueError("no basic objects")
    configs = tuple(spec.configurations(cap))
    groups = spec.groups
    layout = Layout(configs, len(spec.modules), len(spec.local), spec.nontrivial is not None)
    t, y0 = layout.width, layout.y0
    m = spec.machines

    A1 = [[1] * len(configs) + [0] * (t - len(configs))]
    for g in range(len(groups)):
        row = [c[g] for c in configs] + [0] * (t - len(configs))
        for i, gi in enumerate(spec.group_of):
            if gi == g:
                row[y0 + i] = -1
        A1.append(row)
    b = [m] + [0] * len(groups)
    if spec.nontrivial is not None:
        row = [int(spec.nontrivial.counts(c, groups)) for c in configs] + [0] * (t - len(configs))
        row[t - 1] = 1
        A1.append(row)
        b.append(spec.nontrivial.rhs)

    D = len(spec.demands[0])
    A2 = []
    for d in range(D):
        row = [0] * t
        for i, mod in enumerate(spec.modules):
            row[y0 + i] = mod.values[d]
        A2.append(row)
    for li, ineq in enumerate(spec.local):
        row = [0] * t
        for i, c in enumerate(ineq.coefficients):
            row[y0 + i] = c
        row[y0 + len(spec.modules) + li] = 1
        A2.append(row)

    w, lower, upper = [], [], []
    for k, demand in enumerate(spec.demands):
        w += [spec.config_size(c) for c in configs] + [0] * (t - len(configs))
        lower += [0] * t
        hi = [m] * len(configs)
        for mod in spec.modules:
            if k in mod.eligible and any(mod.values):
                per = -(-spec.bound // mod.size) if mod.size else spec.bound
                hi.append(min(m * per, _max_copies(mod.values, demand)))
            else:
                hi.append(0)
        hi += [ineq.rhs for ineq in spec.local]
        if spec.nontrivial is not None:
            hi.append(spec.nontrivial.rhs)
        upper += hi
        b += list(demand) + [ineq.rhs for ineq in spec.local]
    program = nfold.NFoldProgram.build(A1, A2, len(spec.demands), w, lower, upper, b, t=t)
    return program, layout


def decode(spec: MCIPSpec, layout: Layout, x, objective: int | None = None) -> MCIPSolution:
    """Sum configuration columns over bricks; read module counts per brick."""
    t, y0 = layout.width, layout.y0
    counts = Counter()
    modules = []
    for k in range(len(spec.demands)):
        brick = x[k * t:(k + 1) * t]
        for ci, c in enumerate(layout.configs):
            if brick[ci]:
                counts[c] += brick[ci]
        modules.append(tuple((i, v) for i, v in enumerate(brick[y0:y0 + layout.n_modules]) if v))
    configs = tuple(sorted(counts.items()))
    value = sum(spec.config_size(c) * v for c, v in configs)
    if objective is not None and objective != value:
        raise AssertionError("objective does not match configuration sizes")
    return MCIPSolution(value, configs, tuple(modules))


def check_solution(spec: MCIPSpec, sol: MCIPSolution) -> None:
    """Raise AssertionError unless `sol` satisfies every MCIP constraint."""
    groups = spec.groups
    assert sum(v for _, v in sol.configurations) == spec.machines, "machine count"
    cover = Counter()
    for c, v in sol.configurations:
        assert spec.config_size(c) <= spec.bound, "configuration too large"
        if spec.layered:
            seen = set()
            for g, mult in enumerate(c):
                if mult:
                    assert mult == 1 and not seen & groups[g].layers, "layer clash"
                    seen |= groups[g].layers
        for g, mult in enumerate(c):
            cover[g] += mult * v
    chosen = Counter()
    for k, mods in enumerate(sol.modules):
        got = [0] * len(spec.demands[k])
        use = [0] * len(spec.local)
        for i, v in mods:
            assert k in spec.modules[i].eligible, "ineligible module used"
            chosen[spec.group_of[i]] += v
            for d, val in enumerate(spec.modules[i].values):
                got[d] += val * v
            for li, ineq in enumerate(spec.local):
                use[li] += ineq.coefficients[i] * v
        assert tuple(got) == tuple(spec.demands[k]), "demand not met"
        assert all(u <= ineq.rhs for u, ineq in zip(use, spec.local)), "local inequality"
    for g in range(len(groups)):
        assert cover[g] == chosen[g], "group coverage"
    if spec.nontrivial is not None:
        heavy = sum(v for c, v in sol.configurations if spec.nontrivial.counts(c, groups))
        assert heavy <= spec.nontrivial.rhs, "too many nontrivial configurations"
    assert sol.objective == sum(spec.config_size(c) * v for c, v in sol.configurations)


# -------------------------------------------------------------- direct solver

class _Search:
    """Branch and bound: modules are chosen object by object and dropped into
    machines at once, so configurations never need to be listed."""

    def __init__(self, spec: MCIPSpec, limit: int | None, node_cap: int):
        self.spec = spec
        self.groups = spec.groups
        self.node_cap = node_cap
        self.nodes = 0
        self.limit = limit
        self.best_value = None if limit is None else limit + 1
        self.best = None
        self.order = sorted(range(len(spec.demands)), key=lambda k: -sum(spec.demands[k]))
        self.options = []
        for k in range(len(spec.demands)):
            mods = [i for i, mod in enumerate(spec.modules) if k in mod.eligible and any(mod.values)]
            # large modules first: good solutions early, tighter bounds sooner
            mods.sort(key=lambda i: (-spec.modules[i].size, i))
            self.options.append(mods)
        self.masks = [sum(1 << l for l in mod.layers) for mod in spec.modules]
        self._cover_memo: dict = {}
        self.memo: dict = {}

    def min_cover(self, k, rem) -> float:
        """Cheapest exact cover of `rem` by eligible modules (no packing)."""
        key = (k, rem)
        hit = self._cover_memo.get(key)
        if hit is not None:
            return hit
        if not any(rem):
            return 0
        d = next(i for i, v in enumerate(rem) if v)
        best = float("inf")
        for i in self.options[k]:
            mod = self.spec.modules[i]
            if mod.values[d] and all(v <= r for v, r in zip(mod.values, rem)):
                sub = self.min_cover(k, tuple(r - v for r, v in zip(rem, mod.values)))
                best = min(best, mod.size + sub)
        self._cover_memo[key] = best
        return best

    def run(self):
        spec = self.spec
        self.tail = [0] * (len(self.order) + 1)
        for pos in range(len(self.order) - 1, -1, -1):
            k = self.order[pos]
            self.tail[pos] = self.tail[pos + 1] + self.min_cover(k, tuple(spec.demands[k]))
        if self.tail[0] == float("inf"):
            return None
        self.bins: list[list] = []          # [used, mask, nmods, placements]
        self.trail: list = []
        self.found = False
        try:
            self._object(0, 0)
        except _Done:
            pass
        return self.best

    def _heavy(self, b) -> bool:
        nt = self.spec.nontrivial
        if b[2] == 0:
            return False
        return b[2] > 1 or b[0] < nt.full

    def _object(self, pos, cost):
        if pos == len(self.order):
            self._record(cost)
            return
        k = self.order[pos]
        self._modules(pos, k, tuple(self.spec.demands[k]), 0,
                      (0,) * len(self.spec.local), cost)

    def _modules(self, pos, k, rem, start, usage, cost):
        spec = self.spec
        if not any(rem):
            self._object(pos + 1, cost)
            return
        self.nodes += 1
        if self.nodes > self.node_cap:
            raise CapExceeded(f"direct MCIP search exceeded {self.node_cap} nodes")
        lb = self.min_cover(k, rem) + self.tail[pos + 1]
        if self.best_value is not None and cost + lb >= self.best_value:
            return
        free = spec.machines * spec.bound - sum(b[0] for b in self.bins)
        if lb > free:
            return
        key = (pos, rem, start, usage,
               tuple(sorted((b[0], b[1], b[2]) for b in self.bins)))
        seen = self.memo.get(key)
        if seen is not None and seen <= cost:
            return
        self.memo[key] = cost
        opts = self.options[k]
        for oi in range(start, len(opts)):
            i = opts[oi]
            mod = spec.modules[i]
            if any(v > r for v, r in zip(mod.values, rem)):
                continue
            new_usage = usage
            if spec.local:
                new_usage = tuple(u + ineq.coefficients[i] for u, ineq in zip(usage, spec.local))
                if any(u > ineq.rhs for u, ineq in zip(new_usage, spec.local)):
                    continue
            new_rem = tuple(r - v for r, v in zip(rem, mod.values))
            mask = self.masks[i]
            tried = set()
            targets = list(range(len(self.bins)))
            if len(self.bins) < spec.machines:
                targets.append(None)
            for bi in targets:
                if bi is None:
                    state = (0, 0, 0)
                    if mod.size > spec.bound:
                        continue
                    self.bins.append([0, 0, 0, []])
                    b = self.bins[-1]
                else:
                    b = self.bins[bi]
                    state = (b[0], b[1], b[2])
                    if state in tried or b[0] + mod.size > spec.bound or b[1] & mask:
                        continue
                tried.add(state)
                before_heavy = spec.nontrivial is not None and self._heavy(b)
                b[0] += mod.size
                b[1] |= mask
                b[2] += 1
                b[3].append((k, i))
                ok = True
                if spec.nontrivial is not None and not before_heavy and self._heavy(b):
                    heavy = sum(1 for x in self.bins if self._heavy(x))
                    ok = heavy <= spec.nontrivial.rhs
                if ok:
                    self._modules(pos, k, new_rem, oi, new_usage, cost + mod.size)
                b[3].pop()
                b[2] -= 1
                b[1] &= ~mask
                b[0] -= mod.size
                if bi is None:
                    self.bins.pop()

    def _record(self, cost):
        if self.best_value is not None and cost >= self.best_value:
            return
        self.best_value = cost
        spec = self.spec
        groups = len(self.groups)
        configs = Counter()
        per_obj = [Counter() for _ in spec.demands]
        for b in self.bins:
            c = [0] * groups
            for k, i in b[3]:
                c[spec.group_of[i]] += 1
                per_obj[k][i] += 1
            configs[tuple(c)] += 1
        empty = spec.machines - len(self.bins)
        if empty:
            configs[(0,) * groups] += empty
        self.best = MCIPSolution(
            cost, tuple(sorted(configs.items())),
            tuple(tuple(sorted(po.items())) for po in per_obj),
            (("nodes", self.nodes),))
        if self.limit is not None:
            raise _Done


class _Done(Exception):
    pass


def solve(spec: MCIPSpec, backend: str = "direct", limit: int | None = None,
          node_cap: int = SEARCH_CAP) -> MCIPSolution | None:
    """Solve the MCIP.

    backend "direct": branch and bound without listing configurations;
    with `limit`, stop at the first solution of objective <= limit.
    backend "augment": assemble the n-fold program and run the augmentation solver.
    backend "nfold-exact": assemble and enumerate the n-fold box (tiny programs only).
    """
    if not spec.demands:
        sol = MCIPSolution(0, (((0,) * len(spec.groups), spec.machines),), ())
        return sol if limit is None or limit >= 0 else None
    if backend == "direct":
        sol = _Search(spec, limit, node_cap).run()
    elif backend in ("augment", "nfold-exact"):
        program, layout = assemble(spec)
        run = nfold.solve if backend == "augment" else nfold.solve_exact
        res = run(program)
        if res is None:
            return None
        sol = decode(spec, layout, res.x, res.objective)
        sol = MCIPSolution(sol.objective, sol.configurations, sol.modules,
                           (("r", program.r), ("s", program.s), ("t", program.t),
                            ("n", program.n), ("delta", program.delta), ("phi", program.phi),
                            ("steps", res.steps)))
        if limit is not None and sol.objective > limit:
            return None
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if sol is not None:
        check_solution(spec, sol)
    return sol


def machine_plan(spec: MCIPSpec, sol: MCIPSolution, skip=lambda config: False):
    """Match machines to configurations and modules to slots.

    Returns (plan, skipped): plan is a list of machines, each a list of
    (group, object, module) in slot order; configurations for which `skip`
    is true are not expanded and are returned as (configuration, count).
    """
    machines, skipped = [], []
    for config, count in sol.configurations:
        if not any(config):
            continue
        if skip(config):
            skipped.append((config, count))
            continue
        for _ in range(count):
            machines.append([(g, None, None) for g, c in enumerate(config) for _ in range(c)])
    # hand out modules group by group in object order
    pending: dict[int, list] = {}
    for k, mods in enumerate(sol.modules):
        for i, v in mods:
            pending.setdefault(spec.group_of[i], []).extend([(k, i)] * v)
    for slots in machines:
        for si, (g, _, _) in enumerate(slots):
            k, i = pending[g].pop(0)
            slots[si] = (g, k, i)
    leftovers = {g: items for g, items in pending.items() if items}
    return machines, skipped, leftovers
