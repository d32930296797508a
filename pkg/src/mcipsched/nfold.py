"""n-fold integer programs: min w.x  s.t.  A x = b,  lower <= x <= upper.

A stacks a globally uniform block (A1 repeated once per brick) on top of a
block-diagonal of copies of A2.  The solver is a two-phase augmentation
method: every step is the cheapest kernel direction of bounded max-norm,
found by a dynamic program over bricks keyed on the running A1 sum.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import CapExceeded

EXACT_CAP = 10**7
STATE_CAP = 2_000_000
CANDIDATE_CAP = 500_000


@dataclass(frozen=True)
class NFoldProgram:
    A1: tuple[tuple[int, ...], ...]
    A2: tuple[tuple[int, ...], ...]
    n: int
    t: int
    w: tuple[int, ...]
    lower: tuple[int, ...]
    upper: tuple[int, ...]
    b: tuple[int, ...]

    def __post_init__(self):
        nt = self.n * self.t
        if self.n < 1 or self.t < 1:
            raise ValueError("need n >= 1 and t >= 1")
        if any(len(row) != self.t for row in self.A1 + self.A2):
            raise ValueError("every matrix row must have t entries")
        if not len(self.w) == len(self.lower) == len(self.upper) == nt:
            raise ValueError("w and bounds must have length n*t")
        if len(self.b) != self.r + self.n * self.s:
            raise ValueError("rhs must have length r + n*s")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("lower bound above upper bound")

    @classmethod
    def build(cls, A1, A2, n, w, lower, upper, b, t=None):
        A1 = tuple(tuple(int(v) for v in row) for row in A1)
        A2 = tuple(tuple(int(v) for v in row) for row in A2)
        if t is None:
            t = len((A1 + A2)[0])
        ints = lambda seq: tuple(int(v) for v in seq)  # noqa: E731
        return cls(A1, A2, n, t, ints(w), ints(lower), ints(upper), ints(b))

    @property
    def r(self) -> int:
        return len(self.A1)

    @property
    def s(self) -> int:
        return len(self.A2)

    @property
    def delta(self) -> int:
        return max((abs(v) for row in self.A1 + self.A2 for v in row), default=0)

    @property
    def phi(self) -> int:
        return max((hi - lo for lo, hi in zip(self.lower, self.upper)), default=0)

    def brick(self, x, q):
        return x[q * self.t:(q + 1) * self.t]

    def residual(self, x) -> tuple[int, ...]:
        """b - A x."""
        out = []
        for i, row in enumerate(self.A1):
            out.append(self.b[i] - sum(_dot(row, self.brick(x, q)) for q in range(self.n)))
        for q in range(self.n):
            xq = self.brick(x, q)
            for i, row in enumerate(self.A2):
                out.append(self.b[self.r + q * self.s + i] - _dot(row, xq))
        return tuple(out)

    def is_feasible(self, x) -> bool:
        return (len(x) == self.n * self.t
                and all(lo <= v <= hi for v, lo, hi in zip(x, self.lower, self.upper))
                and not any(self.residual(x)))

    def value(self, x) -> int:
        return _dot(self.w, x)

    def to_json(self) -> str:
        return json.dumps({"r": self.r, "s": self.s, "t": self.t, "n": self.n,
                           "A1": [list(r) for r in self.A1], "A2": [list(r) for r in self.A2],
                           "w": list(self.w), "lower": list(self.lower),
                           "upper": list(self.upper), "b": list(self.b)})

    @classmethod
    def from_json(cls, text: str) -> "NFoldProgram":
        d = json.loads(text)
        return cls.build(d["A1"], d["A2"], d["n"], d["w"], d["lower"], d["upper"], d["b"],
                         t=d["t"])


@dataclass(frozen=True)
class NFoldSolution:
    x: tuple[int, ...]
    objective: int
    steps: int = 0

    def bricks(self, t: int):
        return [self.x[q:q + t] for q in range(0, len(self.x), t)]


def _dot(a, b) -> int:
    return sum(u * v for u, v in zip(a, b))


# ---------------------------------------------------------------- exact oracle

def solve_exact(program: NFoldProgram, cap: int = EXACT_CAP) -> NFoldSolution | None:
    """Branch and bound over the whole box; the lexicographically first optimum."""
    volume = math.prod(hi - lo + 1 for lo, hi in zip(program.lower, program.upper))
    if volume > cap:
        raise CapExceeded(f"box has {volume} points, cap is {cap}")
    t, n, r, s = program.t, program.n, program.r, program.s
    N = n * t
    # rows as dense coefficient vectors over all N variables
    rows = []
    for i, a in enumerate(program.A1):
        rows.append(([a[k % t] for k in range(N)], program.b[i]))
    for q in range(n):
        for i, a in enumerate(program.A2):
            coef = [0] * N
            coef[q * t:(q + 1) * t] = a
            rows.append((coef, program.b[r + q * s + i]))
    lo, hi, w = program.lower, program.upper, program.w
    # suffix ranges of each row and of the objective
    smin = [[0] * (N + 1) for _ in rows]
    smax = [[0] * (N + 1) for _ in rows]
    for ri, (coef, _) in enumerate(rows):
        for k in range(N - 1, -1, -1):
            a, b_ = coef[k] * lo[k], coef[k] * hi[k]
            smin[ri][k] = smin[ri][k + 1] + min(a, b_)
            smax[ri][k] = smax[ri][k + 1] + max(a, b_)
    wmin = [0] * (N + 1)
    for k in range(N - 1, -1, -1):
        wmin[k] = wmin[k + 1] + min(w[k] * lo[k], w[k] * hi[k])

    best = [None, None]
    x = [0] * N
    acc = [0] * len(rows)

    def dfs(k, cost):
        if best[0] is not None and cost + wmin[k] >= best[0]:
            return
        for ri, (_, rhs) in enumerate(rows):
            need = rhs - acc[ri]
            if not smin[ri][k] <= need <= smax[ri][k]:
                return
        if k == N:
            best[0], best[1] = cost, tuple(x)
            return
        for v in range(lo[k], hi[k] + 1):
            x[k] = v
            for ri, (coef, _) in enumerate(rows):
                acc[ri] += coef[k] * v
            dfs(k + 1, cost + w[k] * v)
            for ri, (coef, _) in enumerate(rows):
                acc[ri] -= coef[k] * v

    dfs(0, 0)
    if best[1] is None:
        return None
    return NFoldSolution(best[1], best[0])


# ------------------------------------------------------------- augmentation

class _StepSearch:
    """Best bounded-norm step for one program; caches brick candidate lists."""

    def __init__(self, program: NFoldProgram, state_cap=STATE_CAP, candidate_cap=CANDIDATE_CAP):
        self.p = program
        self.state_cap = state_cap
        self.candidate_cap = candidate_cap
        self.cache: dict = {}
        t = program.t
        # Columns that touch one A1 row with coefficient +-1 and no A2 row act
        # as free adjusters of the final A1 sum; they are settled after the DP.
        self.pure = {}
        for j in range(t):
            if any(row[j] for row in program.A2):
                continue
            hits = [(i, row[j]) for i, row in enumerate(program.A1) if row[j]]
            if len(hits) == 1 and abs(hits[0][1]) == 1:
                self.pure[j] = hits[0]
        self.dfs_cols = [j for j in range(t) if j not in self.pure]

    def _candidates(self, lo, hi, wseg):
        """Cheapest brick vector per A1 contribution, among those with A2 g = 0.

        Built column by column over partial sums (A1, A2), keeping for each the
        cheapest prefix (lexicographically first on ties).  The brick DP only
        looks at the A1 contribution and the cost, so nothing is lost.
        """
        key = (lo, hi, wseg)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        p = self.p
        cols = self.dfs_cols
        A1, A2 = p.A1, p.A2
        m = len(cols)
        smin = [[0] * (m + 1) for _ in A2]
        smax = [[0] * (m + 1) for _ in A2]
        for i, row in enumerate(A2):
            for d in range(m - 1, -1, -1):
                j = cols[d]
                a, b = row[j] * lo[j], row[j] * hi[j]
                smin[i][d] = smin[i][d + 1] + min(a, b)
                smax[i][d] = smax[i][d + 1] + max(a, b)
        r = len(A1)
        states = {((0,) * r, (0,) * len(A2)): (0, ())}
        for d, j in enumerate(cols):
            c1 = [row[j] for row in A1]
            c2 = [row[j] for row in A2]
            nxt: dict = {}
            for (a1, a2), (cost, prefix) in states.items():
                for v in range(lo[j], hi[j] + 1):
                    n2 = tuple(u + c * v for u, c in zip(a2, c2))
                    if any(not smin[i][d + 1] <= -n2[i] <= smax[i][d + 1]
                           for i in range(len(A2))):
                        continue
                    k = (tuple(u + c * v for u, c in zip(a1, c1)), n2)
                    val = (cost + wseg[j] * v, prefix + (v,))
                    old = nxt.get(k)
                    if old is None or val < old:
                        nxt[k] = val
            if len(nxt) > self.candidate_cap:
                raise CapExceeded("brick candidate list exceeds cap")
            states = nxt
        out = []
        for (a1, _), (cost, prefix) in states.items():
            g = [0] * p.t
            for j, v in zip(cols, prefix):
                g[j] = v
            out.append((tuple(g), a1, cost))
        out.sort(key=lambda c: c[0])
        self.cache[key] = out
        return out

    def best(self, x, gamma):
        p = self.p
        t, n, r = p.t, p.n, p.r
        cands, pure_cols = [], []
        for q in range(n):
            base = q * t
            lo = tuple(max(p.lower[base + j] - x[base + j], -gamma) for j in range(t))
            hi = tuple(min(p.upper[base + j] - x[base + j], gamma) for j in range(t))
            cands.append(self._candidates(lo, hi, p.w[base:base + t]))
            for j, (i, sign) in self.pure.items():
                # in "h = sign*g" coordinates
                a, b = sorted((sign * lo[j], sign * hi[j]))
                pure_cols.append((i, sign, q, j, a, b, sign * p.w[base + j]))
        # total range the pure columns can absorb, per A1 row
        absorb_lo, absorb_hi = [0] * r, [0] * r
        for i, _, _, _, a, b, _ in pure_cols:
            absorb_lo[i] += a
            absorb_hi[i] += b
        # suffix ranges of A1 contributions of the remaining bricks
        rem_lo = [[0] * r for _ in range(n + 1)]
        rem_hi = [[0] * r for _ in range(n + 1)]
        for q in range(n - 1, -1, -1):
            for i in range(r):
                vals = [c[1][i] for c in cands[q]]
                rem_lo[q][i] = rem_lo[q + 1][i] + min(vals)
                rem_hi[q][i] = rem_hi[q + 1][i] + max(vals)

        def alive(state, q):
            # need state + rest + h == 0 for some rest, h in range
            for i in range(r):
                if state[i] + rem_lo[q][i] + absorb_lo[i] > 0:
                    return False
                if state[i] + rem_hi[q][i] + absorb_hi[i] < 0:
                    return False
            return True

        zero = (0,) * r
        states = {zero: (0, ())}
        for q in range(n):
            nxt: dict = {}
            for state, (cost, path) in states.items():
                for ci, (_, a1, c) in enumerate(cands[q]):
                    ns = tuple(u + v for u, v in zip(state, a1))
                    if not alive(ns, q + 1):
                        continue
                    val = (cost + c, path + (ci,))
                    old = nxt.get(ns)
                    if old is None or val < old:
                        nxt[ns] = val
            if len(nxt) > self.state_cap:
                raise CapExceeded(f"{len(nxt)} DP states exceed cap {self.state_cap}")
            states = nxt

        by_row = [sorted((c for c in pure_cols if c[0] == i), key=lambda c: (c[6], c[2], c[3]))
                  for i in range(r)]
        best = None
        for state, (cost, path) in states.items():
            fix = _absorb(state, by_row)
            if fix is None:
                continue
            total = (cost + fix[0], path)
            if best is None or total < best[0]:
                best = (total, fix[1])
        if best is None or best[0][0] >= 0:
            return None
        (cost, path), moves = best
        g = []
        for q, ci in enumerate(path):
            g.extend(cands[q][ci][0])
        for (q, j), v in moves.items():
            g[q * t + j] = v
        return tuple(g)


def _absorb(state, by_row):
    """Cheapest settlement of the final A1 sum by the pure columns, row by row."""
    total, moves = 0, {}
    for i, cols in enumerate(by_row):
        need = -state[i] - sum(c[4] for c in cols)
        if need < 0:
            return None
        for _, sign, q, j, a, b, unit in cols:
            h = a + min(need, b - a)
            need -= h - a
            total += unit * h
            if h:
                moves[(q, j)] = sign * h
        if need:
            return None
    return total, moves


def best_step(program: NFoldProgram, x, gamma: int, **caps) -> tuple[int, ...] | None:
    """Cheapest improving kernel step with max-norm <= gamma, or None."""
    return _StepSearch(program, **caps).best(tuple(x), gamma)


def _gamma_schedule(phi: int) -> list[int]:
    out, g = [], 1
    while g < phi:
        out.append(g)
        g *= 2
    out.append(max(phi, 1))
    return out


def augment(program: NFoldProgram, x, floor: int | None = None,
            search: _StepSearch | None = None, **caps) -> NFoldSolution:
    """Improve a feasible x until no bounded step helps at the box width."""
    search = search or _StepSearch(program, **caps)
    x = list(x)
    value = program.value(x)
    gammas = _gamma_schedule(program.phi)
    k, steps = 0, 0
    while k < len(gammas) and (floor is None or value > floor):
        g = search.best(tuple(x), gammas[k])
        if g is None:
            k += 1
            continue
        x = [a + b for a, b in zip(x, g)]
        new = program.value(x)
        assert new < value, "augmentation step did not improve"
        assert program.is_feasible(x), "augmentation step left the feasible set"
        value = new
        steps += 1
    return NFoldSolution(tuple(x), value, steps)


def _phase1_program(program: NFoldProgram):
    """Attach +/- slack columns per row; returns (aux program, start point)."""
    t, n, r, s = program.t, program.n, program.r, program.s
    x0 = [min(max(0, lo), hi) for lo, hi in zip(program.lower, program.upper)]
    res = program.residual(x0)
    T = t + 2 * r + 2 * s

    def widen(rows, first):
        out = []
        for i, row in enumerate(rows):
            extra = [0] * (2 * r + 2 * s)
            extra[first + 2 * i] = 1
            extra[first + 2 * i + 1] = -1
            out.append(tuple(row) + tuple(extra))
        return out

    A1 = widen(program.A1, 0)
    A2 = widen(program.A2, 2 * r)
    w, lower, upper, start = [], [], [], []
    for q in range(n):
        w += [0] * t + [1] * (2 * r + 2 * s)
        lower += list(program.lower[q * t:(q + 1) * t]) + [0] * (2 * r + 2 * s)
        brick_hi, brick_x = [0] * (2 * r + 2 * s), [0] * (2 * r + 2 * s)
        if q == 0:
            for i in range(r):
                k = 2 * i + (0 if res[i] >= 0 else 1)
                brick_hi[k] = brick_x[k] = abs(res[i])
        for i in range(s):
            v = res[r + q * s + i]
            k = 2 * r + 2 * i + (0 if v >= 0 else 1)
            brick_hi[k] = brick_x[k] = abs(v)
        upper += list(program.upper[q * t:(q + 1) * t]) + brick_hi
        start += x0[q * t:(q + 1) * t] + brick_x
    aux = NFoldProgram.build(A1, A2, n, w, lower, upper, program.b, t=T)
    return aux, start


def phase1(program: NFoldProgram, **caps) -> NFoldSolution | None:
    """Feasible point via slack minimisation, or None if the slack cannot reach 0."""
    aux, start = _phase1_program(program)
    sol = augment(aux, start, floor=0, **caps)
    if sol.objective > 0:
        return None
    T, t = aux.t, program.t
    x = []
    for q in range(program.n):
        x.extend(sol.x[q * T:q * T + t])
    return NFoldSolution(tuple(x), program.value(x), sol.steps)


def solve(program: NFoldProgram, **caps) -> NFoldSolution | None:
    """Optimal solution or None when infeasible."""
    start = phase1(program, **caps)
    if start is None:
        return None
    sol = augment(program, start.x, **caps)
    return NFoldSolution(sol.x, sol.objective, start.steps + sol.steps)
