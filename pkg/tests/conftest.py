import math
from collections import Counter
from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from mcipsched import preemptive
from mcipsched.model import PREEMPTIVE, SETUP_CLASS, SPLITTABLE, Instance, Job

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

HALF = Fraction(1, 2)


def times(lo=1, hi=10, den=1):
    return st.integers(lo, hi).map(lambda k: Fraction(k, den))


@st.composite
def setup_class_instances(draw, max_jobs=6, max_machines=3, max_classes=3):
    n = draw(st.integers(1, max_jobs))
    K = draw(st.integers(1, min(n, max_classes)))
    setups = tuple(draw(times()) for _ in range(K))
    classes = list(range(K)) + [draw(st.integers(0, K - 1)) for _ in range(n - K)]
    jobs = tuple(Job(draw(times()), cls=k) for k in classes)
    return Instance(SETUP_CLASS, draw(st.integers(1, max_machines)), jobs, setups)


@st.composite
def own_setup_instances(draw, model, max_jobs=4, max_machines=3):
    n = draw(st.integers(1, max_jobs))
    jobs = tuple(Job(draw(times()), draw(times())) for _ in range(n))
    return Instance(model, draw(st.integers(1, max_machines)), jobs)


def splittable_instances(**kw):
    return own_setup_instances(SPLITTABLE, **kw)


def preemptive_instances(**kw):
    return own_setup_instances(PREEMPTIVE, **kw)


def random_program(seed: int):
    """Random n-fold program: r, s <= 2, t, n <= 3, entries in [-3, 3], box [0, 4].

    The rhs comes from a random box point, perturbed in about 30% of the cases
    so that infeasible programs show up too.
    """
    import random

    from mcipsched.nfold import NFoldProgram
    rg = random.Random(seed)
    r, s, t, n = rg.randint(1, 2), rg.randint(1, 2), rg.randint(1, 3), rg.randint(1, 3)
    A1 = [[rg.randint(-3, 3) for _ in range(t)] for _ in range(r)]
    A2 = [[rg.randint(-3, 3) for _ in range(t)] for _ in range(s)]
    w = [rg.randint(-3, 3) for _ in range(n * t)]
    x = [rg.randint(0, 4) for _ in range(n * t)]
    zero = NFoldProgram.build(A1, A2, n, w, [0] * (n * t), [4] * (n * t), [0] * (r + n * s))
    b = [-v for v in zero.residual(x)]
    if rg.random() < 0.3:
        b[rg.randrange(len(b))] += rg.choice([-1, 1])
    return NFoldProgram.build(A1, A2, n, w, [0] * (n * t), [4] * (n * t), b)


def check_layered(tr):
    """Block starts on the grid; one block per (machine, layer) and per (job, layer)."""
    X = tr.width
    per_machine, per_job = Counter(), Counter()
    for pt in tr.layered.parts:
        assert pt.start % X == 0
        job = tr.reduced.jobs[pt.job]
        first = int(pt.start / X)
        last = math.ceil((pt.start + job.s + pt.length) / X)
        for l in range(first, last):
            per_machine[(pt.machine, l)] += 1
            per_job[(pt.job, l)] += 1
        if tr.kinds[pt.job] == preemptive.MST:
            assert pt.length % tr.unit == 0
    assert all(v == 1 for v in per_machine.values())
    assert all(v == 1 for v in per_job.values())
