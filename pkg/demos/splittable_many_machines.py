"""The same splittable jobs on 4 machines and on a million machines.

Machines that carry one job at full load are written as counted runs, so the
schedule file stays small however many machines there are.

    python demos/splittable_many_machines.py
"""
import time
from fractions import Fraction as F

from mcipsched import driver, io, oracle, splittable
from mcipsched.model import SPLITTABLE, Instance, Job, makespan
from mcipsched.rational import fmt

EPS = F(1, 2)
jobs = (Job(F(90), F(6)), Job(F(40), F(5)), Job(F(12), F(2)), Job(F(7), F(1)))

for m in (4, 10**6):
    instance = Instance(SPLITTABLE, m, jobs)
    started = time.perf_counter()
    result = driver.search(instance, EPS)
    seconds = time.perf_counter() - started
    sched = result.schedule
    text = io.dump(io.schedule_to_json(instance, sched))
    print(f"m = {m}")
    print(f"  lower bound {fmt(oracle.lower_bound(instance))}, makespan {fmt(result.makespan)}, "
          f"{result.iterations} probes in {seconds:.3f}s")
    print(f"  {len(sched.parts)} explicit parts, "
          f"{sum(r.count for r in sched.trivial_runs)} machines in {len(sched.trivial_runs)} runs")
    print(f"  nontrivial machines {splittable.nontrivial_machines(instance, sched)}, "
          f"schedule file {len(text)} bytes")
    assert makespan(instance, sched) == result.makespan
