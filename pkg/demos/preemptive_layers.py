"""How the preemptive pipeline lays blocks on a layer grid and then adds
the jobs it set aside.

The guess T here lies below the lower bound.  That is allowed: accepting T
only promises a schedule within the stretched bound, while a reject would
prove that no schedule of makespan T exists.

    python demos/preemptive_layers.py
"""
from fractions import Fraction as F

from mcipsched import oracle, preemptive
from mcipsched.model import PREEMPTIVE, Instance, Job, makespan
from mcipsched.rational import fmt

EPS = F(1, 2)
instance = Instance(PREEMPTIVE, 2, tuple(Job(F(p), F(s)) for p, s in [
    (40, 20), (30, 18), (7, 1), (5, 2), (20, 1), (6, 1), (36, 1)]))
T = F(64)

out = preemptive.solve(instance, T, EPS)
tr = out.transcript
print(f"lower bound {fmt(oracle.lower_bound(instance))}, probe T = {fmt(T)}")
print(f"medium band chosen: delta = {fmt(tr.delta)}, mu = {fmt(tr.mu)}")
print(f"layer width {fmt(tr.width)}, {tr.layers} layers below {fmt(tr.t_bar)}")
print(f"set aside: small jobs with small setups {[j + 1 for j in tr.sst_small]}, "
      f"small jobs with medium setups {[j + 1 for j in tr.mst_small]}")
print(f"long jobs whose setup is ignored while layering: {[j + 1 for j in tr.sst_big]}")

print("\nlayered schedule of the reduced instance (start, machine, job, setup+length):")
for pt in sorted(tr.layered.parts, key=lambda p: (p.machine, p.start)):
    job = tr.reduced.jobs[pt.job]
    print(f"  t={fmt(pt.start):>4}  machine {pt.machine + 1}  job {tr.kept[pt.job] + 1}  "
          f"{fmt(job.s)}+{fmt(pt.length)}")

print(f"\nafter slot filling and setup windows the makespan is {fmt(tr.t_prime)}")
print(f"final makespan {fmt(makespan(instance, out.schedule))}, "
      f"guaranteed at most {fmt(tr.t_breve)} <= (1+9 eps) T = {fmt((1 + 9 * EPS) * T)}")
