"""Walk one setup-class instance through a single probe of the pipeline.

With eps = 1/2 the stretched bound is several times T, and the MCIP only
minimises total load, so the accepted schedule may well stack everything on
one machine.  The guarantee is the bound printed at the end, nothing tighter.

    python demos/setup_class_walkthrough.py
"""
from fractions import Fraction as F

from mcipsched import oracle, setup_class
from mcipsched.model import SETUP_CLASS, Instance, Job, machine_loads, makespan
from mcipsched.rational import fmt

EPS = F(1, 2)

# three classes: a heavy one with a big setup, one with a tiny setup and a
# long job, and one made of short jobs only
instance = Instance(SETUP_CLASS, 2, (
    Job(F(16), cls=0), Job(F(14), cls=0), Job(F(3), cls=0),
    Job(F(20), cls=1), Job(F(2), cls=1),
    Job(F(5), cls=2), Job(F(4), cls=2),
), (F(8), F(1), F(2)))

best = oracle.exact(instance)
print(f"optimum makespan {fmt(best.value)} (exhaustive search)")

T = best.value
reduced, tr = setup_class.simplify(instance, T, EPS)
print(f"\nprobe T = {fmt(T)}, grid unit {fmt(tr.unit)}")
print(f"  removed short jobs of small-setup classes: {[j + 1 for j in tr.removed]}")
print(f"  classes made only of removed jobs: {[k + 1 for k in tr.Q]}")
print(f"  space they need later (L): {fmt(tr.L)}")
print(f"  placeholders per class: { {k + 1: c for k, c in tr.placeholders.items()} }")
print(f"  reduced instance: {reduced.n} jobs, rounded times "
      f"{sorted({fmt(job.p) for job in reduced.jobs}, key=F)}, setups "
      f"{[fmt(s) for s in reduced.class_setups]}")

spec, times = setup_class.build_mcip(reduced, tr)
print(f"  MCIP: {len(spec.modules)} batch modules, {len(spec.groups)} size groups, "
      f"bound {spec.bound} grid units")

out = setup_class.solve(instance, T, EPS)
print(f"\naccepted: {out.accepted}")
if out.accepted:
    loads = machine_loads(instance, out.schedule)
    print(f"  machine loads {[fmt(loads.get(i, 0)) for i in range(instance.machines)]}")
    print(f"  makespan {fmt(makespan(instance, out.schedule))}, guaranteed at most "
          f"{fmt(tr.t_breve)} = {float(tr.factor):.3f} * T")
