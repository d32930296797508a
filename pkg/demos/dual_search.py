"""The binary search over T and how close it lands to the optimum.

Every accepted probe carries its own bound (factor * T); the search keeps the
best schedule seen.  At eps = 1/2 the ratios stay well inside the bounds but
are far from 1.

    python demos/dual_search.py
"""
from fractions import Fraction as F

from mcipsched import driver, oracle
from mcipsched.model import MODELS
from mcipsched.rational import fmt
from mcipsched.rng import generate

EPS = F(1, 2)

instance = generate("setup-class", 6, 3, seed=5, classes=2)
result = driver.search(instance, EPS)
print(f"setup-class, 6 jobs, 3 machines: B = {fmt(result.B)}, b = {result.b}")
for probe in result.probes:
    verdict = f"accepted, makespan {fmt(probe.makespan)}" if probe.accepted else "rejected"
    print(f"  T = {fmt(probe.T):>6}  {verdict}")
print(f"  T* = {fmt(result.T_star)} after {result.iterations} probes "
      f"(cap {driver.iteration_cap(result.b, EPS)})")

print("\nmakespan / optimum over 20 seeds (n = 4, m = 3):")
for model in MODELS:
    ratios = []
    for seed in range(20):
        inst = generate(model, 4, 3, seed)
        res = driver.search(inst, EPS)
        ratios.append(res.makespan / oracle.exact(inst).value)
    kind = "lower bound" if model == "preemptive" else "optimum"
    print(f"  {model:<12} mean {float(sum(ratios) / 20):.3f}  max {float(max(ratios)):.3f}"
          f"  (against the {kind})")
