import math
from fractions import Fraction

import pytest
from hypothesis import given

from conftest import HALF, setup_class_instances, splittable_instances, preemptive_instances
from mcipsched import driver, oracle, splittable
from mcipsched.model import (PREEMPTIVE, SETUP_CLASS, SPLITTABLE, Instance, Job, makespan,
                             validate)

F = Fraction


def test_initial_bound_splittable():
    i = Instance(SPLITTABLE, 3, (Job(F(3), F(1)), Job(F(2), F(2))))
    assert driver.initial_bound(i) == (8, 3)


def test_initial_bound_setup_class_pays_class_once():
    i = Instance(SETUP_CLASS, 2, (Job(F(1), cls=0), Job(F(1), cls=0)), (F(2),))
    assert driver.initial_bound(i) == (4, 2)


def test_machine_cap_in_b():
    i = Instance(PREEMPTIVE, 10, (Job(F(1), F(1)),))
    assert driver.initial_bound(i)[1] == 1
    assert driver.initial_bound(Instance(SPLITTABLE, 10, (Job(F(1), F(1)),)))[1] == 10


def test_iteration_cap_arithmetic():
    assert driver.iteration_cap(4, HALF) == 4
    assert driver.iteration_cap(1, HALF) == 1


@pytest.mark.parametrize("i", [
    Instance(SETUP_CLASS, 1, (Job(F(3), cls=0), Job(F(4), cls=1)), (F(2), F(1))),
    Instance(SPLITTABLE, 1, (Job(F(3), F(1)), Job(F(4), F(2)))),
])
def test_single_machine_accepts_b_once(i):
    res = driver.search(i, HALF)
    assert res.b == 1 and res.iterations == 1
    assert res.T_star == res.B == res.makespan


def test_empty_instance():
    res = driver.search(Instance(SPLITTABLE, 2, ()), HALF)
    assert res.makespan == 0 and res.iterations == 0


def check_search(i, eps=HALF):
    seen = []
    res = driver.search(i, eps, on_probe=lambda T, out: seen.append((T, out)))
    assert res.iterations == len(res.probes) == len(seen)
    assert res.iterations <= driver.iteration_cap(res.b, eps)
    accepted = [p for p in res.probes if p.accepted]
    rejected = [p.T for p in res.probes if not p.accepted]
    # monotone along the probe path
    for p in accepted:
        assert all(T < p.T for T in rejected)
    # the returned T is the smallest accepted guess and the interval closed up
    assert res.T_star == min(p.T for p in accepted)
    assert res.T_star - max(rejected + [res.B / res.b]) <= eps * res.B / res.b
    assert validate(i, res.schedule) is None
    assert res.makespan == makespan(i, res.schedule)
    assert res.makespan <= res.transcript.factor * res.T_star
    return res


@given(setup_class_instances(max_jobs=6, max_machines=3))
def test_setup_class_search(i):
    res = check_search(i)
    opt = oracle.exact(i).value
    assert opt <= res.makespan <= res.transcript.factor * (1 + HALF) * opt


@given(splittable_instances(max_jobs=4, max_machines=4))
def test_splittable_search(i):
    res = check_search(i)
    opt = oracle.exact(i).value
    assert opt <= res.makespan <= res.transcript.factor * (1 + HALF) * opt
    assert splittable.nontrivial_machines(i, res.schedule) <= math.comb(i.n, 2)


@given(preemptive_instances(max_jobs=5, max_machines=3))
def test_preemptive_search(i):
    res = check_search(i)
    assert res.makespan >= oracle.lower_bound(i)


def test_deterministic():
    i = Instance(SPLITTABLE, 3, (Job(F(7), F(2)), Job(F(5), F(3)), Job(F(1), F(4))))
    a, b = driver.search(i, HALF), driver.search(i, HALF)
    assert a.probes == b.probes and a.schedule == b.schedule


def test_probe_log_json():
    i = Instance(SPLITTABLE, 2, (Job(F(7), F(2)),))
    res = driver.search(i, HALF)
    log = [p.as_json() for p in res.probes]
    assert log[0]["T"] == 9 and log[0]["accepted"] is True
