from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import HALF, check_layered, preemptive_instances
from mcipsched import mcip, oracle, preemptive
from mcipsched.model import (PREEMPTIVE, Instance, Job, PreemptiveSchedule, makespan,
                             validate)
from mcipsched.preemptive import BST, MST, SST

F = Fraction
T32 = F(32)     # eps = delta = 1/2: mu T = 4, delta T = 16, eps T = 16, width 8, unit 2


def inst(m, jobs):
    return Instance(PREEMPTIVE, m, tuple(Job(F(p), F(s)) for p, s in jobs))


def test_delta_candidates():
    assert preemptive.delta_candidates(HALF) == [HALF**k for k in range(1, 9)]


def test_empty_medium_band_picks_largest_delta():
    assert preemptive.choose_delta(inst(1, [(5, 16), (3, 20)]), T32, HALF) == HALF


def test_medium_mass_boundary_is_admissible():
    i = inst(1, [(12, 4)])                  # mass 16 = m eps T in [4, 16)
    assert preemptive.medium_mass(i, T32, HALF, HALF) == 16
    assert preemptive.choose_delta(i, T32, HALF) == HALF
    heavier = inst(1, [(13, 4)])
    # delta = 1/4 has band [2, 8), still holding the setup 4
    assert preemptive.choose_delta(heavier, T32, HALF) == HALF**3


def test_every_band_heavy_rejects():
    T = F(1024)
    # setups 2^(10-i) for i = 2..10: each band [eps^(k+2) T, eps^k T) holds two of them
    i = inst(1, [(513, 2 ** (10 - e)) for e in range(2, 11)])
    assert preemptive.choose_delta(i, T, HALF) is None
    # the whole thing does not even fit below T, so the reject is harmless here
    out = preemptive.solve(i, T, HALF)
    assert not out.accepted


def test_big_setup_rounding():
    reduced, tr = preemptive.simplify(inst(1, [(9, 17)]), T32, HALF, HALF)
    assert (tr.width, tr.unit) == (8, 2)
    assert reduced.jobs == (Job(F(16), F(24)),)
    assert tr.kinds == (BST,)


def test_small_setup_big_job_loses_setup():
    reduced, tr = preemptive.simplify(inst(1, [(20, 3)]), T32, HALF, HALF)
    assert preemptive.band(Job(F(20), F(3)), T32, HALF, HALF) == SST
    assert tr.sst_big == (0,) and reduced.jobs == (Job(F(24), F(0)),)


def test_small_small_setup_job_removed():
    reduced, tr = preemptive.simplify(inst(1, [(2, 1), (20, 20)]), T32, HALF, HALF)
    assert tr.sst_small == (0,) and tr.L == 3 and tr.kept == (1,)


def test_medium_setup_rounds_to_finer_grid():
    reduced, tr = preemptive.simplify(inst(1, [(20, 5)]), T32, HALF, HALF)
    assert tr.kinds == (MST,) and reduced.jobs == (Job(F(24), F(6)),)


def test_big_setup_module_count():
    # one bst job with setup 2 widths and one width of work, 10 layers
    i = inst(1, [(8, 16)])
    reduced, tr = preemptive.simplify(i, T32, HALF, HALF)
    assert tr.layers == 10
    spec = preemptive.build_mcip(reduced, tr)
    # a module spans 3 layers and has to end by layer 10: starts 0..7
    assert len(spec.modules) == 8
    assert [m.start for m in spec.modules] == list(range(8))
    assert all(len(m.layers) == 3 for m in spec.modules)


def test_medium_modules_end_on_layer_boundaries():
    reduced, tr = preemptive.simplify(inst(2, [(20, 5), (17, 7)]), T32, HALF, HALF)
    spec = preemptive.build_mcip(reduced, tr)
    X = tr.width / tr.unit
    for mod in spec.modules:
        tag = mod.tags[0]
        assert (tag.setup + tag.piece + tag.buffer) % X == 0
        assert mod.size == tag.setup + tag.piece + tag.buffer
        assert tag.layer * X + mod.size <= tr.t_bar / tr.unit


def test_configurations_never_share_a_layer():
    reduced, tr = preemptive.simplify(inst(1, [(8, 16), (8, 20)]), T32, HALF, HALF)
    spec = preemptive.build_mcip(reduced, tr)
    for config in spec.configurations():
        used = Counter(l for g, c in enumerate(config) if c for l in spec.groups[g].layers)
        assert all(v == 1 for v in used.values())


def solve_at(i, T, eps=HALF):
    out = preemptive.solve(i, T, eps)
    assert out.accepted
    assert validate(i, out.schedule) is None
    return out


def test_single_job_block():
    i = inst(1, [(16, 16)])
    out = solve_at(i, T32)
    layered = out.transcript.layered
    assert len(layered.parts) == 1
    assert layered.parts[0].start % out.transcript.width == 0


def test_two_jobs_share_no_layer_on_one_machine():
    i = inst(1, [(8, 16), (8, 16)])
    out = solve_at(i, T32)
    starts = sorted(pt.start for pt in out.transcript.layered.parts)
    assert starts[1] - starts[0] >= 24


def test_no_removed_jobs_only_unrounds():
    i = inst(2, [(9, 17), (13, 18)])
    out = solve_at(i, T32)
    tr = out.transcript
    assert not (tr.sst_small or tr.mst_small or tr.sst_big)
    assert makespan(i, out.schedule) <= makespan(tr.reduced, tr.layered)


def test_small_job_in_one_free_slot():
    # one bst job, one small small-setup job of exactly one slot (s + p = 8)
    i = inst(1, [(16, 16), (6, 2)])
    out = solve_at(i, T32)
    tr = out.transcript
    assert tr.sst_small == (1,)
    assert len([pt for pt in out.schedule.parts if pt.job == 1]) == 1
    gamma = tr.eps * tr.delta
    assert makespan(i, out.schedule) <= (1 + tr.mu / gamma) * tr.t_bar + (tr.mu + tr.eps) * T32


def test_medium_small_job_split_over_two_machines():
    # three medium small jobs of s + p = 10 each; eps T = 16 per machine in the band
    i = inst(3, [(6, 4), (6, 4), (6, 4)])
    out = solve_at(i, T32)
    tr = out.transcript
    assert tr.mst_small == (0, 1, 2)
    machines = Counter(pt.machine for pt in out.schedule.parts)
    assert len(machines) >= 2
    assert makespan(i, out.schedule) <= tr.t_prime + (tr.eps + tr.delta) * T32


def test_one_job_per_machine_generous_T():
    i = inst(3, [(5, 3), (4, 4), (2, 6)])
    out = solve_at(i, 40)
    assert makespan(i, out.schedule) <= out.transcript.t_breve


def test_reject_below_longest_job():
    i = inst(3, [(5, 3), (4, 4)])
    assert not preemptive.solve(i, 7, HALF).accepted


@pytest.mark.parametrize("k", range(2, 7))
def test_breve_bound_holds_for_every_candidate(k):
    eps = F(1, k)
    for delta in preemptive.delta_candidates(eps):
        _, t_breve = preemptive.bounds(F(1), eps, delta)
        assert t_breve <= 1 + 9 * eps


@given(preemptive_instances(max_jobs=5, max_machines=3), st.sampled_from([1, F(5, 4), 2]))
def test_random_instances_within_bound(i, stretch):
    lb = oracle.lower_bound(i)
    T = lb * stretch
    out = preemptive.solve(i, T, HALF)
    if not out.accepted:
        return
    tr = out.transcript
    assert validate(i, out.schedule) is None
    ms = makespan(i, out.schedule)
    assert lb <= ms <= tr.t_breve <= (1 + 9 * HALF) * T
    assert preemptive.medium_mass(i, T, HALF, tr.delta) <= min(i.machines, i.n) * HALF * T
    check_layered(tr)


def test_empty_reduced_instance():
    i = inst(2, [(2, 1), (3, 1)])
    out = solve_at(i, 16)
    assert out.transcript.layered == PreemptiveSchedule()
