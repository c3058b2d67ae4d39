from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tswitch.milp.dcopf import dc_opf
from tswitch.milp.model import PlanningConfig, build_model, solve
from tswitch.network import Bus, DemandProfile, Line, Network
from tswitch.reduction import (
    excluded_candidates,
    monitored_lines,
    plan_switching,
    screen_candidates,
    violation_score,
)
from tswitch.sensitivity import sensitivity_set

from conftest import enumerate_plans, gen, small_instance
from test_milp import relief_triangle


def test_violation_score_cases():
    assert violation_score(50.0, 100.0, 0.5) == 0.0
    assert violation_score(-80.0, 100.0, 0.5) == 30.0
    assert violation_score(0.0, 100.0, 0.5) == -50.0


def step1(net, demand, T=1):
    return [dc_opf(net, net.initial_topology(), demand, t) for t in range(T)]


def test_zero_flows_monitor_nothing():
    net = Network([Bus(1, True), Bus(2)], [Line(1, 1, 2, 5, 10)], [gen(1, 1, 10, 100)])
    demand = DemandProfile([[0, 0]], [1000, 1000])
    assert monitored_lines(step1(net, demand), net, 0.5).sizes() == [0]


def test_alpha_zero_monitors_every_loaded_line():
    net, demand = relief_triangle()
    mll = monitored_lines(step1(net, demand), net, 0.0)
    assert mll.per_hour[0] == frozenset({0, 1, 2})


def test_four_bus_single_heavy_line():
    buses = [Bus(i, i == 1) for i in range(1, 5)]
    lines = [Line(1, 1, 2, 10, 40), Line(2, 2, 3, 10, 100), Line(3, 2, 4, 10, 100)]
    net = Network(buses, lines, [gen(1, 1, 10, 200)])
    demand = DemandProfile([[0, 30, 3, 3]], [1000] * 4)
    s1 = step1(net, demand)
    assert s1[0].f[0] == pytest.approx(36.0)  # 90 % of 40
    assert monitored_lines(s1, net, 0.5).per_hour[0] == frozenset({0})


def test_empty_mll_excludes_only_bridges():
    # triangle with a pendant bus 4
    buses = [Bus(i, i == 1) for i in range(1, 5)]
    lines = [Line(1, 1, 2, 5, 100), Line(2, 2, 3, 5, 100), Line(3, 1, 3, 5, 100), Line(4, 3, 4, 5, 100)]
    net = Network(buses, lines, [gen(1, 1, 10, 200)])
    demand = DemandProfile([[0, 5, 5, 5]], [1000] * 4)
    s1 = step1(net, demand)
    mll = monitored_lines(s1, net, 0.5)
    assert mll.sizes() == [0]
    sens = sensitivity_set(net, net.all_closed(), [], range(4))
    assert excluded_candidates(s1, mll, sens, net) == (frozenset({3}),)


def test_parallel_pair_near_limit_both_excluded():
    net = Network(
        [Bus(1, True), Bus(2)],
        [Line(1, 1, 2, 10, 50), Line(2, 1, 2, 10, 50)],
        [gen(1, 1, 10, 200)],
    )
    demand = DemandProfile([[0, 90]], [1000, 1000])
    s1 = step1(net, demand)
    mll = monitored_lines(s1, net, 0.5)
    assert mll.per_hour[0] == frozenset({0, 1})
    sens = sensitivity_set(net, net.all_closed(), [0, 1], [0, 1])
    assert excluded_candidates(s1, mll, sens, net) == (frozenset({0, 1}),)


def test_decoupled_candidate_never_excluded():
    # two triangles joined by line 7; a loop line in the right triangle has
    # zero LODF onto the loaded left triangle
    buses = [Bus(i, i == 1) for i in range(1, 7)]
    lines = [
        Line(1, 1, 2, 5, 12), Line(2, 2, 3, 5, 100), Line(3, 1, 3, 5, 100),
        Line(4, 4, 5, 5, 100), Line(5, 5, 6, 5, 100), Line(6, 4, 6, 5, 100),
        Line(7, 3, 4, 5, 100),
    ]
    net = Network(buses, lines, [gen(1, 1, 10, 300)])
    demand = DemandProfile([[0, 30, 10, 0, 0, 5]], [1000] * 6)
    s1 = step1(net, demand)
    mll = monitored_lines(s1, net, 0.5)
    assert 0 in mll.per_hour[0]
    sens = sensitivity_set(net, net.all_closed(), mll.union(), range(7))
    for m in mll.union():
        assert abs(sens.lodf[(m, 4)]) <= 1e-12
    ex = excluded_candidates(s1, mll, sens, net)[0]
    assert 4 not in ex and 6 in ex  # line 7 is a bridge


def test_relief_case_keeps_relieving_line():
    net, demand = relief_triangle()
    cfg = PlanningConfig(mip_gap=1e-9)
    out = plan_switching(net, demand, cfg)
    full = solve(build_model(net, demand, cfg))
    assert out.monitored.per_hour[0] == frozenset({0})
    assert out.candidates.updated[0] == frozenset({0, 1})  # opening 1-3 would overload 1-2
    assert out.result.objective == pytest.approx(full.objective)


def test_zero_hour_budget_gives_identity():
    net, demand = relief_triangle()
    out = plan_switching(net, demand, PlanningConfig(H2=0))
    assert out.result.plan.total_switches == 0
    assert out.result.objective == pytest.approx(sum(h.objective for h in out.step1))


def test_excluded_switch_makes_reduced_plan_suboptimal():
    # found with the enumeration oracle: the only useful switches are screened out
    rng = np.random.default_rng(16)
    net, demand, cfg, _ = small_instance(rng, T=1)
    net = Network(net.buses, tuple(replace(l, initial_status=1) for l in net.lines), net.generators)
    cfg = replace(cfg, H1=None, H2=None)
    full = solve(build_model(net, demand, cfg))
    assert full.objective == pytest.approx(enumerate_plans(net, demand, cfg, list(range(net.n_lines))), rel=1e-7)
    out = plan_switching(net, demand, cfg)
    assert len(out.candidates.updated[0]) < net.n_lines
    assert out.result.objective > full.objective * (1 + 1e-6)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), a1=st.floats(0.05, 1.0), a2=st.floats(0.05, 1.0))
def test_alpha_monotonicity(seed, a1, a2):
    lo, hi = sorted((a1, a2))
    net, demand, cfg, _ = small_instance(np.random.default_rng(seed), T=2)
    s1 = step1(net, demand, 2)
    m_lo, m_hi = monitored_lines(s1, net, lo), monitored_lines(s1, net, hi)
    for t in range(2):
        assert m_hi.per_hour[t] <= m_lo.per_hour[t]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_list_invariants_and_ordering(seed):
    net, demand, cfg, _ = small_instance(np.random.default_rng(seed), T=2)
    _, _, _, lists = screen_candidates(net, demand, cfg)
    for t in range(2):
        assert lists.updated[t] <= frozenset(lists.original)
        assert not (lists.updated[t] & lists.excluded[t])
    red = plan_switching(net, demand, cfg).result
    con = solve(build_model(net, demand, cfg)).objective
    cla = solve(build_model(net, demand, replace(cfg, H1=None, H2=None))).objective
    base = sum(h.objective for h in step1(net, demand, 2))
    tol = 1e-7 * abs(base) + 1e-6
    assert cla <= con + tol <= red.objective + 2 * tol
    assert red.objective <= base + tol
    assert red.plan.budget_violations(cfg) == 0
    again = plan_switching(net, demand, cfg)
    assert again.candidates == screen_candidates(net, demand, cfg)[3]


def test_screening_handles_initially_islanded_topology():
    # bus 4 hangs off an initially open line; the rest is the relief triangle
    net, demand = relief_triangle()
    buses = net.buses + (Bus(4),)
    lines = net.lines + (Line(4, 3, 4, 10.0, 100.0, initial_status=0),)
    net = Network(buses, lines, net.generators)
    demand = DemandProfile([[0.0, 0.0, 80.0, 0.0]], [1000.0] * 4)
    step, mll, sens, lists = screen_candidates(net, demand, PlanningConfig())
    assert mll.per_hour[0] == frozenset({0})
    assert 3 in lists.updated[0]  # open lines are never screened out
    assert lists.updated[0] == frozenset({0, 1, 3})
    assert sens.is_bridge(2) is False
