import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from greendc.datacenter import PowerMode, host_load
from greendc.forecast import RenewableForecast, predict_requests
from greendc.policy import (
    BrownoutParams,
    PowerPlan,
    apply_to_copy,
    brute_force_sublist_error,
    case_a_dimmer,
    case_b_dimmer,
    consolidate_vms,
    defer_batch,
    select_sublist,
)
from greendc.power import CoolingConfig, PowerSample, host_power, total_power
from greendc.workload import BatchJob, batch_amount_update, interactive_demand, response_time

from conftest import cluster, host, vm

fractions = st.floats(0.0, 1.0)
utils = st.floats(0.001, 0.5)


@given(st.floats(0.0, 1e4), st.floats(0.0, 1e4), st.floats(0.0, 1e4))
def test_power_split_identities(server, cooling, renewable):
    s = PowerSample.from_draw(0, server, cooling, renewable)
    assert s.brown_watts >= 0 and s.green_used_watts >= 0
    assert s.green_used_watts <= renewable
    assert s.brown_watts + s.green_used_watts == s.total_watts


@given(st.floats(0.01, 10), st.floats(0.001, 500), st.floats(0.0, 1e4))
def test_demand_then_response_time_roundtrip(rt, slack, lam):
    assume(lam > 0)
    mu = 1.0 / rt + slack
    assert math.isclose(response_time(lam, mu, interactive_demand(lam, mu, rt)), rt, rel_tol=1e-9)


@given(st.floats(0.01, 10), st.floats(0.001, 50), st.floats(0.1, 1e3), st.floats(1.0, 10.0))
def test_more_allocation_never_slower(rt, slack, lam, factor):
    mu = 1.0 / rt + slack
    a = interactive_demand(lam, mu, rt)
    assert response_time(lam, mu, a * factor) <= response_time(lam, mu, a) + 1e-12


@given(st.lists(utils, max_size=12), st.floats(0.0, 3.0))
def test_selection_matches_brute_force(us, target):
    chosen = select_sublist([(f"m{i}", u) for i, u in enumerate(us)], target)
    err = abs(target - sum(u for _, u in chosen))
    assert math.isclose(err, brute_force_sublist_error(us, target), abs_tol=1e-12)


@given(st.integers(0, 50), st.integers(1, 50))
def test_case_a_in_unit_interval(n_o, n):
    assume(n_o <= n)
    assert 0.0 <= case_a_dimmer(n_o, n) <= 1.0


@given(st.floats(0, 1e4), st.floats(0, 1e4), st.floats(0, 0.99))
def test_case_b_in_unit_interval(r, p, eps):
    assert 0.0 <= case_b_dimmer(r, p, eps) <= 1.0


@given(st.floats(0, 100), fractions, st.floats(0, 100), fractions)
def test_batch_update_bounds(b_prev, g_prev, b_orig, g_now):
    b = batch_amount_update(b_prev, g_prev, b_orig, g_now)
    assert -1e-9 <= b <= b_prev + b_orig + 1e-9


@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=24))
def test_request_prediction_is_convex_combination(window):
    p = predict_requests(window)
    assert min(window) - 1e-6 <= p <= max(window) + 1e-6


@given(st.lists(st.floats(0.0, 0.5), min_size=1, max_size=6), st.floats(0.0, 1.0))
def test_host_power_bounded_and_monotone_in_retention(loads, retention):
    h = host("x", *[vm(u) for u in loads], idle=60.0, full=150.0)
    p = host_power(h, retention)
    assert 60.0 <= p <= 150.0
    assert p <= host_power(h, 1.0) + 1e-9


@st.composite
def clusters(draw):
    n = draw(st.integers(2, 6))
    hosts = []
    for i in range(n):
        vms = [vm(u) for u in draw(st.lists(st.floats(0.02, 0.4), max_size=3))]
        if sum(vm.microservices[0].utilization for vm in vms) > 1.0:
            vms = vms[:1]
        idle = draw(st.floats(20.0, 160.0))
        hosts.append(host(f"h{i}", *vms, idle=idle, full=idle + draw(st.floats(10.0, 100.0))))
    return cluster(*hosts)


@settings(max_examples=60, deadline=None)
@given(clusters())
def test_consolidation_saves_power_and_respects_limits(c):
    params = BrownoutParams(0.8, 0.2, 0.27)
    cool = CoolingConfig(25.0)
    dec = consolidate_vms(c, params)
    after = apply_to_copy(c, dec)
    after.check_invariants()
    assert after.total_load() == c.total_load() or math.isclose(after.total_load(), c.total_load())
    assert total_power(after, None, cool)[2] <= total_power(c, None, cool)[2] + 1e-9
    moved_to = {tgt for _, tgt in dec.migrations}
    for hid in moved_to:
        assert host_load(after.host(hid)) / after.host(hid).spec.cpu_capacity <= params.tu_up + 1e-9
    for hid, mode in dec.power_changes:
        assert mode is PowerMode.LOW_POWER and not after.host(hid).vms


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.tuples(st.integers(0, 200), st.integers(1, 40), st.integers(0, 80), st.floats(0.05, 1.0)),
             min_size=1, max_size=8),
    st.integers(0, 23), st.integers(1, 12), st.floats(0.0, 3000.0), st.floats(0.0, 8.0),
)
def test_deferral_never_passes_latest_start(specs, rise_h, span_h, watts, base):
    n = 288
    s = np.zeros(n)
    s[rise_h * 12 : min(n, (rise_h + span_h) * 12)] = watts
    fc = RenewableForecast.from_series(s, 1.63)
    plan = PowerPlan(np.full(n, base), np.zeros(n), s, lambda d: 120.0 * d)
    t = min(sp[0] for sp in specs)
    jobs = [BatchJob(f"j{i}", t, e, min(t + e + slack, n), u)
            for i, (_, e, slack, u) in enumerate(specs) if t + e <= n]
    assume(jobs)
    out = defer_batch(jobs, fc, plan, t)
    for j in jobs:
        assert t <= out[j.id] <= max(t, j.latest_start)
        assert out[j.id] + j.exec <= j.deadline
