import math

import numpy as np
import pytest

from greendc.workload import (
    BatchJob,
    InfeasibleTarget,
    InteractiveApp,
    InteractiveWorkload,
    NegativeRate,
    ParseError,
    ZeroAllocation,
    batch_amount_update,
    interactive_demand,
    load_batch_trace,
    load_interactive_trace,
    response_time,
    seconds_to_intervals,
    total_demand,
)


def test_interactive_demand_examples():
    assert interactive_demand(100, 2, 1) == pytest.approx(100.0)
    assert interactive_demand(0, 2, 1) == 0.0
    with pytest.raises(InfeasibleTarget):
        interactive_demand(10, 1, 1)


def test_response_time_examples():
    assert response_time(100, 2, 100) == pytest.approx(1.0)
    assert response_time(100, 2, 1e12) == pytest.approx(0.5)
    assert response_time(100, 2, 50) == math.inf
    with pytest.raises(ZeroAllocation):
        response_time(1, 2, 0)


def test_batch_amount_update_examples():
    assert batch_amount_update(8, 0.5, 10, 0.3) == pytest.approx(11.0)
    assert batch_amount_update(8, 0.0, 10, 0.0) == 10.0
    assert batch_amount_update(8, 0.25, 10, 1.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        batch_amount_update(8, 1.5, 10, 0.0)


def test_total_demand_additivity():
    w = InteractiveWorkload("w", np.array([100.0]), 2.0, 1.0)
    j = BatchJob("j", 0, 2, 5, 27.0)
    assert total_demand([], [], 0).total_units == 0.0
    assert total_demand([w], [j], 0).total_units == pytest.approx(127.0)
    j.plan_at(2)
    d = total_demand([w], [j], 0)
    assert d.batch_units == 0.0 and d.total_units == pytest.approx(100.0)
    assert total_demand([w], [j], 0).t == 0


def test_deferral_moves_work_in_time():
    j = BatchJob("j", 3, 4, 20, 0.5)
    before = [j.amount(t) for t in range(20)]
    j.plan_at(8)
    after = [j.amount(t) for t in range(20)]
    assert sum(before) == sum(after) == 4
    assert j.amount(3) == 0.0 and j.amount(8) == 1.0
    assert j.latest_start == 16


def test_infeasible_job_rejected_at_construction():
    with pytest.raises(Exception):
        BatchJob("j", 10, 5, 12, 0.3)


def test_interactive_trace_parsing(tmp_path):
    p = tmp_path / "i.csv"
    rows = "\n".join(f"{i},{150 + (i % 150)}" for i in range(288))
    p.write_text("interval,requests_per_sec\n" + rows + "\n")
    rates = load_interactive_trace(p)
    assert len(rates) == 288 and rates.min() >= 150 and rates.max() <= 300

    empty = tmp_path / "e.csv"
    empty.write_text("")
    with pytest.raises(ParseError):
        load_interactive_trace(empty)

    neg = tmp_path / "n.csv"
    neg.write_text("interval,requests_per_sec\n0,10\n1,-5\n")
    with pytest.raises(NegativeRate) as exc:
        load_interactive_trace(neg)
    assert exc.value.row == 3


def test_batch_trace_units_and_rejection(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text(
        "job_id,start_s,exec_s,deadline_s,util_units\n"
        "ok,0,3600,21600,0.3\n"
        "late,0,3600,1800,0.3\n"
    )
    jobs, rejected = load_batch_trace(p, 300.0)
    assert [j.id for j in jobs] == ["ok"]
    assert jobs[0].exec == 12 and jobs[0].deadline == 72
    assert rejected[0][0] == "late"


def test_seconds_to_intervals_is_conservative():
    assert seconds_to_intervals(301, 301, 899, 300) == (2, 2, 2)
    assert seconds_to_intervals(300, 300, 900, 300) == (1, 1, 3)


def test_bundled_batch_deadlines_feasible():
    from greendc.scenario import bundled_scenario, load_scenario

    cfg = load_scenario(bundled_scenario("reference"))
    jobs, rejected = load_batch_trace(cfg.path("batch_trace"), cfg.dt)
    assert len(jobs) > 40
    assert all(j.start + j.exec <= j.deadline for j in jobs)


def test_app_layout():
    app = InteractiveApp.generate(20, 0.3, 2, seed=0)
    assert len(app.microservices) == 20
    assert sum(m.optional for m in app.microservices) == 6
    assert sum(m.weight for m in app.microservices) == pytest.approx(1.0)
    assert len(app.vm_ids) == 10
