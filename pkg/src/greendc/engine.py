"""Discrete-time simulation loop.

Each interval: observe demand, ask the policy for a decision, apply it,
relieve any host pushed past its physical capacity, then measure power,
response time and batch progress.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .datacenter import (
    ClusterState,
    HostState,
    MicroserviceState,
    Optionality,
    PowerMode,
    VmState,
    host_load,
    load_cluster,
)
from .errors import GreenDCError
from .forecast import (
    RenewableForecast,
    hourly_to_intervals,
    irradiance_to_watts,
    load_irradiance,
    predict_renewable,
    predict_requests,
    train_solar_model,
)
from .policy import (
    BrownoutParams,
    PolicyDecision,
    PowerEstimator,
    PowerPlan,
    ScalingInputs,
    apply_decision,
    best_target,
    efficiency_order,
    gsa_step,
    hs_baseline_step,
)
from .power import CoolingConfig, PowerSample, cooling_power, energy_accounting, total_power
from .scenario import ScenarioConfig
from .workload import (
    BatchJob,
    InteractiveApp,
    InteractiveWorkload,
    load_batch_trace,
    load_interactive_trace,
    response_time,
)

log = logging.getLogger(__name__)


class InvariantViolation(GreenDCError):
    def __init__(self, t: int, message: str):
        self.t = t
        super().__init__(f"interval {t}: {message}")


class InputError(GreenDCError):
    pass


@dataclass
class IntervalRecord:
    t: int
    sample: PowerSample
    demand_units: float
    active_hosts: int
    mean_rt_ms: float
    deactivated_pct: float
    requests_per_sec: float
    branch: str
    saturated: bool
    overloaded_hosts: int
    migrations: int


@dataclass
class MetricsReport:
    brown_kwh: float
    green_kwh: float
    total_kwh: float
    night_brown_kwh: float
    mean_rt_ms: float
    rt_percentiles: dict[str, float]
    deadline_violations: int
    deactivation_pct: float
    active_hosts_series: list[int]
    renewable_share: float
    jobs_completed: int
    jobs_deferred: int
    saturated_intervals: int
    overload_intervals: int
    migrations: int
    horizon: int
    dt: float
    policy: str
    predictor: str
    intervals: list[IntervalRecord] = field(repr=False, default_factory=list)
    events: list[tuple[int, str, str]] = field(repr=False, default_factory=list)

    @property
    def samples(self) -> list[PowerSample]:
        return [r.sample for r in self.intervals]

    def summary(self) -> dict:
        return {
            "policy": self.policy,
            "predictor": self.predictor,
            "horizon": self.horizon,
            "dt": self.dt,
            "brown_kwh": self.brown_kwh,
            "green_kwh": self.green_kwh,
            "total_kwh": self.total_kwh,
            "night_brown_kwh": self.night_brown_kwh,
            "renewable_share": self.renewable_share,
            "mean_rt_ms": self.mean_rt_ms,
            "rt_percentiles": dict(self.rt_percentiles),
            "deadline_violations": self.deadline_violations,
            "deactivation_pct": self.deactivation_pct,
            "jobs_completed": self.jobs_completed,
            "jobs_deferred": self.jobs_deferred,
            "saturated_intervals": self.saturated_intervals,
            "overload_intervals": self.overload_intervals,
            "migrations": self.migrations,
            "active_hosts_series": list(self.active_hosts_series),
        }


def weighted_percentile(values, weights, q: float) -> float:
    """Smallest value whose cumulative weight reaches ``q`` (0-100) of the total."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.size == 0:
        return math.nan
    if weights.sum() <= 0:
        weights = np.ones_like(values)
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order]) / weights.sum()
    idx = int(np.searchsorted(cum, q / 100.0 - 1e-12))
    return float(values[order][min(idx, values.size - 1)])


def build_forecasts(cfg: ScenarioConfig, forecast_mode: str | None = None):
    """Actual and predicted renewable watts per interval for the simulated day.

    The irradiance file's final hours are the simulated day; everything
    before is history (training data for the SVR, yesterday for persistence).
    """
    records = load_irradiance(cfg.path("irradiance"))
    values = np.array([r.irradiance for r in records])
    n_hours = math.ceil(cfg.horizon * cfg.dt / 3600.0)
    if len(values) < n_hours:
        raise InputError(f"irradiance has {len(values)} hours, horizon needs {n_hours}")
    day = values[-n_hours:]
    actual = hourly_to_intervals(irradiance_to_watts(day, cfg.panel_kw, cfg.pv_efficiency), cfg.horizon, cfg.dt)
    actual_fc = RenewableForecast.from_series(actual, cfg.panel_kw)
    mode = forecast_mode or cfg.predictor
    if mode == "oracle":
        return actual, actual_fc, None
    history = records[:-n_hours]
    if mode == "persistence":
        if len(history) < n_hours:
            raise InputError("persistence predictor needs one day of history before the simulated day")
        prev = np.array([r.irradiance for r in history[-n_hours:]])
        pred = hourly_to_intervals(irradiance_to_watts(prev, cfg.panel_kw, cfg.pv_efficiency), cfg.horizon, cfg.dt)
        return actual, RenewableForecast.from_series(pred, cfg.panel_kw), None
    if mode == "svr":
        model, report = train_solar_model(history, split=cfg.train_split, C=cfg.svr_c, epsilon_tube=cfg.svr_epsilon)
        fc = predict_renewable(model, cfg.horizon, cfg.panel_kw, cfg.pv_efficiency, cfg.dt)
        return actual, fc, report
    raise InputError(f"unknown predictor {mode!r}")


class Simulation:
    """One scenario run.  Single-threaded; owns all mutable state."""

    def __init__(
        self,
        cfg: ScenarioConfig,
        rates: np.ndarray | None = None,
        jobs: list[BatchJob] | None = None,
        renewable: np.ndarray | None = None,
        forecast: RenewableForecast | None = None,
        specs=None,
    ):
        self.cfg = cfg
        self.params = BrownoutParams(cfg.tu_up, cfg.tu_low, cfg.epsilon_batch)
        self.cooling = CoolingConfig(cfg.t_sup)
        self.specs = specs if specs is not None else load_cluster(cfg.path("cluster"))
        if rates is None:
            rates = load_interactive_trace(cfg.path("interactive_trace"))
        if len(rates) < cfg.horizon:
            raise InputError(f"interactive trace has {len(rates)} intervals but horizon is {cfg.horizon}")
        self.rejected: list[tuple[str, str]] = []
        if jobs is None:
            jobs, self.rejected = load_batch_trace(cfg.path("batch_trace"), cfg.dt)
        self.jobs = jobs
        self.svr_report = None
        if renewable is None:
            renewable, fc, self.svr_report = build_forecasts(cfg)
            forecast = forecast or fc
        elif forecast is None:
            forecast = RenewableForecast.from_series(renewable, cfg.panel_kw)
        self.renewable = np.asarray(renewable, dtype=float)[: cfg.horizon]
        self.forecast = forecast

        self.workload = InteractiveWorkload("web", np.asarray(rates[: cfg.horizon], dtype=float), cfg.service_rate, cfg.target_rt)
        self.app = InteractiveApp.generate(cfg.n_microservices, cfg.optional_fraction, cfg.microservices_per_vm, seed=cfg.seed)
        self.weights = {m.id: m.weight for m in self.app.microservices}
        self.ms_ids = [m.id for m in self.app.microservices]

        self.cluster = self._initial_cluster()
        self.arrivals: dict[int, list[BatchJob]] = defaultdict(list)
        for job in self.jobs:
            self.arrivals[job.start].append(job)
        self.scheduled: dict[int, list[BatchJob]] = defaultdict(list)
        self.running: dict[str, tuple[BatchJob, int]] = {}  # job id -> (job, intervals done)
        self.completed: dict[str, int] = {}
        self.executed_units = 0.0
        self.events: list[tuple[int, str, str]] = []
        self.records: list[IntervalRecord] = []
        self.deferred_jobs = 0
        self.total_migrations = 0

        estimator = PowerEstimator(self.specs, self.cooling, fill=cfg.tu_up)
        inter_plan = np.array([self.workload.demand(t) for t in range(cfg.horizon)])
        self.plan = PowerPlan(inter_plan, np.zeros(cfg.horizon), np.asarray(self.forecast.series[: cfg.horizon], dtype=float), estimator)
        self._t_observed = -1

    # -- setup ------------------------------------------------------------------

    def _initial_cluster(self) -> ClusterState:
        cluster = ClusterState.from_specs(self.specs, PowerMode.ACTIVE)
        demand0 = self.workload.demand(0)
        by_vm: dict[str, list[MicroserviceState]] = defaultdict(list)
        for m in self.app.microservices:
            opt = Optionality.OPTIONAL if m.optional else Optionality.MANDATORY
            by_vm[m.vm].append(MicroserviceState(m.id, m.weight * demand0, opt, True))
        vms = [VmState(vid, "", by_vm[vid]) for vid in self.app.vm_ids]
        order = [cluster.hosts[i] for i in efficiency_order(self.specs)]
        # first fit decreasing onto the most efficient hosts, filled to tu_up
        for vm in sorted(vms, key=lambda v: -sum(ms.utilization for ms in v.microservices)):
            u = sum(ms.utilization for ms in vm.microservices)
            host = next((h for h in order if (host_load(h) + u) / h.spec.cpu_capacity <= self.params.tu_up + 1e-9), None)
            if host is None:
                host = min(order, key=lambda h: host_load(h) / h.spec.cpu_capacity)
            cluster.place_vm(vm, host.id, allow_overload=True)
        self._power_off_empty(cluster)
        return cluster

    @staticmethod
    def _power_off_empty(cluster: ClusterState) -> None:
        for h in cluster.hosts:
            if h.active and not h.vms and cluster.n_active > 1:
                cluster.set_power_mode(h.id, PowerMode.LOW_POWER)

    # -- placement -------------------------------------------------------------

    def _activate_host(self, util: float = 0.0) -> HostState | None:
        """Power on the most efficient low-power host that can carry ``util``."""
        for i in efficiency_order(self.specs):
            h = self.cluster.hosts[i]
            if not h.active and util <= h.spec.cpu_capacity + 1e-9:
                self.cluster.set_power_mode(h.id, PowerMode.ACTIVE)
                return h
        return None

    def _find_target(self, util: float, exclude=()) -> HostState | None:
        """Minimum power increment among active hosts with room, else power one on."""
        tgt = best_target(self.cluster, util, exclude=exclude, limit=1.0)
        if tgt is None:
            tgt = self._activate_host(util)
        return tgt

    def _place(self, vm: VmState, t: int) -> None:
        u = sum(ms.utilization for ms in vm.microservices if ms.active)
        tgt = self._find_target(u)
        if tgt is None:
            tgt = min(self.cluster.active_hosts(), key=lambda h: host_load(h) / h.spec.cpu_capacity)
            self.events.append((t, "overload_placement", vm.id))
        self.cluster.place_vm(vm, tgt.id, allow_overload=True)

    def _relieve_overloads(self, t: int) -> int:
        """Move VMs off hosts loaded past capacity; power on hosts if needed."""
        moves = 0
        for h in list(self.cluster.hosts):
            if not h.active:
                continue
            for vm in sorted(h.vms, key=lambda v: (sum(m.utilization for m in v.microservices if m.active), v.id)):
                if host_load(h) <= h.spec.cpu_capacity + 1e-9:
                    break
                u = sum(m.utilization for m in vm.microservices if m.active)
                tgt = self._find_target(u, exclude={h.id})
                if tgt is None:
                    continue
                self.cluster.apply_migration(vm.id, tgt.id)
                moves += 1
        return moves

    # -- interval phases ----------------------------------------------------------

    def observe(self, t: int) -> None:
        """Bring demand up to date for interval ``t`` and start due deferred jobs."""
        demand = self.workload.demand(t)
        for vm in self.cluster.vms():
            if vm.kind == "interactive":
                for ms in vm.microservices:
                    ms.utilization = self.weights[ms.id] * demand
        for job in self.scheduled.pop(t, []):
            self._start_job(job, t)
        self._t_observed = t

    def _start_job(self, job: BatchJob, t: int) -> None:
        vm = VmState(f"batch-{job.id}", "", [MicroserviceState(job.id, job.unit_util, Optionality.MANDATORY, True)], kind="batch")
        self._place(vm, t)
        self.running[job.id] = (job, 0)
        self.events.append((t, "start", job.id))

    def facility_power(self) -> float:
        _, _, total = total_power(self.cluster, None, self.cooling, self.cfg.standby_watts)
        return total

    def predicted_requests(self, t: int) -> float:
        lo = max(0, t - self.cfg.request_window + 1)
        return predict_requests(self.workload.arrival_rate_series[lo : t + 1])

    def decide(self, t: int) -> PolicyDecision:
        arrivals = self.arrivals.get(t, [])
        scaling = None
        if t % self.cfg.scaling_cadence == 0:
            scaling = ScalingInputs(self.predicted_requests(t), self.cfg.num_thr, self.cooling, self.cfg.scaling_cadence)
        cfg = self.cfg
        if cfg.policy == "gsa":
            return gsa_step(
                self.cluster, arrivals, self.forecast, self.params, t, self.plan,
                self.facility_power(), scaling, cfg.defer_always, cfg.follow_renewables
            )
        return hs_baseline_step(self.cluster, arrivals, self.params, t, self.plan, scaling)

    def step(self, dec: PolicyDecision, t: int) -> IntervalRecord:
        """Apply ``dec`` at interval ``t`` and measure the outcome."""
        if self._t_observed != t:
            self.observe(t)
        apply_decision(self.cluster, dec)
        for job in self.arrivals.get(t, []):
            begin = dec.deferrals.get(job.id, t)
            job.plan_at(begin)
            if begin == t:
                self._start_job(job, t)
            else:
                self.scheduled[begin].append(job)
                self.deferred_jobs += 1
                self.events.append((t, "defer", job.id))
        moves = len(dec.migrations) + self._relieve_overloads(t)
        self.total_migrations += moves
        self._power_off_empty(self.cluster)
        try:
            self.cluster.check_invariants()
        except GreenDCError as exc:
            raise InvariantViolation(t, str(exc)) from exc
        rec = self._measure(t, dec, moves)
        self._advance_batch(t)
        self.records.append(rec)
        return rec

    def _measure(self, t: int, dec: PolicyDecision, moves: int) -> IntervalRecord:
        cfg = self.cfg
        server, cooling, _ = total_power(self.cluster, None, self.cooling, cfg.standby_watts)
        if moves and cfg.migration_wh > 0:
            # migration energy spread over the interval as extra server draw
            server += moves * cfg.migration_wh * 3600.0 / cfg.dt
            cooling = cooling_power(server, self.cooling)
        sample = PowerSample.from_draw(t, server, cooling, float(self.renewable[t]))

        lam = self.workload.rate(t)
        active_w, alloc = 0.0, 0.0
        inactive = 0
        overloaded = 0
        for h in self.cluster.hosts:
            if not h.active:
                continue
            batch = sum(m.utilization for vm in h.vms if vm.kind == "batch" for m in vm.microservices)
            inter = sum(m.utilization for vm in h.vms if vm.kind == "interactive" for m in vm.microservices if m.active)
            if batch + inter > h.spec.cpu_capacity + 1e-9:
                overloaded += 1
            # batch VMs keep their reservation; interactive VMs share what is left
            share = 1.0 if inter <= 0 else min(1.0, max(h.spec.cpu_capacity - batch, 0.0) / inter)
            for vm in h.vms:
                if vm.kind != "interactive":
                    continue
                for m in vm.microservices:
                    if m.active:
                        active_w += self.weights[m.id]
                        alloc += m.utilization * share
                    else:
                        inactive += 1
        penalty = cfg.rt_penalty_factor * cfg.target_rt
        if active_w <= 0 or alloc <= 0:
            rt = penalty if lam > 0 else 0.0
            saturated = lam > 0
        else:
            rt = response_time(lam, cfg.service_rate / active_w, alloc)
            saturated = math.isinf(rt)
            if saturated:
                rt = penalty
        if saturated:
            self.events.append((t, "saturated", "web"))
        demand = sum(host_load(h) for h in self.cluster.hosts)
        return IntervalRecord(
            t=t,
            sample=sample,
            demand_units=demand,
            active_hosts=self.cluster.n_active,
            mean_rt_ms=rt * 1000.0,
            deactivated_pct=inactive / len(self.ms_ids),
            requests_per_sec=lam,
            branch=dec.branch,
            saturated=saturated,
            overloaded_hosts=overloaded,
            migrations=moves,
        )

    def _advance_batch(self, t: int) -> None:
        for job_id in sorted(self.running):
            job, done = self.running[job_id]
            done += 1
            self.executed_units += job.unit_util
            if done >= job.exec:
                del self.running[job_id]
                self.cluster.remove_vm(f"batch-{job_id}")
                self.completed[job_id] = t + 1
                self.events.append((t + 1, "complete", job_id))
                if t + 1 > job.deadline:
                    self.events.append((t + 1, "deadline_miss", job_id))
            else:
                self.running[job_id] = (job, done)

    # -- driver ---------------------------------------------------------------------

    def run(self) -> MetricsReport:
        for t in range(self.cfg.horizon):
            self.observe(t)
            dec = self.decide(t)
            self.step(dec, t)
        return self.report()

    def report(self) -> MetricsReport:
        cfg = self.cfg
        samples = [r.sample for r in self.records]
        totals = energy_accounting(samples, cfg.dt)
        night = [s for s in samples if s.renewable_watts <= 0]
        night_brown = energy_accounting(night, cfg.dt).brown_kwh if night else 0.0
        rts = [r.mean_rt_ms for r in self.records]
        lams = [r.requests_per_sec for r in self.records]
        weights = np.asarray(lams) if sum(lams) > 0 else np.ones(len(lams))
        mean_rt = float(np.average(rts, weights=weights))
        misses = sum(1 for e in self.events if e[1] == "deadline_miss")
        return MetricsReport(
            brown_kwh=totals.brown_kwh,
            green_kwh=totals.green_kwh,
            total_kwh=totals.total_kwh,
            night_brown_kwh=night_brown,
            mean_rt_ms=mean_rt,
            rt_percentiles={
                "p95": weighted_percentile(rts, weights, 95),
                "p99": weighted_percentile(rts, weights, 99),
            },
            deadline_violations=misses,
            deactivation_pct=float(np.mean([r.deactivated_pct for r in self.records])),
            active_hosts_series=[r.active_hosts for r in self.records],
            renewable_share=totals.green_kwh / totals.total_kwh if totals.total_kwh > 0 else 0.0,
            jobs_completed=len(self.completed),
            jobs_deferred=self.deferred_jobs,
            saturated_intervals=sum(r.saturated for r in self.records),
            overload_intervals=sum(1 for r in self.records if r.overloaded_hosts),
            migrations=self.total_migrations,
            horizon=cfg.horizon,
            dt=cfg.dt,
            policy=cfg.policy,
            predictor=cfg.predictor,
            intervals=list(self.records),
            events=list(self.events),
        )


def run(cfg: ScenarioConfig, **kwargs) -> MetricsReport:
    """Run one scenario end to end."""
    return Simulation(cfg, **kwargs).run()
