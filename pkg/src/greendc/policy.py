"""Scheduling policies.

Every public function here is a pure decision function: it reads the cluster
(working on private copies where it needs to try things out) and returns what
should change.  The engine is the only place state is mutated.

GSA (green-aware, self-adaptive) per interval:

* some host above ``tu_up``  -> brownout of optional microservices plus
  deferral of arriving batch jobs toward predicted solar surplus;
* average active-host utilization below ``tu_low`` -> VM consolidation plus
  host scaling;
* otherwise -> normal mode.

While solar output is available, scaling intervals also run
``follow_renewables``, which adds hosts during a predicted surplus and
drains them when supply falls short.

HS is the green-unaware baseline: consolidation plus host scaling only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .datacenter import (
    ClusterState,
    HostSpec,
    HostState,
    PowerMode,
    host_load,
    host_utilization,
    vm_utilization,
)
from .errors import GreenDCError
from .forecast import RenewableForecast
from .power import CoolingConfig, cooling_power, host_power
from .workload import BatchJob

_EPS = 1e-9


class NoHostsAvailable(GreenDCError):
    pass


@dataclass(frozen=True)
class BrownoutParams:
    tu_up: float = 0.8
    tu_low: float = 0.2
    epsilon_batch: float = 0.27

    def __post_init__(self):
        if not 0 < self.tu_low < self.tu_up < 1:
            raise ValueError(f"need 0 < tu_low < tu_up < 1, got tu_low={self.tu_low}, tu_up={self.tu_up}")
        if not 0 <= self.epsilon_batch < 1:
            raise ValueError(f"epsilon_batch must be in [0, 1), got {self.epsilon_batch}")


@dataclass
class PolicyDecision:
    deactivations: list[tuple[str, str]] = field(default_factory=list)  # (vm_id, ms_id)
    reactivations: list[tuple[str, str]] = field(default_factory=list)
    deferrals: dict[str, int] = field(default_factory=dict)  # job id -> deferred start interval
    migrations: list[tuple[str, str]] = field(default_factory=list)  # (vm_id, target host)
    power_changes: list[tuple[str, PowerMode]] = field(default_factory=list)
    dimmer: float | None = None
    branch: str = "normal"
    flags: list[str] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not (
            self.deactivations or self.reactivations or self.deferrals or self.migrations or self.power_changes
        )

    def merge(self, other: "PolicyDecision") -> "PolicyDecision":
        self.deactivations += other.deactivations
        self.reactivations += other.reactivations
        self.deferrals.update(other.deferrals)
        self.migrations += other.migrations
        # the later decision wins for any host both of them switch
        later = {hid for hid, _ in other.power_changes}
        self.power_changes = [pc for pc in self.power_changes if pc[0] not in later] + other.power_changes
        if other.dimmer is not None:
            self.dimmer = other.dimmer
        self.flags += other.flags
        return self


# -- placement primitives ---------------------------------------------------


def _power_with_load(host: HostState, load: float, has_vms: bool) -> float:
    if not has_vms:
        return 0.0
    util = min(load / host.spec.cpu_capacity, 1.0)
    return host.spec.idle_watts + util * host.spec.dynamic_watts


def power_increment(host: HostState, util: float) -> float:
    """Server-power increase from adding ``util`` units of load to ``host``."""
    load = host_load(host)
    return _power_with_load(host, load + util, True) - _power_with_load(host, load, bool(host.vms))


def feasible_targets(
    cluster: ClusterState, util: float, exclude: Iterable[str] = (), limit: float = 1.0, occupied_only: bool = False
):
    excl = set(exclude)
    for h in cluster.hosts:
        if not h.active or h.id in excl or (occupied_only and not h.vms):
            continue
        if (host_load(h) + util) / h.spec.cpu_capacity <= limit + _EPS:
            yield h


def best_target(
    cluster: ClusterState, util: float, exclude: Iterable[str] = (), limit: float = 1.0, occupied_only: bool = False
) -> HostState | None:
    """Active host with the smallest power increment that stays within ``limit``.

    Ties go to the host listed first in the cluster description.
    """
    best, best_inc = None, math.inf
    for h in feasible_targets(cluster, util, exclude, limit, occupied_only):
        inc = power_increment(h, util)
        if inc < best_inc - 1e-12:
            best, best_inc = h, inc
    return best


def activation_order(hosts: Iterable[HostState]) -> list[HostState]:
    """Low-power hosts ordered for scale-out: smallest idle draw first."""
    idx = {}
    hosts = list(hosts)
    for i, h in enumerate(hosts):
        idx[h.id] = i
    return sorted((h for h in hosts if not h.active), key=lambda h: (h.spec.idle_watts, idx[h.id]))


def efficiency_order(specs: Sequence[HostSpec]) -> list[int]:
    """Host indices ordered by full-load watts per capacity unit, most efficient first."""
    return sorted(range(len(specs)), key=lambda i: (specs[i].full_watts / specs[i].cpu_capacity, specs[i].idle_watts, i))


# -- microservice selection -------------------------------------------------


def select_sublist(candidates: Sequence[tuple[str, float]], target: float) -> list[tuple[str, float]]:
    """Contiguous run of the utilization-sorted candidates whose sum is closest to ``target``.

    The empty run is allowed.  Ties prefer fewer items, then the earlier run.
    """
    items = sorted(candidates, key=lambda c: (c[1], c[0]))
    prefix = [0.0]
    for _, u in items:
        prefix.append(prefix[-1] + u)
    best = (abs(target), 0, 0, 0)  # (error, length, start, end)
    k = len(items)
    for i in range(k):
        for j in range(i + 1, k + 1):
            err = abs(target - (prefix[j] - prefix[i]))
            key = (err, j - i, i, j)
            if err < best[0] - 1e-12 or (abs(err - best[0]) <= 1e-12 and key[1:] < best[1:]):
                best = key
    _, _, i, j = best
    return items[i:j]


def brute_force_sublist_error(utils: Sequence[float], target: float) -> float:
    """Minimum |target - sum| over every contiguous run of the sorted utilizations."""
    s = sorted(utils)
    best = abs(target)
    for i in range(len(s)):
        for j in range(i + 1, len(s) + 1):
            best = min(best, abs(target - sum(s[i:j])))
    return best


# -- brownout -----------------------------------------------------------------


def overloaded(cluster: ClusterState, tu_up: float) -> list[HostState]:
    return [h for h in cluster.hosts if h.active and host_utilization(h) > tu_up + _EPS]


def case_a_dimmer(n_overloaded: int, n_hosts: int) -> float:
    """Reduction fraction when no renewables are available."""
    return math.sqrt(n_overloaded / n_hosts)


def case_b_dimmer(renewable_w: float, power_w: float, epsilon_batch: float) -> float:
    """Retention ratio when renewables are available but short; clamped to [0, 1]."""
    if power_w <= 0:
        return 1.0
    return min(1.0, max(0.0, (1.0 / (1.0 - epsilon_batch)) * math.sqrt(max(renewable_w, 0.0) / power_w)))


def _shed(host: HostState, target: float) -> list[tuple[str, str]]:
    cands = {}
    for vm in host.vms:
        for ms in vm.microservices:
            if ms.optional and ms.active:
                cands[ms.id] = (vm.id, ms.utilization)
    chosen = select_sublist([(k, u) for k, (_, u) in cands.items()], target)
    return [(cands[k][0], k) for k, _ in chosen]


def brownout_interactive(
    cluster: ClusterState,
    forecast: RenewableForecast,
    params: BrownoutParams,
    t: int,
    power_now: float,
) -> PolicyDecision:
    """Choose optional microservices to deactivate in interval ``t``.

    ``power_now`` is the facility draw (servers plus cooling) of the current
    state, compared against the predicted renewable supply.
    """
    dec = PolicyDecision(branch="brownout")
    over = overloaded(cluster, params.tu_up)
    n_o = len(over)
    renewable = forecast.at(t)
    outside = not forecast.available or t < forecast.start or t > forecast.end
    if outside:
        theta = case_a_dimmer(n_o, cluster.n)
        dec.dimmer = theta
        for h in over:
            dec.deactivations += _shed(h, theta * host_load(h))
    elif renewable < power_now:
        theta = case_b_dimmer(renewable, power_now, params.epsilon_batch)
        dec.dimmer = theta
        for h in cluster.active_hosts():
            dec.deactivations += _shed(h, (1.0 - theta) * host_load(h))
    else:
        dec.dimmer = 1.0
        dec.reactivations = [
            (vm.id, ms.id) for vm in cluster.vms() for ms in vm.microservices if ms.optional and not ms.active
        ]
    return dec


def reactivate_with_headroom(cluster: ClusterState, tu_up: float) -> list[tuple[str, str]]:
    """Inactive optional microservices that can come back without pushing their host over ``tu_up``.

    Smallest first, per host.
    """
    out = []
    for h in cluster.active_hosts():
        load = host_load(h)
        cap = h.spec.cpu_capacity
        inactive = sorted(
            ((ms.utilization, ms.id, vm.id) for vm in h.vms for ms in vm.microservices if ms.optional and not ms.active)
        )
        for u, ms_id, vm_id in inactive:
            if (load + u) / cap <= tu_up + _EPS:
                load += u
                out.append((vm_id, ms_id))
    return out


# -- batch deferral -----------------------------------------------------------


class PowerEstimator:
    """Maps a predicted CPU demand to a predicted facility draw.

    Demand is packed onto hosts in a fixed order (most efficient first), each
    filled to ``fill`` of capacity before the next one is used.
    """

    def __init__(self, specs: Sequence[HostSpec], cooling: CoolingConfig, fill: float = 0.8):
        order = efficiency_order(specs)
        self.specs = [specs[i] for i in order]
        self.cooling = cooling
        self.fill = fill

    def server_watts(self, demand: float) -> float:
        demand = max(demand, 0.0)
        if demand <= _EPS:
            return 0.0
        loads = [0.0] * len(self.specs)
        remaining = demand
        # fill every host to the budget first; any excess then tops hosts up to capacity
        for level in (self.fill, 1.0):
            for i, s in enumerate(self.specs):
                if remaining <= _EPS:
                    break
                take = min(s.cpu_capacity * level - loads[i], remaining)
                loads[i] += take
                remaining -= take
        return sum(
            s.idle_watts + min(load / s.cpu_capacity, 1.0) * s.dynamic_watts
            for s, load in zip(self.specs, loads)
            if load > _EPS
        )

    def __call__(self, demand: float) -> float:
        server = self.server_watts(demand)
        return server + cooling_power(server, self.cooling)


@dataclass
class PowerPlan:
    """Predicted demand per interval used when placing deferred work."""

    interactive: np.ndarray
    batch: np.ndarray
    renewable: np.ndarray
    estimator: Callable[[float], float]

    def demand(self, t: int) -> float:
        return float(self.interactive[t] + self.batch[t])

    def power(self, t: int, extra: float = 0.0) -> float:
        return self.estimator(self.demand(t) + extra)

    def surplus(self, t: int, extra: float = 0.0) -> bool:
        return float(self.renewable[t]) > self.power(t, extra)

    def commit(self, begin: int, exec_: int, util: float) -> None:
        self.batch[begin : begin + exec_] += util


def defer_batch(
    jobs: Sequence[BatchJob],
    forecast: RenewableForecast,
    plan: PowerPlan,
    t: int,
    horizon: int | None = None,
) -> dict[str, int]:
    """Pick a start interval for each job arriving at ``t``.

    Returns ``job_id -> start``; a start equal to ``t`` means run now.  The
    plan is updated in place with each commitment so later jobs see earlier
    ones.  Every chosen start is no later than the job's latest feasible
    start, so a deferral can never cost a deadline.
    """
    horizon = len(plan.batch) if horizon is None else horizon
    out = {}
    for job in sorted(jobs, key=lambda j: (j.latest_start, j.id)):
        latest = min(job.latest_start, horizon - job.exec)
        begin = t
        if forecast.available and latest > t:
            if t < forecast.start:
                if job.deadline >= forecast.start:
                    begin = _first_surplus(plan, job, max(forecast.start, t + 1), latest, t)
            elif t <= forecast.end:
                if not plan.surplus(t, job.unit_util):
                    begin = _first_surplus(plan, job, t + 1, latest, t)
        begin = max(begin, t)
        plan.commit(begin, job.exec, job.unit_util)
        out[job.id] = begin
    return out


def _first_surplus(plan: PowerPlan, job: BatchJob, lo: int, hi: int, fallback: int) -> int:
    for td in range(lo, hi + 1):
        if plan.surplus(td, job.unit_util):
            return td
    return fallback


# -- consolidation and host scaling -----------------------------------------


def consolidate_vms(cluster: ClusterState, params: BrownoutParams) -> PolicyDecision:
    """Drain underloaded hosts with MBFD placement.

    Hosts below ``tu_low`` are visited least-loaded first.  Their VMs, largest
    first, go to the active host with the smallest power increment that stays
    within ``tu_up``.  A host is only drained when all of its VMs find a
    target; it is then switched to low power.
    """
    work = cluster.copy()
    dec = PolicyDecision(branch="consolidate")
    drained: set[str] = set()
    sources = sorted(
        (h for h in work.hosts if h.active and h.vms and host_utilization(h) < params.tu_low),
        key=lambda h: (host_utilization(h), h.id),
    )
    for src in sources:
        if src.id in drained or not src.vms or host_utilization(src) >= params.tu_low:
            continue
        if work.n_active - len(drained) <= 1:
            break
        trial = work.copy()
        moves = []
        vms = sorted(trial.host(src.id).vms, key=lambda v: (-vm_utilization(v), v.id))
        for vm in vms:
            u = vm_utilization(vm)
            # an empty target would just move the idle draw elsewhere
            tgt = best_target(trial, u, exclude=drained | {src.id}, limit=params.tu_up, occupied_only=True)
            if tgt is None:
                moves = None
                break
            trial.apply_migration(vm.id, tgt.id)
            moves.append((vm.id, tgt.id))
        if moves is None:
            continue
        work = trial
        dec.migrations += moves
        drained.add(src.id)
        dec.power_changes.append((src.id, PowerMode.LOW_POWER))
    return dec


def _rebalance_onto(work: ClusterState, new_ids: Sequence[str], tu_up: float) -> list[tuple[str, str]]:
    """Spread load onto freshly activated hosts until they reach the mean level."""
    moves = []
    for hid in new_ids:
        new = work.host(hid)
        active = work.active_hosts()
        level = work.total_load() / sum(h.spec.cpu_capacity for h in active)
        cap_level = min(tu_up, level)
        donors = sorted(
            (h for h in active if h.id != hid and h.id not in new_ids and host_utilization(h) > level + _EPS),
            key=lambda h: (-host_utilization(h), h.id),
        )
        for src in donors:
            for vm in sorted(src.vms, key=lambda v: (vm_utilization(v), v.id)):
                u = vm_utilization(vm)
                if host_utilization(src) <= level + _EPS:
                    break
                if (host_load(new) + u) / new.spec.cpu_capacity > cap_level + _EPS:
                    continue
                work.apply_migration(vm.id, hid)
                moves.append((vm.id, hid))
    return moves


def hosts_needed(predicted_requests: float, num_thr: float) -> int:
    if num_thr <= 0:
        raise ValueError("num_thr must be positive")
    return max(1, math.ceil(predicted_requests / num_thr - 1e-9))


def scale_hosts(
    cluster: ClusterState,
    predicted_requests: float,
    num_thr: float,
    forecast: RenewableForecast | None,
    t: int,
    params: BrownoutParams,
    cooling: CoolingConfig,
    green_aware: bool = True,
    window: int = 1,
) -> PolicyDecision:
    """Match the active host count to predicted request volume.

    When hosts are added and ``green_aware`` is set, keep adding hosts while
    predicted facility power stays at or below the mean predicted renewable
    supply over the next ``window`` intervals.  Newly active hosts receive
    VMs from the most loaded hosts.
    """
    dec = PolicyDecision(branch="scale")
    work = cluster.copy()
    n_a = hosts_needed(predicted_requests, num_thr)
    delta = n_a - work.n_active
    if delta >= 0:
        pool = activation_order(work.hosts)
        if delta > len(pool):
            dec.flags.append(f"NoHostsAvailable: need {delta} more hosts, {len(pool)} in low power")
            delta = len(pool)
        added = []
        for h in pool[:delta]:
            work.set_power_mode(h.id, PowerMode.ACTIVE)
            added.append(h.id)
        dec.migrations += _rebalance_onto(work, added, params.tu_up)
        if green_aware and forecast is not None and forecast.available:
            hi = min(t + max(window, 1), len(forecast.series))
            renewable = float(np.mean(forecast.series[t:hi])) if hi > t else 0.0
            rest = pool[delta:]
            while rest and _facility_power(work, cooling) <= renewable:
                h = rest.pop(0)
                trial = work.copy()
                trial.set_power_mode(h.id, PowerMode.ACTIVE)
                moves = _rebalance_onto(trial, [h.id], params.tu_up)
                # a host that receives nothing would only sit idle
                if not moves:
                    break
                work = trial
                added.append(h.id)
                dec.migrations += moves
        dec.power_changes += [(hid, PowerMode.ACTIVE) for hid in added]
    else:
        removed: set[str] = set()
        # empty hosts go first, then the least loaded ones that can be drained
        cands = sorted(
            (h for h in work.hosts if h.active), key=lambda h: (bool(h.vms), host_utilization(h), h.id)
        )
        for h in cands:
            if len(removed) >= -delta or work.n_active <= 1:
                break
            trial = work.copy()
            moves = []
            for vm in sorted(trial.host(h.id).vms, key=lambda v: (-vm_utilization(v), v.id)):
                tgt = best_target(
                    trial, vm_utilization(vm), exclude=removed | {h.id}, limit=params.tu_up, occupied_only=True
                )
                if tgt is None:
                    moves = None
                    break
                trial.apply_migration(vm.id, tgt.id)
                moves.append((vm.id, tgt.id))
            if moves is None:
                continue
            trial.set_power_mode(h.id, PowerMode.LOW_POWER)
            work = trial
            dec.migrations += moves
            dec.power_changes.append((h.id, PowerMode.LOW_POWER))
            removed.add(h.id)
    return dec


def _facility_power(cluster: ClusterState, cooling: CoolingConfig) -> float:
    server = sum(host_power(h) for h in cluster.hosts)
    return server + cooling_power(server, cooling)


def average_utilization(cluster: ClusterState) -> float:
    active = cluster.active_hosts()
    return sum(host_utilization(h) for h in active) / len(active)


# -- top-level steps ------------------------------------------------------------


@dataclass(frozen=True)
class ScalingInputs:
    predicted_requests: float
    num_thr: float
    cooling: CoolingConfig
    window: int = 12


def follow_renewables(
    cluster: ClusterState,
    forecast: RenewableForecast,
    t: int,
    params: BrownoutParams,
    cooling: CoolingConfig,
    window: int = 12,
) -> PolicyDecision:
    """Hourly host adjustment while solar output is changing.

    Surplus (facility power at or below the smallest forecast value over the
    next ``window`` intervals): power on low-power hosts, smallest idle draw
    first, spreading load onto each, for as long as the predicted draw stays
    within that minimum.  Deficit (power above the forecast at ``t``): drain
    the least-loaded host into the others within ``tu_up``, one host at a
    time, while the draw still exceeds the forecast and draining lowers it.
    """
    dec = PolicyDecision(branch="follow")
    work = cluster.copy()
    hi = min(t + max(window, 1), len(forecast.series))
    if hi <= t:
        return dec
    r_min = float(np.min(forecast.series[t:hi]))
    power = _facility_power(work, cooling)
    if power <= r_min:
        for h in activation_order(work.hosts):
            trial = work.copy()
            trial.set_power_mode(h.id, PowerMode.ACTIVE)
            moves = _rebalance_onto(trial, [h.id], params.tu_up)
            if not moves or _facility_power(trial, cooling) > r_min:
                break
            work = trial
            dec.migrations += moves
            dec.power_changes.append((h.id, PowerMode.ACTIVE))
        return dec
    if power <= forecast.at(t):
        return dec
    while work.n_active > 1 and power > forecast.at(t):
        for src in sorted(work.active_hosts(), key=lambda h: (host_utilization(h), h.id)):
            trial = work.copy()
            moves = []
            for vm in sorted(trial.host(src.id).vms, key=lambda v: (-vm_utilization(v), v.id)):
                tgt = best_target(trial, vm_utilization(vm), exclude={src.id}, limit=params.tu_up, occupied_only=True)
                if tgt is None:
                    moves = None
                    break
                trial.apply_migration(vm.id, tgt.id)
                moves.append((vm.id, tgt.id))
            if moves is None:
                continue
            trial.set_power_mode(src.id, PowerMode.LOW_POWER)
            p_trial = _facility_power(trial, cooling)
            if p_trial >= power:
                continue
            work, power = trial, p_trial
            dec.migrations += moves
            dec.power_changes.append((src.id, PowerMode.LOW_POWER))
            break
        else:
            break
    return dec


def in_follow_window(forecast: RenewableForecast, t: int, window: int) -> bool:
    """Renewable window plus one cadence step after it, so surplus hosts get drained at dusk."""
    return forecast.available and forecast.start <= t <= forecast.end + window


def gsa_step(
    cluster: ClusterState,
    arrivals: Sequence[BatchJob],
    forecast: RenewableForecast,
    params: BrownoutParams,
    t: int,
    plan: PowerPlan,
    power_now: float,
    scaling: ScalingInputs | None = None,
    defer_always: bool = False,
    follow: bool = True,
) -> PolicyDecision:
    """One interval of the green-aware policy.

    ``scaling`` is passed only on intervals where consolidation and host
    scaling are due; otherwise that branch is skipped.  Jobs in ``arrivals``
    that are not deferred start now.  With ``defer_always`` every arriving
    batch job goes through the deferral planner; otherwise only jobs that
    arrive while some host is overloaded do.  With ``follow``, scaling
    intervals inside the renewable window also run ``follow_renewables``
    on top of the overload or normal branch.
    """
    n_o = len(overloaded(cluster, params.tu_up))
    deferrals = {}
    if n_o > 0 or defer_always:
        deferrals = {k: v for k, v in defer_batch(arrivals, forecast, plan, t).items() if v != t}
    else:
        for job in arrivals:
            plan.commit(t, job.exec, job.unit_util)
    if n_o > 0:
        dec = brownout_interactive(cluster, forecast, params, t, power_now)
        dec.deferrals = deferrals
    elif average_utilization(cluster) < params.tu_low:
        dec = PolicyDecision(branch="consolidate")
        dec.reactivations = reactivate_with_headroom(cluster, params.tu_up)
        if scaling is not None:
            dec.merge(consolidate_vms(apply_to_copy(cluster, dec), params))
            after = apply_to_copy(cluster, dec)
            dec.merge(
                scale_hosts(
                    after, scaling.predicted_requests, scaling.num_thr, forecast, t, params,
                    scaling.cooling, green_aware=True, window=scaling.window,
                )
            )
        dec.branch = "consolidate"
        dec.deferrals = deferrals
        return dec
    else:
        dec = PolicyDecision(
            branch="normal", reactivations=reactivate_with_headroom(cluster, params.tu_up), deferrals=deferrals
        )
    if follow and scaling is not None and in_follow_window(forecast, t, scaling.window):
        branch = dec.branch
        dec.merge(follow_renewables(apply_to_copy(cluster, dec), forecast, t, params, scaling.cooling, scaling.window))
        dec.branch = branch
    return dec


def hs_baseline_step(
    cluster: ClusterState,
    arrivals: Sequence[BatchJob],
    params: BrownoutParams,
    t: int,
    plan: PowerPlan | None = None,
    scaling: ScalingInputs | None = None,
) -> PolicyDecision:
    """One interval of the baseline: MBFD consolidation and host scaling, nothing green."""
    if plan is not None:
        for job in arrivals:
            plan.commit(t, job.exec, job.unit_util)
    dec = PolicyDecision(branch="normal")
    if scaling is None:
        return dec
    dec.merge(consolidate_vms(cluster, params))
    after = apply_to_copy(cluster, dec)
    dec.merge(
        scale_hosts(
            after, scaling.predicted_requests, scaling.num_thr, None, t, params,
            scaling.cooling, green_aware=False, window=scaling.window,
        )
    )
    dec.branch = "consolidate"
    return dec


def apply_decision(cluster: ClusterState, dec: PolicyDecision) -> ClusterState:
    """Apply microservice, migration and power changes in place.

    Order: deactivations, reactivations, host power-ups, migrations, host
    power-downs.  Deferrals are handled by the engine.
    """
    for vm_id, ms_id in dec.deactivations:
        cluster.set_active(vm_id, ms_id, False)
    for vm_id, ms_id in dec.reactivations:
        cluster.set_active(vm_id, ms_id, True)
    for hid, mode in dec.power_changes:
        if mode is PowerMode.ACTIVE:
            cluster.set_power_mode(hid, mode)
    for vm_id, target in dec.migrations:
        cluster.apply_migration(vm_id, target)
    for hid, mode in dec.power_changes:
        if mode is PowerMode.LOW_POWER:
            cluster.set_power_mode(hid, mode)
    return cluster


def apply_to_copy(cluster: ClusterState, dec: PolicyDecision) -> ClusterState:
    return apply_decision(cluster.copy(), dec)
