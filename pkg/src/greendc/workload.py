"""Interactive and batch workload models and trace loaders.

Interactive capacity is sized with the M/GI/1/PS relation: an allocation of
``A`` utilization units serving arrival rate ``lam`` with per-unit service
rate ``mu`` yields mean response time ``1 / (mu - lam / A)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import GreenDCError

INTERACTIVE_HEADER = ["interval", "requests_per_sec"]
BATCH_HEADER = ["job_id", "start_s", "exec_s", "deadline_s", "util_units"]


class WorkloadError(GreenDCError):
    pass


class InfeasibleTarget(WorkloadError):
    pass


class ZeroAllocation(WorkloadError):
    pass


class ParseError(WorkloadError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class NegativeRate(ParseError):
    pass


def interactive_demand(lam: float, mu: float, rt: float) -> float:
    """Smallest allocation (utilization units) that keeps mean response time at ``rt``."""
    if mu <= 1.0 / rt:
        raise InfeasibleTarget(f"service rate {mu} cannot meet {rt}s (need mu > {1.0 / rt})")
    if lam < 0:
        raise ValueError("arrival rate must be >= 0")
    return lam / (mu - 1.0 / rt)


def response_time(lam: float, mu: float, allocated: float) -> float:
    """Mean response time in seconds, or ``math.inf`` when the queue is unstable."""
    if allocated <= 0:
        raise ZeroAllocation("allocation must be positive")
    slack = mu - lam / allocated
    if slack <= 0:
        return math.inf
    return 1.0 / slack


def batch_amount_update(b_prev: float, gamma_prev: float, b_orig: float, gamma_now: float) -> float:
    """Amount of a batch type executed at t after carrying and deferring work."""
    for g in (gamma_prev, gamma_now):
        if not 0.0 <= g <= 1.0:
            raise ValueError(f"deferral fraction {g} outside [0, 1]")
    if b_prev < 0 or b_orig < 0:
        raise ValueError("amounts must be >= 0")
    return gamma_prev * b_prev + b_orig - gamma_now * b_orig


@dataclass
class InteractiveWorkload:
    id: str
    arrival_rate_series: np.ndarray
    service_rate: float
    target_rt: float
    unit_util: float = 1.0

    def __post_init__(self):
        self.arrival_rate_series = np.asarray(self.arrival_rate_series, dtype=float)
        if self.service_rate <= 1.0 / self.target_rt:
            raise InfeasibleTarget(
                f"{self.id}: service_rate {self.service_rate} must exceed 1/target_rt = {1.0 / self.target_rt}"
            )
        if np.any(self.arrival_rate_series < 0):
            raise NegativeRate(f"{self.id}: negative arrival rate")

    def rate(self, t: int) -> float:
        return float(self.arrival_rate_series[t])

    def demand(self, t: int) -> float:
        return interactive_demand(self.rate(t), self.service_rate, self.target_rt)


@dataclass
class BatchJob:
    id: str
    start: int
    exec: int
    deadline: int
    unit_util: float
    # per-interval executed amount b_n(t) and deferred fraction gamma_n^t
    amount_series: dict[int, float] = field(default_factory=dict)
    deferred_fraction: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.exec < 1:
            raise WorkloadError(f"job {self.id}: exec must be >= 1 interval")
        if self.start + self.exec > self.deadline:
            raise WorkloadError(f"job {self.id}: start + exec > deadline")
        if self.unit_util <= 0:
            raise WorkloadError(f"job {self.id}: util must be positive")

    @property
    def total_demand(self) -> float:
        """B_n in interval-units of work (exec intervals at unit_util each)."""
        return self.exec * self.unit_util

    @property
    def latest_start(self) -> int:
        return self.deadline - self.exec

    def original_amount(self, t: int) -> float:
        return 1.0 if self.start <= t < self.start + self.exec else 0.0

    def amount(self, t: int) -> float:
        """Planned amount at t; falls back to the undeferred profile."""
        if self.amount_series:
            return self.amount_series.get(t, 0.0)
        return self.original_amount(t)

    def plan_at(self, begin: int) -> None:
        """Commit the job to run on ``[begin, begin + exec)``."""
        if begin < self.start or begin > self.latest_start:
            raise WorkloadError(f"job {self.id}: start {begin} outside [{self.start}, {self.latest_start}]")
        self.amount_series = {t: 1.0 for t in range(begin, begin + self.exec)}
        self.deferred_fraction = {t: (1.0 if t < begin else 0.0) for t in range(self.start, begin + 1)}


@dataclass(frozen=True)
class DemandProfile:
    t: int
    interactive_units: float
    batch_units: float
    total_units: float


def total_demand(
    interactive: Sequence[InteractiveWorkload], batch: Sequence[BatchJob], t: int
) -> DemandProfile:
    """Total CPU demand at ``t``: sized interactive allocations plus batch amounts."""
    inter = sum(w.demand(t) for w in interactive)
    bat = sum(j.amount(t) * j.unit_util for j in batch)
    return DemandProfile(t, inter, bat, inter + bat)


@dataclass(frozen=True)
class MicroserviceSpec:
    id: str
    weight: float
    optional: bool
    vm: str


@dataclass(frozen=True)
class InteractiveApp:
    """Microservice decomposition of an interactive workload.

    Each microservice carries a fixed ``weight`` share of the workload's
    allocation; weights sum to 1.
    """

    microservices: tuple[MicroserviceSpec, ...]

    @property
    def vm_ids(self) -> list[str]:
        return sorted({m.vm for m in self.microservices}, key=_natural_key)

    @classmethod
    def generate(
        cls,
        n_microservices: int = 20,
        optional_fraction: float = 0.3,
        per_vm: int = 2,
        seed: int = 0,
        prefix: str = "ms",
    ) -> "InteractiveApp":
        if n_microservices < 1 or per_vm < 1:
            raise ValueError("need at least one microservice and one per VM")
        rng = np.random.default_rng(seed)
        weights = rng.uniform(0.5, 1.5, n_microservices)
        weights = weights / weights.sum()
        n_opt = int(round(optional_fraction * n_microservices))
        optional = set(rng.choice(n_microservices, size=n_opt, replace=False).tolist())
        n_vms = math.ceil(n_microservices / per_vm)
        specs = []
        for k in range(n_microservices):
            # round-robin so optional services spread over VMs
            vm = f"{prefix}-vm{k % n_vms}"
            specs.append(MicroserviceSpec(f"{prefix}{k}", float(weights[k]), k in optional, vm))
        return cls(tuple(specs))


def _natural_key(s: str):
    digits = "".join(c for c in s if c.isdigit())
    return (s.rstrip("0123456789"), int(digits) if digits else -1, s)


def load_interactive_trace(path: str | Path) -> np.ndarray:
    """Read ``interval,requests_per_sec`` rows into a rate array."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file", row=1)
    if [c.strip() for c in rows[0]] != INTERACTIVE_HEADER:
        raise ParseError(f"{path}: expected header {','.join(INTERACTIVE_HEADER)}", row=1)
    rates = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 2:
            raise ParseError(f"{path}: expected 2 fields", row=lineno)
        try:
            idx = int(row[0])
            rate = float(row[1])
        except ValueError:
            raise ParseError(f"{path}: non-numeric value", row=lineno) from None
        if idx != len(rates):
            raise ParseError(f"{path}: interval {idx} out of sequence (expected {len(rates)})", row=lineno)
        if rate < 0 or math.isnan(rate):
            raise NegativeRate(f"{path}: negative rate {rate}", row=lineno)
        rates.append(rate)
    if not rates:
        raise ParseError(f"{path}: no data rows", row=2)
    return np.array(rates)


def seconds_to_intervals(start_s: float, exec_s: float, deadline_s: float, dt: float) -> tuple[int, int, int]:
    """Quantize job times to intervals, always on the conservative side.

    A job can start at the first boundary at or after its arrival, runs for a
    whole number of intervals (rounded up) and must finish by the last
    boundary at or before its deadline.
    """
    start = math.ceil(start_s / dt - 1e-9)
    exec_ = max(1, math.ceil(exec_s / dt - 1e-9))
    deadline = math.floor(deadline_s / dt + 1e-9)
    return start, exec_, deadline


def load_batch_trace(path: str | Path, dt_seconds: float = 300.0) -> tuple[list[BatchJob], list[tuple[str, str]]]:
    """Read a batch trace; returns ``(accepted_jobs, rejected)``.

    ``rejected`` lists ``(job_id, reason)`` for rows that cannot meet their
    deadline even when started on arrival.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file", row=1)
    if [c.strip() for c in rows[0]] != BATCH_HEADER:
        raise ParseError(f"{path}: expected header {','.join(BATCH_HEADER)}", row=1)
    jobs, rejected, ids = [], [], set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != len(BATCH_HEADER):
            raise ParseError(f"{path}: expected {len(BATCH_HEADER)} fields", row=lineno)
        job_id = row[0].strip()
        try:
            start_s, exec_s, deadline_s, util = (float(x) for x in row[1:])
        except ValueError:
            raise ParseError(f"{path}: non-numeric value", row=lineno) from None
        if job_id in ids:
            raise ParseError(f"{path}: duplicate job id {job_id}", row=lineno)
        if min(start_s, exec_s, deadline_s) < 0 or util <= 0:
            raise ParseError(f"{path}: negative time or non-positive util", row=lineno)
        ids.add(job_id)
        start, exec_, deadline = seconds_to_intervals(start_s, exec_s, deadline_s, dt_seconds)
        if start + exec_ > deadline:
            rejected.append((job_id, f"row {lineno}: start {start} + exec {exec_} > deadline {deadline} (intervals)"))
            continue
        jobs.append(BatchJob(job_id, start, exec_, deadline, util))
    return jobs, rejected
