"""Synthetic traces in the same shapes as the real inputs.

None of these are the original web/Hadoop/irradiance datasets; they are
seeded stand-ins with the documented scales so that experiments are
reproducible at desk scale.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .forecast import write_irradiance
from .workload import BATCH_HEADER, INTERACTIVE_HEADER, seconds_to_intervals

# (sunrise hour, sunset hour, clear-sky peak W/m^2)
SEASONS = {
    "autumn": (6.0, 18.0, 930.0),
    "summer": (5.0, 20.0, 1000.0),
    "winter": (7.0, 16.5, 700.0),
}


def _gauss(h, mu, sigma):
    # wraps around midnight so the curve is periodic
    d = np.minimum(np.abs(h - mu), 24.0 - np.abs(h - mu))
    return np.exp(-0.5 * (d / sigma) ** 2)


def interactive_rates(
    horizon: int = 288,
    dt: float = 300.0,
    max_rate: float = 300.0,
    min_rate: float = 150.0,
    noise: float = 0.02,
    seed: int = 0,
) -> np.ndarray:
    """Diurnal request rate with a late-morning and an evening peak."""
    rng = np.random.default_rng(seed)
    h = (np.arange(horizon) * dt / 3600.0) % 24.0
    shape = 0.85 * _gauss(h, 11.5, 3.0) + 1.0 * _gauss(h, 20.0, 2.5)
    shape = (shape - shape.min()) / (shape.max() - shape.min())
    rates = min_rate + (max_rate - min_rate) * shape
    rates = rates * (1.0 + noise * rng.standard_normal(horizon))
    return np.clip(rates, 0.0, max_rate)


def max_rate_for_util(peak_util: float, capacity: float, service_rate: float, target_rt: float) -> float:
    """Arrival rate whose sized allocation equals ``peak_util`` of the cluster."""
    return peak_util * capacity * (service_rate - 1.0 / target_rt)


@dataclass(frozen=True)
class BatchRow:
    job_id: str
    start_s: float
    exec_s: float
    deadline_s: float
    util_units: float


def batch_jobs(
    horizon: int = 288,
    dt: float = 300.0,
    n_jobs: int = 60,
    batch_util: float = 0.27,
    capacity: float = 12.0,
    deadline_mean_h: float = 6.0,
    deadline_std_h: float = 1.0,
    seed: int = 0,
    peak_hour: float = 3.0,
) -> list[BatchRow]:
    """Hadoop-like jobs: map 25-13000 s plus reduce 15-2600 s, normal deadlines.

    Arrivals peak overnight.  Job utilizations are scaled so that running
    every job on arrival peaks at ``batch_util`` of ``capacity``.  The random
    stream is consumed in a fixed order, so changing only the deadline
    parameters keeps every other column identical.
    """
    rng = np.random.default_rng(seed)
    day_s = horizon * dt
    # arrival-time density over the day, sampled on a fine grid
    grid = np.arange(0, day_s, 60.0)
    h = (grid / 3600.0) % 24.0
    dens = 0.35 + 1.6 * _gauss(h, peak_hour, 2.2) + 0.5 * _gauss(h, 14.0, 3.0)
    dens /= dens.sum()
    starts = np.sort(rng.choice(grid, size=n_jobs, p=dens) + rng.uniform(0, 60.0, n_jobs))
    map_s = np.exp(rng.uniform(math.log(25.0), math.log(13000.0), n_jobs))
    red_s = np.exp(rng.uniform(math.log(15.0), math.log(2600.0), n_jobs))
    exec_s = map_s + red_s
    util = rng.uniform(0.1, 0.45, n_jobs)
    z = rng.standard_normal(n_jobs)

    rows = []
    keep = []
    for i in range(n_jobs):
        s, e, _ = seconds_to_intervals(starts[i], exec_s[i], 0.0, dt)
        if s + e <= horizon:
            keep.append(i)
    # scale utilization so that the run-on-arrival profile peaks at the target
    profile = np.zeros(horizon)
    for i in keep:
        s, e, _ = seconds_to_intervals(starts[i], exec_s[i], 0.0, dt)
        profile[s : s + e] += util[i]
    scale = batch_util * capacity / profile.max() if profile.max() > 0 else 1.0
    for n, i in enumerate(keep):
        s, e, _ = seconds_to_intervals(starts[i], exec_s[i], 0.0, dt)
        slack_s = max(deadline_mean_h + deadline_std_h * z[i], 0.0) * 3600.0
        deadline = max(starts[i] + slack_s, (s + e) * dt)
        rows.append(BatchRow(f"job{n:03d}", round(starts[i], 1), round(exec_s[i], 1), math.ceil(deadline), round(util[i] * scale, 4)))
    return rows


def solar_irradiance(
    days: int,
    season: str = "autumn",
    cloudiness: float = 0.25,
    seed: int = 0,
    clear_last_day: bool = True,
) -> np.ndarray:
    """Hourly irradiance (W/m^2) for ``days`` days; the value at hour h covers [h, h+1).

    Each day gets a random cloud attenuation; hours get a little extra noise.
    The final day is left nearly clear when ``clear_last_day`` is set, so a
    simulated day shows the season's full solar curve.
    """
    try:
        rise, sset, peak = SEASONS[season]
    except KeyError:
        raise ValueError(f"unknown season {season!r}; choose from {sorted(SEASONS)}") from None
    rng = np.random.default_rng(seed)
    mid = np.arange(24) + 0.5
    frac = np.clip((mid - rise) / (sset - rise), 0.0, 1.0)
    clear = peak * np.sin(np.pi * frac) ** 1.3
    out = []
    for d in range(days):
        attenuation = 1.0 - cloudiness * rng.beta(1.2, 2.5)
        hourly = clear * attenuation * (1.0 + 0.05 * rng.standard_normal(24))
        if clear_last_day and d == days - 1:
            hourly = clear * 0.98
        out.append(np.clip(hourly, 0.0, None))
    return np.concatenate(out)


def write_interactive(path: str | Path, rates) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(INTERACTIVE_HEADER)
        for i, r in enumerate(rates):
            w.writerow([i, f"{r:.3f}"])


def write_batch(path: str | Path, rows: list[BatchRow]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BATCH_HEADER)
        for r in rows:
            w.writerow([r.job_id, r.start_s, r.exec_s, r.deadline_s, r.util_units])


def write_solar(path: str | Path, values, start: datetime = datetime(2018, 9, 1)) -> None:
    write_irradiance(path, values, start)
