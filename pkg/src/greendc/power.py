"""Server, cooling and facility power; brown/green energy split."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .datacenter import ClusterState, HostState, host_utilization
from .errors import GreenDCError


class EmptySeries(GreenDCError):
    pass


@dataclass(frozen=True)
class CoolingConfig:
    t_sup: float = 25.0

    def __post_init__(self):
        if cop(self.t_sup) <= 0:
            raise ValueError("CoP must be positive")


@dataclass(frozen=True)
class PowerSample:
    t: int
    server_watts: float
    cooling_watts: float
    total_watts: float
    renewable_watts: float
    brown_watts: float
    green_used_watts: float

    @classmethod
    def from_draw(cls, t: int, server_watts: float, cooling_watts: float, renewable_watts: float) -> "PowerSample":
        draw = server_watts + cooling_watts
        green = min(draw, renewable_watts)
        brown = draw - green
        # total is defined as the sum so the split is exact in floating point;
        # it can differ from server + cooling in the last bit
        return cls(t, server_watts, cooling_watts, brown + green, renewable_watts, brown, green)


@dataclass(frozen=True)
class EnergyTotals:
    brown_kwh: float
    green_kwh: float
    total_kwh: float


def host_power(host: HostState, dimmer_retention: float = 1.0, standby_watts: float = 0.0) -> float:
    """Server power of one host in watts.

    A host with no VMs (or in low-power mode) draws ``standby_watts``.
    Utilization beyond the host's capacity is clipped at full power.
    """
    if not 0.0 <= dimmer_retention <= 1.0:
        raise ValueError(f"dimmer_retention must be in [0, 1], got {dimmer_retention}")
    if not host.active or not host.vms:
        return standby_watts
    util = min(host_utilization(host), 1.0)
    return host.spec.idle_watts + dimmer_retention * util * host.spec.dynamic_watts


def cop(t_sup: float) -> float:
    """Cooling coefficient of performance at supply temperature ``t_sup`` (degC)."""
    return 0.0068 * t_sup**2 + 0.0008 * t_sup + 0.458


def cooling_power(server_watts: float, cfg: CoolingConfig) -> float:
    if server_watts < 0:
        raise ValueError("server_watts must be >= 0")
    return server_watts / cop(cfg.t_sup)


def total_power(
    cluster: ClusterState,
    retention_per_host: Mapping[str, float] | Sequence[float] | None,
    cfg: CoolingConfig,
    standby_watts: float = 0.0,
) -> tuple[float, float, float]:
    """Return ``(server, cooling, total)`` watts for the whole cluster.

    ``retention_per_host`` is either a mapping keyed by host id, a sequence in
    host order, or ``None`` for no brownout.
    """
    if retention_per_host is None:
        rets = [1.0] * cluster.n
    elif isinstance(retention_per_host, Mapping):
        rets = [retention_per_host.get(h.id, 1.0) for h in cluster.hosts]
    else:
        rets = list(retention_per_host)
        if len(rets) != cluster.n:
            raise ValueError(f"need one retention per host ({cluster.n}), got {len(rets)}")
    server = sum(host_power(h, r, standby_watts) for h, r in zip(cluster.hosts, rets))
    cooling = cooling_power(server, cfg)
    return server, cooling, server + cooling


def energy_accounting(power_series: Sequence[PowerSample], dt_seconds: float) -> EnergyTotals:
    """Integrate a power series (rectangle rule) into brown/green/total kWh."""
    if not power_series:
        raise EmptySeries("power series is empty")
    if dt_seconds <= 0:
        raise ValueError("dt must be positive")
    hours = dt_seconds / 3600.0
    brown = sum(s.brown_watts for s in power_series) * hours / 1000.0
    green = sum(s.green_used_watts for s in power_series) * hours / 1000.0
    return EnergyTotals(brown, green, brown + green)
