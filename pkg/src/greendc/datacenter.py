"""Cluster description and runtime state: hosts, VMs and microservices.

Utilization is measured in normalized units where 1.0 is one fully loaded
4-core reference host.  A host's ``cpu_capacity`` says how many such units it
can carry; ``host_utilization`` divides the hosted load by that capacity.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import GreenDCError

CLUSTER_HEADER = ["host_id", "machine_class", "cores", "idle_watts", "full_watts", "cpu_capacity"]

# rounding slack for capacity checks on sums of floats
_EPS = 1e-9


class ClusterError(GreenDCError):
    pass


class UnknownVm(ClusterError):
    pass


class UnknownHost(ClusterError):
    pass


class TargetLowPower(ClusterError):
    pass


class CapacityExceeded(ClusterError):
    pass


class HostNotEmpty(ClusterError):
    pass


class LastActiveHost(ClusterError):
    pass


class InvalidMicroserviceOp(ClusterError):
    pass


class PowerMode(str, enum.Enum):
    ACTIVE = "Active"
    LOW_POWER = "LowPower"


class Optionality(str, enum.Enum):
    MANDATORY = "Mandatory"
    OPTIONAL = "Optional"


@dataclass(frozen=True)
class HostSpec:
    id: str
    machine_class: str
    cores: int
    idle_watts: float
    full_watts: float
    cpu_capacity: float

    def __post_init__(self):
        if not 0 < self.idle_watts <= self.full_watts:
            raise ValueError(f"host {self.id}: need 0 < idle_watts <= full_watts")
        if self.cores < 1:
            raise ValueError(f"host {self.id}: cores must be >= 1")
        if self.cpu_capacity <= 0:
            raise ValueError(f"host {self.id}: cpu_capacity must be > 0")

    @property
    def dynamic_watts(self) -> float:
        return self.full_watts - self.idle_watts


@dataclass
class MicroserviceState:
    id: str
    utilization: float = 0.0
    optionality: Optionality = Optionality.MANDATORY
    active: bool = True

    @property
    def optional(self) -> bool:
        return self.optionality is Optionality.OPTIONAL


@dataclass
class VmState:
    id: str
    host_id: str
    microservices: list[MicroserviceState] = field(default_factory=list)
    # "interactive" VMs are long-lived; "batch" VMs come and go with their job
    kind: str = "interactive"


@dataclass
class HostState:
    spec: HostSpec
    power_mode: PowerMode = PowerMode.ACTIVE
    vms: list[VmState] = field(default_factory=list)

    @property
    def id(self) -> str:
        return self.spec.id

    @property
    def active(self) -> bool:
        return self.power_mode is PowerMode.ACTIVE


def vm_utilization(vm: VmState) -> float:
    """Sum of the utilizations of the VM's active microservices."""
    return sum(ms.utilization for ms in vm.microservices if ms.active)


def host_load(host: HostState) -> float:
    """Absolute load on a host in utilization units (not normalized)."""
    if not host.active:
        return 0.0
    return sum(vm_utilization(vm) for vm in host.vms)


def host_utilization(host: HostState) -> float:
    """Hosted VM load divided by the host's capacity; 0 for LowPower hosts."""
    if not host.active:
        return 0.0
    return host_load(host) / host.spec.cpu_capacity


class ClusterState:
    """Mutable cluster snapshot.

    All mutators validate before touching anything, so a raised error always
    leaves the state as it was.  They return ``self`` for chaining.
    """

    def __init__(self, hosts: list[HostState]):
        if not hosts:
            raise ClusterError("cluster needs at least one host")
        self.hosts = list(hosts)
        self._by_id = {h.id: h for h in self.hosts}
        if len(self._by_id) != len(self.hosts):
            raise ClusterError("duplicate host ids")
        self._vm_index: dict[str, VmState] = {}
        for h in self.hosts:
            for vm in h.vms:
                if vm.id in self._vm_index:
                    raise ClusterError(f"duplicate vm id {vm.id}")
                vm.host_id = h.id
                self._vm_index[vm.id] = vm
        if self.n_active < 1:
            raise LastActiveHost("cluster must start with at least one active host")

    @classmethod
    def from_specs(cls, specs: list[HostSpec], mode: PowerMode = PowerMode.ACTIVE) -> "ClusterState":
        return cls([HostState(spec=s, power_mode=mode) for s in specs])

    @property
    def n(self) -> int:
        return len(self.hosts)

    @property
    def n_active(self) -> int:
        return sum(1 for h in self.hosts if h.active)

    @property
    def capacity(self) -> float:
        return sum(h.spec.cpu_capacity for h in self.hosts)

    def host(self, host_id: str) -> HostState:
        try:
            return self._by_id[host_id]
        except KeyError:
            raise UnknownHost(host_id) from None

    def vm(self, vm_id: str) -> VmState:
        try:
            return self._vm_index[vm_id]
        except KeyError:
            raise UnknownVm(vm_id) from None

    def vms(self):
        return self._vm_index.values()

    def microservices(self):
        for vm in self._vm_index.values():
            yield from vm.microservices

    def active_hosts(self) -> list[HostState]:
        return [h for h in self.hosts if h.active]

    def total_load(self) -> float:
        return sum(host_load(h) for h in self.hosts)

    # -- mutators -----------------------------------------------------------

    def apply_migration(self, vm_id: str, target_host: str) -> "ClusterState":
        vm = self.vm(vm_id)
        target = self.host(target_host)
        if vm.host_id == target.id:
            return self
        if not target.active:
            raise TargetLowPower(f"cannot migrate {vm_id} to low-power host {target.id}")
        util = vm_utilization(vm)
        if host_load(target) + util > target.spec.cpu_capacity + _EPS:
            raise CapacityExceeded(
                f"{vm_id} ({util:.3f}) does not fit on {target.id} "
                f"(headroom {target.spec.cpu_capacity - host_load(target):.3f})"
            )
        source = self._by_id[vm.host_id]
        source.vms.remove(vm)
        target.vms.append(vm)
        vm.host_id = target.id
        return self

    def set_power_mode(self, host_id: str, mode: PowerMode) -> "ClusterState":
        host = self.host(host_id)
        mode = PowerMode(mode)
        if mode is host.power_mode:
            return self
        if mode is PowerMode.LOW_POWER:
            if host.vms:
                raise HostNotEmpty(f"{host_id} still hosts {len(host.vms)} VM(s)")
            if self.n_active <= 1:
                raise LastActiveHost(f"{host_id} is the last active host")
        host.power_mode = mode
        return self

    def place_vm(self, vm: VmState, host_id: str, allow_overload: bool = False) -> "ClusterState":
        """Add a new VM to an active host."""
        if vm.id in self._vm_index:
            raise ClusterError(f"duplicate vm id {vm.id}")
        host = self.host(host_id)
        if not host.active:
            raise TargetLowPower(f"cannot place {vm.id} on low-power host {host_id}")
        if not allow_overload and host_load(host) + vm_utilization(vm) > host.spec.cpu_capacity + _EPS:
            raise CapacityExceeded(f"{vm.id} does not fit on {host_id}")
        vm.host_id = host.id
        host.vms.append(vm)
        self._vm_index[vm.id] = vm
        return self

    def remove_vm(self, vm_id: str) -> VmState:
        vm = self.vm(vm_id)
        self._by_id[vm.host_id].vms.remove(vm)
        del self._vm_index[vm_id]
        return vm

    def set_active(self, vm_id: str, ms_id: str, active: bool) -> "ClusterState":
        vm = self.vm(vm_id)
        for ms in vm.microservices:
            if ms.id == ms_id:
                if not active and not ms.optional:
                    raise InvalidMicroserviceOp(f"{ms_id} is mandatory and cannot be deactivated")
                ms.active = active
                return self
        raise InvalidMicroserviceOp(f"{ms_id} not found on {vm_id}")

    # -- checks -------------------------------------------------------------

    def overloaded_hosts(self) -> list[HostState]:
        """Hosts whose load exceeds their physical capacity."""
        return [h for h in self.hosts if host_load(h) > h.spec.cpu_capacity + _EPS]

    def check_invariants(self) -> None:
        """Raise ``ClusterError`` if any structural invariant is broken.

        Capacity overload is not checked here: it is a recorded event, not a
        structural fault.
        """
        if self.n_active < 1:
            raise ClusterError("no active host")
        seen = set()
        for h in self.hosts:
            if not h.active and h.vms:
                raise ClusterError(f"low-power host {h.id} hosts VMs")
            for vm in h.vms:
                if vm.host_id != h.id:
                    raise ClusterError(f"{vm.id} thinks it is on {vm.host_id}, found on {h.id}")
                seen.add(vm.id)
                for ms in vm.microservices:
                    if not ms.optional and not ms.active:
                        raise ClusterError(f"mandatory microservice {ms.id} inactive")
                    if ms.utilization < 0:
                        raise ClusterError(f"negative utilization on {ms.id}")
        if seen != set(self._vm_index):
            raise ClusterError("vm index out of sync with host lists")

    def copy(self) -> "ClusterState":
        hosts = []
        for h in self.hosts:
            vms = [
                VmState(
                    id=vm.id,
                    host_id=vm.host_id,
                    microservices=[
                        MicroserviceState(ms.id, ms.utilization, ms.optionality, ms.active)
                        for ms in vm.microservices
                    ],
                    kind=vm.kind,
                )
                for vm in h.vms
            ]
            hosts.append(HostState(spec=h.spec, power_mode=h.power_mode, vms=vms))
        return ClusterState(hosts)


def load_cluster(path: str | Path) -> list[HostSpec]:
    """Read a cluster description CSV into host specs."""
    path = Path(path)
    with path.open(newline="") as fh:
        return _parse_cluster(fh, str(path))


def default_cluster() -> list[HostSpec]:
    """The bundled 8-host testbed (controller node excluded)."""
    ref = resources.files("greendc") / "data" / "cluster.csv"
    with ref.open(newline="") as fh:
        return _parse_cluster(fh, "cluster.csv")


def _parse_cluster(fh, name: str) -> list[HostSpec]:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or [c.strip() for c in header] != CLUSTER_HEADER:
        raise ClusterError(f"{name}:1: expected header {','.join(CLUSTER_HEADER)}")
    specs = []
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != len(CLUSTER_HEADER):
            raise ClusterError(f"{name}:{lineno}: expected {len(CLUSTER_HEADER)} fields, got {len(row)}")
        try:
            specs.append(
                HostSpec(
                    id=row[0].strip(),
                    machine_class=row[1].strip(),
                    cores=int(row[2]),
                    idle_watts=float(row[3]),
                    full_watts=float(row[4]),
                    cpu_capacity=float(row[5]),
                )
            )
        except ValueError as exc:
            raise ClusterError(f"{name}:{lineno}: {exc}") from None
    if not specs:
        raise ClusterError(f"{name}: no hosts")
    return specs
