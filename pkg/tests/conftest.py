from __future__ import annotations

import itertools

from greendc.datacenter import (
    ClusterState,
    HostSpec,
    HostState,
    MicroserviceState,
    Optionality,
    PowerMode,
    VmState,
)

_ids = itertools.count()

def spec(hid: str, cap: float = 1.0, idle: float = 153.0, full: float = 230.0) -> HostSpec:
    return HostSpec(hid, "test", 4, idle, full, cap)


def vm(*utils, optional=(), inactive=(), vm_id=None, kind="interactive") -> VmState:
    """VM with one microservice per utilization; ``optional``/``inactive`` are indices."""
    vid = vm_id or f"vm{next(_ids)}"
    mss = [
        MicroserviceState(
            f"{vid}-ms{i}",
            u,
            Optionality.OPTIONAL if i in optional else Optionality.MANDATORY,
            i not in inactive,
        )
        for i, u in enumerate(utils)
    ]
    return VmState(vid, "", mss, kind)


def host(hid: str, *vms: VmState, cap: float = 1.0, idle: float = 153.0, full: float = 230.0,
         mode: PowerMode = PowerMode.ACTIVE) -> HostState:
    return HostState(spec(hid, cap, idle, full), mode, list(vms))


def cluster(*hosts: HostState) -> ClusterState:
    return ClusterState(list(hosts))


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
