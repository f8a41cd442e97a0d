"""Composition root: virtual clock, host table, and the wired framework.

A System bundles one registry, one actuation hub, one adaptation engine,
and one configuration manager around a shared deterministic clock and
trace. The simulator drives a System from a scenario; tests may also
drive one directly.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Optional

from .adaptation import AdaptationEngine
from .confgraph import ConfigGraph, ConfigManager
from .errors import AdaptdomError, UnknownHost
from .registry import ObjectId, Registry
from .sensing import (
    ActuationHub,
    ActuatorAction,
    AdaptationEvent,
    AgentLaunchAction,
    CommandAction,
    GraphEditAction,
)
from .trace import TraceLog


class SimClock:
    """Priority queue of (time, sequence, callback); ties run in schedule
    order, so a fixed schedule always replays identically."""

    def __init__(self):
        self._now = 0
        self._seq = 0
        self._heap: list[tuple[int, int, Callable[[], None]]] = []

    @property
    def now(self) -> int:
        return self._now

    def schedule(self, time: int, fn: Callable[[], None]) -> None:
        heapq.heappush(self._heap, (max(time, self._now), self._seq, fn))
        self._seq += 1

    def run_until(self, until: int) -> None:
        while self._heap and self._heap[0][0] <= until:
            time, _, fn = heapq.heappop(self._heap)
            if time > self._now:
                self._now = time
            fn()
        if until > self._now:
            self._now = until

    def pending(self) -> int:
        return len(self._heap)


@dataclass
class Host:
    """A simulated host: liveness, a leaking resource pool, link qualities.

    The level is computed lazily from the last mark so consecutive samples
    at period p differ by exactly leak_rate * p while the host is up.
    """

    host_id: str
    capacity: float
    leak_rate: float = 0.0
    up: bool = True
    links: dict[str, float] = None
    _mark_level: float = None
    _mark_time: int = 0

    def __post_init__(self):
        if self.links is None:
            self.links = {}
        if self._mark_level is None:
            self._mark_level = self.capacity

    def level(self, now: int) -> float:
        if not self.up:
            return self._mark_level
        drained = self._mark_level - self.leak_rate * (now - self._mark_time)
        return min(self.capacity, max(0.0, drained))

    def _remark(self, now: int) -> None:
        self._mark_level = self.level(now)
        self._mark_time = now

    def set_leak(self, rate: float, now: int) -> None:
        self._remark(now)
        self.leak_rate = rate

    def kill(self, now: int) -> None:
        self._remark(now)
        self.up = False

    def revive(self, now: int) -> None:
        if self.up:
            return
        self.up = True
        self._mark_time = now

    def reset(self, now: int) -> None:
        self._mark_level = self.capacity
        self._mark_time = now


class HostTable:
    """Host registry implementing the status/resource view used by the
    configuration manager and the placement planner."""

    def __init__(self, clock: SimClock):
        self._clock = clock
        self._hosts: dict[str, Host] = {}

    def add(self, host: Host) -> None:
        self._hosts[host.host_id] = host

    def get(self, host_id: str) -> Host:
        if host_id not in self._hosts:
            raise UnknownHost(f"unknown host {host_id!r}")
        return self._hosts[host_id]

    def host_ids(self) -> list[str]:
        return sorted(self._hosts)

    def host_exists(self, host_id: str) -> bool:
        return host_id in self._hosts

    def host_is_up(self, host_id: str) -> bool:
        return host_id in self._hosts and self._hosts[host_id].up

    def resource_level(self, host_id: str) -> float:
        return self.get(host_id).level(self._clock.now)

    def link_quality(self, a: str, b: str) -> float:
        return self.get(a).links.get(b, 1.0)

    def set_link_quality(self, a: str, b: str, quality: float) -> None:
        self.get(a).links[b] = quality
        self.get(b).links[a] = quality

    def links(self) -> list[tuple[str, str, float]]:
        out = []
        for a in self.host_ids():
            for b, quality in sorted(self._hosts[a].links.items()):
                if a < b:
                    out.append((a, b, quality))
        return out


class System:
    """One fully wired framework instance around a shared clock and trace."""

    def __init__(self, graph: Optional[ConfigGraph] = None,
                 reconfig_latency: int = 1):
        self.trace = TraceLog()
        self.clock = SimClock()
        self.registry = Registry()
        self.hub = ActuationHub(self.registry, self.trace)
        self.engine = AdaptationEngine(self.registry, self.hub, self.trace)
        self.hosts = HostTable(self.clock)
        self.occupancy: Callable[[str], int] = lambda cid: 0
        self.config_manager = ConfigManager(
            graph if graph is not None else ConfigGraph(),
            self.clock,
            self.trace,
            hosts=self.hosts,
            occupancy=lambda cid: self.occupancy(cid),
            latency=reconfig_latency,
            on_abort=self._on_txn_abort,
        )
        self.engine.graph_provider = lambda: self.config_manager.graph
        self.engine.hosts_provider = self.hosts
        self.engine.scheduler = self.clock
        self.engine.actuate = self._actuate
        self.hub.action_context = self
        self.scenario_params: dict[str, float | int | str] = {}
        # host_id <-> managed object mapping, filled in by config loading.
        self.host_objects: dict[str, ObjectId] = self.engine.host_objects
        # Scenario script (faults, probes, traffic flows) from the document.
        self.doc_faults: list = []
        self.doc_probes: list = []
        self.doc_flows: list = []

    @property
    def graph(self) -> ConfigGraph:
        return self.config_manager.graph

    def bind_host_object(self, host_id: str, oid: ObjectId) -> None:
        self.host_objects[host_id] = oid

    def host_id_of_object(self, oid: ObjectId) -> Optional[str]:
        for host_id, obj in self.host_objects.items():
            if obj == oid:
                return host_id
        return None

    def run_until(self, until: int) -> None:
        self.clock.run_until(until)

    # --- actuator fan-out ---

    def _actuate(self, time: int, action: ActuatorAction, domain: ObjectId) -> None:
        if time > self.clock.now:
            self.clock.schedule(time, lambda: self._perform(action, domain))
        else:
            self._perform(action, domain)

    def _perform(self, action: ActuatorAction, domain: ObjectId) -> None:
        now = self.clock.now
        try:
            if isinstance(action, GraphEditAction):
                self.config_manager.submit(action.txn, owner=domain)
            elif isinstance(action, CommandAction):
                self.hub.send_command(action.command, now)
            elif isinstance(action, AgentLaunchAction):
                self.hub.launch_agent(domain, action.agent, now, scheduler=self.clock)
        except AdaptdomError as exc:
            self.trace.record(
                now, "actuator_error",
                domain=domain, error=type(exc).__name__,
            )

    def _on_txn_abort(self, flight, reason: str) -> None:
        owner = flight.owner
        if owner is None:
            return
        event = AdaptationEvent(
            self.hub.allocate_event_id(),
            owner,
            "reconfig_aborted",
            {"txn": flight.txn.txn_id, "reason": reason},
            self.clock.now,
        )
        self.trace.record(
            self.clock.now, "event",
            id=event.event_id, src=owner, type=event.event_type,
            domains=1, payload=event.render_payload(),
        )
        self.engine._deliver(owner, event)

    def run_audits(self, now: int) -> None:
        for domain in self.engine.bound_domains():
            self.engine.audit_tick(domain, now)
