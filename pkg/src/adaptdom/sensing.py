"""Adaptation events, sensors, and two actuator kinds.

Any managed object registered here may emit events; routing delivers an
event to every domain the source belongs to, directly or indirectly.
Adaptation commands flow from a parent domain to one of its (transitive)
child domains. Mobile agents walk an itinerary of path names, executing
a registered action at each stop and reporting per-stop outcomes; an
unresolvable stop is skipped, not fatal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .confgraph import ReconfigTxn
from .errors import (
    EmptyItinerary,
    NotAChild,
    TimeRegression,
    UnknownAction,
    UnknownId,
    UnknownSensor,
)
from .paths import PathName
from .registry import ObjectId, Registry
from .trace import TraceLog, format_scalar


@dataclass(frozen=True)
class AdaptationEvent:
    event_id: int
    source: ObjectId
    event_type: str
    payload: dict[str, float | int | str]
    timestamp: int
    provenance: tuple[ObjectId, ...] = ()

    def render_payload(self) -> str:
        return ",".join(
            f"{k}:{format_scalar(v)}" for k, v in sorted(self.payload.items())
        ) or "-"


# --- actuator actions ---

@dataclass(frozen=True)
class AdaptationCommand:
    from_domain: ObjectId
    to_domain: ObjectId
    verb: str
    args: dict[str, float | int | str] = field(default_factory=dict)

    def render_args(self) -> str:
        return ",".join(
            f"{k}:{format_scalar(v)}" for k, v in sorted(self.args.items())
        ) or "-"


@dataclass(frozen=True)
class CommandResult:
    handled: bool
    detail: str = ""


@dataclass(frozen=True)
class MobileAgent:
    agent_id: ObjectId
    itinerary: tuple[PathName, ...]
    action: str


@dataclass(frozen=True)
class StopOutcome:
    status: str  # ok | skipped | failed
    reason: str = ""

    def render(self) -> str:
        return f"failed:{self.reason}" if self.status == "failed" else self.status


@dataclass
class AgentReport:
    agent_id: ObjectId
    outcomes: list[StopOutcome] = field(default_factory=list)
    started: int = 0
    finished: Optional[int] = None

    @property
    def done(self) -> bool:
        return self.finished is not None

    def render_outcomes(self) -> str:
        return "|".join(o.render() for o in self.outcomes) or "-"


@dataclass(frozen=True)
class GraphEditAction:
    txn: ReconfigTxn


@dataclass(frozen=True)
class CommandAction:
    command: AdaptationCommand


@dataclass(frozen=True)
class AgentLaunchAction:
    agent: MobileAgent


ActuatorAction = GraphEditAction | CommandAction | AgentLaunchAction


def action_signature(action: ActuatorAction) -> str:
    """Canonical rendering used for cooldown deduplication and traces."""
    if isinstance(action, GraphEditAction):
        return f"graph_edit[{action.txn.render_edits()}]"
    if isinstance(action, CommandAction):
        cmd = action.command
        return f"command[{cmd.verb}@{cmd.to_domain} {cmd.render_args()}]"
    agent = action.agent
    stops = ",".join(p.render() for p in agent.itinerary)
    return f"agent[{agent.action}:{stops}]"


# --- the hub ---

@dataclass
class _SensorInfo:
    heartbeat: int
    last_emit: Optional[int] = None


class ActuationHub:
    """Sensor registrations, event emission, commands, and agent flights."""

    def __init__(self, registry: Registry, trace: TraceLog):
        self._registry = registry
        self._trace = trace
        self._sensors: dict[ObjectId, _SensorInfo] = {}
        self._actions: dict[str, Callable] = {"noop": lambda ctx, path, target: None}
        self._next_event_id = 1
        self.agent_hop_latency = 1
        # Wired by the system: engine.dispatch_event and engine.deliver_command.
        self.dispatch: Optional[Callable[[AdaptationEvent], list]] = None
        self.deliver_command: Optional[Callable[[AdaptationCommand, int], CommandResult]] = None
        self.action_context = None

    # --- sensors ---

    def register_sensor(self, sensor: ObjectId, heartbeat: int = 0) -> None:
        if not self._registry.known(sensor):
            raise UnknownId(f"unknown object {sensor}")
        self._sensors[sensor] = _SensorInfo(heartbeat)

    def is_sensor(self, sensor: ObjectId) -> bool:
        return sensor in self._sensors

    def heartbeat_of(self, sensor: ObjectId) -> int:
        return self._sensors[sensor].heartbeat

    def last_emit_of(self, sensor: ObjectId) -> Optional[int]:
        info = self._sensors.get(sensor)
        return info.last_emit if info else None

    def registered_sensors(self) -> list[ObjectId]:
        return sorted(self._sensors)

    def allocate_event_id(self) -> int:
        """Reserve the next globally monotone event id."""
        eid = self._next_event_id
        self._next_event_id += 1
        return eid

    def emit(self, sensor: ObjectId, event_type: str, payload: dict, now: int) -> int:
        """Build and route an event; returns the number of domains reached."""
        info = self._sensors.get(sensor)
        if info is None:
            raise UnknownSensor(f"{sensor} is not a registered sensor")
        if info.last_emit is not None and now < info.last_emit:
            raise TimeRegression(
                f"{sensor} emitted at {now} after {info.last_emit}"
            )
        info.last_emit = now
        event = AdaptationEvent(
            self.allocate_event_id(), sensor, event_type, dict(payload), now
        )
        if self.dispatch is None:
            routed = 0
        else:
            routed = len(self.dispatch(event))
        self._trace.record(
            now, "event",
            id=event.event_id,
            src=sensor,
            type=event_type,
            domains=routed,
            payload=event.render_payload(),
        )
        return routed

    # --- commands ---

    def send_command(self, cmd: AdaptationCommand, now: int = 0) -> CommandResult:
        if not self._registry.is_descendant_domain(cmd.from_domain, cmd.to_domain):
            raise NotAChild(f"{cmd.to_domain} is not a child domain of {cmd.from_domain}")
        if self.deliver_command is None:
            result = CommandResult(False, "no engine attached")
        else:
            result = self.deliver_command(cmd, now)
        self._trace.record(
            now, "command",
            src=cmd.from_domain,
            dst=cmd.to_domain,
            verb=cmd.verb,
            args=cmd.render_args(),
            result="handled" if result.handled else "unhandled",
        )
        return result

    # --- agents ---

    def register_action(self, token: str, fn: Callable) -> None:
        self._actions[token] = fn

    def launch_agent(
        self,
        from_domain: ObjectId,
        agent: MobileAgent,
        now: int = 0,
        scheduler=None,
    ) -> AgentReport:
        """Fly the agent. With a scheduler, hops become discrete events and
        the report fills in as they complete; without one, they run inline."""
        if not agent.itinerary:
            raise EmptyItinerary(f"agent {agent.agent_id} has no stops")
        if agent.action not in self._actions:
            raise UnknownAction(f"unregistered action {agent.action!r}")
        report = AgentReport(agent.agent_id, started=now)
        if agent.agent_id not in self._sensors:
            # Agents report through the event channel too, so they act as
            # sensors with no heartbeat expectation.
            self._sensors[agent.agent_id] = _SensorInfo(0)
        if scheduler is None:
            hop_time = now
            for stop in agent.itinerary:
                hop_time += self.agent_hop_latency
                self._hop(agent, stop, report, hop_time)
            self._complete(from_domain, agent, report, hop_time)
        else:
            self._schedule_hop(from_domain, agent, report, 0, scheduler)
        return report

    def _schedule_hop(self, from_domain, agent, report, index, scheduler) -> None:
        when = scheduler.now + self.agent_hop_latency

        def fly():
            self._hop(agent, agent.itinerary[index], report, scheduler.now)
            if index + 1 < len(agent.itinerary):
                self._schedule_hop(from_domain, agent, report, index + 1, scheduler)
            else:
                self._complete(from_domain, agent, report, scheduler.now)

        scheduler.schedule(when, fly)

    def _hop(self, agent: MobileAgent, stop: PathName, report: AgentReport, now: int) -> None:
        try:
            target = self._registry.resolve(stop)
        except Exception:
            outcome = StopOutcome("skipped")
        else:
            try:
                self._actions[agent.action](self.action_context, stop, target)
                outcome = StopOutcome("ok")
            except Exception as exc:  # action failures are reported, not raised
                outcome = StopOutcome("failed", type(exc).__name__)
        report.outcomes.append(outcome)
        self._trace.record(
            now, "agent_hop",
            agent=agent.agent_id,
            stop=stop.render(),
            outcome=outcome.render(),
        )

    def _complete(self, from_domain: ObjectId, agent: MobileAgent, report: AgentReport, now: int) -> None:
        report.finished = now
        self._trace.record(
            now, "agent_report",
            agent=agent.agent_id,
            issuer=from_domain,
            outcomes=report.render_outcomes(),
        )
        counts = {"ok": 0, "skipped": 0, "failed": 0}
        for outcome in report.outcomes:
            counts[outcome.status] += 1
        self.emit(agent.agent_id, "agent_report", counts, now)
