"""Components-and-connections graph and its reconfiguration manager.

Reconfiguration is transactional: a transaction's ordered edits are
normalized to a single net delta, validated against the post-state, and
executed under blocking. The block set is the delta's components plus
the in-neighbors (initiators) of anything removed, replaced, or moved.
Admission is serialized; transactions whose block sets are disjoint from
everything in flight run concurrently, everything else queues FIFO.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Protocol

from .errors import InvalidTxn
from .paths import check_token
from .trace import TraceLog


class ComponentState(Enum):
    ACTIVE = "active"
    BLOCKED = "blocked"
    DOWN = "down"


@dataclass(frozen=True)
class Component:
    kind: str
    host: str
    state: ComponentState = ComponentState.ACTIVE


@dataclass(frozen=True)
class Connection:
    src: str
    src_port: str
    dst: str
    dst_port: str

    def render(self) -> str:
        return f"{self.src} {self.src_port} -> {self.dst} {self.dst_port}"


@dataclass
class ConfigGraph:
    """The runtime meta-model of components and their connections."""

    components: dict[str, Component] = field(default_factory=dict)
    connections: set[Connection] = field(default_factory=set)

    def copy(self) -> "ConfigGraph":
        return ConfigGraph(dict(self.components), set(self.connections))

    def in_neighbors(self, cid: str) -> set[str]:
        return {c.src for c in self.connections if c.dst == cid}

    def incident(self, cid: str) -> set[Connection]:
        return {c for c in self.connections if cid in (c.src, c.dst)}

    def components_on(self, host: str) -> list[str]:
        return sorted(c for c, comp in self.components.items() if comp.host == host)

    def canonical_lines(self) -> list[str]:
        lines = [
            f"component {cid} kind={comp.kind} host={comp.host} state={comp.state.value}"
            for cid, comp in sorted(self.components.items())
        ]
        lines.extend(
            f"connection {conn.render()}"
            for conn in sorted(self.connections, key=lambda c: c.render())
        )
        return lines

    def structural_violations(self) -> list["Violation"]:
        """Invariant check usable on any graph value."""
        out: list[Violation] = []
        for conn in sorted(self.connections, key=lambda c: c.render()):
            if conn.src not in self.components or conn.dst not in self.components:
                out.append(Violation("DanglingConnection", conn.render()))
        seen_ports: set[tuple[str, str]] = set()
        for conn in sorted(self.connections, key=lambda c: c.render()):
            key = (conn.src, conn.src_port)
            if key in seen_ports:
                out.append(Violation("PortConflict", conn.render()))
            seen_ports.add(key)
        return out


# --- edits and transactions ---

@dataclass(frozen=True)
class AddComponent:
    cid: str
    kind: str
    host: str


@dataclass(frozen=True)
class RemoveComponent:
    cid: str


@dataclass(frozen=True)
class AddConnection:
    connection: Connection


@dataclass(frozen=True)
class RemoveConnection:
    connection: Connection


@dataclass(frozen=True)
class MoveComponent:
    cid: str
    new_host: str


@dataclass(frozen=True)
class ReplaceComponent:
    cid: str
    new_kind: str


Edit = AddComponent | RemoveComponent | AddConnection | RemoveConnection | MoveComponent | ReplaceComponent


def render_edit(edit: Edit) -> str:
    """Compact single-token rendering used in traces and reports."""
    if isinstance(edit, AddComponent):
        return f"add:{edit.cid}:{edit.kind}:{edit.host}"
    if isinstance(edit, RemoveComponent):
        return f"remove:{edit.cid}"
    if isinstance(edit, AddConnection):
        c = edit.connection
        return f"connect:{c.src}.{c.src_port}>{c.dst}.{c.dst_port}"
    if isinstance(edit, RemoveConnection):
        c = edit.connection
        return f"disconnect:{c.src}.{c.src_port}>{c.dst}.{c.dst_port}"
    if isinstance(edit, MoveComponent):
        return f"move:{edit.cid}:{edit.new_host}"
    return f"replace:{edit.cid}:{edit.new_kind}"


@dataclass(frozen=True)
class ReconfigTxn:
    """An atomic batch of graph edits. Empty edit lists are no-ops."""

    txn_id: str
    edits: tuple[Edit, ...] = ()

    def __post_init__(self):
        check_token(self.txn_id)

    def render_edits(self) -> str:
        return ";".join(render_edit(e) for e in self.edits) or "noop"


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


class HostStatusView(Protocol):
    def host_exists(self, host_id: str) -> bool: ...
    def host_is_up(self, host_id: str) -> bool: ...


def _apply_edits(graph: ConfigGraph, txn: ReconfigTxn):
    """Sequentially apply edits to a working copy, collecting violations.

    Also marks which components were moved or replaced: a same-kind
    replace or a move back to the original host is still a restart, so it
    must show up in the delta even though the value diff is empty.
    """
    comps = dict(graph.components)
    conns = set(graph.connections)
    violations: list[Violation] = []
    moved: set[str] = set()
    replaced: set[str] = set()
    for edit in txn.edits:
        if isinstance(edit, AddComponent):
            if edit.cid in comps:
                violations.append(Violation("DuplicateComponent", edit.cid))
            else:
                comps[edit.cid] = Component(edit.kind, edit.host)
        elif isinstance(edit, RemoveComponent):
            if edit.cid not in comps:
                violations.append(Violation("UnknownComponent", edit.cid))
            else:
                del comps[edit.cid]
        elif isinstance(edit, AddConnection):
            if edit.connection in conns:
                violations.append(Violation("DuplicateConnection", edit.connection.render()))
            else:
                conns.add(edit.connection)
        elif isinstance(edit, RemoveConnection):
            if edit.connection not in conns:
                violations.append(Violation("UnknownConnection", edit.connection.render()))
            else:
                conns.discard(edit.connection)
        elif isinstance(edit, MoveComponent):
            if edit.cid not in comps:
                violations.append(Violation("UnknownComponent", edit.cid))
            else:
                comps[edit.cid] = replace(
                    comps[edit.cid], host=edit.new_host, state=ComponentState.ACTIVE
                )
                moved.add(edit.cid)
        elif isinstance(edit, ReplaceComponent):
            if edit.cid not in comps:
                violations.append(Violation("UnknownComponent", edit.cid))
            else:
                comps[edit.cid] = replace(
                    comps[edit.cid], kind=edit.new_kind, state=ComponentState.ACTIVE
                )
                replaced.add(edit.cid)
    return comps, conns, violations, moved, replaced


@dataclass(frozen=True)
class NetDelta:
    """A transaction's edits collapsed against a specific pre-state."""

    added: frozenset[str]
    removed: frozenset[str]
    moved: frozenset[str]
    replaced: frozenset[str]
    conns_added: frozenset[Connection]
    conns_removed: frozenset[Connection]

    @property
    def is_noop(self) -> bool:
        return not (
            self.added or self.removed or self.moved or self.replaced
            or self.conns_added or self.conns_removed
        )


def net_delta(graph: ConfigGraph, txn: ReconfigTxn) -> NetDelta:
    comps, conns, _, moved, replaced = _apply_edits(graph, txn)
    added = {cid for cid in comps if cid not in graph.components}
    # A component both created and destroyed inside the transaction nets
    # out entirely; moves/replaces only count for survivors that predate
    # the transaction (a fresh add subsumes them).
    survivors = {
        cid for cid in comps if cid in graph.components
    }
    return NetDelta(
        frozenset(added),
        frozenset(cid for cid in graph.components if cid not in comps),
        frozenset(moved & survivors),
        frozenset(replaced & survivors),
        frozenset(conns - graph.connections),
        frozenset(graph.connections - conns),
    )


def validate(
    graph: ConfigGraph,
    txn: ReconfigTxn,
    hosts: Optional[HostStatusView] = None,
) -> ValidationReport:
    """Check the transaction's post-state; violations are reported, not raised."""
    comps, conns, violations, _, _ = _apply_edits(graph, txn)
    post = ConfigGraph(comps, conns)
    violations.extend(post.structural_violations())
    if hosts is not None:
        delta = net_delta(graph, txn)
        for cid in sorted(delta.added | delta.moved):
            host = comps[cid].host
            if not hosts.host_exists(host):
                violations.append(Violation("UnknownHost", f"{cid} -> {host}"))
            elif not hosts.host_is_up(host):
                violations.append(Violation("HostDown", f"{cid} -> {host}"))
    return ValidationReport(tuple(violations))


def apply(graph: ConfigGraph, txn: ReconfigTxn) -> ConfigGraph:
    """Pure post-state computation; raises InvalidTxn on a bad transaction.

    Moved and replaced components come out active: a move is a restart on
    the target host, a replace is the restart used by rejuvenation.
    """
    report = validate(graph, txn)
    if not report.ok:
        raise InvalidTxn(f"{txn.txn_id}: {report.violations[0]}", report=report)
    comps, conns, _, _, _ = _apply_edits(graph, txn)
    return ConfigGraph(comps, conns)


def compute_block_set(
    graph: ConfigGraph,
    txn: ReconfigTxn,
    hosts: Optional[HostStatusView] = None,
) -> frozenset[str]:
    """Components that must be quiescent for the transaction to apply."""
    report = validate(graph, txn, hosts)
    if not report.ok:
        raise InvalidTxn(f"{txn.txn_id}: {report.violations[0]}", report=report)
    delta = net_delta(graph, txn)
    named: set[str] = set(delta.added | delta.removed | delta.moved | delta.replaced)
    for conn in delta.conns_added | delta.conns_removed:
        named.add(conn.src)
        named.add(conn.dst)
    initiators: set[str] = set()
    for cid in delta.removed | delta.moved | delta.replaced:
        initiators |= graph.in_neighbors(cid)
    return frozenset(named | initiators)


def can_run_concurrently(
    a: ReconfigTxn, b: ReconfigTxn, graph: ConfigGraph,
    hosts: Optional[HostStatusView] = None,
) -> bool:
    return not (compute_block_set(graph, a, hosts) & compute_block_set(graph, b, hosts))


# --- the live manager ---

class Scheduler(Protocol):
    @property
    def now(self) -> int: ...
    def schedule(self, time: int, fn: Callable[[], None]) -> None: ...


@dataclass
class TxnResult:
    txn_id: str
    status: str  # committed | aborted
    block_set: frozenset[str]
    commit_time: Optional[int] = None
    reason: str = ""
    kinds_preserved: bool = True


@dataclass
class _Flight:
    txn: ReconfigTxn
    owner: Optional[object]
    block_set: frozenset[str] = frozenset()
    started_at: int = -1
    hosts_up_at_start: frozenset[str] = frozenset()
    result: Optional[TxnResult] = None

    @property
    def done(self) -> bool:
        return self.result is not None


class _AllHostsUp:
    def host_exists(self, host_id: str) -> bool:
        return True

    def host_is_up(self, host_id: str) -> bool:
        return True


class ConfigManager:
    """Single admission point owning the live graph.

    Admitted transactions with mutually disjoint block sets execute
    concurrently; conflicting ones queue FIFO. Execution blocks the block
    set, waits until no application traffic occupies a blocked component,
    applies the net delta atomically, then unblocks. A host failing under
    a blocked component aborts the transaction.
    """

    def __init__(
        self,
        graph: ConfigGraph,
        scheduler: Scheduler,
        trace: TraceLog,
        hosts: Optional[HostStatusView] = None,
        occupancy: Optional[Callable[[str], int]] = None,
        latency: int = 1,
        on_abort: Optional[Callable[[_Flight, str], None]] = None,
        on_commit: Optional[Callable[[_Flight], None]] = None,
    ):
        self.graph = graph
        self._scheduler = scheduler
        self._trace = trace
        self._hosts = hosts if hosts is not None else _AllHostsUp()
        self._occupancy = occupancy or (lambda cid: 0)
        self._latency = max(1, latency)
        self.on_abort = on_abort
        self.on_commit = on_commit
        self._in_flight: list[_Flight] = []
        self._queue: list[_Flight] = []
        self._draining = False

    def submit(self, txn: ReconfigTxn, owner=None) -> _Flight:
        now = self._scheduler.now
        block = compute_block_set(self.graph, txn, self._hosts)
        flight = _Flight(txn, owner, block)
        conflicts = self._conflicts(block)
        status = "queued" if conflicts else "started"
        self._trace.record(
            now, "txn_submit",
            id=txn.txn_id,
            edits=txn.render_edits(),
            block="|".join(sorted(block)) or "-",
            status=status,
        )
        if conflicts:
            self._queue.append(flight)
        else:
            self._start(flight)
        return flight

    def _conflicts(self, block: frozenset[str]) -> bool:
        for flight in self._in_flight:
            if not flight.done and flight.block_set & block:
                return True
        # FIFO among conflicting: anything queued ahead also blocks us.
        for flight in self._queue:
            if flight.block_set & block:
                return True
        return False

    def _start(self, flight: _Flight) -> None:
        now = self._scheduler.now
        # Recompute against the current graph: earlier commits may have
        # changed it since this transaction queued.
        report = validate(self.graph, flight.txn, self._hosts)
        if not report.ok:
            self._finish(flight, "aborted", reason=str(report.violations[0]))
            return
        flight.block_set = compute_block_set(self.graph, flight.txn, self._hosts)
        flight.started_at = now
        flight.hosts_up_at_start = frozenset(
            self.graph.components[cid].host
            for cid in flight.block_set
            if cid in self.graph.components
            and self._hosts.host_is_up(self.graph.components[cid].host)
        )
        for cid in sorted(flight.block_set):
            comp = self.graph.components.get(cid)
            if comp is not None and comp.state is ComponentState.ACTIVE:
                self.graph.components[cid] = replace(comp, state=ComponentState.BLOCKED)
        self._trace.record(
            now, "txn_block",
            id=flight.txn.txn_id,
            components="|".join(sorted(flight.block_set)) or "-",
        )
        self._in_flight.append(flight)
        self._scheduler.schedule(now + self._latency, lambda: self._check(flight))

    def _check(self, flight: _Flight) -> None:
        if flight.done:
            return
        now = self._scheduler.now
        for cid in sorted(flight.block_set):
            comp = self.graph.components.get(cid)
            if comp is None:
                continue
            if comp.host in flight.hosts_up_at_start and not self._hosts.host_is_up(comp.host):
                self._unblock(flight)
                self._finish(flight, "aborted", reason=f"host_down:{comp.host}")
                return
        if any(self._occupancy(cid) > 0 for cid in flight.block_set):
            self._scheduler.schedule(now + 1, lambda: self._check(flight))
            return
        kinds_before = sorted(c.kind for c in self.graph.components.values())
        self.graph = apply(self.graph, flight.txn)
        kinds_after = sorted(c.kind for c in self.graph.components.values())
        self._unblock(flight)
        self._finish(flight, "committed", commit_time=now,
                     kinds_preserved=kinds_before == kinds_after)

    def _unblock(self, flight: _Flight) -> None:
        for cid in sorted(flight.block_set):
            comp = self.graph.components.get(cid)
            if comp is not None and comp.state is ComponentState.BLOCKED:
                self.graph.components[cid] = replace(comp, state=ComponentState.ACTIVE)

    def _finish(self, flight: _Flight, status: str, commit_time=None, reason="",
                kinds_preserved=True) -> None:
        now = self._scheduler.now
        flight.result = TxnResult(
            flight.txn.txn_id, status, flight.block_set, commit_time, reason,
            kinds_preserved,
        )
        if flight in self._in_flight:
            self._in_flight.remove(flight)
        if status == "committed":
            self._trace.record(
                now, "txn_commit",
                id=flight.txn.txn_id,
                components="|".join(sorted(flight.block_set)) or "-",
            )
            if self.on_commit is not None:
                self.on_commit(flight)
        else:
            self._trace.record(
                now, "txn_abort",
                id=flight.txn.txn_id,
                reason=(reason or "-").replace(" ", "_"),
            )
            if self.on_abort is not None:
                self.on_abort(flight, reason)
        self._drain_queue()

    def _drain_queue(self) -> None:
        # Starting a queued transaction can finish it immediately (abort),
        # which re-enters here; the guard plus full re-scans keep the FIFO
        # discipline without recursion.
        if self._draining:
            return
        self._draining = True
        try:
            changed = True
            while changed:
                changed = False
                active = [f.block_set for f in self._in_flight if not f.done]
                ahead: list[frozenset] = []
                for flight in list(self._queue):
                    if any(flight.block_set & b for b in active + ahead):
                        ahead.append(flight.block_set)
                        continue
                    self._queue.remove(flight)
                    self._start(flight)
                    changed = True
                    break
        finally:
            self._draining = False

    @property
    def pending(self) -> int:
        return len(self._in_flight) + len(self._queue)

    def mark_host_down(self, host_id: str, now: int) -> list[str]:
        """Record a host failure in the graph: resident components go down."""
        affected = []
        for cid in self.graph.components_on(host_id):
            comp = self.graph.components[cid]
            if comp.state is not ComponentState.DOWN:
                self.graph.components[cid] = replace(comp, state=ComponentState.DOWN)
                affected.append(cid)
        return affected
