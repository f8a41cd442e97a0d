"""Acceptance criteria, one test per criterion, each printing PASS/FAIL.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion
lines as they complete.
"""

import itertools
import random
import time
from contextlib import contextmanager

import pytest

from adaptdom.adaptation import forecast_exhaustion
from adaptdom.cli import cli_main
from adaptdom.confgraph import (
    Component,
    ComponentState,
    ConfigGraph,
    Connection,
    MoveComponent,
    ReconfigTxn,
    RemoveComponent,
    ReplaceComponent,
    apply as apply_txn,
    validate,
)
from adaptdom.errors import InvalidTxn
from adaptdom.persistence import (
    ConfigDocument,
    DomainSection,
    FlowDecl,
    LogicSection,
    ProbeDecl,
    build_system,
    load_config,
    save_config,
)
from adaptdom.report import verify_report
from adaptdom.simharness import Simulator
from adaptdom.system import Host, System

from conftest import SCENARIOS
from test_persistence import random_system, structural_fingerprint


@contextmanager
def criterion(number, name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number} ({name}): FAIL")
        raise
    print(f"ACCEPTANCE {number} ({name}): PASS")


def placement_oracle(graph, levels, dead_host, weight=1.0):
    """Independent greedy reimplementation of the placement rule: target =
    up host with maximum free resource (level - weight * assigned), ties to
    the smallest host id, counts updated after each move."""
    survivors = sorted(h for h in levels if h != dead_host)
    counts = {h: 0 for h in survivors}
    for comp in graph.components.values():
        if comp.host in counts:
            counts[comp.host] += 1
    expected = {}
    for cid in sorted(c for c, comp in graph.components.items() if comp.host == dead_host):
        best, best_free = None, None
        for h in survivors:
            free = levels[h] - weight * counts[h]
            if best is None or free > best_free or (free == best_free and h < best):
                best, best_free = h, free
        expected[cid] = best
        counts[best] += 1
    return expected


def test_criterion_1_self_healing():
    with criterion(1, "self-healing restores placement per the oracle"):
        system = load_config(SCENARIOS["healing"])
        initial = system.graph.copy()
        started = time.monotonic()
        report = Simulator(system, seed=7).run(400)
        elapsed = time.monotonic() - started
        assert elapsed < 5.0, f"run took {elapsed:.2f}s"
        final = system.graph
        # All components active on surviving hosts.
        for cid, comp in final.components.items():
            assert comp.state is ComponentState.ACTIVE, cid
            assert comp.host in ("hostB", "hostC"), f"{cid} on {comp.host}"
        # Kind multiset and connection set preserved.
        assert sorted(c.kind for c in final.components.values()) == \
            sorted(c.kind for c in initial.components.values())
        assert final.connections == initial.connections
        # Placement matches the independent greedy oracle exactly.
        expected = placement_oracle(
            initial, {"hostA": 1000.0, "hostB": 1000.0, "hostC": 1000.0}, "hostA"
        )
        for cid, host in expected.items():
            assert final.components[cid].host == host, (cid, host)
        # Untouched components never moved.
        for cid, comp in initial.components.items():
            if cid not in expected:
                assert final.components[cid].host == comp.host


def test_criterion_2_rejuvenation_before_exhaustion():
    with criterion(2, "rejuvenation commits strictly before exhaustion"):
        # Forecast crossing equals the algebraic value at 1e-9 relative.
        samples = [(50.0 + 10 * k, 1000.0 - 10 * k) for k in range(6)]
        got = forecast_exhaustion(samples, 0.0)
        assert got == pytest.approx(1050.0, rel=1e-9)
        for seed in range(10):
            system = load_config(SCENARIOS["rejuvenation"])
            report = Simulator(system, seed=seed).run(2000)
            assert report.metrics["exhaustions_reached"] == 0, f"seed {seed}"
            commits = [
                line for line in report.trace_lines
                if " txn_commit " in f" {line} " and "id=rejuv" in line
            ]
            assert commits, f"seed {seed}: no rejuvenation committed"
            # Reconstruct hostA's level at each commit from the sampled
            # trace: level falls 1.0/tick between a sample and the commit.
            samples_a = [
                (entry_time, level)
                for entry_time, level in _host_a_samples(report.trace_lines)
            ]
            for line in commits:
                t_commit = int(line.split()[0][2:])
                prior = [(t, l) for t, l in samples_a if t <= t_commit]
                assert prior, f"seed {seed}: commit before any sample"
                t_s, level = prior[-1]
                assert level - 1.0 * (t_commit - t_s) > 0.0, (
                    f"seed {seed}: commit at {t_commit} not before exhaustion"
                )


def _host_a_samples(trace_lines):
    out = []
    for line in trace_lines:
        if " event " not in f" {line} " or "type=resource_sample" not in line:
            continue
        if "host:hostA" not in line:
            continue
        t = int(line.split()[0][2:])
        payload = line.split("payload=")[1]
        level = float(dict(kv.split(":") for kv in payload.split(","))["level"])
        out.append((t, level))
    return out


# --- criterion 3 machinery ---

KINDS = ("web", "app", "db")


def _random_case_graph(rng, n):
    comps = {
        f"c{i}": Component(rng.choice(KINDS), rng.choice(["h1", "h2"]))
        for i in range(n)
    }
    conns = set()
    for i in range(n):
        j = rng.randrange(n)
        if i != j:
            conns.add(Connection(f"c{i}", f"p{i}", f"c{j}", "in"))
    return ConfigGraph(comps, conns)


def _random_case_txn(rng, graph, name):
    for _ in range(40):
        edits = []
        for _ in range(rng.randrange(1, 3)):
            cids = sorted(graph.components)
            pick = rng.randrange(3)
            if pick == 0:
                edits.append(MoveComponent(rng.choice(cids), rng.choice(["h1", "h2"])))
            elif pick == 1:
                edits.append(ReplaceComponent(rng.choice(cids), rng.choice(KINDS)))
            else:
                cid = rng.choice(cids)
                if not graph.incident(cid):
                    edits.append(RemoveComponent(cid))
        txn = ReconfigTxn(f"t{name}", tuple(edits))
        if edits and validate(graph, txn).ok:
            return txn
    return None


def _interval(trace_lines, txn_id):
    begin = end = None
    for seq, line in enumerate(trace_lines):
        if f"id={txn_id} " not in line + " " and not line.endswith(f"id={txn_id}"):
            continue
        t = int(line.split()[0][2:])
        s = int(line.split()[1][2:])
        if " txn_block " in f" {line} ":
            begin = (t, s)
        elif " txn_commit " in f" {line} " or " txn_abort " in f" {line} ":
            end = (t, s)
    return begin, end


def test_criterion_3_concurrent_reconfiguration():
    with criterion(3, "disjointness-based concurrency and serializability"):
        # (a) Disjoint transactions overlap in flight.
        graph = ConfigGraph({
            "A": Component("svc", "h1"), "B": Component("svc", "h1"),
            "C": Component("svc", "h1"), "D": Component("svc", "h1"),
        }, {Connection("A", "out", "B", "in"), Connection("C", "out", "D", "in")})
        system = System(graph=graph, reconfig_latency=3)
        system.hosts.add(Host("h1", 1000.0))
        fa = system.config_manager.submit(ReconfigTxn("ta", (ReplaceComponent("B", "svc"),)))
        fb = system.config_manager.submit(ReconfigTxn("tb", (ReplaceComponent("D", "svc"),)))
        system.run_until(30)
        lines = system.trace.lines()
        (b1, e1), (b2, e2) = _interval(lines, "ta"), _interval(lines, "tb")
        assert b1 < e2 and b2 < e1, "disjoint txns should overlap"
        assert fa.result.status == fb.result.status == "committed"

        # (b) Conflicting transactions never overlap.
        system = System(graph=graph.copy(), reconfig_latency=3)
        system.hosts.add(Host("h1", 1000.0))
        f1 = system.config_manager.submit(ReconfigTxn("t1", (ReplaceComponent("B", "svc"),)))
        f2 = system.config_manager.submit(ReconfigTxn("t2", (MoveComponent("B", "h1"),)))
        system.run_until(40)
        lines = system.trace.lines()
        (b1, e1), (b2, e2) = _interval(lines, "t1"), _interval(lines, "t2")
        assert not (b1 < e2 and b2 < e1), "conflicting txns must not overlap"
        assert f1.result.commit_time < f2.result.commit_time

        # (c) Randomized workloads: serializability plus zero quiescence
        # violations with application traffic running throughout.
        rng = random.Random(2024)
        cases = 1000
        for case in range(cases):
            g0 = _random_case_graph(rng, rng.randrange(4, 7))
            system = System(graph=g0.copy(), reconfig_latency=rng.randrange(1, 3))
            system.hosts.add(Host("h1", 1000.0))
            system.hosts.add(Host("h2", 1000.0))
            sim = Simulator(system, seed=case)
            path = tuple(sorted(g0.components))[:3]
            system.doc_flows = [FlowDecl(path, period=3, start=0)]
            flights = []
            n_txns = rng.randrange(1, 5)
            for k in range(n_txns):
                txn = _random_case_txn(rng, g0, f"{case}_{k}")
                if txn is None:
                    continue
                when = rng.randrange(0, 6)
                def submit(t=txn):
                    try:
                        flights.append(system.config_manager.submit(t))
                    except InvalidTxn:
                        pass
                system.clock.schedule(when, submit)
            report = sim.run(50)
            assert system.config_manager.pending == 0, f"case {case}: txn stuck"
            problems = verify_report(report.render())
            assert problems == [], f"case {case}: {problems}"
            committed = [
                f.txn for f in flights
                if f.result is not None and f.result.status == "committed"
            ]
            final = system.graph.canonical_lines()
            serials = []
            for order in itertools.permutations(committed):
                g = g0.copy()
                ok = True
                for txn in order:
                    try:
                        g = apply_txn(g, txn)
                    except InvalidTxn:
                        ok = False
                        break
                if ok:
                    serials.append(g.canonical_lines())
            assert final in serials, f"case {case}: no serial order matches"


def test_criterion_4_dynamic_attribute_acquisition():
    with criterion(4, "exclusion stops and re-inclusion restores rejuvenation"):
        system = load_config(SCENARIOS["rejuvenation"])
        system.scenario_params["jitter"] = 0
        sim = Simulator(system, seed=0)
        rejuv = system.registry.resolve("/rejuvenation")

        def txns_touching_r(trace, lo, hi):
            out = []
            for entry in trace.of_kind("txn_submit"):
                if lo < entry.time <= hi and "replace:r1" in entry.get("edits", ""):
                    out.append(entry)
            return out

        sim.run_until(1000)
        assert txns_touching_r(system.trace, 0, 1000), "no initial rejuvenation"
        bundle = _subdomain(system)
        system.registry.exclude(rejuv, "hostA")
        sim.run_until(1400)
        assert txns_touching_r(system.trace, 1000, 1400) == [], (
            "rejuvenation still targeting the excluded object"
        )
        system.registry.include(rejuv, bundle, "hostA")
        sim.run_until(2200)
        renewed = txns_touching_r(system.trace, 1400, 2200)
        assert renewed, "re-included object never rejuvenated again"
        commits = [e for e in system.trace.of_kind("txn_commit")
                   if 1400 < e.time <= 2200 and e.get("id", "").startswith("rejuv")]
        assert commits
        # The renewed cycle still reset the pool before exhaustion.
        reset_times = [e.time for e in system.trace.of_kind("host_reset")]
        assert len(reset_times) >= 2
        assert system.hosts.get("hostA").level(system.clock.now) > 0.0


def _subdomain(system):
    # The per-host bundle that was excluded keeps existing; find it by its
    # member set (holds the hostA object).
    from adaptdom.registry import Kind

    host_obj = system.host_objects["hostA"]
    for oid in system.registry.all_objects():
        if oid.kind is Kind.DOMAIN:
            if host_obj in system.registry.member_names(oid).values():
                return oid
    raise AssertionError("hostA bundle not found")


def test_criterion_5_persistence():
    with criterion(5, "persistence round-trip and replay soundness"):
        rng = random.Random(99)
        for _ in range(100):
            system = random_system(rng, max_objects=100)
            data = save_config(system)
            rebuilt = load_config(data)
            assert structural_fingerprint(system) == structural_fingerprint(rebuilt)
            assert save_config(rebuilt) == data
            assert save_config(system) == data  # byte-determinism
        for name, path in sorted(SCENARIOS.items()):
            import tempfile, os

            with tempfile.TemporaryDirectory() as tmp:
                rp = os.path.join(tmp, f"{name}.report")
                assert cli_main([
                    "run", path, "--seed", "5", "--until", "600", "--report", rp,
                ]) == 0
                assert cli_main(["replay", rp]) == 0


def _scale_document(hosts=50, components=1000):
    doc = ConfigDocument(root_id=1)
    doc.objects.append((1, "domain"))
    doc.objects.append((2, "domain"))
    root_sec = DomainSection(1, "/", [("healing", 2)])
    healing = DomainSection(2, "/healing", [])
    next_id = 3
    host_names = [f"h{i:02d}" for i in range(hosts)]
    for i, h in enumerate(host_names):
        doc.objects.append((next_id, "plain"))
        healing.members.append((h, next_id))
        doc.scenario_keys[f"host_object.{h}"] = next_id
        obj_id = next_id
        next_id += 1
        doc.objects.append((next_id, "sensor"))
        healing.members.append((f"live_{h}", next_id))
        doc.sensors.append((next_id, 30.0))
        doc.probes.append(ProbeDecl(next_id, "liveness", (h,)))
        next_id += 1
        doc.hosts.append((h, 10_000.0, 10_000.0, 0.0, "up"))
    doc.domains = [root_sec, healing]
    doc.logics.append(LogicSection(
        doc_id=2, path="/healing", name="healing", strategy="reactive",
        stages={"analyze": "failure_count", "monitor": "event_type_filter"},
        params={"count": 1, "event_types": "host_failed", "placement_weight": 1.0},
        policy={"cooldown": 50.0, "enabled": 1, "source": "human"},
    ))
    per_host = components // hosts
    for i in range(components):
        host = host_names[i // per_host]
        doc.components.append((f"c{i:04d}", KINDS[i % 3], host, "active"))
        if i % per_host != per_host - 1:
            doc.connections.append((f"c{i:04d}", "out", f"c{i + 1:04d}", "in"))
    doc.scenario_keys.update({
        "name": "scale-healing",
        "liveness_period": 10,
        "resource_period": 0,
        "link_period": 0,
        "audit_period": 0,
        "jitter": 0,
        "reconfig_latency": 1,
        "agent_hop_latency": 1,
    })
    doc.faults = []
    from adaptdom.persistence import FaultEntry

    doc.faults.append(FaultEntry(100, "kill", ("h07",)))
    doc.flows = [
        FlowDecl(("c0000", "c0001", "c0002"), period=7, start=0),
        FlowDecl(("c0400", "c0401"), period=11, start=2),
    ]
    return doc


def test_criterion_6_scale_envelope():
    with criterion(6, "1000 components over 50 hosts heal in under 60s"):
        doc = _scale_document()
        started = time.monotonic()
        system = build_system(doc)
        initial_kinds = sorted(c.kind for c in system.graph.components.values())
        report = Simulator(system, seed=1).run(300)
        problems = verify_report(report.render())
        elapsed = time.monotonic() - started
        assert problems == []
        assert elapsed < 60.0, f"scale run took {elapsed:.1f}s"
        final = system.graph
        assert all(
            comp.state is ComponentState.ACTIVE and comp.host != "h07"
            for comp in final.components.values()
        )
        assert sorted(c.kind for c in final.components.values()) == initial_kinds
        assert report.metrics["adaptations_executed"] >= 1


def test_criterion_7_determinism():
    with criterion(7, "shipped scenarios replay byte-identically"):
        for name, path in sorted(SCENARIOS.items()):
            first = Simulator(load_config(path), seed=13).run(800).render()
            second = Simulator(load_config(path), seed=13).run(800).render()
            assert first == second, f"{name} diverged"
