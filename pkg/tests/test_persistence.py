"""Canonical save/load round-trips."""

import random

import pytest

from adaptdom.adaptation import AdaptationLogic, Policy, Reactive, Retroactive
from adaptdom.confgraph import Component, ConfigGraph, Connection
from adaptdom.errors import (
    DanglingReference,
    DirtyRegistry,
    ParseError,
    UnknownVersion,
)
from adaptdom.persistence import load_config, parse_document, save_config
from adaptdom.registry import EnumerateMode, Kind
from adaptdom.system import Host, System

from conftest import SCENARIOS


def fresh_system():
    system = System()
    system.registry.create_root()
    return system


def structural_fingerprint(system):
    """Everything load(save(S)) must reproduce: per-domain enumerations,
    logic and policy bindings, sensors, hosts, and the graph."""
    registry = system.registry
    parts = []
    domain_paths = {}
    for oid in registry.all_objects():
        paths = sorted(p.render() for p in registry.paths_of(oid))
        parts.append(("object", oid.kind.value, tuple(paths)))
        if oid.kind is Kind.DOMAIN and paths:
            domain_paths[paths[0]] = oid
    for path in sorted(domain_paths):
        domain = domain_paths[path]
        listing = tuple(
            (rel, member.kind.value)
            for rel, member in registry.enumerate(domain, EnumerateMode.INDIRECT)
        )
        parts.append(("enum", path, listing))
        logic = system.engine.logic_of(domain)
        if logic:
            policy = system.engine.policy_of(domain)
            parts.append((
                "logic", path, logic.name, repr(logic.strategy),
                tuple(sorted(logic.params.items())),
                tuple(sorted(policy.directives.items())), policy.enabled,
            ))
    for sensor in system.hub.registered_sensors():
        paths = tuple(sorted(p.render() for p in registry.paths_of(sensor)))
        parts.append(("sensor", paths, system.hub.heartbeat_of(sensor)))
    for host_id in system.hosts.host_ids():
        host = system.hosts.get(host_id)
        parts.append(("host", host_id, host.capacity, host.leak_rate, host.up))
    parts.append(("graph", tuple(system.graph.canonical_lines())))
    return sorted(parts, key=repr)


def random_system(rng: random.Random, max_objects=100):
    system = fresh_system()
    registry = system.registry
    domains = [registry.root]
    sensors = []
    n = rng.randrange(5, max_objects)
    for i in range(n):
        kind = rng.choice(
            [Kind.DOMAIN, Kind.PLAIN, Kind.PLAIN, Kind.SENSOR, Kind.ACTUATOR]
        )
        oid = registry.register(kind)
        registry.include(rng.choice(domains), oid, f"m{i}")
        if kind is Kind.DOMAIN:
            domains.append(oid)
            if rng.random() < 0.3:
                try:
                    registry.include(rng.choice(domains), oid, f"alt{i}")
                except Exception:
                    pass
        elif kind is Kind.SENSOR:
            sensors.append(oid)
    for sensor in sensors:
        system.hub.register_sensor(sensor, rng.randrange(0, 100))
    for h in range(rng.randrange(1, 5)):
        system.hosts.add(Host(f"h{h}", float(rng.randrange(100, 2000))))
    hosts = system.hosts.host_ids()
    comps = {}
    for c in range(rng.randrange(0, 12)):
        comps[f"c{c}"] = Component(rng.choice(["web", "db"]), rng.choice(hosts))
    conns = set()
    for c in range(len(comps)):
        target = rng.randrange(len(comps))
        if target != c:
            conns.add(Connection(f"c{c}", f"p{c}", f"c{target}", "in"))
    system.config_manager.graph = ConfigGraph(comps, conns)
    for domain in rng.sample(domains, k=min(len(domains), 3)):
        strategy = rng.choice([Reactive(), Retroactive(period=rng.randrange(10, 99))])
        system.engine.load_logic(domain, AdaptationLogic(
            name=f"logic{domain.seq}",
            strategy=strategy,
            analyze="threshold",
            params={"event_type": "tick", "field": "v", "op": "gt",
                    "limit": float(rng.randrange(1, 50))},
        ), Policy(directives={"cooldown": float(rng.randrange(0, 60))}))
    return system


class TestCanonicalForm:
    def test_fresh_root_minimal_document(self):
        data = save_config(fresh_system()).decode()
        assert data.splitlines()[0] == "adaptdom-config 1"
        assert "[domain 1 /]" in data
        assert data.endswith("end-config\n")

    def test_save_load_save_byte_identical(self):
        rng = random.Random(7)
        for _ in range(10):
            system = random_system(rng)
            first = save_config(system)
            second = save_config(load_config(first))
            assert first == second

    def test_two_saves_identical(self):
        rng = random.Random(8)
        system = random_system(rng)
        assert save_config(system) == save_config(system)

    @pytest.mark.parametrize("name", sorted(SCENARIOS))
    def test_shipped_scenarios_round_trip(self, name):
        first = save_config(load_config(SCENARIOS[name]))
        second = save_config(load_config(first))
        assert first == second


class TestIsomorphism:
    @pytest.mark.parametrize("seed", range(10))
    def test_load_save_reconstructs_structure(self, seed):
        rng = random.Random(seed)
        system = random_system(rng)
        rebuilt = load_config(save_config(system))
        assert structural_fingerprint(system) == structural_fingerprint(rebuilt)

    def test_enumerate_identical_after_reload(self):
        system = load_config(SCENARIOS["healing"])
        rebuilt = load_config(save_config(system))
        for path in ("/", "/healing"):
            original = system.registry.enumerate(
                system.registry.resolve(path), EnumerateMode.INDIRECT
            )
            copied = rebuilt.registry.enumerate(
                rebuilt.registry.resolve(path), EnumerateMode.INDIRECT
            )
            assert [rel for rel, _ in original] == [rel for rel, _ in copied]


class TestErrors:
    def test_orphans_block_save_without_flag(self):
        system = fresh_system()
        system.registry.register(Kind.PLAIN)
        with pytest.raises(DirtyRegistry):
            save_config(system)
        assert save_config(system, allow_orphans=True)

    def test_orphans_round_trip_with_flag(self):
        system = fresh_system()
        system.registry.register(Kind.PLAIN)
        data = save_config(system, allow_orphans=True)
        rebuilt = load_config(data)
        assert len(rebuilt.registry.orphans()) == 1
        assert save_config(rebuilt, allow_orphans=True) == data

    def test_undeclared_reference(self):
        text = (
            "adaptdom-config 1\n[system]\nroot = 1\n[objects]\nobject 1 domain\n"
            "[domain 1 /]\nghost = 42\nend-config\n"
        )
        with pytest.raises(DanglingReference):
            load_config(text)

    def test_truncated_file_gives_parse_error_with_location(self):
        full = save_config(load_config(SCENARIOS["healing"])).decode()
        truncated = "\n".join(full.splitlines()[:10]) + "\n"
        with pytest.raises(ParseError) as err:
            load_config(truncated)
        assert err.value.line > 0
        assert "trunc" in str(err.value) or "end marker" in str(err.value)

    def test_unknown_version(self):
        with pytest.raises(UnknownVersion):
            parse_document("adaptdom-config 99\nend-config\n")

    def test_garbage_header(self):
        with pytest.raises(ParseError):
            parse_document("not a config\n")

    def test_syntax_error_carries_line_number(self):
        text = "adaptdom-config 1\n[system]\nroot = 1\n[objects]\nobject x y\nend-config\n"
        with pytest.raises(ParseError) as err:
            parse_document(text)
        assert err.value.line == 5

    def test_exponent_float_params_keep_their_type(self):
        system = fresh_system()
        d = system.registry.register(Kind.DOMAIN)
        system.registry.include(system.registry.root, d, "d")
        system.engine.load_logic(d, AdaptationLogic(
            name="tiny", strategy=Reactive(), analyze="threshold",
            params={"limit": 1e-07, "big": 1e+16},
        ))
        rebuilt = load_config(save_config(system))
        logic = rebuilt.engine.logic_of(rebuilt.registry.resolve("/d"))
        assert logic.params["limit"] == 1e-07
        assert logic.params["big"] == 1e+16
        assert isinstance(logic.params["limit"], float)

    def test_comments_and_blank_lines_ignored(self):
        text = (
            "adaptdom-config 1\n# a comment\n\n[system]\nroot = 1\n"
            "[objects]\nobject 1 domain  # trailing\n[domain 1 /]\nend-config\n"
        )
        system = load_config(text)
        assert system.registry.root is not None
