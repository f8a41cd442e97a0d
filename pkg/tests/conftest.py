"""Shared builders for framework tests."""

import random

import pytest

from adaptdom.confgraph import (
    AddComponent,
    AddConnection,
    Component,
    ConfigGraph,
    Connection,
)
from adaptdom.registry import Kind, Registry
from adaptdom.system import Host, System

SCENARIOS = {
    "healing": "scenarios/healing.cfg",
    "rejuvenation": "scenarios/rejuvenation.cfg",
    "optimization": "scenarios/optimization.cfg",
}


@pytest.fixture
def registry():
    r = Registry()
    r.create_root()
    return r


@pytest.fixture
def system():
    sys_ = System()
    sys_.registry.create_root()
    return sys_


def make_hosts(system, names, capacity=1000.0):
    for name in names:
        system.hosts.add(Host(name, capacity))


def chain_graph(n=3, host="h1", prefix="c"):
    """A linear pipeline graph c1 -> c2 -> ... -> cn on one host."""
    components = {f"{prefix}{i}": Component("svc", host) for i in range(1, n + 1)}
    connections = {
        Connection(f"{prefix}{i}", "out", f"{prefix}{i+1}", "in")
        for i in range(1, n)
    }
    return ConfigGraph(components, connections)


def random_hierarchy(rng: random.Random, registry: Registry, max_objects=50):
    """Grow a random acyclic domain hierarchy; returns all created ids."""
    root = registry.root
    domains = [root]
    objects = [root]
    n = rng.randrange(2, max_objects)
    for i in range(n):
        kind = rng.choice([Kind.DOMAIN, Kind.PLAIN, Kind.SENSOR, Kind.ACTUATOR])
        oid = registry.register(kind)
        objects.append(oid)
        parent = rng.choice(domains)
        registry.include(parent, oid, f"n{i}")
        if kind is Kind.DOMAIN:
            domains.append(oid)
            # Occasionally give a domain a second parent.
            if rng.random() < 0.2:
                other = rng.choice(domains)
                try:
                    registry.include(other, oid, f"alt{i}")
                except Exception:
                    pass
        elif rng.random() < 0.3:
            other = rng.choice(domains)
            try:
                registry.include(other, oid, f"alt{i}")
            except Exception:
                pass
    return objects


def exhaustive_paths(registry: Registry, target):
    """Brute-force oracle: every root-anchored path reaching `target`,
    found by walking all member edges from the root."""
    from adaptdom.paths import PathName
    from adaptdom.registry import Kind

    found = set()
    stack = [(registry.root, ())]
    while stack:
        current, segs = stack.pop()
        if current == target:
            found.add(PathName(segs))
        if current.kind is Kind.DOMAIN:
            for name, member in registry.member_names(current).items():
                stack.append((member, segs + (name,)))
    return found
