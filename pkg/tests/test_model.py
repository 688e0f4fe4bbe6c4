"""Structural model tests: mutations, the edge type table, cascade removal."""

import random

import pytest

from composecraft.errors import (
    DuplicateEdge,
    SelfEdge,
    StructuralViolation,
    TypeMismatch,
    UnknownArtifact,
    UnknownProperty,
)
from composecraft.model import (
    ArtifactClass,
    EDGE_TARGET_CLASS,
    EdgeKind,
    PortMapping,
    Stack,
    new_stack,
    stack_signature,
    stacks_equal,
)


def test_new_stack_is_empty():
    stack = new_stack("demo")
    assert stack.name == "demo"
    assert list(stack.artifacts()) == []
    assert stack.edges == []


def test_new_stack_accepts_empty_name():
    assert new_stack("").name == ""


def test_add_artifact_duplicate_keys_get_distinct_ids():
    stack = new_stack("dup")
    first = stack.add_artifact("service", "ser")
    second = stack.add_artifact("service", "ser")
    assert first != second
    assert [s.key for s in stack.services] == ["ser", "ser"]


def test_add_artifact_returns_volume_id():
    stack = new_stack("x")
    vol = stack.add_artifact("volume", "mongo-data")
    assert stack.get(vol).key == "mongo-data"


def test_bulk_insertion_preserves_order():
    stack = new_stack("bulk")
    keys = [f"svc-{i}" for i in range(1000)]
    for key in keys:
        stack.add_artifact("service", key)
    assert [s.key for s in stack.services] == keys


def test_connect_network_attachment():
    stack = new_stack("net")
    client = stack.add_artifact("service", "client")
    public = stack.add_artifact("network", "public-network")
    edge = stack.connect(client, EdgeKind.NETWORK_ATTACHMENT, public)
    assert edge.from_id == client and edge.to_id == public


def test_connect_service_to_service_as_network_is_type_mismatch():
    stack = new_stack("net")
    a = stack.add_artifact("service", "a")
    b = stack.add_artifact("service", "b")
    with pytest.raises(TypeMismatch):
        stack.connect(a, EdgeKind.NETWORK_ATTACHMENT, b)


def test_connect_volume_mount_with_target():
    stack = new_stack("vol")
    db = stack.add_artifact("service", "db")
    vol = stack.add_artifact("volume", "mongo-data")
    edge = stack.connect(db, EdgeKind.VOLUME_MOUNT, vol, target="/data/db")
    assert edge.target == "/data/db"


def test_volume_mount_requires_absolute_target():
    stack = new_stack("vol")
    db = stack.add_artifact("service", "db")
    vol = stack.add_artifact("volume", "data")
    with pytest.raises(StructuralViolation):
        stack.connect(db, EdgeKind.VOLUME_MOUNT, vol, target="data/db")


def test_self_depends_on_rejected():
    stack = new_stack("self")
    a = stack.add_artifact("service", "a")
    with pytest.raises(SelfEdge):
        stack.connect(a, EdgeKind.DEPENDS_ON, a)


def test_duplicate_edge_rejected():
    stack = new_stack("dupedge")
    a = stack.add_artifact("service", "a")
    b = stack.add_artifact("service", "b")
    stack.connect(a, EdgeKind.DEPENDS_ON, b)
    with pytest.raises(DuplicateEdge):
        stack.connect(a, EdgeKind.DEPENDS_ON, b)


def test_connect_unknown_artifact():
    stack = new_stack("ghost")
    a = stack.add_artifact("service", "a")
    with pytest.raises(UnknownArtifact):
        stack.connect(a, EdgeKind.DEPENDS_ON, "nope")


def test_edge_source_must_be_service():
    stack = new_stack("src")
    vol = stack.add_artifact("volume", "v")
    svc = stack.add_artifact("service", "s")
    with pytest.raises(TypeMismatch):
        stack.connect(vol, EdgeKind.DEPENDS_ON, svc)


def test_remove_artifact_cascades_incident_edges():
    stack = new_stack("cascade")
    net = stack.add_artifact("network", "shared")
    a = stack.add_artifact("service", "a")
    b = stack.add_artifact("service", "b")
    stack.connect(a, EdgeKind.NETWORK_ATTACHMENT, net)
    stack.connect(b, EdgeKind.NETWORK_ATTACHMENT, net)
    removed = stack.remove_artifact(net)
    assert len(removed) == 2
    assert stack.edges == []


def test_remove_isolated_config_returns_no_edges():
    stack = new_stack("iso")
    cfg = stack.add_artifact("config", "c", source="./c.txt")
    assert stack.remove_artifact(cfg) == []


def test_remove_twice_is_unknown_artifact():
    stack = new_stack("twice")
    svc = stack.add_artifact("service", "s")
    stack.remove_artifact(svc)
    with pytest.raises(UnknownArtifact):
        stack.remove_artifact(svc)


def test_add_remove_round_trip_restores_stack():
    stack = new_stack("rt")
    stack.add_artifact("service", "keep", image="alpine")
    before = stack_signature(stack)
    temp = stack.add_artifact("service", "temp")
    stack.remove_artifact(temp)
    assert stack_signature(stack) == before


def test_internal_ids_never_reused():
    stack = new_stack("ids")
    seen = set()
    for i in range(50):
        node_id = stack.add_artifact("service", f"s{i}")
        assert node_id not in seen
        seen.add(node_id)
        if i % 2 == 0:
            stack.remove_artifact(node_id)


def test_set_property_hostname():
    stack = new_stack("prop")
    svc = stack.add_artifact("service", "nodejs")
    stack.set_property(svc, "hostname", "app-host")
    assert stack.get(svc).hostname == "app-host"


def test_set_property_stores_bad_duration_verbatim():
    stack = new_stack("prop")
    svc = stack.add_artifact("service", "svc")
    stack.set_property(svc, "healthcheck.interval", "2.5x")
    assert stack.get(svc).healthcheck.interval == "2.5x"


def test_set_property_unknown_property():
    stack = new_stack("prop")
    svc = stack.add_artifact("service", "svc")
    with pytest.raises(UnknownProperty):
        stack.set_property(svc, "nonexistent", 1)


def test_set_property_unknown_artifact():
    stack = new_stack("prop")
    with pytest.raises(UnknownArtifact):
        stack.set_property("a99", "hostname", "x")


def test_port_mapping_host_without_container_is_structural():
    with pytest.raises(StructuralViolation):
        PortMapping(container_port=None, host_port=8080)
    stack = new_stack("ports")
    svc = stack.add_artifact("service", "s")
    with pytest.raises(StructuralViolation):
        stack.set_property(svc, "ports", [{"host_port": 8080}])


def test_port_mapping_range_checked():
    with pytest.raises(StructuralViolation):
        PortMapping(container_port=0)
    with pytest.raises(StructuralViolation):
        PortMapping(container_port=80, host_port=70000)


def test_set_property_environment_rejects_empty_name():
    stack = new_stack("env")
    svc = stack.add_artifact("service", "s")
    with pytest.raises(StructuralViolation):
        stack.set_property(svc, "environment", [("", "v")])


def test_set_property_environment_allows_duplicates():
    stack = new_stack("env")
    svc = stack.add_artifact("service", "s")
    stack.set_property(svc, "environment", ["A=1", "A=2"])
    assert stack.get(svc).environment == [("A", "1"), ("A", "2")]


def test_disconnect_removes_edge():
    stack = new_stack("disc")
    a = stack.add_artifact("service", "a")
    b = stack.add_artifact("service", "b")
    edge = stack.connect(a, EdgeKind.DEPENDS_ON, b)
    stack.disconnect(edge.id)
    assert stack.edges == []


def _assert_type_table(stack: Stack) -> None:
    by_id = {node.id: node for node in stack.artifacts()}
    for edge in stack.edges:
        assert by_id[edge.from_id].klass is ArtifactClass.SERVICE
        assert by_id[edge.to_id].klass is EDGE_TARGET_CLASS[edge.kind]


def test_random_mutation_sequences_never_break_type_table():
    rng = random.Random(20240517)
    for _ in range(30):
        stack = new_stack("fuzz")
        ids: list[str] = []
        for step in range(80):
            roll = rng.random()
            if roll < 0.45 or not ids:
                klass = rng.choice(list(ArtifactClass))
                props = {}
                if klass in (ArtifactClass.CONFIG, ArtifactClass.SECRET):
                    props["source"] = "./seed.txt"
                ids.append(stack.add_artifact(klass, f"k{rng.randrange(8)}", **props))
            elif roll < 0.75:
                kind = rng.choice(list(EdgeKind))
                payload = {"target": "/data"} if kind is EdgeKind.VOLUME_MOUNT else {}
                try:
                    stack.connect(rng.choice(ids), kind, rng.choice(ids), **payload)
                except (TypeMismatch, SelfEdge, DuplicateEdge, UnknownArtifact):
                    pass
            else:
                victim = rng.choice(ids)
                try:
                    stack.remove_artifact(victim)
                    ids.remove(victim)
                except UnknownArtifact:
                    pass
            _assert_type_table(stack)
            # no dangling edge endpoints after any removal
            live = {node.id for node in stack.artifacts()}
            for edge in stack.edges:
                assert edge.from_id in live and edge.to_id in live


def test_stacks_equal_ignores_ids():
    a = new_stack("x")
    a.add_artifact("service", "web", image="nginx")
    b = new_stack("x")
    b.add_artifact("volume", "unused-first")  # shifts id allocation
    b.remove_artifact(b.volumes[0].id)
    b.add_artifact("service", "web", image="nginx")
    assert stacks_equal(a, b)
