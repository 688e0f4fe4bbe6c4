"""HTTP API: revisions, ops, export, registry passthrough, lifecycle, events."""

import json
import socket
import threading

import httpx
import pytest
from fastapi.testclient import TestClient

from _support import COMPOSE_DIR
from composecraft.compose_io import parse_compose, serialize_compose, stack_from_dict
from composecraft.errors import BindError
from composecraft.model import stacks_equal
from composecraft.registry import RegistryClient
from composecraft.runtime import Orchestrator, RuntimeConfig, ScriptStep, ScriptedRuntimeAdapter
from composecraft.server import ServeConfig, create_app, serve

FIG8 = (COMPOSE_DIR / "fig8a-client-server-db.yml").read_text()


@pytest.fixture()
def scripted():
    return ScriptedRuntimeAdapter({
        "logs": ScriptStep(stdout=["client-1 | ready", "db-1 | listening"], follow=True),
        "ps": ScriptStep(stdout=['{"Service": "client", "State": "running"}']),
    })


@pytest.fixture()
def client(tmp_path, scripted):
    def handler(request: httpx.Request) -> httpx.Response:
        if request.url.path == "/v2/search/repositories":
            return httpx.Response(200, json={"results": [
                {"repo_name": "mongo", "is_official": True,
                 "short_description": "db", "star_count": 3, "pull_count": 9}]})
        if request.url.path == "/v2/repositories/library/mongo/tags":
            return httpx.Response(200, json={"results": [{"name": "latest"}]})
        return httpx.Response(404, json={})

    registry = RegistryClient("https://registry.test",
                              transport=httpx.MockTransport(handler))
    orchestrator = Orchestrator(
        adapter=scripted, config=RuntimeConfig(command=("compose",), poll_interval=60.0))
    app = create_app(workdir_root=str(tmp_path), registry=registry,
                     orchestrator=orchestrator)
    with TestClient(app) as test_client:
        yield test_client


def import_fig8(client) -> dict:
    response = client.post("/v1/projects", json={"yaml": FIG8})
    assert response.status_code == 200
    return response.json()


def test_healthz(client):
    assert client.get("/healthz").json() == {"status": "ok"}


def test_import_fig8_counts(client):
    payload = import_fig8(client)
    stack = payload["stack"]
    classes = [a["class"] for a in stack["artifacts"]]
    assert classes.count("service") == 3
    assert classes.count("network") == 2
    assert classes.count("volume") == 1
    assert payload["revision"] == 0
    assert payload["diagram"]["positions"]
    assert payload["warnings"] == []


def test_get_project_roundtrip(client):
    created = import_fig8(client)
    got = client.get(f"/v1/projects/{created['project_id']}").json()
    assert got["stack"] == created["stack"]
    assert got["revision"] == 0


def test_unknown_project_404(client):
    assert client.get("/v1/projects/nope").status_code == 404


def test_ops_bump_revision_and_conflict(client):
    project = import_fig8(client)["project_id"]
    first = client.post(f"/v1/projects/{project}/ops", json={
        "base_revision": 0,
        "op": {"type": "add_artifact", "class": "service", "key": "extra"},
    })
    assert first.status_code == 200
    assert first.json()["revision"] == 1
    stale = client.post(f"/v1/projects/{project}/ops", json={
        "base_revision": 0,
        "op": {"type": "add_artifact", "class": "service", "key": "late"},
    })
    assert stale.status_code == 409
    assert stale.json()["code"] == "RevisionConflict"


def test_connect_type_mismatch_is_422(client):
    project = import_fig8(client)
    ids = {a["key"]: a["id"] for a in project["stack"]["artifacts"]
           if a["class"] == "service"}
    response = client.post(f"/v1/projects/{project['project_id']}/ops", json={
        "base_revision": 0,
        "op": {"type": "connect", "from": ids["client"],
               "kind": "network_attachment", "to": ids["server"]},
    })
    assert response.status_code == 422
    assert response.json()["code"] == "TypeMismatch"


def test_duplicate_key_op_surfaces_warnings(client):
    project = import_fig8(client)["project_id"]
    response = client.post(f"/v1/projects/{project}/ops", json={
        "base_revision": 0,
        "op": {"type": "add_artifact", "class": "service", "key": "client"},
    })
    codes = {w["code"] for w in response.json()["warnings"]}
    assert "DuplicateKey" in codes


def test_export_matches_library_serialization(client):
    project = import_fig8(client)["project_id"]
    exported = client.get(f"/v1/projects/{project}/export")
    stack, _ = parse_compose(FIG8)
    assert exported.text == serialize_compose(stack)


def test_validate_endpoint(client):
    project = import_fig8(client)["project_id"]
    response = client.get(f"/v1/projects/{project}/validate")
    assert response.json() == {"warnings": []}


def test_move_node_op(client):
    project = import_fig8(client)
    node = project["stack"]["artifacts"][0]["id"]
    response = client.post(f"/v1/projects/{project['project_id']}/ops", json={
        "base_revision": 0, "op": {"type": "move_node", "id": node, "x": 5, "y": 7}})
    assert response.status_code == 200
    got = client.get(f"/v1/projects/{project['project_id']}").json()
    assert got["diagram"]["positions"][node] == [5.0, 7.0]


def test_save_and_load_round_trip(client, tmp_path):
    project = import_fig8(client)["project_id"]
    path = str(tmp_path / "demo.dcproj.json")
    assert client.post(f"/v1/projects/{project}/save",
                       json={"path": path}).status_code == 200
    loaded = client.post(f"/v1/projects/{project}/load", json={"path": path})
    assert loaded.status_code == 200
    assert loaded.json()["revision"] == 1


def test_registry_search_passthrough(client):
    response = client.get("/v1/registry/search", params={"q": "mongo"})
    assert response.json()["results"][0]["repository"] == "mongo"


def test_registry_empty_query_is_422(client):
    assert client.get("/v1/registry/search", params={"q": " "}).status_code == 422


def test_registry_tags_passthrough(client):
    response = client.get("/v1/registry/tags", params={"repo": "mongo"})
    assert response.json()["tags"] == ["latest"]


def test_registry_unknown_repo_404(client):
    response = client.get("/v1/registry/tags", params={"repo": "ghost/none"})
    assert response.status_code == 404


def test_registry_upstream_failure_is_502(tmp_path):
    def handler(request):
        raise httpx.ConnectError("down", request=request)

    registry = RegistryClient("https://registry.test",
                              transport=httpx.MockTransport(handler))
    app = create_app(workdir_root=str(tmp_path), registry=registry,
                     orchestrator=Orchestrator(adapter=ScriptedRuntimeAdapter({}),
                                               config=RuntimeConfig(command=("compose",))))
    with TestClient(app) as test_client:
        response = test_client.get("/v1/registry/search", params={"q": "mongo"})
    assert response.status_code == 502
    assert response.json()["code"] == "NetworkError"


def test_meta_exposes_edge_table_and_colors(client):
    meta = client.get("/v1/meta").json()
    assert meta["edge_kinds"]["depends_on"] == "service"
    assert meta["edge_kinds"]["volume_mount"] == "volume"
    assert meta["anchor_colors"]["depends_on"] == "#f1c40f"
    assert meta["anchor_colors"]["link"] == "#2196f3"
    assert meta["anchor_colors"]["network_attachment"] == meta["class_colors"]["network"]


def test_lifecycle_and_status(client, scripted, tmp_path):
    project = import_fig8(client)["project_id"]
    up = client.post(f"/v1/projects/{project}/up", json={"workdir": str(tmp_path)})
    assert up.status_code == 200
    assert up.json()["status"]["aggregate"] in ("starting", "stopped")
    assert (tmp_path / "docker-compose.yml").exists()

    second = client.post(f"/v1/projects/{project}/up", json={"workdir": str(tmp_path)})
    assert second.status_code == 422
    assert second.json()["code"] == "AlreadyRunning"

    status = client.get(f"/v1/projects/{project}/status").json()
    assert status["aggregate"] in ("starting", "running")

    stop = client.post(f"/v1/projects/{project}/stop")
    assert stop.status_code == 200
    assert stop.json()["status"]["aggregate"] == "stopped"
    assert ["compose", "stop"] in scripted.commands()


def test_stop_without_run_is_422(client):
    project = import_fig8(client)["project_id"]
    response = client.post(f"/v1/projects/{project}/stop")
    assert response.status_code == 422
    assert response.json()["code"] == "NotRunning"


def test_event_stream_carries_status_and_logs(client, tmp_path):
    project = import_fig8(client)["project_id"]

    events = []
    done = threading.Event()

    def consume():
        with client.stream(
                "GET", f"/v1/projects/{project}/events?limit=3") as response:
            for line in response.iter_lines():
                if line.startswith("data: "):
                    events.append(json.loads(line[len("data: "):]))
        done.set()

    consumer = threading.Thread(target=consume, daemon=True)
    consumer.start()

    client.post(f"/v1/projects/{project}/up", json={"workdir": str(tmp_path)})
    assert done.wait(timeout=10.0), "event stream did not deliver"
    types = [e["type"] for e in events]
    assert "status" in types
    assert "log" in types
    stamps = [e["timestamp"] for e in events]
    assert stamps == sorted(stamps)
    log_events = [e for e in events if e["type"] == "log"]
    assert all("line" in e and "source" in e for e in log_events)
    client.post(f"/v1/projects/{project}/stop")


def test_warning_change_event_emitted(client, tmp_path):
    project = import_fig8(client)["project_id"]
    events = []
    done = threading.Event()

    def consume():
        with client.stream(
                "GET", f"/v1/projects/{project}/events?limit=1") as response:
            for line in response.iter_lines():
                if line.startswith("data: "):
                    events.append(json.loads(line[len("data: "):]))
        done.set()

    threading.Thread(target=consume, daemon=True).start()
    client.post(f"/v1/projects/{project}/ops", json={
        "base_revision": 0,
        "op": {"type": "add_artifact", "class": "service", "key": "client"},
    })
    assert done.wait(timeout=10.0)
    assert events[0]["type"] == "warnings"
    assert {w["code"] for w in events[0]["warnings"]} == {"DuplicateKey"}


def test_replayed_ops_match_direct_application(client):
    created = import_fig8(client)
    project = created["project_id"]
    ids = {a["key"]: a["id"] for a in created["stack"]["artifacts"]}

    ops = [
        {"type": "add_artifact", "class": "service", "key": "metrics",
         "props": {"image": "prom/prometheus"}},
        {"type": "set_property", "id": ids["client"], "path": "hostname",
         "value": "edge"},
        {"type": "connect", "from": ids["client"], "kind": "volume_mount",
         "to": ids["mongo-data"], "payload": {"target": "/cache"}},
        {"type": "disconnect_last"},  # placeholder replaced below
    ]
    # direct in-process application
    direct, _ = parse_compose(FIG8)
    direct_ids = {a.key: a.id for a in direct.artifacts()}
    direct.add_artifact("service", "metrics", image="prom/prometheus")
    direct.set_property(direct_ids["client"], "hostname", "edge")
    edge = direct.connect(direct_ids["client"], "volume_mount",
                          direct_ids["mongo-data"], target="/cache")
    direct.disconnect(edge.id)

    revision = 0
    for op in ops[:3]:
        response = client.post(f"/v1/projects/{project}/ops",
                               json={"base_revision": revision, "op": op})
        assert response.status_code == 200, response.text
        revision = response.json()["revision"]
        if op["type"] == "connect":
            edge_id = response.json()["result"]["edge_id"]
    response = client.post(f"/v1/projects/{project}/ops", json={
        "base_revision": revision,
        "op": {"type": "disconnect", "edge_id": edge_id}})
    assert response.status_code == 200

    final = client.get(f"/v1/projects/{project}").json()
    server_stack = stack_from_dict(final["stack"])
    assert stacks_equal(server_stack, direct)
    assert final["revision"] == 4


def test_serve_bind_error_on_occupied_port(tmp_path):
    blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    blocker.bind(("127.0.0.1", 0))
    port = blocker.getsockname()[1]
    try:
        with pytest.raises(BindError):
            serve(ServeConfig(host="127.0.0.1", port=port,
                              workdir_root=str(tmp_path)))
    finally:
        blocker.close()


def test_shutdown_downs_active_run(tmp_path):
    scripted = ScriptedRuntimeAdapter({"logs": ScriptStep(follow=True)})
    orchestrator = Orchestrator(adapter=scripted,
                                config=RuntimeConfig(command=("compose",),
                                                     poll_interval=60.0))
    app = create_app(workdir_root=str(tmp_path),
                     registry=RegistryClient(
                         "https://registry.test",
                         transport=httpx.MockTransport(
                             lambda request: httpx.Response(404))),
                     orchestrator=orchestrator)
    with TestClient(app) as test_client:
        project = test_client.post(
            "/v1/projects", json={"yaml": FIG8}).json()["project_id"]
        test_client.post(f"/v1/projects/{project}/up",
                         json={"workdir": str(tmp_path)})
    # leaving the context triggers shutdown: down must have been issued
    assert ["compose", "down"] in scripted.commands()
