"""Local HTTP service exposing projects, mutations, validation, search,
lifecycle, and one multiplexed event stream to the frontend.

Mutations go through POST /v1/projects/{id}/ops with optimistic concurrency:
each accepted op bumps the session revision by exactly one, and a mismatched
base_revision is rejected with 409 so clients refetch instead of diverging.
"""

from __future__ import annotations

import contextlib
import json
import queue
import socket
import threading
import time
import uuid
from dataclasses import dataclass
from typing import Any, Iterator

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse

from . import compose_io
from .compose_io import ProjectSettings, parse_compose, serialize_compose
from .errors import (
    AlreadyRunning,
    BindError,
    ComposecraftError,
    IoError,
    NotRunning,
    UnknownProperty,
)
from .layout import NODE_SIZES, LayoutConfig, auto_layout
from .model import ArtifactClass, EDGE_TARGET_CLASS, EdgeKind, Stack, new_stack
from .registry import RegistryClient
from .runtime import GENERAL, Orchestrator, RuntimeConfig, STATUS_COLORS
from .validation import validate

#: Class and anchor colors shared with the frontend via /v1/meta. Artifact-typed
#: anchors match their target class color; depends_on is yellow, link is blue.
CLASS_COLORS = {
    ArtifactClass.SERVICE: "#3f51b5",
    ArtifactClass.VOLUME: "#8e44ad",
    ArtifactClass.NETWORK: "#27ae60",
    ArtifactClass.CONFIG: "#16a085",
    ArtifactClass.SECRET: "#e67e22",
}
ANCHOR_COLORS = {
    EdgeKind.DEPENDS_ON: "#f1c40f",  # yellow
    EdgeKind.LINK: "#2196f3",  # blue
    EdgeKind.NETWORK_ATTACHMENT: CLASS_COLORS[ArtifactClass.NETWORK],
    EdgeKind.VOLUME_MOUNT: CLASS_COLORS[ArtifactClass.VOLUME],
    EdgeKind.CONFIG_GRANT: CLASS_COLORS[ArtifactClass.CONFIG],
    EdgeKind.SECRET_GRANT: CLASS_COLORS[ArtifactClass.SECRET],
}

_HTTP_BY_CODE = {
    "RevisionConflict": 409,
    "UnknownProject": 404,
    "UnknownRepository": 404,
    "NetworkError": 502,
    "RegistryError": 502,
}


class RevisionConflict(ComposecraftError):
    code = "RevisionConflict"


class UnknownProject(ComposecraftError):
    code = "UnknownProject"


@dataclass
class ServeConfig:
    host: str = "127.0.0.1"
    port: int = 8642
    workdir_root: str = "."
    registry_base_url: str | None = None


class Session:
    """One open project: stack, diagram, revision counter, optional run."""

    def __init__(self, project_id: str, stack: Stack, diagram, notices) -> None:
        self.id = project_id
        self.stack = stack
        self.diagram = diagram
        self.notices = notices
        self.revision = 0
        self.settings = ProjectSettings()
        self.handle = None
        self.lock = threading.RLock()
        self.warnings = validate(stack)
        self._subscribers: list[queue.Queue] = []
        self._last_ts = 0.0
        self._clock = time.time

    def next_timestamp(self) -> float:
        now = self._clock()
        if now <= self._last_ts:
            now = self._last_ts + 1e-6
        self._last_ts = now
        return now

    def publish(self, event_type: str, payload: dict[str, Any]) -> None:
        with self.lock:
            message = {"type": event_type, "timestamp": self.next_timestamp(), **payload}
            sinks = list(self._subscribers)
        for sink in sinks:
            sink.put(message)

    def subscribe(self) -> queue.Queue:
        sink: queue.Queue = queue.Queue()
        with self.lock:
            self._subscribers.append(sink)
        return sink

    def unsubscribe(self, sink: queue.Queue) -> None:
        with self.lock:
            if sink in self._subscribers:
                self._subscribers.remove(sink)

    def refresh_warnings(self) -> None:
        fresh = validate(self.stack)
        if fresh != self.warnings:
            self.warnings = fresh
            self.publish("warnings", {"warnings": warnings_payload(fresh)})


def notice_payload(notices) -> list[dict[str, Any]]:
    return [{"severity": n.severity, "location": n.location,
             "message": n.message, "code": n.code.value} for n in notices]


def warnings_payload(warnings) -> list[dict[str, Any]]:
    return [{"code": w.code.value, "artifact": w.artifact,
             "property": w.property, "message": w.message} for w in warnings]


def status_payload(status) -> dict[str, Any]:
    return {
        "aggregate": status.aggregate.value,
        "color": STATUS_COLORS[status.aggregate],
        "per_service": {k: v.value for k, v in status.per_service.items()},
        "last_transition": status.last_transition,
    }


def session_payload(session: Session) -> dict[str, Any]:
    return {
        "project_id": session.id,
        "revision": session.revision,
        "stack": compose_io.stack_to_dict(session.stack),
        "diagram": compose_io.diagram_to_dict(session.diagram),
        "warnings": warnings_payload(session.warnings),
        "notices": notice_payload(session.notices),
    }


def create_app(*, workdir_root: str = ".", registry: RegistryClient | None = None,
               orchestrator: Orchestrator | None = None) -> FastAPI:
    @contextlib.asynccontextmanager
    async def lifespan(running_app: FastAPI):
        yield
        # graceful shutdown: stop active runs, then release the registry client
        running_app.state.orchestrator.shutdown()
        running_app.state.registry.close()

    app = FastAPI(title="composecraft", version="1", lifespan=lifespan)
    state = app.state
    state.sessions = {}
    state.registry = registry or RegistryClient()
    state.orchestrator = orchestrator or Orchestrator(config=RuntimeConfig())
    state.workdir_root = workdir_root

    @app.exception_handler(ComposecraftError)
    async def engine_error(_request: Request, exc: ComposecraftError):
        status = _HTTP_BY_CODE.get(exc.code, 422)
        return JSONResponse(status_code=status,
                            content={"code": exc.code, "message": str(exc)})

    def session_of(project_id: str) -> Session:
        session = state.sessions.get(project_id)
        if session is None:
            raise UnknownProject(f"no project {project_id!r}")
        return session

    @app.get("/healthz")
    @app.get("/v1/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.get("/v1/meta")
    async def meta():
        return {
            "edge_kinds": {kind.value: klass.value
                           for kind, klass in EDGE_TARGET_CLASS.items()},
            "class_colors": {klass.value: color
                             for klass, color in CLASS_COLORS.items()},
            "anchor_colors": {kind.value: color
                              for kind, color in ANCHOR_COLORS.items()},
            "status_colors": {agg.value: color
                              for agg, color in STATUS_COLORS.items()},
            "node_sizes": {klass.value: list(size)
                           for klass, size in NODE_SIZES.items()},
        }

    @app.post("/v1/projects")
    def create_project(body: dict = Body(default={})):
        yaml_text = body.get("yaml")
        name = body.get("name", "")
        if yaml_text:
            stack, notices = parse_compose(yaml_text)
            if name:
                stack.name = name
        else:
            stack, notices = new_stack(name), []
        project_id = uuid.uuid4().hex[:12]
        session = Session(project_id, stack, auto_layout(stack), notices)
        state.sessions[project_id] = session
        return session_payload(session)

    @app.get("/v1/projects/{project_id}")
    def get_project(project_id: str):
        session = session_of(project_id)
        with session.lock:
            return session_payload(session)

    @app.post("/v1/projects/{project_id}/ops")
    def apply_op(project_id: str, body: dict = Body(...)):
        session = session_of(project_id)
        base_revision = body.get("base_revision")
        op = body.get("op") or {}
        with session.lock:
            if base_revision != session.revision:
                raise RevisionConflict(
                    f"base_revision {base_revision} != current {session.revision}")
            result = _apply_op(session, op)
            session.revision += 1
            session.refresh_warnings()
            return {
                "revision": session.revision,
                "warnings": warnings_payload(session.warnings),
                "result": result,
            }

    @app.get("/v1/projects/{project_id}/validate")
    def validate_project(project_id: str):
        session = session_of(project_id)
        with session.lock:
            return {"warnings": warnings_payload(validate(session.stack))}

    @app.get("/v1/projects/{project_id}/export")
    def export_project(project_id: str):
        session = session_of(project_id)
        with session.lock:
            text = serialize_compose(
                session.stack, omit_defaults=session.settings.export_omit_defaults)
        return PlainTextResponse(text, media_type="application/yaml")

    @app.post("/v1/projects/{project_id}/save")
    def save(project_id: str, body: dict = Body(...)):
        session = session_of(project_id)
        path = body.get("path")
        if not path:
            raise IoError("save requires a path")
        with session.lock:
            compose_io.save_project(session.stack, session.diagram,
                                    session.settings, path)
        return {"saved": path}

    @app.post("/v1/projects/{project_id}/load")
    def load(project_id: str, body: dict = Body(...)):
        session = session_of(project_id)
        path = body.get("path")
        if not path:
            raise IoError("load requires a path")
        stack, diagram, settings = compose_io.load_project(path)
        with session.lock:
            session.stack = stack
            session.diagram = diagram
            session.settings = settings
            session.revision += 1
            session.refresh_warnings()
            return session_payload(session)

    @app.get("/v1/registry/search")
    def registry_search(q: str = "", page: int = 1, page_size: int = 25):
        result = state.registry.search_images(q, page, page_size)
        return {
            "stale": result.stale,
            "results": [
                {"repository": i.repository, "description": i.description,
                 "is_official": i.is_official, "star_count": i.star_count,
                 "pull_count": i.pull_count}
                for i in result.images
            ],
        }

    @app.get("/v1/registry/tags")
    def registry_tags(repo: str = "", page: int = 1):
        return {"tags": state.registry.list_tags(repo, page)}

    @app.post("/v1/projects/{project_id}/up")
    def project_up(project_id: str, body: dict = Body(default={})):
        session = session_of(project_id)
        with session.lock:
            if session.handle is not None and session.handle.active:
                raise AlreadyRunning("project already has an active run")
            workdir = body.get("workdir") or session.settings.working_directory
            if workdir in (".", ""):
                workdir = state.workdir_root
            handle = state.orchestrator.up(session.stack, workdir)
            session.handle = handle
            handle.add_status_listener(
                lambda status: session.publish("status", status_payload(status)))
            session.publish("status", status_payload(handle.status()))

            def forward_logs():
                for event in handle.subscribe(GENERAL):
                    session.publish("log", {
                        "source": event.service or GENERAL,
                        "service": event.service,
                        "line": event.line,
                        "seq": event.seq,
                    })

            threading.Thread(target=forward_logs, daemon=True,
                             name=f"logs-{project_id}").start()
        return {"status": status_payload(handle.status())}

    @app.post("/v1/projects/{project_id}/stop")
    def project_stop(project_id: str):
        session = session_of(project_id)
        handle = session.handle
        if handle is None:
            raise NotRunning("project has no run")
        handle.stop()
        return {"status": status_payload(handle.status())}

    @app.post("/v1/projects/{project_id}/down")
    def project_down(project_id: str):
        session = session_of(project_id)
        handle = session.handle
        if handle is None:
            raise NotRunning("project has no run")
        handle.down()
        return {"status": status_payload(handle.status())}

    @app.get("/v1/projects/{project_id}/status")
    def project_status(project_id: str):
        session = session_of(project_id)
        if session.handle is None:
            return {"aggregate": "stopped", "color": "grey",
                    "per_service": {}, "last_transition": 0.0}
        return status_payload(session.handle.status())

    @app.get("/v1/projects/{project_id}/events")
    def project_events(project_id: str, limit: int = 0):
        session = session_of(project_id)
        sink = session.subscribe()

        def stream() -> Iterator[str]:
            sent = 0
            try:
                while limit <= 0 or sent < limit:
                    try:
                        message = sink.get(timeout=15.0)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield (f"event: {message['type']}\n"
                           f"data: {json.dumps(message, sort_keys=True)}\n\n")
                    sent += 1
            finally:
                session.unsubscribe(sink)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


def _apply_op(session: Session, op: dict[str, Any]) -> dict[str, Any]:
    """One mutation against the session's stack/diagram; returns op-specific info."""
    op_type = op.get("type")
    stack = session.stack
    if op_type == "add_artifact":
        artifact_id = stack.add_artifact(op["class"], op.get("key", ""),
                                         **op.get("props", {}))
        node = stack.get(artifact_id)
        size = NODE_SIZES[node.klass]
        x = float(op.get("x", LayoutConfig().margin))
        y = float(op.get("y", LayoutConfig().margin))
        session.diagram.node_sizes[artifact_id] = size
        session.diagram.positions[artifact_id] = (x, y)
        return {"id": artifact_id}
    if op_type == "remove_artifact":
        removed = stack.remove_artifact(op["id"])
        session.diagram.positions.pop(op["id"], None)
        session.diagram.node_sizes.pop(op["id"], None)
        return {"removed_edges": [e.id for e in removed]}
    if op_type == "set_property":
        stack.set_property(op["id"], op["path"], op.get("value"))
        return {"id": op["id"]}
    if op_type == "connect":
        edge = stack.connect(op["from"], op["kind"], op["to"],
                             **op.get("payload", {}))
        return {"edge_id": edge.id}
    if op_type == "disconnect":
        stack.disconnect(op["edge_id"])
        return {"edge_id": op["edge_id"]}
    if op_type == "move_node":
        session.diagram.move(op["id"], float(op["x"]), float(op["y"]))
        return {"id": op["id"]}
    if op_type == "auto_layout":
        session.diagram = auto_layout(stack)
        return {}
    raise UnknownProperty(f"unknown op type {op_type!r}")


def serve(config: ServeConfig | None = None, *,
          registry: RegistryClient | None = None,
          orchestrator: Orchestrator | None = None) -> None:
    """Run the service until interrupted; raises BindError when the port is taken."""
    import uvicorn

    cfg = config or ServeConfig()
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((cfg.host, cfg.port))
    except OSError as exc:
        raise BindError(f"cannot bind {cfg.host}:{cfg.port}: {exc}") from None
    finally:
        with contextlib.suppress(OSError):
            probe.close()

    app = create_app(workdir_root=cfg.workdir_root,
                     registry=registry or RegistryClient(cfg.registry_base_url),
                     orchestrator=orchestrator)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")
