"""In-memory object model of one Compose orchestration.

A :class:`Stack` holds the five artifact collections (services, volumes,
networks, configs, secrets) plus typed edges between them. Artifacts are
identified by opaque internal ids, never by their user-facing keys: keys may
collide (that is a validation warning, not a structural error).

Mutations never reject value *formats* — a bad duration string is stored
verbatim and flagged later by :mod:`composecraft.validation`. Only structural
impossibilities (unknown ids, forbidden edge types, a host port without a
container port) raise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator, Union

from .errors import (
    DuplicateEdge,
    SelfEdge,
    StructuralViolation,
    TypeMismatch,
    UnknownArtifact,
    UnknownEdge,
    UnknownProperty,
)


class ArtifactClass(str, Enum):
    SERVICE = "service"
    VOLUME = "volume"
    NETWORK = "network"
    CONFIG = "config"
    SECRET = "secret"


class EdgeKind(str, Enum):
    DEPENDS_ON = "depends_on"
    LINK = "link"
    NETWORK_ATTACHMENT = "network_attachment"
    VOLUME_MOUNT = "volume_mount"
    CONFIG_GRANT = "config_grant"
    SECRET_GRANT = "secret_grant"


#: Which artifact class each edge kind may point at. The source is always a
#: service; erroneous connections are rejected at connect() time.
EDGE_TARGET_CLASS: dict[EdgeKind, ArtifactClass] = {
    EdgeKind.DEPENDS_ON: ArtifactClass.SERVICE,
    EdgeKind.LINK: ArtifactClass.SERVICE,
    EdgeKind.NETWORK_ATTACHMENT: ArtifactClass.NETWORK,
    EdgeKind.VOLUME_MOUNT: ArtifactClass.VOLUME,
    EdgeKind.CONFIG_GRANT: ArtifactClass.CONFIG,
    EdgeKind.SECRET_GRANT: ArtifactClass.SECRET,
}

RESTART_POLICIES = ("no", "always", "on-failure", "unless-stopped")


@dataclass
class ImageRef:
    repository: str
    tag: str = "latest"

    @classmethod
    def parse(cls, text: str) -> "ImageRef":
        """Split ``repo[:tag]``; a colon inside a registry port is respected."""
        if ":" in text:
            head, _, tail = text.rpartition(":")
            if "/" not in tail:  # not a registry port
                return cls(repository=head, tag=tail or "latest")
        return cls(repository=text)

    def render(self, omit_default_tag: bool = True) -> str:
        if omit_default_tag and self.tag == "latest":
            return self.repository
        return f"{self.repository}:{self.tag}"


@dataclass
class PortMapping:
    container_port: int
    host_port: int | None = None
    protocol: str = "tcp"

    def __post_init__(self) -> None:
        if self.container_port is None:
            raise StructuralViolation("port mapping requires a container port")
        if not _valid_port(self.container_port):
            raise StructuralViolation(f"container port out of range: {self.container_port!r}")
        if self.host_port is not None and not _valid_port(self.host_port):
            raise StructuralViolation(f"host port out of range: {self.host_port!r}")
        if self.protocol not in ("tcp", "udp"):
            raise StructuralViolation(f"unknown protocol: {self.protocol!r}")


def _valid_port(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and 1 <= value <= 65535


@dataclass
class Healthcheck:
    test: list[str] = field(default_factory=list)
    interval: str | None = None  # raw text; format checked by validation
    timeout: str | None = None
    retries: int = 0

    def __post_init__(self) -> None:
        if self.retries < 0:
            raise StructuralViolation("healthcheck retries must be >= 0")


class SourceKind(str, Enum):
    FILE = "file"
    EXTERNAL = "external"


@dataclass
class DataSource:
    """Where a config or secret gets its content from."""

    kind: SourceKind
    path: str | None = None

    def __post_init__(self) -> None:
        if self.kind is SourceKind.FILE and not (self.path or "").strip():
            raise StructuralViolation("file source requires a non-empty path")


@dataclass
class ServiceNode:
    id: str
    key: str
    image: ImageRef | None = None
    container_name: str | None = None
    command: list[str] | None = None
    entrypoint: list[str] | None = None
    environment: list[tuple[str, str]] = field(default_factory=list)
    ports: list[PortMapping] = field(default_factory=list)
    hostname: str | None = None
    restart: str = "no"
    stdin_open: bool = False
    tty: bool = False
    healthcheck: Healthcheck | None = None
    mem_limit: str | None = None  # raw text; format checked by validation
    extras: dict[str, Any] = field(default_factory=dict)

    klass = ArtifactClass.SERVICE


@dataclass
class VolumeNode:
    id: str
    key: str
    driver: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    klass = ArtifactClass.VOLUME


@dataclass
class NetworkNode:
    id: str
    key: str
    driver: str | None = None
    internal: bool = False
    extras: dict[str, Any] = field(default_factory=dict)

    klass = ArtifactClass.NETWORK


@dataclass
class ConfigNode:
    id: str
    key: str
    source: DataSource | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    klass = ArtifactClass.CONFIG


@dataclass
class SecretNode:
    id: str
    key: str
    source: DataSource | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    klass = ArtifactClass.SECRET


Artifact = Union[ServiceNode, VolumeNode, NetworkNode, ConfigNode, SecretNode]

_NODE_TYPES: dict[ArtifactClass, type] = {
    ArtifactClass.SERVICE: ServiceNode,
    ArtifactClass.VOLUME: VolumeNode,
    ArtifactClass.NETWORK: NetworkNode,
    ArtifactClass.CONFIG: ConfigNode,
    ArtifactClass.SECRET: SecretNode,
}


@dataclass
class Edge:
    """A typed connection from a service to some artifact.

    Payload fields are only meaningful for their kind: ``alias`` for links,
    ``aliases`` for network attachments, ``target``/``read_only`` for volume
    mounts, ``target``/``mode`` for config and secret grants.
    """

    id: str
    kind: EdgeKind
    from_id: str
    to_id: str
    alias: str | None = None
    aliases: list[str] = field(default_factory=list)
    target: str | None = None
    read_only: bool = False
    mode: int | None = None

    def __post_init__(self) -> None:
        if self.kind is EdgeKind.VOLUME_MOUNT:
            if not (self.target or "").strip():
                raise StructuralViolation("volume mount requires a target path")
            if not self.target.startswith("/"):
                raise StructuralViolation(f"volume mount target must be absolute: {self.target!r}")

    def payload(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        if self.kind is EdgeKind.LINK and self.alias is not None:
            out["alias"] = self.alias
        if self.kind is EdgeKind.NETWORK_ATTACHMENT and self.aliases:
            out["aliases"] = list(self.aliases)
        if self.kind is EdgeKind.VOLUME_MOUNT:
            out["target"] = self.target
            if self.read_only:
                out["read_only"] = True
        if self.kind in (EdgeKind.CONFIG_GRANT, EdgeKind.SECRET_GRANT):
            if self.target is not None:
                out["target"] = self.target
            if self.mode is not None:
                out["mode"] = self.mode
        return out


@dataclass
class Stack:
    """One orchestration: keyed artifact collections plus typed edges."""

    name: str
    services: list[ServiceNode] = field(default_factory=list)
    volumes: list[VolumeNode] = field(default_factory=list)
    networks: list[NetworkNode] = field(default_factory=list)
    configs: list[ConfigNode] = field(default_factory=list)
    secrets: list[SecretNode] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    extras: dict[str, Any] = field(default_factory=dict)  # unknown top-level keys
    _id_counter: int = 0

    # -- lookup ---------------------------------------------------------

    def collection(self, klass: ArtifactClass) -> list[Any]:
        return {
            ArtifactClass.SERVICE: self.services,
            ArtifactClass.VOLUME: self.volumes,
            ArtifactClass.NETWORK: self.networks,
            ArtifactClass.CONFIG: self.configs,
            ArtifactClass.SECRET: self.secrets,
        }[klass]

    def artifacts(self) -> Iterator[Artifact]:
        """All artifacts in class order, insertion order within a class."""
        for klass in ArtifactClass:
            yield from self.collection(klass)

    def get(self, artifact_id: str) -> Artifact:
        for node in self.artifacts():
            if node.id == artifact_id:
                return node
        raise UnknownArtifact(f"no artifact with id {artifact_id!r}")

    def find(self, klass: ArtifactClass, key: str) -> list[Artifact]:
        return [node for node in self.collection(klass) if node.key == key]

    def get_edge(self, edge_id: str) -> Edge:
        for edge in self.edges:
            if edge.id == edge_id:
                return edge
        raise UnknownEdge(f"no edge with id {edge_id!r}")

    def _fresh_id(self) -> str:
        self._id_counter += 1
        return f"a{self._id_counter}"

    # -- mutation ---------------------------------------------------------

    def add_artifact(self, klass: ArtifactClass | str, key: str, **props: Any) -> str:
        """Append a new artifact and return its internal id.

        Duplicate keys are permitted; validation surfaces them as warnings.
        """
        klass = ArtifactClass(klass)
        node = _NODE_TYPES[klass](id=self._fresh_id(), key=key)
        for path, value in props.items():
            _set_node_property(node, path, value)
        self.collection(klass).append(node)
        return node.id

    def remove_artifact(self, artifact_id: str) -> list[Edge]:
        """Remove an artifact, cascade-removing and returning incident edges."""
        node = self.get(artifact_id)
        removed = [e for e in self.edges if artifact_id in (e.from_id, e.to_id)]
        self.edges = [e for e in self.edges if artifact_id not in (e.from_id, e.to_id)]
        self.collection(node.klass).remove(node)
        return removed

    def connect(self, from_id: str, kind: EdgeKind | str, to_id: str, **payload: Any) -> Edge:
        """Add a typed edge; rejects anything the edge type table disallows."""
        kind = EdgeKind(kind)
        source = self.get(from_id)
        targt = self.get(to_id)
        if source.klass is not ArtifactClass.SERVICE:
            raise TypeMismatch(f"edge source must be a service, got {source.klass.value}")
        expected = EDGE_TARGET_CLASS[kind]
        if targt.klass is not expected:
            raise TypeMismatch(
                f"{kind.value} must target a {expected.value}, got {targt.klass.value}"
            )
        if kind in (EdgeKind.DEPENDS_ON, EdgeKind.LINK) and from_id == to_id:
            raise SelfEdge(f"{kind.value} from a service to itself")
        for edge in self.edges:
            if (edge.kind, edge.from_id, edge.to_id) == (kind, from_id, to_id):
                raise DuplicateEdge(
                    f"{kind.value} edge {source.key!r} -> {targt.key!r} already exists"
                )
        edge = Edge(id=self._fresh_id(), kind=kind, from_id=from_id, to_id=to_id, **payload)
        self.edges.append(edge)
        return edge

    def disconnect(self, edge_id: str) -> Edge:
        edge = self.get_edge(edge_id)
        self.edges.remove(edge)
        return edge

    def set_property(self, artifact_id: str, path: str, value: Any) -> Artifact:
        """Store a property value verbatim; format validity is validation's job."""
        node = self.get(artifact_id)
        _set_node_property(node, path, value)
        return node


def new_stack(name: str) -> Stack:
    return Stack(name=name)


# --- property paths ----------------------------------------------------------

_SERVICE_PROPS = {
    "key", "image", "image.repository", "image.tag", "container_name", "command",
    "entrypoint", "environment", "ports", "hostname", "restart", "stdin_open",
    "tty", "healthcheck", "healthcheck.test", "healthcheck.interval",
    "healthcheck.timeout", "healthcheck.retries", "mem_limit",
}
_PROPS_BY_CLASS: dict[ArtifactClass, set[str]] = {
    ArtifactClass.SERVICE: _SERVICE_PROPS,
    ArtifactClass.VOLUME: {"key", "driver"},
    ArtifactClass.NETWORK: {"key", "driver", "internal"},
    ArtifactClass.CONFIG: {"key", "source"},
    ArtifactClass.SECRET: {"key", "source"},
}


def _set_node_property(node: Artifact, path: str, value: Any) -> None:
    if path not in _PROPS_BY_CLASS[node.klass]:
        raise UnknownProperty(f"{node.klass.value} has no property {path!r}")

    if path == "image":
        node.image = _coerce_image(value)
    elif path == "image.repository":
        node.image = node.image or ImageRef(repository="")
        node.image.repository = str(value)
    elif path == "image.tag":
        node.image = node.image or ImageRef(repository="")
        node.image.tag = str(value)
    elif path == "environment":
        node.environment = _coerce_environment(value)
    elif path == "ports":
        node.ports = [_coerce_port(item) for item in value]
    elif path == "healthcheck":
        node.healthcheck = _coerce_healthcheck(value)
    elif path.startswith("healthcheck."):
        if node.healthcheck is None:
            node.healthcheck = Healthcheck()
        setattr(node.healthcheck, path.split(".", 1)[1], value)
    elif path == "source":
        node.source = _coerce_source(value)
    else:
        setattr(node, path, value)


def _coerce_image(value: Any) -> ImageRef | None:
    if value is None or isinstance(value, ImageRef):
        return value
    return ImageRef.parse(str(value))


def _coerce_environment(value: Any) -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = []
    if isinstance(value, dict):
        items: Any = value.items()
    else:
        items = value
    for item in items:
        if isinstance(item, str):
            name, _, val = item.partition("=")
        else:
            name, val = item
        if not str(name):
            raise StructuralViolation("environment variable name must be non-empty")
        pairs.append((str(name), "" if val is None else str(val)))
    return pairs


def _coerce_port(value: Any) -> PortMapping:
    if isinstance(value, PortMapping):
        return value
    if isinstance(value, dict):
        return PortMapping(
            container_port=value.get("container_port"),
            host_port=value.get("host_port"),
            protocol=value.get("protocol", "tcp"),
        )
    raise StructuralViolation(f"cannot interpret port mapping {value!r}")


def _coerce_healthcheck(value: Any) -> Healthcheck | None:
    if value is None or isinstance(value, Healthcheck):
        return value
    if isinstance(value, dict):
        return Healthcheck(
            test=list(value.get("test", [])),
            interval=value.get("interval"),
            timeout=value.get("timeout"),
            retries=value.get("retries", 0),
        )
    raise StructuralViolation(f"cannot interpret healthcheck {value!r}")


def _coerce_source(value: Any) -> DataSource | None:
    if value is None or isinstance(value, DataSource):
        return value
    if value == "external":
        return DataSource(kind=SourceKind.EXTERNAL)
    if isinstance(value, dict) and "file" in value:
        return DataSource(kind=SourceKind.FILE, path=value["file"])
    if isinstance(value, str):
        return DataSource(kind=SourceKind.FILE, path=value)
    raise StructuralViolation(f"cannot interpret config/secret source {value!r}")


# --- model equality ----------------------------------------------------------


def _artifact_signature(node: Artifact) -> list[Any]:
    props: dict[str, Any] = {}
    if isinstance(node, ServiceNode):
        props = {
            "image": node.image.render(omit_default_tag=False) if node.image else None,
            "container_name": node.container_name,
            "command": node.command,
            "entrypoint": node.entrypoint,
            "environment": [list(p) for p in node.environment],
            "ports": [
                [p.container_port, p.host_port, p.protocol] for p in node.ports
            ],
            "hostname": node.hostname,
            "restart": node.restart,
            "stdin_open": node.stdin_open,
            "tty": node.tty,
            "healthcheck": (
                [node.healthcheck.test, node.healthcheck.interval,
                 node.healthcheck.timeout, node.healthcheck.retries]
                if node.healthcheck else None
            ),
            "mem_limit": node.mem_limit,
        }
    elif isinstance(node, VolumeNode):
        props = {"driver": node.driver}
    elif isinstance(node, NetworkNode):
        props = {"driver": node.driver, "internal": node.internal}
    else:
        props = {
            "source": (
                [node.source.kind.value, node.source.path] if node.source else None
            )
        }
    return [node.klass.value, node.key, props, node.extras]


def stack_signature(stack: Stack) -> str:
    """Canonical fingerprint of a stack with internal ids erased.

    Two stacks are model-equal iff their signatures match: same artifact
    multiset (class, key, supported properties, opaque sidecar) and same edge
    multiset, with edges identified by their endpoints' signatures.
    """
    sig_by_id = {node.id: _artifact_signature(node) for node in stack.artifacts()}
    artifacts = sorted(json.dumps(s, sort_keys=True) for s in sig_by_id.values())
    edges = sorted(
        json.dumps(
            [e.kind.value, sig_by_id[e.from_id], sig_by_id[e.to_id], e.payload()],
            sort_keys=True,
        )
        for e in stack.edges
    )
    return json.dumps({"artifacts": artifacts, "edges": edges})


def stacks_equal(a: Stack, b: Stack) -> bool:
    return stack_signature(a) == stack_signature(b) and a.extras == b.extras
