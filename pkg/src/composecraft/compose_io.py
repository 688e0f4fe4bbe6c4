"""Bidirectional translation between Stack and Compose YAML, plus project files.

Parsing walks the YAML node tree directly (not a plain ``safe_load``) so that
duplicate mapping keys survive as distinct artifacts and notices carry source
locations. Keys outside the supported subset are preserved verbatim in a
per-artifact sidecar and re-emitted on serialization.

Serialization is canonical and deterministic: fixed section order, fixed key
order within an artifact, list-form environment, short-form ports/volumes.
"""

from __future__ import annotations

import json
import os
import re
import shlex
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import yaml
from yaml.constructor import SafeConstructor
from yaml.nodes import MappingNode, Node, ScalarNode

from .errors import (
    CorruptProject,
    IoError,
    NotAMapping,
    StructuralViolation,
    UnsupportedVersion,
    YamlSyntaxError,
)
from .layout import Diagram
from .model import (
    ArtifactClass,
    ConfigNode,
    DataSource,
    Edge,
    EdgeKind,
    Healthcheck,
    ImageRef,
    NetworkNode,
    PortMapping,
    SecretNode,
    ServiceNode,
    SourceKind,
    Stack,
    VolumeNode,
)

PROJECT_FORMAT_VERSION = 1


class NoticeCode(str, Enum):
    UNSUPPORTED_KEY = "UnsupportedKey"
    DANGLING_REFERENCE = "DanglingReference"
    DUPLICATE_YAML_KEY = "DuplicateYamlKey"


@dataclass(frozen=True)
class ParseNotice:
    severity: str  # "info" | "warn"
    location: str  # "line:col" for file-sourced notices, else a YAML path
    message: str
    code: NoticeCode


@dataclass
class ProjectSettings:
    working_directory: str = "."
    export_omit_defaults: bool = True


_SECTION_CLASSES = {
    "services": ArtifactClass.SERVICE,
    "volumes": ArtifactClass.VOLUME,
    "networks": ArtifactClass.NETWORK,
    "configs": ArtifactClass.CONFIG,
    "secrets": ArtifactClass.SECRET,
}

_SERVICE_SCALAR_KEYS = {
    "image", "container_name", "hostname", "restart", "stdin_open", "tty", "mem_limit",
}
_SERVICE_REFERENCE_ORDER = ("depends_on", "links", "networks", "volumes", "configs", "secrets")
_SERVICE_REFERENCE_KEYS = frozenset(_SERVICE_REFERENCE_ORDER)
_SERVICE_KNOWN_KEYS = (
    _SERVICE_SCALAR_KEYS | _SERVICE_REFERENCE_KEYS
    | {"command", "entrypoint", "environment", "ports", "healthcheck"}
)

_VOLUME_KEY_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9_.-]*\Z")


def _mark(node: Node) -> str:
    mark = node.start_mark
    return f"{mark.line + 1}:{mark.column + 1}"


class _Builder:
    """Single-use parse context: node tree in, (Stack, notices) out."""

    def __init__(self) -> None:
        self.notices: list[ParseNotice] = []
        self.constructor = SafeConstructor()

    def notice(self, severity: str, location: str, message: str, code: NoticeCode) -> None:
        self.notices.append(ParseNotice(severity, location, message, code))

    def value(self, node: Node) -> Any:
        return self.constructor.construct_object(node, deep=True)

    def pairs(self, node: MappingNode, path: str) -> list[tuple[str, Node, str]]:
        """Mapping entries as (key, value node, location), duplicates preserved."""
        out = []
        for key_node, value_node in node.value:
            if not isinstance(key_node, ScalarNode):
                raise YamlSyntaxError(f"unsupported non-scalar mapping key at {_mark(key_node)}")
            key = str(self.constructor.construct_object(key_node))
            out.append((key, value_node, _mark(key_node)))
        return out

    def artifact_body(self, node: Node | None, path: str) -> dict[str, Any]:
        """Construct an artifact mapping; duplicate keys warn, last wins."""
        if node is None or (isinstance(node, ScalarNode) and node.value == ""):
            return {}
        if not isinstance(node, MappingNode):
            raise YamlSyntaxError(f"{path} must be a mapping")
        body: dict[str, Any] = {}
        for key, value_node, loc in self.pairs(node, path):
            if key in body:
                self.notice("warn", loc, f"duplicate key {key!r} in {path}; last value wins",
                            NoticeCode.DUPLICATE_YAML_KEY)
            body[key] = self.value(value_node)
        return body

    # -- top level ---------------------------------------------------------

    def build(self, root: Node) -> Stack:
        stack = Stack(name="")
        sections: dict[str, list[tuple[str, dict[str, Any], str]]] = {}

        for key, value_node, loc in self.pairs(root, "$"):
            if key in _SECTION_CLASSES:
                if key in sections:
                    self.notice("warn", loc, f"duplicate top-level section {key!r}; merged",
                                NoticeCode.DUPLICATE_YAML_KEY)
                entries = sections.setdefault(key, [])
                if isinstance(value_node, ScalarNode) and value_node.value == "":
                    continue
                if not isinstance(value_node, MappingNode):
                    raise NotAMapping(f"top-level {key!r} is not a mapping")
                seen: set[str] = set()
                for art_key, art_node, art_loc in self.pairs(value_node, key):
                    if art_key in seen:
                        self.notice(
                            "warn", art_loc,
                            f"duplicate {key} key {art_key!r}; both kept",
                            NoticeCode.DUPLICATE_YAML_KEY,
                        )
                    seen.add(art_key)
                    entries.append((art_key, self.artifact_body(art_node, f"{key}.{art_key}"), art_loc))
            elif key == "name":
                stack.name = str(self.value(value_node) or "")
            elif key == "version":
                stack.extras["version"] = self.value(value_node)
            else:
                stack.extras[key] = self.value(value_node)
                self.notice("info", loc, f"unsupported top-level key {key!r} preserved",
                            NoticeCode.UNSUPPORTED_KEY)

        # Pass one: create every artifact so references can resolve.
        deferred: list[tuple[ServiceNode, dict[str, Any], str]] = []
        for section, entries in sections.items():
            klass = _SECTION_CLASSES[section]
            for art_key, body, loc in entries:
                if klass is ArtifactClass.SERVICE:
                    svc = self._service(art_key, body, loc, stack)
                    deferred.append((svc, body, loc))
                else:
                    self._plain_artifact(klass, art_key, body, loc, stack)

        # Pass two: turn textual cross-references into typed edges.
        for svc, body, loc in deferred:
            self._service_references(svc, body, loc, stack)
        return stack

    # -- artifacts -----------------------------------------------------------

    def _service(self, key: str, body: dict[str, Any], loc: str, stack: Stack) -> ServiceNode:
        svc = ServiceNode(id=stack._fresh_id(), key=key)
        stack.services.append(svc)
        for prop, raw in body.items():
            if prop == "image":
                svc.image = ImageRef.parse(str(raw)) if raw is not None else None
            elif prop == "container_name":
                svc.container_name = None if raw is None else str(raw)
            elif prop == "hostname":
                svc.hostname = None if raw is None else str(raw)
            elif prop == "restart":
                svc.restart = _restart_text(raw)
            elif prop == "stdin_open":
                svc.stdin_open = bool(raw)
            elif prop == "tty":
                svc.tty = bool(raw)
            elif prop == "mem_limit":
                svc.mem_limit = None if raw is None else str(raw)
            elif prop in ("command", "entrypoint"):
                parsed = _parse_command(raw)
                if parsed is _UNPARSED:
                    svc.extras[prop] = raw
                else:
                    setattr(svc, prop, parsed)
            elif prop == "environment":
                svc.environment = _parse_environment(raw)
            elif prop == "ports":
                self._ports(svc, raw, loc)
            elif prop == "healthcheck":
                self._healthcheck(svc, raw)
            elif prop in _SERVICE_REFERENCE_KEYS:
                pass  # handled after all artifacts exist
            else:
                svc.extras[prop] = raw
                self.notice("info", loc, f"unsupported key {prop!r} on service {key!r} preserved",
                            NoticeCode.UNSUPPORTED_KEY)
        return svc

    def _plain_artifact(self, klass: ArtifactClass, key: str, body: dict[str, Any],
                        loc: str, stack: Stack) -> None:
        if klass is ArtifactClass.VOLUME:
            node: Any = VolumeNode(id=stack._fresh_id(), key=key)
            known = {"driver"}
        elif klass is ArtifactClass.NETWORK:
            node = NetworkNode(id=stack._fresh_id(), key=key)
            known = {"driver", "internal"}
        else:
            node_type = ConfigNode if klass is ArtifactClass.CONFIG else SecretNode
            node = node_type(id=stack._fresh_id(), key=key)
            known = {"file", "external"}
        stack.collection(klass).append(node)

        for prop, raw in body.items():
            if prop not in known:
                node.extras[prop] = raw
                self.notice("info", loc,
                            f"unsupported key {prop!r} on {klass.value} {key!r} preserved",
                            NoticeCode.UNSUPPORTED_KEY)
            elif prop == "driver":
                node.driver = None if raw is None else str(raw)
            elif prop == "internal":
                node.internal = bool(raw)
            elif prop == "file":
                try:
                    node.source = DataSource(kind=SourceKind.FILE, path=str(raw))
                except StructuralViolation:
                    node.extras[prop] = raw
            elif prop == "external":
                if raw:
                    node.source = DataSource(kind=SourceKind.EXTERNAL)

    # -- service sub-structures ------------------------------------------------

    def _ports(self, svc: ServiceNode, raw: Any, loc: str) -> None:
        if raw is None:
            return
        if not isinstance(raw, list):
            svc.extras["ports"] = raw
            return
        unparsed: list[Any] = []
        for entry in raw:
            mapping = _parse_port(entry)
            if mapping is None:
                unparsed.append(entry)
            else:
                svc.ports.append(mapping)
        if unparsed:
            svc.extras.setdefault("ports", {})["unparsed"] = unparsed

    def _healthcheck(self, svc: ServiceNode, raw: Any) -> None:
        if raw is None:
            return
        if not isinstance(raw, dict):
            svc.extras["healthcheck"] = raw
            return
        hc = Healthcheck()
        residual: dict[str, Any] = {}
        for prop, value in raw.items():
            if prop == "test":
                if isinstance(value, str):
                    hc.test = ["CMD-SHELL", value]
                elif isinstance(value, list):
                    hc.test = [str(v) for v in value]
                else:
                    residual[prop] = value
            elif prop in ("interval", "timeout"):
                setattr(hc, prop, None if value is None else str(value))
            elif prop == "retries":
                if isinstance(value, int) and not isinstance(value, bool) and value >= 0:
                    hc.retries = value
                else:
                    residual[prop] = value
            else:
                residual[prop] = value
        svc.healthcheck = hc
        if residual:
            svc.extras.setdefault("healthcheck", {})["residual"] = residual

    # -- reference resolution ---------------------------------------------------

    def _resolve(self, stack: Stack, klass: ArtifactClass, name: str) -> Any | None:
        found = stack.find(klass, name)
        return found[0] if len(found) == 1 else None

    def _retain(self, svc: ServiceNode, compose_key: str, bucket: str, entry: Any) -> None:
        slot = svc.extras.setdefault(compose_key, {})
        slot.setdefault(bucket, []).append(entry)

    def _dangling(self, svc: ServiceNode, loc: str, compose_key: str,
                  klass: ArtifactClass, name: str, entry: Any) -> None:
        self.notice("warn", loc,
                    f"service {svc.key!r} {compose_key} references "
                    f"unresolvable {klass.value} {name!r}",
                    NoticeCode.DANGLING_REFERENCE)
        self._retain(svc, compose_key, "unresolved", entry)

    def _service_references(self, svc: ServiceNode, body: dict[str, Any],
                            loc: str, stack: Stack) -> None:
        for compose_key in _SERVICE_REFERENCE_ORDER:
            if compose_key not in body or body[compose_key] is None:
                continue
            raw = body[compose_key]
            handler = getattr(self, f"_ref_{compose_key}")
            handler(svc, raw, loc, stack)

    def _connect_quietly(self, stack: Stack, svc: ServiceNode, kind: EdgeKind,
                         to_id: str, **payload: Any) -> Edge | None:
        """Connect, treating duplicates as a silent no-op (lists may repeat)."""
        from .errors import DuplicateEdge, SelfEdge
        try:
            return stack.connect(svc.id, kind, to_id, **payload)
        except (DuplicateEdge, SelfEdge):
            return None

    def _ref_depends_on(self, svc: ServiceNode, raw: Any, loc: str, stack: Stack) -> None:
        if isinstance(raw, list):
            entries: list[tuple[str, Any]] = [(str(t), None) for t in raw]
        elif isinstance(raw, dict):
            entries = [(str(t), cond) for t, cond in raw.items()]
        else:
            svc.extras["depends_on"] = raw
            return
        for target_key, condition in entries:
            target = self._resolve(stack, ArtifactClass.SERVICE, target_key)
            if target is None or target.id == svc.id:
                self._dangling(svc, loc, "depends_on", ArtifactClass.SERVICE,
                               target_key, target_key)
            else:
                self._connect_quietly(stack, svc, EdgeKind.DEPENDS_ON, target.id)
            if condition:
                svc.extras.setdefault("depends_on", {}).setdefault(
                    "conditions", {})[target_key] = condition

    def _ref_links(self, svc: ServiceNode, raw: Any, loc: str, stack: Stack) -> None:
        if not isinstance(raw, list):
            svc.extras["links"] = raw
            return
        for entry in raw:
            text = str(entry)
            target_key, _, alias = text.partition(":")
            target = self._resolve(stack, ArtifactClass.SERVICE, target_key)
            if target is None or target.id == svc.id:
                self._dangling(svc, loc, "links", ArtifactClass.SERVICE, target_key, text)
            else:
                self._connect_quietly(stack, svc, EdgeKind.LINK, target.id,
                                      alias=alias or None)

    def _ref_networks(self, svc: ServiceNode, raw: Any, loc: str, stack: Stack) -> None:
        if isinstance(raw, list):
            entries: list[tuple[str, Any]] = [(str(n), None) for n in raw]
        elif isinstance(raw, dict):
            entries = [(str(n), opts) for n, opts in raw.items()]
        else:
            svc.extras["networks"] = raw
            return
        for net_key, opts in entries:
            target = self._resolve(stack, ArtifactClass.NETWORK, net_key)
            if target is None:
                self._dangling(svc, loc, "networks", ArtifactClass.NETWORK, net_key, net_key)
                if opts:
                    svc.extras.setdefault("networks", {}).setdefault(
                        "residual", {})[net_key] = opts
                continue
            aliases: list[str] = []
            residual: dict[str, Any] = {}
            if isinstance(opts, dict):
                for prop, value in opts.items():
                    if prop == "aliases" and isinstance(value, list):
                        aliases = [str(a) for a in value]
                    else:
                        residual[prop] = value
            self._connect_quietly(stack, svc, EdgeKind.NETWORK_ATTACHMENT, target.id,
                                  aliases=aliases)
            if residual:
                svc.extras.setdefault("networks", {}).setdefault(
                    "residual", {})[net_key] = residual

    def _ref_volumes(self, svc: ServiceNode, raw: Any, loc: str, stack: Stack) -> None:
        if not isinstance(raw, list):
            svc.extras["volumes"] = raw
            return
        for entry in raw:
            parsed = _parse_volume_entry(entry)
            if parsed is None:  # bind mount, anonymous volume, or exotic form
                self._retain(svc, "volumes", "unparsed", entry)
                continue
            source, target_path, read_only = parsed
            target = self._resolve(stack, ArtifactClass.VOLUME, source)
            if target is None:
                self._dangling(svc, loc, "volumes", ArtifactClass.VOLUME, source, entry)
            else:
                self._connect_quietly(stack, svc, EdgeKind.VOLUME_MOUNT, target.id,
                                      target=target_path, read_only=read_only)

    def _ref_configs(self, svc: ServiceNode, raw: Any, loc: str, stack: Stack) -> None:
        self._grants(svc, raw, loc, stack, "configs", ArtifactClass.CONFIG,
                     EdgeKind.CONFIG_GRANT)

    def _ref_secrets(self, svc: ServiceNode, raw: Any, loc: str, stack: Stack) -> None:
        self._grants(svc, raw, loc, stack, "secrets", ArtifactClass.SECRET,
                     EdgeKind.SECRET_GRANT)

    def _grants(self, svc: ServiceNode, raw: Any, loc: str, stack: Stack,
                compose_key: str, klass: ArtifactClass, kind: EdgeKind) -> None:
        if not isinstance(raw, list):
            svc.extras[compose_key] = raw
            return
        for entry in raw:
            if isinstance(entry, str):
                source, target_path, mode, residual = entry, None, None, {}
            elif isinstance(entry, dict) and "source" in entry:
                source = str(entry["source"])
                target_path = entry.get("target")
                mode = entry.get("mode") if isinstance(entry.get("mode"), int) else None
                residual = {k: v for k, v in entry.items()
                            if k not in ("source", "target", "mode")}
                if "mode" in entry and mode is None:
                    residual["mode"] = entry["mode"]
            else:
                self._retain(svc, compose_key, "unresolved", entry)
                self.notice("warn", loc,
                            f"service {svc.key!r} {compose_key} entry not understood",
                            NoticeCode.DANGLING_REFERENCE)
                continue
            target = self._resolve(stack, klass, source)
            if target is None:
                self._dangling(svc, loc, compose_key, klass, source, entry)
                continue
            self._connect_quietly(stack, svc, kind, target.id,
                                  target=target_path, mode=mode)
            if residual:
                svc.extras.setdefault(compose_key, {}).setdefault(
                    "residual", {})[source] = residual


_UNPARSED = object()


def _restart_text(raw: Any) -> str:
    if raw is None:
        return "no"
    if raw is False:
        return "no"
    if raw is True:
        return "always"
    return str(raw)


def _parse_command(raw: Any) -> Any:
    if raw is None:
        return None
    if isinstance(raw, list):
        return [str(item) for item in raw]
    if isinstance(raw, str):
        try:
            return shlex.split(raw)
        except ValueError:
            return _UNPARSED
    return _UNPARSED


def _parse_environment(raw: Any) -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = []
    if isinstance(raw, dict):
        for name, value in raw.items():
            pairs.append((str(name), _env_text(value)))
    elif isinstance(raw, list):
        for item in raw:
            name, _, value = str(item).partition("=")
            pairs.append((name, value))
    return pairs


def _env_text(value: Any) -> str:
    if value is None:
        return ""
    if value is True:
        return "true"
    if value is False:
        return "false"
    return str(value)


def _as_port_int(value: Any) -> int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value if 1 <= value <= 65535 else None
    if isinstance(value, str) and value.isdigit():
        return _as_port_int(int(value))
    return None


def _parse_port(entry: Any) -> PortMapping | None:
    """Understand the common short/long port forms; anything else is preserved."""
    if isinstance(entry, bool):
        return None
    if isinstance(entry, int):
        container = _as_port_int(entry)
        return PortMapping(container_port=container) if container else None
    if isinstance(entry, str):
        text, _, proto = entry.partition("/")
        if proto not in ("", "tcp", "udp"):
            return None
        parts = text.split(":")
        if len(parts) == 1:
            host, container = None, _as_port_int(parts[0])
        elif len(parts) == 2:
            host, container = _as_port_int(parts[0]), _as_port_int(parts[1])
            if host is None:
                return None
        else:  # ip-bound or range forms stay verbatim
            return None
        if container is None:
            return None
        return PortMapping(container_port=container, host_port=host,
                           protocol=proto or "tcp")
    if isinstance(entry, dict):
        known = {"target", "published", "protocol"}
        if set(entry) - known:
            return None
        container = _as_port_int(entry.get("target"))
        if container is None:
            return None
        host = None
        if "published" in entry:
            host = _as_port_int(entry["published"])
            if host is None:
                return None
        proto = entry.get("protocol", "tcp")
        if proto not in ("tcp", "udp"):
            return None
        return PortMapping(container_port=container, host_port=host, protocol=proto)
    return None


def _parse_volume_entry(entry: Any) -> tuple[str, str, bool] | None:
    """Named-volume mounts only: returns (source key, target, read_only)."""
    if isinstance(entry, str):
        parts = entry.split(":")
        if len(parts) == 2:
            source, target, flag = parts[0], parts[1], ""
        elif len(parts) == 3:
            source, target, flag = parts
        else:
            return None
        if flag not in ("", "ro", "rw"):
            return None
        if not _VOLUME_KEY_RE.match(source) or "/" in source:
            return None  # bind mount or relative path
        if not target.startswith("/"):
            return None
        return source, target, flag == "ro"
    if isinstance(entry, dict):
        if entry.get("type", "volume") != "volume":
            return None
        known = {"type", "source", "target", "read_only"}
        if set(entry) - known:
            return None
        source, target = entry.get("source"), entry.get("target")
        if not isinstance(source, str) or not isinstance(target, str):
            return None
        if not _VOLUME_KEY_RE.match(source) or not target.startswith("/"):
            return None
        return source, target, bool(entry.get("read_only", False))
    return None


def parse_compose(text: str | bytes) -> tuple[Stack, list[ParseNotice]]:
    """Translate Compose YAML into a Stack plus parse-time notices.

    Raises YamlSyntaxError for malformed YAML and NotAMapping when the top
    level is not a mapping; any other input yields a Stack.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise YamlSyntaxError(f"not UTF-8 text: {exc}") from None
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        raise YamlSyntaxError(str(exc)) from None
    if root is None:
        raise NotAMapping("document is empty")
    if not isinstance(root, MappingNode):
        raise NotAMapping("top level is not a mapping")
    builder = _Builder()
    try:
        stack = builder.build(root)
    except yaml.YAMLError as exc:  # unconstructable values (e.g. unhashable keys)
        raise YamlSyntaxError(str(exc)) from None
    except RecursionError:
        raise YamlSyntaxError("YAML nesting too deep") from None
    return stack, builder.notices


# --- serialization -----------------------------------------------------------


class _Dumper(yaml.SafeDumper):
    pass


def _represent_none(dumper: yaml.SafeDumper, _value: None) -> yaml.ScalarNode:
    return dumper.represent_scalar("tag:yaml.org,2002:null", "")


_Dumper.add_representer(type(None), _represent_none)


def disambiguated_keys(stack: Stack) -> tuple[dict[str, str], list[ParseNotice]]:
    """Emitted key per artifact id: colliding keys get a ``-2``/``-3`` suffix.

    YAML mappings cannot hold duplicate keys, so the serializer must rename;
    each rename is reported as a warn notice.
    """
    key_map: dict[str, str] = {}
    notices: list[ParseNotice] = []
    for klass in ArtifactClass:
        used: set[str] = set()
        section = _section_name(klass)
        for node in stack.collection(klass):
            emitted = node.key
            counter = 2
            while emitted in used:
                emitted = f"{node.key}-{counter}"
                counter += 1
            if emitted != node.key:
                notices.append(ParseNotice(
                    "warn", f"{section}.{node.key}",
                    f"duplicate {klass.value} key {node.key!r} emitted as {emitted!r}",
                    NoticeCode.DUPLICATE_YAML_KEY,
                ))
            used.add(emitted)
            key_map[node.id] = emitted
    return key_map, notices


def _section_name(klass: ArtifactClass) -> str:
    return {
        ArtifactClass.SERVICE: "services",
        ArtifactClass.VOLUME: "volumes",
        ArtifactClass.NETWORK: "networks",
        ArtifactClass.CONFIG: "configs",
        ArtifactClass.SECRET: "secrets",
    }[klass]


def serialize_compose(stack: Stack, *, omit_defaults: bool = True) -> str:
    """Canonical Compose YAML for a stack. Deterministic byte-for-byte."""
    text, _ = serialize_with_notices(stack, omit_defaults=omit_defaults)
    return text


def serialize_with_notices(stack: Stack, *, omit_defaults: bool = True,
                           ) -> tuple[str, list[ParseNotice]]:
    key_map, notices = disambiguated_keys(stack)
    doc: dict[str, Any] = {}
    if "version" in stack.extras:
        doc["version"] = stack.extras["version"]
    if stack.name:
        doc["name"] = stack.name

    doc["services"] = {
        key_map[svc.id]: _service_body(stack, svc, key_map, omit_defaults)
        for svc in stack.services
    }
    for klass in (ArtifactClass.VOLUME, ArtifactClass.NETWORK,
                  ArtifactClass.CONFIG, ArtifactClass.SECRET):
        nodes = stack.collection(klass)
        if nodes:
            doc[_section_name(klass)] = {
                key_map[n.id]: _plain_body(n, omit_defaults) for n in nodes
            }
    for key, value in stack.extras.items():
        if key != "version":
            doc[key] = value

    text = yaml.dump(doc, Dumper=_Dumper, sort_keys=False,
                     default_flow_style=False, allow_unicode=True, width=4096)
    return text, notices


def _service_body(stack: Stack, svc: ServiceNode, key_map: dict[str, str],
                  omit_defaults: bool) -> dict[str, Any]:
    body: dict[str, Any] = {}
    if svc.image is not None:
        body["image"] = svc.image.render(omit_default_tag=omit_defaults)
    if svc.container_name is not None:
        body["container_name"] = svc.container_name
    if svc.hostname is not None:
        body["hostname"] = svc.hostname
    if svc.command is not None:
        body["command"] = list(svc.command)
    if svc.entrypoint is not None:
        body["entrypoint"] = list(svc.entrypoint)
    if svc.environment:
        body["environment"] = [f"{name}={value}" for name, value in svc.environment]
    ports_passthrough = _opaque_passthrough(svc, "ports")
    if ports_passthrough is not None:
        body["ports"] = ports_passthrough
    else:
        ports = [_render_port(p, omit_defaults) for p in svc.ports]
        ports += list(_extras_bucket(svc, "ports", "unparsed"))
        if ports:
            body["ports"] = ports
    if svc.restart != "no" or not omit_defaults:
        body["restart"] = svc.restart
    if svc.stdin_open or not omit_defaults:
        body["stdin_open"] = svc.stdin_open
    if svc.tty or not omit_defaults:
        body["tty"] = svc.tty
    if svc.healthcheck is not None:
        body["healthcheck"] = _render_healthcheck(svc)
    else:
        hc_passthrough = _opaque_passthrough(svc, "healthcheck")
        if hc_passthrough is not None:
            body["healthcheck"] = hc_passthrough
    if svc.mem_limit is not None:
        # plain digits emit as a YAML int, except non-canonical forms like "007"
        canonical_int = svc.mem_limit.isdigit() and str(int(svc.mem_limit)) == svc.mem_limit
        body["mem_limit"] = int(svc.mem_limit) if canonical_int else svc.mem_limit

    edges = [e for e in stack.edges if e.from_id == svc.id]
    _render_depends_on(body, svc, edges, key_map)
    _render_links(body, svc, edges, key_map)
    _render_networks(body, svc, edges, key_map)
    _render_volumes(body, svc, edges, key_map)
    _render_grants(body, svc, edges, key_map, "configs", EdgeKind.CONFIG_GRANT)
    _render_grants(body, svc, edges, key_map, "secrets", EdgeKind.SECRET_GRANT)

    merged_above = _SERVICE_REFERENCE_KEYS | {"ports", "healthcheck"}
    for key, value in svc.extras.items():
        if key in merged_above:
            continue  # passthroughs and sidecar buckets already emitted
        body[key] = value
    return body


def _extras_bucket(node: Any, compose_key: str, bucket: str) -> list[Any]:
    entry = node.extras.get(compose_key)
    if isinstance(entry, dict):
        return list(entry.get(bucket, []))
    return []


def _extras_residual(node: Any, compose_key: str) -> dict[str, Any]:
    entry = node.extras.get(compose_key)
    if isinstance(entry, dict):
        residual = entry.get("residual", {})
        if isinstance(residual, dict):
            return residual
    return {}


def _opaque_passthrough(node: Any, compose_key: str) -> Any | None:
    """A reference key whose whole value was preserved verbatim (non-list form)."""
    entry = node.extras.get(compose_key)
    if entry is not None and not isinstance(entry, dict):
        return entry
    if isinstance(entry, dict) and not (
            set(entry) & {"unresolved", "unparsed", "residual", "conditions"}):
        return entry
    return None


def _render_port(port: PortMapping, omit_defaults: bool) -> str:
    text = str(port.container_port)
    if port.host_port is not None:
        text = f"{port.host_port}:{text}"
    if port.protocol != "tcp" or not omit_defaults:
        text = f"{text}/{port.protocol}"
    return text


def _render_healthcheck(svc: ServiceNode) -> dict[str, Any]:
    hc = svc.healthcheck
    out: dict[str, Any] = {}
    if hc.test:
        out["test"] = list(hc.test)
    if hc.interval is not None:
        out["interval"] = hc.interval
    if hc.timeout is not None:
        out["timeout"] = hc.timeout
    if hc.retries:
        out["retries"] = hc.retries
    out.update(_extras_residual(svc, "healthcheck"))
    return out


def _render_depends_on(body: dict[str, Any], svc: ServiceNode,
                       edges: list[Edge], key_map: dict[str, str]) -> None:
    passthrough = _opaque_passthrough(svc, "depends_on")
    if passthrough is not None:
        body["depends_on"] = passthrough
        return
    targets = [key_map[e.to_id] for e in edges if e.kind is EdgeKind.DEPENDS_ON]
    unresolved = [str(u) for u in _extras_bucket(svc, "depends_on", "unresolved")]
    conditions = svc.extras.get("depends_on", {}).get("conditions", {}) \
        if isinstance(svc.extras.get("depends_on"), dict) else {}
    all_targets = targets + unresolved
    if not all_targets:
        return
    if conditions:
        body["depends_on"] = {t: conditions.get(t, {}) for t in all_targets}
    else:
        body["depends_on"] = all_targets


def _render_links(body: dict[str, Any], svc: ServiceNode,
                  edges: list[Edge], key_map: dict[str, str]) -> None:
    passthrough = _opaque_passthrough(svc, "links")
    if passthrough is not None:
        body["links"] = passthrough
        return
    rendered = []
    for e in edges:
        if e.kind is not EdgeKind.LINK:
            continue
        target = key_map[e.to_id]
        rendered.append(f"{target}:{e.alias}" if e.alias else target)
    rendered += [str(u) for u in _extras_bucket(svc, "links", "unresolved")]
    if rendered:
        body["links"] = rendered


def _render_networks(body: dict[str, Any], svc: ServiceNode,
                     edges: list[Edge], key_map: dict[str, str]) -> None:
    passthrough = _opaque_passthrough(svc, "networks")
    if passthrough is not None:
        body["networks"] = passthrough
        return
    attachments = [e for e in edges if e.kind is EdgeKind.NETWORK_ATTACHMENT]
    unresolved = [str(u) for u in _extras_bucket(svc, "networks", "unresolved")]
    residual = _extras_residual(svc, "networks")
    if not attachments and not unresolved:
        return
    needs_mapping = residual or any(e.aliases for e in attachments)
    if not needs_mapping:
        body["networks"] = [key_map[e.to_id] for e in attachments] + unresolved
        return
    out: dict[str, Any] = {}
    for e in attachments:
        net_key = key_map[e.to_id]
        opts: dict[str, Any] = {}
        if e.aliases:
            opts["aliases"] = list(e.aliases)
        opts.update(residual.get(net_key, {}))
        out[net_key] = opts or None
    for name in unresolved:
        opts = dict(residual.get(name, {}))
        out[name] = opts or None
    body["networks"] = out


def _render_volumes(body: dict[str, Any], svc: ServiceNode,
                    edges: list[Edge], key_map: dict[str, str]) -> None:
    passthrough = _opaque_passthrough(svc, "volumes")
    if passthrough is not None:
        body["volumes"] = passthrough
        return
    rendered: list[Any] = []
    for e in edges:
        if e.kind is not EdgeKind.VOLUME_MOUNT:
            continue
        text = f"{key_map[e.to_id]}:{e.target}"
        if e.read_only:
            text += ":ro"
        rendered.append(text)
    rendered += _extras_bucket(svc, "volumes", "unresolved")
    rendered += _extras_bucket(svc, "volumes", "unparsed")
    if rendered:
        body["volumes"] = rendered


def _render_grants(body: dict[str, Any], svc: ServiceNode, edges: list[Edge],
                   key_map: dict[str, str], compose_key: str, kind: EdgeKind) -> None:
    passthrough = _opaque_passthrough(svc, compose_key)
    if passthrough is not None:
        body[compose_key] = passthrough
        return
    residual = _extras_residual(svc, compose_key)
    rendered: list[Any] = []
    for e in edges:
        if e.kind is not kind:
            continue
        source = key_map[e.to_id]
        extra = residual.get(source, {})
        if e.target is None and e.mode is None and not extra:
            rendered.append(source)
        else:
            entry: dict[str, Any] = {"source": source}
            if e.target is not None:
                entry["target"] = e.target
            if e.mode is not None:
                entry["mode"] = e.mode
            entry.update(extra)
            rendered.append(entry)
    rendered += _extras_bucket(svc, compose_key, "unresolved")
    if rendered:
        body[compose_key] = rendered


def _plain_body(node: Any, omit_defaults: bool) -> Any:
    body: dict[str, Any] = {}
    if isinstance(node, (VolumeNode, NetworkNode)) and node.driver is not None:
        body["driver"] = node.driver
    if isinstance(node, NetworkNode) and (node.internal or not omit_defaults):
        body["internal"] = node.internal
    if isinstance(node, (ConfigNode, SecretNode)) and node.source is not None:
        if node.source.kind is SourceKind.FILE:
            body["file"] = node.source.path
        else:
            body["external"] = True
    body.update(node.extras)
    return body or None


# --- project files -----------------------------------------------------------

_CLASS_FROM_VALUE = {klass.value: klass for klass in ArtifactClass}


def stack_to_dict(stack: Stack) -> dict[str, Any]:
    """JSON-safe encoding of a stack, internal ids included."""
    artifacts = []
    for node in stack.artifacts():
        item: dict[str, Any] = {"id": node.id, "class": node.klass.value, "key": node.key}
        if isinstance(node, ServiceNode):
            item.update(
                image=node.image.render(omit_default_tag=False) if node.image else None,
                container_name=node.container_name,
                command=node.command,
                entrypoint=node.entrypoint,
                environment=[list(p) for p in node.environment],
                ports=[{"container_port": p.container_port, "host_port": p.host_port,
                        "protocol": p.protocol} for p in node.ports],
                hostname=node.hostname,
                restart=node.restart,
                stdin_open=node.stdin_open,
                tty=node.tty,
                healthcheck=(
                    {"test": node.healthcheck.test, "interval": node.healthcheck.interval,
                     "timeout": node.healthcheck.timeout, "retries": node.healthcheck.retries}
                    if node.healthcheck else None),
                mem_limit=node.mem_limit,
            )
        elif isinstance(node, VolumeNode):
            item["driver"] = node.driver
        elif isinstance(node, NetworkNode):
            item.update(driver=node.driver, internal=node.internal)
        else:
            item["source"] = (
                {"kind": node.source.kind.value, "path": node.source.path}
                if node.source else None)
        item["extras"] = node.extras
        artifacts.append(item)
    edges = [
        {"id": e.id, "kind": e.kind.value, "from": e.from_id, "to": e.to_id,
         **e.payload()}
        for e in stack.edges
    ]
    return {"name": stack.name, "artifacts": artifacts, "edges": edges,
            "extras": stack.extras}


def stack_from_dict(data: dict[str, Any]) -> Stack:
    """Inverse of stack_to_dict. Raises CorruptProject on schema mismatch."""
    try:
        stack = Stack(name=str(data.get("name", "")))
        stack.extras = dict(data.get("extras", {}))
        max_serial = 0
        for item in data["artifacts"]:
            klass = _CLASS_FROM_VALUE[item["class"]]
            node_id, key = str(item["id"]), str(item["key"])
            if klass is ArtifactClass.SERVICE:
                node: Any = ServiceNode(
                    id=node_id, key=key,
                    image=ImageRef.parse(item["image"]) if item.get("image") else None,
                    container_name=item.get("container_name"),
                    command=item.get("command"),
                    entrypoint=item.get("entrypoint"),
                    environment=[tuple(p) for p in item.get("environment", [])],
                    ports=[PortMapping(**p) for p in item.get("ports", [])],
                    hostname=item.get("hostname"),
                    restart=item.get("restart", "no"),
                    stdin_open=bool(item.get("stdin_open", False)),
                    tty=bool(item.get("tty", False)),
                    healthcheck=Healthcheck(**item["healthcheck"])
                    if item.get("healthcheck") else None,
                    mem_limit=item.get("mem_limit"),
                )
            elif klass is ArtifactClass.VOLUME:
                node = VolumeNode(id=node_id, key=key, driver=item.get("driver"))
            elif klass is ArtifactClass.NETWORK:
                node = NetworkNode(id=node_id, key=key, driver=item.get("driver"),
                                   internal=bool(item.get("internal", False)))
            else:
                source = item.get("source")
                node_type = ConfigNode if klass is ArtifactClass.CONFIG else SecretNode
                node = node_type(
                    id=node_id, key=key,
                    source=DataSource(kind=SourceKind(source["kind"]),
                                      path=source.get("path"))
                    if source else None,
                )
            node.extras = dict(item.get("extras", {}))
            stack.collection(klass).append(node)
            max_serial = max(max_serial, _id_serial(node_id))
        ids = {n.id for n in stack.artifacts()}
        for item in data.get("edges", []):
            if item["from"] not in ids or item["to"] not in ids:
                raise CorruptProject(f"edge {item.get('id')!r} references unknown artifact")
            edge = Edge(
                id=str(item["id"]), kind=EdgeKind(item["kind"]),
                from_id=str(item["from"]), to_id=str(item["to"]),
                alias=item.get("alias"), aliases=list(item.get("aliases", [])),
                target=item.get("target"), read_only=bool(item.get("read_only", False)),
                mode=item.get("mode"),
            )
            stack.edges.append(edge)
            max_serial = max(max_serial, _id_serial(edge.id))
        stack._id_counter = max_serial
        return stack
    except CorruptProject:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise CorruptProject(f"malformed stack record: {exc}") from None


def _id_serial(node_id: str) -> int:
    return int(node_id[1:]) if re.fullmatch(r"a\d+", node_id) else 0


def diagram_to_dict(diagram: Diagram) -> dict[str, Any]:
    return {
        "positions": {k: list(v) for k, v in diagram.positions.items()},
        "node_sizes": {k: list(v) for k, v in diagram.node_sizes.items()},
        "canvas": list(diagram.canvas),
    }


def diagram_from_dict(data: dict[str, Any]) -> Diagram:
    try:
        return Diagram(
            positions={k: (float(x), float(y))
                       for k, (x, y) in data.get("positions", {}).items()},
            node_sizes={k: (float(w), float(h))
                        for k, (w, h) in data.get("node_sizes", {}).items()},
            canvas=tuple(data.get("canvas", (0.0, 0.0))),
        )
    except (TypeError, ValueError) as exc:
        raise CorruptProject(f"malformed diagram record: {exc}") from None


def save_project(stack: Stack, diagram: Diagram, settings: ProjectSettings,
                 path: str | os.PathLike[str]) -> None:
    """Write the one-file project document (stack + diagram + settings)."""
    doc = {
        "format_version": PROJECT_FORMAT_VERSION,
        "stack": stack_to_dict(stack),
        "diagram": diagram_to_dict(diagram),
        "settings": {
            "working_directory": settings.working_directory,
            "export_omit_defaults": settings.export_omit_defaults,
        },
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, default=str)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write project file: {exc}") from None


def load_project(path: str | os.PathLike[str]) -> tuple[Stack, Diagram, ProjectSettings]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read project file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CorruptProject(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise CorruptProject("project document must be a JSON object")
    version = doc.get("format_version")
    if version != PROJECT_FORMAT_VERSION:
        raise UnsupportedVersion(f"unsupported project format_version: {version!r}")
    try:
        stack = stack_from_dict(doc["stack"])
        diagram = diagram_from_dict(doc.get("diagram", {}))
        raw_settings = doc.get("settings", {})
        settings = ProjectSettings(
            working_directory=str(raw_settings.get("working_directory", ".")),
            export_omit_defaults=bool(raw_settings.get("export_omit_defaults", True)),
        )
    except KeyError as exc:
        raise CorruptProject(f"missing project field: {exc}") from None
    ids = {n.id for n in stack.artifacts()}
    for diagram_id in list(diagram.positions) + list(diagram.node_sizes):
        if diagram_id not in ids:
            raise CorruptProject(f"diagram references unknown artifact id {diagram_id!r}")
    return stack, diagram, settings
