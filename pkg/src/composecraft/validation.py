"""Static validation: advisory warnings over a stack, never hard errors.

Rules V1-V6 run unconditionally; V7 (host port collisions) is an extension
behind a flag, default off. Findings are deterministically ordered so CLI
output and UI snapshots stay diffable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import InvalidFormat
from .model import ArtifactClass, EdgeKind, ServiceNode, Stack


class WarningCode(str, Enum):
    DUPLICATE_KEY = "DuplicateKey"
    INVALID_DURATION = "InvalidDuration"
    INVALID_BYTE_SIZE = "InvalidByteSize"
    DANGLING_REFERENCE = "DanglingReference"
    DEPENDENCY_CYCLE = "DependencyCycle"
    DUPLICATE_ENV_NAME = "DuplicateEnvName"
    HOST_PORT_COLLISION = "HostPortCollision"


_CODE_ORDER = {code: i for i, code in enumerate(WarningCode)}


@dataclass(frozen=True)
class Warning:
    code: WarningCode
    artifact: str  # internal artifact id
    message: str
    property: str | None = None


# --- duration ----------------------------------------------------------------

_DURATION_RE = re.compile(r"(?:(?:\d+(?:\.\d*)?|\.\d+)(?:us|ms|s|m|h))+\Z")
_DURATION_TERM_RE = re.compile(r"(\d+(?:\.\d*)?|\.\d+)(us|ms|s|m|h)")

_US_PER_UNIT = {
    "us": 1,
    "ms": 1_000,
    "s": 1_000_000,
    "m": 60_000_000,
    "h": 3_600_000_000,
}


@dataclass(frozen=True)
class Duration:
    """A parsed duration: canonical microseconds paired with the source text."""

    microseconds: int
    text: str

    def render(self) -> str:
        """Canonical text that re-parses to the same microsecond value."""
        remaining = self.microseconds
        parts = []
        for unit in ("h", "m", "s", "ms", "us"):
            scale = _US_PER_UNIT[unit]
            count, remaining = divmod(remaining, scale)
            if count:
                parts.append(f"{count}{unit}")
        return "".join(parts) or "0s"


def parse_duration(text: str) -> Duration:
    """Parse concatenated duration terms like ``1m30s`` or ``2.5s``.

    Units are us, ms, s, m, h with decimal coefficients; at least one term,
    no whitespace, no sign. The total is truncated to whole microseconds.
    """
    if not isinstance(text, str) or not _DURATION_RE.match(text):
        raise InvalidFormat(f"invalid duration: {text!r}")
    total = Fraction(0)
    for coeff, unit in _DURATION_TERM_RE.findall(text):
        total += Fraction(coeff) * _US_PER_UNIT[unit]
    return Duration(microseconds=int(total), text=text)


# --- byte size ---------------------------------------------------------------

_BYTE_SIZE_RE = re.compile(r"(\d+)(b|kb|mb|gb)?\Z", re.IGNORECASE)

_BYTES_PER_UNIT = {"b": 1, "kb": 1024, "mb": 1024**2, "gb": 1024**3}


@dataclass(frozen=True)
class ByteSize:
    """A parsed memory size: canonical bytes paired with the source text."""

    bytes: int
    text: str

    def render(self) -> str:
        for unit in ("gb", "mb", "kb"):
            scale = _BYTES_PER_UNIT[unit]
            if self.bytes and self.bytes % scale == 0:
                return f"{self.bytes // scale}{unit}"
        return str(self.bytes)


def parse_byte_size(text: str) -> ByteSize:
    """Parse an integer byte size: bare integer or with unit b/kb/mb/gb.

    Units are case-insensitive binary multiples of 1024; fractions rejected.
    """
    if not isinstance(text, str):
        raise InvalidFormat(f"invalid byte size: {text!r}")
    match = _BYTE_SIZE_RE.match(text)
    if not match:
        raise InvalidFormat(f"invalid byte size: {text!r}")
    value, unit = match.groups()
    multiplier = _BYTES_PER_UNIT[unit.lower()] if unit else 1
    return ByteSize(bytes=int(value) * multiplier, text=text)


# --- cycle detection ---------------------------------------------------------


def detect_cycles(stack: Stack) -> list[list[str]]:
    """Strongly-connected components of size >= 2 (plus self-loops) over
    depends_on edges, as lists of service ids.

    Components are ordered by their first member's insertion order, members
    within a component likewise.
    """
    order = {svc.id: i for i, svc in enumerate(stack.services)}
    adjacency: dict[str, list[str]] = {svc.id: [] for svc in stack.services}
    self_loops: set[str] = set()
    for edge in stack.edges:
        if edge.kind is not EdgeKind.DEPENDS_ON:
            continue
        if edge.from_id == edge.to_id:
            self_loops.add(edge.from_id)
        elif edge.from_id in adjacency and edge.to_id in adjacency:
            adjacency[edge.from_id].append(edge.to_id)

    # Iterative Tarjan; recursion would limit stack sizes.
    index_of: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    tarjan_stack: list[str] = []
    components: list[list[str]] = []
    counter = 0

    for root in adjacency:
        if root in index_of:
            continue
        work: list[tuple[str, int]] = [(root, 0)]
        while work:
            node, child_i = work[-1]
            if child_i == 0:
                index_of[node] = lowlink[node] = counter
                counter += 1
                tarjan_stack.append(node)
                on_stack.add(node)
            advanced = False
            children = adjacency[node]
            while child_i < len(children):
                child = children[child_i]
                child_i += 1
                if child not in index_of:
                    work[-1] = (node, child_i)
                    work.append((child, 0))
                    advanced = True
                    break
                if child in on_stack:
                    lowlink[node] = min(lowlink[node], index_of[child])
            if advanced:
                continue
            work.pop()
            if lowlink[node] == index_of[node]:
                component = []
                while True:
                    member = tarjan_stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                if len(component) > 1:
                    components.append(sorted(component, key=order.__getitem__))
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])

    for node in self_loops:
        components.append([node])
    components.sort(key=lambda comp: order[comp[0]])
    return components


# --- the rule engine ---------------------------------------------------------

#: Sidecar keys that may retain unresolved textual references after parsing,
#: mapped to the artifact class the reference should resolve against.
_REFERENCE_SIDECAR_KEYS = {
    "depends_on": ArtifactClass.SERVICE,
    "links": ArtifactClass.SERVICE,
    "networks": ArtifactClass.NETWORK,
    "volumes": ArtifactClass.VOLUME,
    "configs": ArtifactClass.CONFIG,
    "secrets": ArtifactClass.SECRET,
}


def _reference_name(compose_key: str, ref: object) -> str:
    """The artifact key a retained sidecar reference entry points at."""
    if isinstance(ref, dict):
        return str(ref.get("source", ""))
    text = str(ref)
    if compose_key == "links":
        return text.partition(":")[0]
    if compose_key == "volumes":
        return text.split(":")[0]
    return text


def validate(stack: Stack, *, check_host_ports: bool = False) -> list[Warning]:
    """Run all rules over the stack and return deterministically ordered findings.

    Purely advisory: never mutates the stack, never blocks any operation.
    """
    findings: list[Warning] = []

    # V1: duplicate keys within one artifact class
    for klass in ArtifactClass:
        by_key: dict[str, list[str]] = {}
        for node in stack.collection(klass):
            by_key.setdefault(node.key, []).append(node.id)
        for key, ids in by_key.items():
            if len(ids) < 2:
                continue
            for node_id in ids:
                findings.append(Warning(
                    code=WarningCode.DUPLICATE_KEY,
                    artifact=node_id,
                    message=f"{len(ids)} {klass.value}s share the key {key!r}",
                ))

    for svc in stack.services:
        # V2: duration-formatted properties
        if svc.healthcheck is not None:
            for prop in ("interval", "timeout"):
                raw = getattr(svc.healthcheck, prop)
                if raw is None:
                    continue
                try:
                    parse_duration(raw)
                except InvalidFormat:
                    findings.append(Warning(
                        code=WarningCode.INVALID_DURATION,
                        artifact=svc.id,
                        property=f"healthcheck.{prop}",
                        message=f"{raw!r} is not a valid duration",
                    ))
        # V3: byte-size-formatted properties
        if svc.mem_limit is not None:
            try:
                parse_byte_size(svc.mem_limit)
            except InvalidFormat:
                findings.append(Warning(
                    code=WarningCode.INVALID_BYTE_SIZE,
                    artifact=svc.id,
                    property="mem_limit",
                    message=f"{svc.mem_limit!r} is not a valid memory size",
                ))
        # V4: retained textual references that still resolve to nothing
        for compose_key, klass in _REFERENCE_SIDECAR_KEYS.items():
            entry = svc.extras.get(compose_key)
            if not isinstance(entry, dict):
                continue
            for ref in entry.get("unresolved", []):
                name = _reference_name(compose_key, ref)
                if len(stack.find(klass, name)) != 1:
                    findings.append(Warning(
                        code=WarningCode.DANGLING_REFERENCE,
                        artifact=svc.id,
                        property=compose_key,
                        message=f"{compose_key} references unknown {klass.value} {name!r}",
                    ))
        # V6: repeated environment variable names
        seen: dict[str, int] = {}
        for name, _ in svc.environment:
            seen[name] = seen.get(name, 0) + 1
        for name, count in seen.items():
            if count > 1:
                findings.append(Warning(
                    code=WarningCode.DUPLICATE_ENV_NAME,
                    artifact=svc.id,
                    property="environment",
                    message=f"environment variable {name!r} defined {count} times",
                ))

    # V5: dependency cycles
    key_of = {svc.id: svc.key for svc in stack.services}
    for component in detect_cycles(stack):
        cycle_keys = ", ".join(key_of[m] for m in component)
        for member in component:
            findings.append(Warning(
                code=WarningCode.DEPENDENCY_CYCLE,
                artifact=member,
                message=f"depends_on cycle through: {cycle_keys}",
            ))

    # V7 (extension, off by default): two services publishing the same host port
    if check_host_ports:
        published: dict[tuple[int, str], list[str]] = {}
        for svc in stack.services:
            for port in svc.ports:
                if port.host_port is not None:
                    published.setdefault((port.host_port, port.protocol), []).append(svc.id)
        for (host_port, protocol), ids in sorted(published.items()):
            if len(set(ids)) < 2:
                continue
            for svc_id in dict.fromkeys(ids):
                findings.append(Warning(
                    code=WarningCode.HOST_PORT_COLLISION,
                    artifact=svc_id,
                    property="ports",
                    message=f"host port {host_port}/{protocol} published by multiple services",
                ))

    index_of = {node.id: i for i, node in enumerate(stack.artifacts())}
    findings.sort(key=lambda w: (
        index_of[w.artifact], _CODE_ORDER[w.code], w.property or "", w.message
    ))
    return findings
