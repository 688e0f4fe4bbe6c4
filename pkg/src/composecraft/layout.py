"""Deterministic canvas placement for stacks opened without a project file.

Services form the upper band, laid out in columns by dependency depth so a
dependency always sits strictly left of its dependents. Volumes, networks,
configs, and secrets form a single lower band, in that class order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnknownArtifact
from .model import ArtifactClass, EdgeKind, Stack

#: Fixed node dimensions per class; services render larger than the rest.
NODE_SIZES: dict[ArtifactClass, tuple[float, float]] = {
    ArtifactClass.SERVICE: (180.0, 120.0),
    ArtifactClass.VOLUME: (150.0, 60.0),
    ArtifactClass.NETWORK: (150.0, 60.0),
    ArtifactClass.CONFIG: (150.0, 60.0),
    ArtifactClass.SECRET: (150.0, 60.0),
}


@dataclass
class LayoutConfig:
    h_gap: float = 80.0
    v_gap: float = 40.0
    band_gap: float = 120.0
    margin: float = 40.0


@dataclass
class Diagram:
    """Per-artifact positions plus derived sizes and the canvas extent."""

    positions: dict[str, tuple[float, float]] = field(default_factory=dict)
    node_sizes: dict[str, tuple[float, float]] = field(default_factory=dict)
    canvas: tuple[float, float] = (0.0, 0.0)

    def move(self, artifact_id: str, x: float, y: float) -> "Diagram":
        """Overwrite one node's position (user drag); overlap is permitted."""
        if artifact_id not in self.positions:
            raise UnknownArtifact(f"no positioned artifact with id {artifact_id!r}")
        self.positions[artifact_id] = (float(x), float(y))
        width, height = self.node_sizes[artifact_id]
        self.canvas = (
            max(self.canvas[0], x + width),
            max(self.canvas[1], y + height),
        )
        return self


def apply_user_position(diagram: Diagram, artifact_id: str, x: float, y: float) -> Diagram:
    return diagram.move(artifact_id, x, y)


def dependency_depths(stack: Stack) -> dict[str, int]:
    """Column index per service: 0 for services nothing here depends on
    transitively, growing toward dependents. Cycle members share one depth.
    """
    components = _condense(stack)
    comp_of: dict[str, int] = {}
    for i, members in enumerate(components):
        for m in members:
            comp_of[m] = i

    successors: dict[int, set[int]] = {i: set() for i in range(len(components))}
    for edge in stack.edges:
        if edge.kind is not EdgeKind.DEPENDS_ON:
            continue
        src, dst = comp_of.get(edge.from_id), comp_of.get(edge.to_id)
        if src is None or dst is None or src == dst:
            continue
        successors[src].add(dst)  # src depends on dst: dst must sit left

    depth: dict[int, int] = {}

    def comp_depth(comp: int) -> int:
        if comp in depth:
            return depth[comp]
        depth[comp] = 0  # placeholder; condensation is acyclic
        value = 0
        for nxt in successors[comp]:
            value = max(value, comp_depth(nxt) + 1)
        depth[comp] = value
        return value

    out: dict[str, int] = {}
    for i, members in enumerate(components):
        for m in members:
            out[m] = comp_depth(i)
    return out


def _condense(stack: Stack) -> list[list[str]]:
    """All SCCs of the depends_on digraph (singletons included), by insertion."""
    from .validation import detect_cycles

    cycles = detect_cycles(stack)
    in_cycle = {m for comp in cycles for m in comp}
    components = [comp for comp in cycles]
    for svc in stack.services:
        if svc.id not in in_cycle:
            components.append([svc.id])
    order = {svc.id: i for i, svc in enumerate(stack.services)}
    components.sort(key=lambda comp: order[comp[0]])
    return components


def auto_layout(stack: Stack, config: LayoutConfig | None = None) -> Diagram:
    """Place every artifact; deterministic for identical input."""
    cfg = config or LayoutConfig()
    diagram = Diagram()
    if not any(True for _ in stack.artifacts()):
        return diagram

    svc_w, svc_h = NODE_SIZES[ArtifactClass.SERVICE]
    depths = dependency_depths(stack)
    rows_in_column: dict[int, int] = {}
    service_bottom = cfg.margin
    for svc in stack.services:  # insertion order fixes the row inside a column
        column = depths[svc.id]
        row = rows_in_column.get(column, 0)
        rows_in_column[column] = row + 1
        x = cfg.margin + column * (svc_w + cfg.h_gap)
        y = cfg.margin + row * (svc_h + cfg.v_gap)
        diagram.positions[svc.id] = (x, y)
        diagram.node_sizes[svc.id] = (svc_w, svc_h)
        service_bottom = max(service_bottom, y + svc_h)

    lower_y = (service_bottom + cfg.band_gap) if stack.services else cfg.margin
    x = cfg.margin
    for klass in (ArtifactClass.VOLUME, ArtifactClass.NETWORK,
                  ArtifactClass.CONFIG, ArtifactClass.SECRET):
        width, height = NODE_SIZES[klass]
        for node in stack.collection(klass):
            diagram.positions[node.id] = (x, lower_y)
            diagram.node_sizes[node.id] = (width, height)
            x += width + cfg.h_gap

    right = max(x + w for (x, _), (w, _) in
                zip(diagram.positions.values(), diagram.node_sizes.values()))
    bottom = max(y + h for (_, y), (_, h) in
                 zip(diagram.positions.values(), diagram.node_sizes.values()))
    diagram.canvas = (right + cfg.margin, bottom + cfg.margin)
    return diagram
