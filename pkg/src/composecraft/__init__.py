"""Low-code workbench engine for Docker Compose orchestrations."""

from .compose_io import (
    ParseNotice,
    ProjectSettings,
    load_project,
    parse_compose,
    save_project,
    serialize_compose,
    serialize_with_notices,
)
from .layout import Diagram, LayoutConfig, apply_user_position, auto_layout
from .model import (
    ArtifactClass,
    Edge,
    EdgeKind,
    Stack,
    new_stack,
    stack_signature,
    stacks_equal,
)
from .validation import (
    ByteSize,
    Duration,
    Warning,
    WarningCode,
    detect_cycles,
    parse_byte_size,
    parse_duration,
    validate,
)

__all__ = [
    "ArtifactClass",
    "ByteSize",
    "Diagram",
    "Duration",
    "Edge",
    "EdgeKind",
    "LayoutConfig",
    "ParseNotice",
    "ProjectSettings",
    "Stack",
    "Warning",
    "WarningCode",
    "apply_user_position",
    "auto_layout",
    "detect_cycles",
    "load_project",
    "new_stack",
    "parse_byte_size",
    "parse_compose",
    "parse_duration",
    "save_project",
    "serialize_compose",
    "serialize_with_notices",
    "stack_signature",
    "stacks_equal",
    "validate",
]

__version__ = "0.1.0"
