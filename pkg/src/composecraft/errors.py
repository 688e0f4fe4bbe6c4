"""Exception taxonomy shared by the engine, CLI, and HTTP service.

Every error carries a stable ``code`` string so the HTTP layer and the
``--json`` CLI modes can surface machine-readable failures.
"""

from __future__ import annotations


class ComposecraftError(Exception):
    """Base class for all engine errors."""

    code = "Error"

    def __str__(self) -> str:
        msg = super().__str__()
        return msg if msg else self.code


# --- model errors -----------------------------------------------------------


class UnknownArtifact(ComposecraftError):
    code = "UnknownArtifact"


class UnknownEdge(ComposecraftError):
    code = "UnknownEdge"


class UnknownProperty(ComposecraftError):
    code = "UnknownProperty"


class TypeMismatch(ComposecraftError):
    """Edge kind does not permit the target artifact's class."""

    code = "TypeMismatch"


class SelfEdge(ComposecraftError):
    code = "SelfEdge"


class DuplicateEdge(ComposecraftError):
    code = "DuplicateEdge"


class StructuralViolation(ComposecraftError):
    """A value shape the model cannot represent (e.g. host port without container port)."""

    code = "StructuralViolation"


# --- io errors --------------------------------------------------------------


class YamlSyntaxError(ComposecraftError):
    code = "YamlSyntaxError"


class NotAMapping(ComposecraftError):
    code = "NotAMapping"


class IoError(ComposecraftError):
    code = "IoError"


class UnsupportedVersion(ComposecraftError):
    code = "UnsupportedVersion"


class CorruptProject(ComposecraftError):
    code = "CorruptProject"


# --- format errors ----------------------------------------------------------


class InvalidFormat(ComposecraftError):
    code = "InvalidFormat"


# --- registry errors --------------------------------------------------------


class EmptyQuery(ComposecraftError):
    code = "EmptyQuery"


class UnknownRepository(ComposecraftError):
    code = "UnknownRepository"


class NetworkError(ComposecraftError):
    code = "NetworkError"


class RegistryError(ComposecraftError):
    code = "RegistryError"


# --- runtime errors ---------------------------------------------------------


class AlreadyRunning(ComposecraftError):
    code = "AlreadyRunning"


class NotRunning(ComposecraftError):
    code = "NotRunning"


class SpawnError(ComposecraftError):
    code = "SpawnError"


class AdapterError(ComposecraftError):
    code = "AdapterError"


class UnknownService(ComposecraftError):
    code = "UnknownService"


# --- server errors ----------------------------------------------------------


class BindError(ComposecraftError):
    code = "BindError"
