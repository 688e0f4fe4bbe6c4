"""Headless CLI: validate, format, layout export, lifecycle, search, serve.

Exit codes: 0 ok, 1 warnings under --strict, 2 parse error, 3 fmt --check
difference, 4 runtime failure, 5 network failure. Warnings never affect the
exit code by default; they are advisory end to end.
"""

from __future__ import annotations

import json
import os
import shlex
import sys

import click

from .compose_io import parse_compose, serialize_compose
from .errors import (
    ComposecraftError,
    NetworkError,
    NotAMapping,
    RegistryError,
    UnknownRepository,
    YamlSyntaxError,
)
from .layout import auto_layout
from .model import Stack
from .registry import RegistryClient
from .runtime import GENERAL, Orchestrator, RuntimeConfig, SubprocessRuntimeAdapter
from .server import ServeConfig, serve
from .validation import validate

EXIT_OK = 0
EXIT_WARNINGS = 1
EXIT_PARSE = 2
EXIT_FMT_DIFF = 3
EXIT_RUNTIME = 4
EXIT_NETWORK = 5

RUNTIME_ENV = "COMPOSECRAFT_RUNTIME"


def _read_stack(path: str) -> tuple[Stack, list]:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        click.echo(f"error: cannot read {path}: {exc}", err=True)
        raise SystemExit(EXIT_PARSE)
    try:
        return parse_compose(data)
    except (YamlSyntaxError, NotAMapping) as exc:
        click.echo(f"error: {path}: {exc}", err=True)
        raise SystemExit(EXIT_PARSE)


def _runtime_command() -> tuple[str, ...]:
    raw = os.environ.get(RUNTIME_ENV, "docker compose")
    return tuple(shlex.split(raw))


def _build_orchestrator(poll_interval: float = 1.0) -> Orchestrator:
    config = RuntimeConfig(command=_runtime_command(), poll_interval=poll_interval)
    return Orchestrator(adapter=SubprocessRuntimeAdapter(), config=config)


@click.group()
@click.version_option(package_name="composecraft")
def main() -> None:
    """Low-code workbench for Docker Compose stacks."""


@main.command("validate")
@click.argument("file", type=click.Path())
@click.option("--json", "as_json", is_flag=True, help="machine-readable output")
@click.option("--strict", is_flag=True, help="exit 1 when warnings are present")
@click.option("--host-ports", is_flag=True,
              help="also check for host port collisions between services")
def validate_cmd(file: str, as_json: bool, strict: bool, host_ports: bool) -> None:
    """Print advisory warnings for FILE; exit 0 even when warnings exist."""
    stack, _ = _read_stack(file)
    warnings = validate(stack, check_host_ports=host_ports)
    key_of = {node.id: (node.klass.value, node.key) for node in stack.artifacts()}
    if as_json:
        click.echo(json.dumps({
            "file": os.path.basename(file),
            "warnings": [
                {
                    "code": w.code.value,
                    "artifact_class": key_of[w.artifact][0],
                    "artifact_key": key_of[w.artifact][1],
                    "property": w.property,
                    "message": w.message,
                }
                for w in warnings
            ],
        }, indent=2, sort_keys=True))
    else:
        for w in warnings:
            klass, key = key_of[w.artifact]
            where = f"{klass}/{key}"
            if w.property:
                where += f".{w.property}"
            click.echo(f"{w.code.value}: {where}: {w.message}")
    if strict and warnings:
        raise SystemExit(EXIT_WARNINGS)


@main.command()
@click.argument("file", type=click.Path())
@click.option("--write", is_flag=True, help="rewrite the file in place")
@click.option("--check", is_flag=True, help="exit 3 when the file is not canonical")
def fmt(file: str, write: bool, check: bool) -> None:
    """Canonical serialization of FILE to stdout (or in place with --write)."""
    stack, _ = _read_stack(file)
    canonical = serialize_compose(stack)
    if check:
        original = open(file, "rb").read().decode("utf-8")
        if original != canonical:
            raise SystemExit(EXIT_FMT_DIFF)
        return
    if write:
        with open(file, "w", encoding="utf-8") as fh:
            fh.write(canonical)
        return
    click.echo(canonical, nl=False)


@main.command()
@click.argument("file", type=click.Path())
@click.option("--format", "fmt_name", type=click.Choice(["json", "dot"]),
              default="json", show_default=True)
def graph(file: str, fmt_name: str) -> None:
    """Auto-layout positions as JSON, or the artifact graph as DOT."""
    stack, _ = _read_stack(file)
    if fmt_name == "dot":
        click.echo(_render_dot(stack), nl=False)
        return
    diagram = auto_layout(stack)
    nodes = []
    for node in stack.artifacts():
        x, y = diagram.positions[node.id]
        w, h = diagram.node_sizes[node.id]
        nodes.append({"id": node.id, "class": node.klass.value, "key": node.key,
                      "x": x, "y": y, "w": w, "h": h})
    click.echo(json.dumps({"canvas": list(diagram.canvas), "nodes": nodes},
                          indent=2, sort_keys=True))


def _render_dot(stack: Stack) -> str:
    key_of = {node.id: node.key for node in stack.artifacts()}
    lines = [f'digraph "{stack.name or "stack"}" {{', "  rankdir=RL;"]
    for node in stack.artifacts():
        lines.append(f'  "{node.key}" [shape=box, tooltip="{node.klass.value}"];')
    for edge in stack.edges:
        lines.append(
            f'  "{key_of[edge.from_id]}" -> "{key_of[edge.to_id]}"'
            f' [label="{edge.kind.value}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


@main.command()
@click.argument("file", type=click.Path())
@click.option("--workdir", type=click.Path(), default=".", show_default=True)
def up(file: str, workdir: str) -> None:
    """Write the canonical YAML into WORKDIR, launch it, and stream logs."""
    stack, _ = _read_stack(file)
    orchestrator = _build_orchestrator()
    try:
        handle = orchestrator.up(stack, workdir)
    except ComposecraftError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(EXIT_RUNTIME)
    subscription = handle.subscribe(GENERAL)
    try:
        for event in subscription:
            prefix = event.service or GENERAL
            click.echo(f"{prefix} | {event.line}")
    except KeyboardInterrupt:
        try:
            handle.stop()
        except ComposecraftError:
            handle.close()
    if handle.status().aggregate.value == "error":
        raise SystemExit(EXIT_RUNTIME)


def _control(subcommand: str, workdir: str) -> None:
    orchestrator = _build_orchestrator()
    try:
        orchestrator.run_control(subcommand, workdir)
    except ComposecraftError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(EXIT_RUNTIME)


@main.command()
@click.argument("file", type=click.Path())
@click.option("--workdir", type=click.Path(), default=".", show_default=True)
def stop(file: str, workdir: str) -> None:
    """Halt the containers of FILE's stack (resources kept)."""
    _read_stack(file)  # surfaces parse errors with the right exit code
    _control("stop", workdir)


@main.command()
@click.argument("file", type=click.Path())
@click.option("--workdir", type=click.Path(), default=".", show_default=True)
def down(file: str, workdir: str) -> None:
    """Halt the containers of FILE's stack and remove created resources."""
    _read_stack(file)
    _control("down", workdir)


@main.command()
@click.argument("query")
@click.option("--page", type=int, default=1, show_default=True)
@click.option("--page-size", type=int, default=25, show_default=True)
def search(query: str, page: int, page_size: int) -> None:
    """Search the configured registry for images."""
    client = RegistryClient()
    try:
        result = client.search_images(query, page, page_size)
    except (NetworkError, RegistryError, UnknownRepository) as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(EXIT_NETWORK)
    except ComposecraftError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(EXIT_PARSE)
    finally:
        client.close()
    if result.stale:
        click.echo("# serving cached results (registry unreachable)", err=True)
    header = f"{'REPOSITORY':40} {'STARS':>7} {'OFFICIAL':>8}  DESCRIPTION"
    click.echo(header)
    for image in result.images:
        official = "yes" if image.is_official else ""
        description = (image.description or "").splitlines()[0][:60] \
            if image.description else ""
        click.echo(f"{image.repository:40} {image.star_count:>7} "
                   f"{official:>8}  {description}")


@main.command("serve")
@click.option("--addr", default=lambda: os.environ.get("COMPOSECRAFT_ADDR",
                                                       "127.0.0.1:8642"),
              show_default="127.0.0.1:8642", help="bind address as host:port")
@click.option("--workdir-root", type=click.Path(), show_default=".",
              default=lambda: os.environ.get("COMPOSECRAFT_WORKDIR_ROOT", "."))
def serve_cmd(addr: str, workdir_root: str) -> None:
    """Run the local HTTP service for the graph editor frontend."""
    host, _, port_text = addr.rpartition(":")
    try:
        port = int(port_text)
    except ValueError:
        click.echo(f"error: invalid --addr {addr!r}", err=True)
        raise SystemExit(EXIT_PARSE)
    try:
        serve(ServeConfig(host=host or "127.0.0.1", port=port,
                          workdir_root=workdir_root))
    except ComposecraftError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
