"""Orchestration lifecycle: write the YAML, drive the Compose CLI, multiplex logs.

The controller never talks to the container daemon directly; it spawns the
Compose CLI through a :class:`RuntimeAdapter`. Exactly one adapter
implementation talks to the real CLI (:class:`SubprocessRuntimeAdapter`);
:class:`ScriptedRuntimeAdapter` is the deterministic fake used by tests.

Control operations (up/stop/down) are mutually exclusive per handle; log
multiplexing and status polling run concurrently with any number of
subscribers. Status snapshots are atomic.
"""

from __future__ import annotations

import json
import os
import queue
import re
import subprocess
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator

from .compose_io import serialize_compose
from .errors import (
    AdapterError,
    AlreadyRunning,
    IoError,
    NotRunning,
    SpawnError,
    UnknownService,
)
from .model import Stack

#: Log source name for the combined stream (compose machinery + all services).
GENERAL = "general"


class ServiceState(str, Enum):
    CREATED = "created"
    RUNNING = "running"
    EXITED = "exited"
    ERRORED = "errored"


class AggregateState(str, Enum):
    STOPPED = "stopped"
    STARTING = "starting"
    RUNNING = "running"
    DEGRADED = "degraded"
    ERROR = "error"


#: Toolbar indicator colors per aggregate state.
STATUS_COLORS = {
    AggregateState.STOPPED: "grey",
    AggregateState.STARTING: "amber",
    AggregateState.RUNNING: "green",
    AggregateState.DEGRADED: "red",
    AggregateState.ERROR: "red",
}

_CLI_STATE_MAP = {
    "running": ServiceState.RUNNING,
    "created": ServiceState.CREATED,
    "restarting": ServiceState.CREATED,
    "paused": ServiceState.CREATED,
    "exited": ServiceState.EXITED,
    "dead": ServiceState.ERRORED,
}


@dataclass(frozen=True)
class StackStatus:
    aggregate: AggregateState
    per_service: dict[str, ServiceState]
    last_transition: float


@dataclass(frozen=True)
class LogEvent:
    """One output line; ``service`` is None for compose machinery output."""

    service: str | None
    line: str
    timestamp: float
    seq: int


@dataclass
class RuntimeConfig:
    command: tuple[str, ...] = ("docker", "compose")
    compose_file: str = "docker-compose.yml"
    poll_interval: float = 1.0
    backlog_limit: int = 10_000
    terminate_grace: float = 5.0


# --- adapters -----------------------------------------------------------------


class RuntimeAdapter:
    """Command executor: (argv, workdir) -> process handle with output streams."""

    def spawn(self, argv: list[str], workdir: str):
        raise NotImplementedError


class SubprocessRuntimeAdapter(RuntimeAdapter):
    """The one implementation that talks to the real Compose CLI."""

    def __init__(self, terminate_grace: float = 5.0) -> None:
        self.terminate_grace = terminate_grace

    def spawn(self, argv: list[str], workdir: str) -> "_SubprocessHandle":
        try:
            proc = subprocess.Popen(
                argv, cwd=workdir, stdout=subprocess.PIPE,
                stderr=subprocess.PIPE, text=True, bufsize=1,
            )
        except OSError as exc:
            raise SpawnError(f"cannot start {argv[0]!r}: {exc}") from None
        return _SubprocessHandle(proc, self.terminate_grace)


class _SubprocessHandle:
    def __init__(self, proc: subprocess.Popen, grace: float) -> None:
        self._proc = proc
        self._grace = grace

    def stdout_lines(self) -> Iterator[str]:
        for line in self._proc.stdout:
            yield line.rstrip("\n")

    def stderr_lines(self) -> Iterator[str]:
        for line in self._proc.stderr:
            yield line.rstrip("\n")

    def wait(self) -> int:
        return self._proc.wait()

    def terminate(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(self._grace)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


@dataclass
class ScriptStep:
    """Scripted behavior for one adapter invocation."""

    stdout: list[str] = field(default_factory=list)
    stderr: list[str] = field(default_factory=list)
    exit_code: int = 0
    follow: bool = False  # stream stays open until terminated


class FakeProcess:
    def __init__(self, step: ScriptStep) -> None:
        self.step = step
        self.terminated = False
        self._queue: "queue.Queue[str | None]" = queue.Queue()
        for line in step.stdout:
            self._queue.put(line)
        if not step.follow:
            self._queue.put(None)
        self._done = threading.Event()
        if not step.follow:
            self._done.set()

    def emit(self, line: str) -> None:
        self._queue.put(line)

    def stdout_lines(self) -> Iterator[str]:
        while True:
            item = self._queue.get()
            if item is None:
                return
            yield item

    def stderr_lines(self) -> Iterator[str]:
        yield from self.step.stderr

    def wait(self) -> int:
        self._done.wait()
        return self.step.exit_code

    def terminate(self) -> None:
        self.terminated = True
        self._done.set()
        self._queue.put(None)


_SUBCOMMANDS = ("up", "stop", "down", "logs", "ps")


class ScriptedRuntimeAdapter(RuntimeAdapter):
    """Plays back configured ScriptSteps and records every invocation.

    ``scripts`` maps a subcommand to one step or a list of steps consumed per
    call (the last repeats). The transcript holds (argv, workdir) pairs.
    """

    def __init__(self, scripts: dict[str, ScriptStep | list[ScriptStep]] | None = None):
        self.scripts = scripts or {}
        self.transcript: list[tuple[list[str], str]] = []
        self.processes: list[tuple[str, FakeProcess]] = []
        self._lock = threading.Lock()

    def spawn(self, argv: list[str], workdir: str) -> FakeProcess:
        sub = next((tok for tok in argv if tok in _SUBCOMMANDS), argv[-1])
        with self._lock:
            self.transcript.append((list(argv), workdir))
            configured = self.scripts.get(sub, ScriptStep())
            if isinstance(configured, list):
                step = configured[0] if len(configured) == 1 else configured.pop(0)
            else:
                step = configured
            proc = FakeProcess(step)
            self.processes.append((sub, proc))
        return proc

    def commands(self) -> list[list[str]]:
        return [argv for argv, _ in self.transcript]


# --- log routing ----------------------------------------------------------------

_LOG_PREFIX_RE = re.compile(r"^(?P<name>\S+)\s*\|\s?(?P<rest>.*)$")


def split_log_line(line: str, service_keys: list[str]) -> tuple[str | None, str]:
    """Attribute a compose log line to a service key when the prefix matches."""
    match = _LOG_PREFIX_RE.match(line)
    if not match:
        return None, line
    name, rest = match.group("name"), match.group("rest")
    candidates = {name, re.sub(r"-\d+$", "", name)}
    for key in service_keys:
        if key in candidates:
            return key, rest
    # project-prefixed container names: <project>-<service>-<n>
    stripped = re.sub(r"-\d+$", "", name)
    for key in service_keys:
        if stripped.endswith(f"-{key}"):
            return key, rest
    return None, line


# --- the run handle ---------------------------------------------------------------


class RunHandle:
    """One launched orchestration: status, logs, and control operations."""

    def __init__(self, stack: Stack, working_dir: str, adapter: RuntimeAdapter,
                 config: RuntimeConfig, clock: Callable[[], float] = time.time) -> None:
        self.working_dir = working_dir
        self.config = config
        self._adapter = adapter
        self._clock = clock
        self._service_keys = [svc.key for svc in stack.services]

        self._lock = threading.Lock()
        self._control = threading.RLock()
        self._streams_done = threading.Event()  # no further log events possible
        self._poll_stop = threading.Event()
        self.active = False
        self._run_over = False  # control op completed or handle closed
        self._control_failed = False
        self._saw_containers = False
        self._epoch = 0  # bumped by control commands; stale polls discard
        self._seq = 0
        self._last_ts = 0.0

        self._status = StackStatus(AggregateState.STOPPED, {}, self._now())
        self.status_history: list[AggregateState] = [AggregateState.STOPPED]
        self._status_listeners: list[Callable[[StackStatus], None]] = []

        self._buffers: dict[str, deque[LogEvent]] = {
            GENERAL: deque(maxlen=config.backlog_limit)}
        for key in self._service_keys:
            self._buffers[key] = deque(maxlen=config.backlog_limit)
        self._subscribers: dict[str, list[queue.Queue]] = {}

        self._logs_proc = None
        self._threads: list[threading.Thread] = []

    # -- time / events ------------------------------------------------------

    def _now(self) -> float:
        # strictly increasing so downstream event streams stay ordered
        now = self._clock()
        if now <= self._last_ts:
            now = self._last_ts + 1e-6
        self._last_ts = now
        return now

    def add_status_listener(self, listener: Callable[[StackStatus], None]) -> None:
        with self._lock:
            self._status_listeners.append(listener)

    def _set_status(self, aggregate: AggregateState,
                    per_service: dict[str, ServiceState] | None = None,
                    *, only_epoch: int | None = None) -> None:
        with self._lock:
            if only_epoch is not None and only_epoch != self._epoch:
                return  # a control command superseded this poll result
            previous = self._status
            services = dict(per_service if per_service is not None
                            else previous.per_service)
            changed = aggregate is not previous.aggregate or services != previous.per_service
            if not changed:
                return
            stamp = self._now() if aggregate is not previous.aggregate \
                else previous.last_transition
            self._status = StackStatus(aggregate, services, stamp)
            if aggregate is not previous.aggregate:
                self.status_history.append(aggregate)
            listeners = list(self._status_listeners)
            snapshot = self._status
        for listener in listeners:
            listener(snapshot)

    def status(self) -> StackStatus:
        with self._lock:
            return self._status

    # -- log plumbing ----------------------------------------------------------

    def _publish(self, service: str | None, line: str) -> None:
        with self._lock:
            self._seq += 1
            event = LogEvent(service=service, line=line,
                             timestamp=self._now(), seq=self._seq)
            self._buffers[GENERAL].append(event)
            targets = [GENERAL]
            if service is not None and service in self._buffers:
                self._buffers[service].append(event)
                targets.append(service)
            sinks = [q for t in targets for q in self._subscribers.get(t, [])]
        for sink in sinks:
            sink.put(event)

    def _pump(self, lines: Iterator[str], attribute: bool = False) -> None:
        for line in lines:
            if attribute:
                service, text = split_log_line(line, self._service_keys)
            else:
                service, text = None, line
            self._publish(service, text)

    def _start_thread(self, target, *args, name: str) -> None:
        thread = threading.Thread(target=target, args=args, daemon=True, name=name)
        self._threads.append(thread)
        thread.start()

    def subscribe(self, source: str = GENERAL) -> "LogSubscription":
        """Backlog replay then live events, in per-source order."""
        if source != GENERAL and source not in self._buffers:
            raise UnknownService(f"no service named {source!r}")
        sink: "queue.Queue[LogEvent | None]" = queue.Queue()
        with self._lock:
            for event in self._buffers[source]:
                sink.put(event)
            if self._streams_done.is_set():
                sink.put(None)
            else:
                self._subscribers.setdefault(source, []).append(sink)
        return LogSubscription(sink)

    def _finish_streams(self) -> None:
        with self._lock:
            if self._streams_done.is_set():
                return
            self._streams_done.set()
            sinks = [q for queues in self._subscribers.values() for q in queues]
            self._subscribers.clear()
        for sink in sinks:
            sink.put(None)

    # -- control -----------------------------------------------------------------

    def _argv(self, *tail: str) -> list[str]:
        return [*self.config.command, *tail]

    def _launch(self, stack: Stack) -> None:
        """Write the YAML and start the detached run; called once by up()."""
        with self._control:
            if self.active:
                raise AlreadyRunning(f"run already active in {self.working_dir}")
            yaml_text = serialize_compose(stack)
            target = os.path.join(self.working_dir, self.config.compose_file)
            try:
                with open(target, "w", encoding="utf-8") as fh:
                    fh.write(yaml_text)
            except OSError as exc:
                raise IoError(f"cannot write {target}: {exc}") from None

            self._set_status(AggregateState.STARTING)
            try:
                up_proc = self._adapter.spawn(self._argv("up", "--detach"),
                                              self.working_dir)
            except SpawnError:
                self._set_status(AggregateState.STOPPED)
                raise
            self.active = True
            self._start_thread(self._watch_up, up_proc, name="compose-up-watch")
            self._start_thread(self._pump, up_proc.stdout_lines(),
                               name="compose-up-out")

            self._logs_proc = self._adapter.spawn(
                self._argv("logs", "--follow", "--no-color"), self.working_dir)
            self._start_thread(self._pump_attributed, self._logs_proc,
                               name="compose-logs")
            self._start_thread(self._poll_loop, name="compose-poll")

    def _pump_attributed(self, proc) -> None:
        self._pump(proc.stdout_lines(), attribute=True)
        self._pump(proc.stderr_lines())
        # the follower exiting means no further log events can arrive; let
        # subscribers run off the end instead of blocking forever
        self._finish_streams()

    def _watch_up(self, proc) -> None:
        stderr = list(proc.stderr_lines())
        code = proc.wait()
        if code != 0:
            for line in stderr:
                self._publish(None, line)
            with self._lock:
                self._control_failed = True
            self._set_status(AggregateState.ERROR)
        else:
            for line in stderr:
                self._publish(None, line)

    def _poll_loop(self) -> None:
        while not self._poll_stop.wait(self.config.poll_interval):
            try:
                self.refresh_status()
            except Exception:  # polling must never kill the thread
                continue

    def refresh_status(self) -> StackStatus:
        """One adapter `ps` round trip; derives the aggregate state."""
        with self._lock:
            epoch = self._epoch
        proc = self._adapter.spawn(self._argv("ps", "--format", "json"),
                                   self.working_dir)
        lines = list(proc.stdout_lines())
        code = proc.wait()
        if code != 0:
            return self.status()
        per_service = _parse_ps(lines)
        with self._lock:
            if per_service:
                self._saw_containers = True
            control_failed = self._control_failed
            saw = self._saw_containers
            run_over = self._run_over
        if run_over:
            return self.status()
        aggregate = _derive_aggregate(
            per_service, self._service_keys,
            control_failed=control_failed, up_in_flight=self.active and not saw)
        self._set_status(aggregate, per_service, only_epoch=epoch)
        return self.status()

    def _control_command(self, *tail: str) -> None:
        if not self.active:
            raise NotRunning("no active run for this handle")
        with self._lock:
            self._epoch += 1
        self._poll_stop.set()
        self._shutdown_streams()
        proc = self._adapter.spawn(self._argv(*tail), self.working_dir)
        stderr = list(proc.stderr_lines())
        for line in proc.stdout_lines():
            self._publish(None, line)
        code = proc.wait()
        self.active = False
        with self._lock:
            self._run_over = True
        if code != 0:
            for line in stderr:
                self._publish(None, line)
            with self._lock:
                self._control_failed = True
            self._set_status(AggregateState.ERROR)
            self._finish_streams()
            raise AdapterError(
                f"'{' '.join(tail)}' exited with {code}: {' '.join(stderr)[:200]}")
        with self._lock:
            self._control_failed = False
        self._set_status(AggregateState.STOPPED, {})
        self._finish_streams()

    def stop(self) -> None:
        """Halt containers, keeping created resources."""
        with self._control:
            self._control_command("stop")

    def down(self) -> None:
        """Halt containers and remove created resources."""
        with self._control:
            self._control_command("down")

    def _shutdown_streams(self) -> None:
        if self._logs_proc is not None:
            self._logs_proc.terminate()

    def close(self) -> None:
        """Reap child processes and end subscriptions without a control call."""
        with self._control:
            self._poll_stop.set()
            with self._lock:
                self._run_over = True
            self._shutdown_streams()
            self._finish_streams()
            self.active = False
            for thread in self._threads:
                if thread is not threading.current_thread():
                    thread.join(timeout=self.config.terminate_grace)

    def wait_settled(self, timeout: float = 5.0) -> None:
        """Join the up watcher; test helper for deterministic assertions."""
        deadline = time.monotonic() + timeout
        for thread in self._threads:
            if thread.name in ("compose-up-watch", "compose-up-out"):
                thread.join(timeout=max(0.0, deadline - time.monotonic()))


class LogSubscription:
    """Iterable over LogEvents; ends when the run finishes."""

    def __init__(self, sink: "queue.Queue[LogEvent | None]") -> None:
        self._sink = sink

    def __iter__(self) -> Iterator[LogEvent]:
        while True:
            event = self._sink.get()
            if event is None:
                return
            yield event

    def get(self, timeout: float | None = None) -> LogEvent | None:
        """Next event, or None when the stream has ended."""
        try:
            return self._sink.get(timeout=timeout)
        except queue.Empty:
            return None


def _parse_ps(lines: list[str]) -> dict[str, ServiceState]:
    """Both `ps --format json` shapes: one object per line, or a JSON array."""
    records: list[dict] = []
    text = "\n".join(lines).strip()
    if not text:
        return {}
    try:
        loaded = json.loads(text)
        records = loaded if isinstance(loaded, list) else [loaded]
    except json.JSONDecodeError:
        for line in lines:
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                continue
            if isinstance(record, dict):
                records.append(record)
    out: dict[str, ServiceState] = {}
    for record in records:
        service = record.get("Service") or record.get("service")
        state = str(record.get("State") or record.get("state") or "").lower()
        if service:
            out[str(service)] = _CLI_STATE_MAP.get(state, ServiceState.CREATED)
    return out


def _derive_aggregate(per_service: dict[str, ServiceState], service_keys: list[str],
                      *, control_failed: bool, up_in_flight: bool) -> AggregateState:
    if control_failed:
        return AggregateState.ERROR
    if not per_service:
        return AggregateState.STARTING if up_in_flight else AggregateState.STOPPED
    all_present = all(key in per_service for key in service_keys)
    if all_present and all(state is ServiceState.RUNNING
                           for state in per_service.values()):
        return AggregateState.RUNNING
    return AggregateState.DEGRADED


class Orchestrator:
    """Entry point owning adapter/config; tracks one active run per directory."""

    def __init__(self, adapter: RuntimeAdapter | None = None,
                 config: RuntimeConfig | None = None,
                 clock: Callable[[], float] = time.time) -> None:
        self.adapter = adapter or SubprocessRuntimeAdapter()
        self.config = config or RuntimeConfig()
        self._clock = clock
        self._handles: dict[str, RunHandle] = {}
        self._lock = threading.Lock()

    def up(self, stack: Stack, working_dir: str) -> RunHandle:
        """Serialize the stack into working_dir and launch it detached."""
        workdir = os.path.abspath(working_dir)
        if not os.path.isdir(workdir):
            raise IoError(f"working directory does not exist: {working_dir}")
        with self._lock:
            existing = self._handles.get(workdir)
            if existing is not None and existing.active:
                raise AlreadyRunning(f"run already active in {working_dir}")
            handle = RunHandle(stack, workdir, self.adapter, self.config, self._clock)
            self._handles[workdir] = handle
            try:
                handle._launch(stack)
            except BaseException:
                self._handles.pop(workdir, None)
                raise
        return handle

    def run_control(self, subcommand: str, working_dir: str) -> int:
        """Headless stop/down against a directory with no in-process handle."""
        proc = self.adapter.spawn([*self.config.command, subcommand],
                                  os.path.abspath(working_dir))
        output = list(proc.stdout_lines())
        errors = list(proc.stderr_lines())
        code = proc.wait()
        if code != 0:
            raise AdapterError(
                f"'{subcommand}' exited with {code}: {' '.join(errors)[:200]}")
        return code

    def shutdown(self) -> None:
        """Issue down for every active handle (service shutdown path)."""
        with self._lock:
            handles = list(self._handles.values())
        for handle in handles:
            if handle.active:
                try:
                    handle.down()
                except AdapterError:
                    handle.close()
