"""CLI behavior: exit codes, golden outputs, lifecycle and search plumbing."""

import json

import httpx
import pytest
from click.testing import CliRunner

import composecraft.cli as cli
from _support import COMPOSE_DIR, GOLDEN_DIR
from composecraft.registry import RegistryClient
from composecraft.runtime import Orchestrator, RuntimeConfig, ScriptStep, ScriptedRuntimeAdapter


@pytest.fixture()
def runner():
    return CliRunner()


def fixture(name: str) -> str:
    return str(COMPOSE_DIR / name)


def test_validate_fig9_two_lines_exit_zero(runner):
    result = runner.invoke(cli.main, ["validate", fixture("fig9-duplicate-ser.yml")])
    assert result.exit_code == 0
    lines = result.output.strip().splitlines()
    assert len(lines) == 2
    assert all(line.startswith("DuplicateKey") for line in lines)


def test_validate_clean_file_silent(runner):
    result = runner.invoke(cli.main, ["validate", fixture("fig8a-client-server-db.yml")])
    assert result.exit_code == 0
    assert result.output == ""


def test_validate_json_matches_golden(runner):
    result = runner.invoke(cli.main, ["validate", "--json",
                                      fixture("fig9-duplicate-ser.yml")])
    assert result.exit_code == 0
    assert result.output == (GOLDEN_DIR / "validate-fig9.json").read_text()
    json.loads(result.output)  # machine-parseable


def test_validate_strict_promotes_warnings(runner):
    result = runner.invoke(cli.main, ["validate", "--strict",
                                      fixture("fig9-duplicate-ser.yml")])
    assert result.exit_code == 1


def test_validate_parse_error_exit_2(runner, tmp_path):
    bad = tmp_path / "bad.yml"
    bad.write_text("services: [unclosed")
    result = runner.invoke(cli.main, ["validate", str(bad)])
    assert result.exit_code == 2
    missing = runner.invoke(cli.main, ["validate", str(tmp_path / "none.yml")])
    assert missing.exit_code == 2


def test_fmt_writes_canonical_output(runner):
    result = runner.invoke(cli.main, ["fmt", fixture("fig8a-client-server-db.yml")])
    assert result.exit_code == 0
    assert result.output == (GOLDEN_DIR / "fmt-fig8a.yml").read_text()


def test_fmt_idempotent(runner, tmp_path):
    target = tmp_path / "f.yml"
    target.write_text((COMPOSE_DIR / "big-mixed.yml").read_text())
    assert runner.invoke(cli.main, ["fmt", str(target), "--write"]).exit_code == 0
    once = target.read_text()
    assert runner.invoke(cli.main, ["fmt", str(target), "--write"]).exit_code == 0
    assert target.read_text() == once


def test_fmt_check_canonical_exit_0_no_output(runner, tmp_path):
    target = tmp_path / "c.yml"
    target.write_text((GOLDEN_DIR / "fmt-fig8a.yml").read_text())
    result = runner.invoke(cli.main, ["fmt", str(target), "--check"])
    assert result.exit_code == 0
    assert result.output == ""


def test_fmt_check_divergent_exit_3(runner):
    result = runner.invoke(cli.main,
                           ["fmt", fixture("fig8a-client-server-db.yml"), "--check"])
    assert result.exit_code == 3


def test_graph_dot_matches_hand_written(runner, tmp_path):
    chain = tmp_path / "chain.yml"
    chain.write_text(
        "services:\n"
        "  a:\n    image: alpine\n"
        "  b:\n    image: alpine\n    depends_on: [a]\n"
    )
    result = runner.invoke(cli.main, ["graph", str(chain), "--format", "dot"])
    assert result.exit_code == 0
    assert result.output == (
        'digraph "stack" {\n'
        "  rankdir=RL;\n"
        '  "a" [shape=box, tooltip="service"];\n'
        '  "b" [shape=box, tooltip="service"];\n'
        '  "b" -> "a" [label="depends_on"];\n'
        "}\n"
    )


def test_graph_json_contains_positions(runner):
    result = runner.invoke(cli.main, ["graph", fixture("fig8a-client-server-db.yml")])
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert len(payload["nodes"]) == 6
    by_key = {n["key"]: n for n in payload["nodes"]}
    assert by_key["db"]["x"] < by_key["server"]["x"] < by_key["client"]["x"]


def make_scripted_orchestrator(scripts=None):
    adapter = ScriptedRuntimeAdapter(scripts or {})
    orchestrator = Orchestrator(
        adapter=adapter, config=RuntimeConfig(command=("compose",), poll_interval=60.0))
    return adapter, orchestrator


def test_up_streams_prefixed_logs(runner, tmp_path, monkeypatch):
    adapter, orchestrator = make_scripted_orchestrator({
        "logs": ScriptStep(stdout=["client-1 | hello", "plain compose line"]),
    })
    monkeypatch.setattr(cli, "_build_orchestrator", lambda **kw: orchestrator)
    result = runner.invoke(cli.main, [
        "up", fixture("fig8a-client-server-db.yml"), "--workdir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "client | hello" in result.output
    assert "general | plain compose line" in result.output
    assert (tmp_path / "docker-compose.yml").exists()
    assert adapter.commands()[0] == ["compose", "up", "--detach"]


def test_up_runtime_failure_exit_4(runner, tmp_path, monkeypatch):
    _, orchestrator = make_scripted_orchestrator({
        "up": ScriptStep(exit_code=1, stderr=["cannot reach daemon"]),
        "logs": ScriptStep(stdout=[]),
    })
    monkeypatch.setattr(cli, "_build_orchestrator", lambda **kw: orchestrator)
    result = runner.invoke(cli.main, [
        "up", fixture("minimal-single-service.yml"), "--workdir", str(tmp_path)])
    assert result.exit_code == 4


def test_stop_and_down_invoke_adapter(runner, tmp_path, monkeypatch):
    adapter, orchestrator = make_scripted_orchestrator()
    monkeypatch.setattr(cli, "_build_orchestrator", lambda **kw: orchestrator)
    assert runner.invoke(cli.main, [
        "stop", fixture("minimal-single-service.yml"),
        "--workdir", str(tmp_path)]).exit_code == 0
    assert runner.invoke(cli.main, [
        "down", fixture("minimal-single-service.yml"),
        "--workdir", str(tmp_path)]).exit_code == 0
    assert adapter.commands() == [["compose", "stop"], ["compose", "down"]]


def test_down_failure_exit_4(runner, tmp_path, monkeypatch):
    _, orchestrator = make_scripted_orchestrator({
        "down": ScriptStep(exit_code=2, stderr=["boom"])})
    monkeypatch.setattr(cli, "_build_orchestrator", lambda **kw: orchestrator)
    result = runner.invoke(cli.main, [
        "down", fixture("minimal-single-service.yml"), "--workdir", str(tmp_path)])
    assert result.exit_code == 4


def search_registry(handler):
    return RegistryClient("https://registry.test",
                          transport=httpx.MockTransport(handler))


def test_search_renders_table(runner, monkeypatch):
    def handler(request):
        return httpx.Response(200, json={"results": [
            {"repo_name": "mongo", "is_official": True, "star_count": 42,
             "pull_count": 10, "short_description": "MongoDB database"}]})

    monkeypatch.setattr(cli, "RegistryClient", lambda: search_registry(handler))
    result = runner.invoke(cli.main, ["search", "mongo"])
    assert result.exit_code == 0
    assert "REPOSITORY" in result.output
    assert "mongo" in result.output and "yes" in result.output


def test_search_network_failure_exit_5(runner, monkeypatch):
    def handler(request):
        raise httpx.ConnectError("down", request=request)

    monkeypatch.setattr(cli, "RegistryClient", lambda: search_registry(handler))
    result = runner.invoke(cli.main, ["search", "mongo"])
    assert result.exit_code == 5
