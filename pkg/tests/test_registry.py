"""Registry client tests against recorded fixtures; no network involved."""

import json
from pathlib import Path

import httpx
import pytest

from composecraft.errors import EmptyQuery, NetworkError, RegistryError, UnknownRepository
from composecraft.registry import RegistryClient

FIXTURES = Path(__file__).parent / "fixtures" / "registry"


class FakeClock:
    def __init__(self, now=0.0):
        self.now = now

    def __call__(self):
        return self.now


def load(name):
    return json.loads((FIXTURES / name).read_text())


def make_transport(handler):
    return httpx.MockTransport(handler)


def fixture_transport(*, fail=None):
    """Serves the recorded fixtures; ``fail`` switches to raising transport errors."""
    calls = []

    def handler(request: httpx.Request) -> httpx.Response:
        calls.append(request)
        if fail is not None and fail():
            raise httpx.ConnectError("boom", request=request)
        if request.url.path == "/v2/search/repositories":
            return httpx.Response(200, json=load("search-mongo-page1.json"))
        if request.url.path == "/v2/repositories/library/mongo/tags":
            return httpx.Response(200, json=load("tags-mongo-page1.json"))
        return httpx.Response(404, json={"message": "object not found"})

    return handler, calls


def make_client(handler, clock=None, ttl=600.0):
    return RegistryClient(
        "https://registry.test", ttl=ttl,
        transport=make_transport(handler), clock=clock or FakeClock(),
    )


def test_search_first_page_contains_official_mongo():
    handler, _ = fixture_transport()
    with make_client(handler) as client:
        result = client.search_images("mongo", 1, 10)
    assert result.stale is False
    assert result.images[0].repository == "mongo"
    assert result.images[0].is_official is True
    assert result.images[0].star_count > 0
    assert len(result.images) == 10


def test_search_empty_query():
    handler, _ = fixture_transport()
    with make_client(handler) as client:
        with pytest.raises(EmptyQuery):
            client.search_images("   ", 1, 10)


def test_search_served_from_cache_within_ttl():
    handler, calls = fixture_transport()
    clock = FakeClock()
    with make_client(handler, clock) as client:
        client.search_images("mongo", 1, 10)
        clock.now += 599.0
        client.search_images("mongo", 1, 10)
    assert len(calls) == 1


def test_expired_cache_refetches():
    handler, calls = fixture_transport()
    clock = FakeClock()
    with make_client(handler, clock) as client:
        client.search_images("mongo", 1, 10)
        clock.now += 601.0
        client.search_images("mongo", 1, 10)
    assert len(calls) == 2


def test_network_down_with_warm_cache_serves_stale():
    failing = {"on": False}
    handler, _ = fixture_transport(fail=lambda: failing["on"])
    clock = FakeClock()
    with make_client(handler, clock) as client:
        fresh = client.search_images("mongo", 1, 10)
        assert fresh.stale is False
        failing["on"] = True
        clock.now += 10_000.0  # entry long expired
        stale = client.search_images("mongo", 1, 10)
    assert stale.stale is True
    assert [i.repository for i in stale.images] == [i.repository for i in fresh.images]


def test_network_down_without_cache_is_network_error():
    handler, _ = fixture_transport(fail=lambda: True)
    with make_client(handler) as client:
        with pytest.raises(NetworkError):
            client.search_images("mongo", 1, 10)


def test_registry_error_surfaces_body():
    def handler(request):
        return httpx.Response(500, text="upstream exploded")

    with make_client(handler) as client:
        with pytest.raises(RegistryError, match="upstream exploded"):
            client.search_images("mongo", 1, 10)


def test_list_tags_contains_latest():
    handler, _ = fixture_transport()
    with make_client(handler) as client:
        tags = client.list_tags("mongo", 1)
    assert "latest" in tags
    assert tags[0] == "latest"


def test_list_tags_empty_repository():
    handler, _ = fixture_transport()
    with make_client(handler) as client:
        with pytest.raises(UnknownRepository):
            client.list_tags("", 1)


def test_list_tags_404_maps_to_unknown_repository():
    handler, _ = fixture_transport()
    with make_client(handler) as client:
        with pytest.raises(UnknownRepository):
            client.list_tags("definitely/not-a-repo", 1)


def test_list_tags_official_namespace_prefix():
    handler, calls = fixture_transport()
    with make_client(handler) as client:
        client.list_tags("mongo", 1)
    assert calls[0].url.path == "/v2/repositories/library/mongo/tags"


def test_tags_served_stale_on_failure():
    failing = {"on": False}
    handler, calls = fixture_transport(fail=lambda: failing["on"])
    clock = FakeClock()
    with make_client(handler, clock) as client:
        first = client.list_tags("mongo", 1)
        failing["on"] = True
        clock.now += 10_000.0
        second = client.list_tags("mongo", 1)
    assert first == second


def test_requests_carry_timeout():
    seen = {}

    def handler(request):
        seen["ext"] = request.extensions.get("timeout")
        return httpx.Response(200, json=load("search-mongo-page1.json"))

    with RegistryClient("https://registry.test", timeout=3.5,
                        transport=make_transport(handler)) as client:
        client.search_images("mongo", 1, 10)
    assert seen["ext"]["connect"] == 3.5
    assert seen["ext"]["read"] == 3.5


def test_page_bounds_rejected():
    handler, _ = fixture_transport()
    with make_client(handler) as client:
        with pytest.raises(ValueError):
            client.search_images("mongo", 0, 10)
        with pytest.raises(ValueError):
            client.search_images("mongo", 1, 0)
        with pytest.raises(ValueError):
            client.search_images("mongo", 1, 101)
