"""Docker Hub public API client feeding the image palette.

Results are cached with a TTL; on network failure a stale cache entry is
served with a staleness marker instead of failing the palette outright. All
requests carry a timeout, and the HTTP transport is injectable so tests run
fully offline against recorded fixtures.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass, field

import httpx

from .errors import EmptyQuery, NetworkError, RegistryError, UnknownRepository

DEFAULT_BASE_URL = "https://hub.docker.com"
BASE_URL_ENV = "COMPOSECRAFT_REGISTRY_URL"
DEFAULT_TTL_SECONDS = 600.0


@dataclass(frozen=True)
class ImageSummary:
    repository: str
    description: str = ""
    is_official: bool = False
    star_count: int = 0
    pull_count: int = 0


@dataclass
class SearchResult:
    """A page of palette entries; ``stale`` marks results served past TTL."""

    images: list[ImageSummary] = field(default_factory=list)
    stale: bool = False

    def __iter__(self):
        return iter(self.images)

    def __len__(self) -> int:
        return len(self.images)


class RegistryClient:
    """Synchronous Hub v2 client with a TTL'd in-memory cache."""

    def __init__(
        self,
        base_url: str | None = None,
        *,
        ttl: float = DEFAULT_TTL_SECONDS,
        timeout: float = 10.0,
        transport: httpx.BaseTransport | None = None,
        clock=time.monotonic,
    ) -> None:
        self.base_url = base_url or os.environ.get(BASE_URL_ENV, DEFAULT_BASE_URL)
        self.ttl = ttl
        self._clock = clock
        self._client = httpx.Client(
            base_url=self.base_url, timeout=timeout, transport=transport,
            headers={"Accept": "application/json"},
        )
        self._cache: dict[tuple, tuple[float, object]] = {}
        self._lock = threading.Lock()

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "RegistryClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- cache ------------------------------------------------------------

    def _cached(self, key: tuple) -> tuple[object | None, object | None]:
        """(fresh value, stale value); each None when unavailable."""
        with self._lock:
            entry = self._cache.get(key)
        if entry is None:
            return None, None
        fetched_at, value = entry
        if self._clock() - fetched_at < self.ttl:
            return value, value
        return None, value

    def _store(self, key: tuple, value: object) -> None:
        with self._lock:
            self._cache[key] = (self._clock(), value)

    # -- operations ---------------------------------------------------------

    def search_images(self, query: str, page: int = 1, page_size: int = 25) -> SearchResult:
        """Search repositories; up to page_size summaries in registry order."""
        query = query.strip()
        if not query:
            raise EmptyQuery("search query must be non-empty")
        if page < 1:
            raise ValueError("page must be >= 1")
        if not 1 <= page_size <= 100:
            raise ValueError("page_size must be in 1..100")

        key = ("search", query, page, page_size)
        fresh, stale = self._cached(key)
        if fresh is not None:
            return SearchResult(images=list(fresh))
        try:
            response = self._client.get(
                "/v2/search/repositories",
                params={"query": query, "page": page, "page_size": page_size},
            )
        except httpx.HTTPError as exc:
            if stale is not None:
                return SearchResult(images=list(stale), stale=True)
            raise NetworkError(f"registry unreachable: {exc}") from None
        if response.status_code != 200:
            raise RegistryError(
                f"registry returned {response.status_code}: {response.text[:200]}")
        images = [
            ImageSummary(
                repository=item.get("repo_name", ""),
                description=item.get("short_description") or "",
                is_official=bool(item.get("is_official", False)),
                star_count=int(item.get("star_count", 0)),
                pull_count=int(item.get("pull_count", 0)),
            )
            for item in response.json().get("results", [])
            if item.get("repo_name")
        ]
        self._store(key, images)
        return SearchResult(images=list(images))

    def list_tags(self, repository: str, page: int = 1) -> list[str]:
        """Tag names for a repository, paged; official images may omit 'library/'."""
        repository = repository.strip()
        if not repository:
            raise UnknownRepository("repository must be non-empty")
        if page < 1:
            raise ValueError("page must be >= 1")
        namespaced = repository if "/" in repository else f"library/{repository}"

        key = ("tags", namespaced, page)
        fresh, stale = self._cached(key)
        if fresh is not None:
            return list(fresh)
        try:
            response = self._client.get(
                f"/v2/repositories/{namespaced}/tags", params={"page": page})
        except httpx.HTTPError as exc:
            if stale is not None:
                return list(stale)
            raise NetworkError(f"registry unreachable: {exc}") from None
        if response.status_code == 404:
            raise UnknownRepository(f"no such repository: {repository}")
        if response.status_code != 200:
            raise RegistryError(
                f"registry returned {response.status_code}: {response.text[:200]}")
        tags = [str(item["name"]) for item in response.json().get("results", [])
                if "name" in item]
        self._store(key, tags)
        return list(tags)
