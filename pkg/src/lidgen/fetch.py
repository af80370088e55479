"""Polite HTTP fetching: per-host serialization, min-delay, bounded retries."""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass
from urllib.parse import urlparse

import requests

from .config import Politeness
from .errors import Disallowed, FetchTimeout, HttpError
from .robots import RobotsPolicy, is_allowed

logger = logging.getLogger(__name__)

MAX_RETRIES = 3

# pacing state is process-global so every fetcher instance (one per stage,
# typically) honors the same per-host delay
_registry_lock = threading.Lock()
_host_locks: dict[str, threading.Lock] = {}
_last_start: dict[str, float] = {}
_start_log: dict[str, list[float]] = {}


def request_start_times(host: str) -> list[float]:
    """Monotonic timestamps of every paced request start against ``host``."""
    with _registry_lock:
        return list(_start_log.get(host, ()))


@dataclass
class FetchResult:
    body: bytes
    status: int
    content_type: str
    retries: int


class PoliteFetcher:
    """Issues GET requests honoring robots vetoes and per-host pacing.

    No two requests to the same host are ever in flight simultaneously, and
    consecutive same-host request starts are at least min-delay apart.
    Transient failures (5xx, timeouts, connection errors) are retried up to
    three times with exponential backoff.
    """

    def __init__(
        self,
        politeness: Politeness,
        user_agent: str,
        timeout_s: float = 20.0,
        backoff_s: float = 0.25,
        session: requests.Session | None = None,
    ):
        self.politeness = politeness
        self.user_agent = user_agent
        self.timeout_s = timeout_s
        self.backoff_s = backoff_s
        self.session = session or requests.Session()

    def _lock_for(self, host: str) -> threading.Lock:
        with _registry_lock:
            if host not in _host_locks:
                _host_locks[host] = threading.Lock()
            return _host_locks[host]

    def _paced_get(self, url: str, host: str) -> requests.Response:
        min_delay = self.politeness.min_delay_ms / 1000.0
        with self._lock_for(host):
            last = _last_start.get(host)
            if last is not None:
                wait = last + min_delay - time.monotonic()
                if wait > 0:
                    time.sleep(wait)
            now = time.monotonic()
            _last_start[host] = now
            with _registry_lock:
                _start_log.setdefault(host, []).append(now)
            return self.session.get(
                url,
                headers={"User-Agent": self.user_agent},
                timeout=self.timeout_s,
            )

    def fetch(self, url: str, robots: RobotsPolicy | None = None) -> FetchResult:
        if robots is not None and not is_allowed(robots, url):
            raise Disallowed(f"robots policy vetoes {url}")
        host = urlparse(url).netloc
        last_exc: Exception | None = None
        for attempt in range(MAX_RETRIES + 1):
            if attempt:
                time.sleep(self.backoff_s * (2 ** (attempt - 1)))
            try:
                resp = self._paced_get(url, host)
            except requests.Timeout as exc:
                last_exc = FetchTimeout(f"timeout fetching {url}")
                logger.debug("attempt %d timed out for %s", attempt, url)
                continue
            except requests.ConnectionError as exc:
                last_exc = FetchTimeout(f"connection failed for {url}: {exc}")
                continue
            if 200 <= resp.status_code < 300:
                return FetchResult(
                    body=resp.content,
                    status=resp.status_code,
                    content_type=resp.headers.get("Content-Type", ""),
                    retries=attempt,
                )
            if resp.status_code >= 500:
                last_exc = HttpError(resp.status_code, url)
                continue
            raise HttpError(resp.status_code, url)
        assert last_exc is not None
        raise last_exc
