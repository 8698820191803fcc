"""Fetch verified contract source from an Etherscan-style HTTP API.

The network call is injectable so tests run offline: ApiConfig.http_get
takes (url, params, timeout) and returns the decoded JSON body. Responses
are cached on disk keyed by address; requests are throttled to one per
config.delay seconds across threads.
"""

from __future__ import annotations

import json
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ponziscan.errors import BadAddress, NetworkError, NotVerified, RateLimited
from ponziscan.pipeline import ContractRecord

_ADDRESS_RE = re.compile(r"^0x[0-9a-fA-F]{40}$")
_MIN_DELAY = 0.2
DEFAULT_BASE_URL = "https://api.etherscan.io/api"

_throttle_lock = threading.Lock()
_last_request_at = 0.0


def _default_http_get(url: str, params: dict, timeout: float) -> dict:
    # imported lazily so offline use never needs the dependency
    import requests

    try:
        resp = requests.get(url, params=params, timeout=timeout)
        resp.raise_for_status()
        return resp.json()
    except requests.RequestException as exc:
        raise NetworkError(f"request to {url} failed: {type(exc).__name__}") from exc


@dataclass
class ApiConfig:
    api_key: str = ""
    base_url: str = DEFAULT_BASE_URL
    timeout: float = 10.0
    delay: float = _MIN_DELAY          # seconds between requests, >= 0.2
    max_retries: int = 3               # attempts after a rate-limit reply
    cache_dir: Path | None = None
    http_get: Callable[[str, dict, float], dict] = field(default=_default_http_get)

    def __post_init__(self) -> None:
        if self.delay < _MIN_DELAY:
            raise ValueError(f"delay must be >= {_MIN_DELAY}s")
        if not 0 <= self.max_retries <= 3:
            raise ValueError("max_retries must be between 0 and 3")
        if self.cache_dir is not None:
            self.cache_dir = Path(self.cache_dir)


def _throttle(delay: float) -> None:
    global _last_request_at
    with _throttle_lock:
        wait = _last_request_at + delay - time.monotonic()
        if wait > 0:
            time.sleep(wait)
        _last_request_at = time.monotonic()


def _cache_path(config: ApiConfig, address: str) -> Path | None:
    if config.cache_dir is None:
        return None
    return config.cache_dir / f"{address.lower()}.json"


def _flatten_source(raw: str) -> str:
    """Verified source is either plain Solidity or a JSON bundle of files
    (the API wraps the bundle in an extra brace pair)."""
    text = raw.strip()
    if text.startswith("{{") and text.endswith("}}"):
        text = text[1:-1]
    if text.startswith("{"):
        try:
            bundle = json.loads(text)
        except json.JSONDecodeError:
            return raw
        sources = bundle.get("sources", bundle)
        if isinstance(sources, dict):
            parts = []
            for fname, entry in sources.items():
                content = entry.get("content", "") if isinstance(entry, dict) else str(entry)
                parts.append(f"// file: {fname}\n{content}")
            return "\n\n".join(parts)
    return raw


def _is_rate_limit(body: dict) -> bool:
    if str(body.get("status", "")) == "0":
        blob = f"{body.get('message', '')} {body.get('result', '')}".lower()
        return "rate limit" in blob or "max rate" in blob
    return False


def fetch_verified_source(address: str, config: ApiConfig) -> ContractRecord:
    """One unlabeled record for the contract at address, from cache when
    available. Raises BadAddress, NotVerified, RateLimited, or NetworkError.
    The API key never appears in logs or error text."""
    if not _ADDRESS_RE.match(address):
        raise BadAddress(f"not a hex contract address: {address!r}")

    cached = _cache_path(config, address)
    if cached is not None and cached.exists():
        payload = json.loads(cached.read_text())
        return ContractRecord(idx=int(payload["idx"]), source=payload["source"],
                              label=None)

    params = {
        "module": "contract",
        "action": "getsourcecode",
        "address": address,
        "apikey": config.api_key,
    }
    body = None
    for attempt in range(config.max_retries + 1):
        _throttle(config.delay)
        body = config.http_get(config.base_url, params, config.timeout)
        if not isinstance(body, dict):
            raise NetworkError("malformed response body")
        if _is_rate_limit(body):
            if attempt == config.max_retries:
                raise RateLimited(f"rate limited after {attempt + 1} attempts")
            time.sleep(config.delay * (attempt + 1))
            continue
        break

    result = body.get("result")
    if isinstance(result, list):
        result = result[0] if result else {}
    if not isinstance(result, dict):
        raise NetworkError("unexpected result payload")
    raw = result.get("SourceCode", "")
    if not raw or not raw.strip():
        raise NotVerified(f"no verified source for {address}")

    source = _flatten_source(raw)
    record = ContractRecord(idx=int(address, 16) % (10 ** 9), source=source,
                            label=None)
    if cached is not None:
        cached.parent.mkdir(parents=True, exist_ok=True)
        cached.write_text(json.dumps({"idx": record.idx, "source": record.source}))
    return record
