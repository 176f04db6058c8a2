"""JSON-over-HTTP POST with bounded retries, shared by the remote providers."""
from __future__ import annotations

import logging
import time

import httpx

from .errors import ProviderError

log = logging.getLogger(__name__)

RETRY_STATUS = {408, 409, 429, 500, 502, 503, 504}


def post_json(url: str, payload: dict, api_key: str | None = None, *, client: httpx.Client | None = None,
              timeout: float = 60.0, max_retries: int = 3, backoff: float = 1.0) -> dict:
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    owned = client is None
    client = client or httpx.Client(timeout=timeout)
    last = None
    try:
        for attempt in range(max_retries + 1):
            try:
                resp = client.post(url, json=payload, headers=headers)
            except httpx.TransportError as e:
                last = f"{type(e).__name__}: {e}"
            else:
                if resp.status_code < 400:
                    try:
                        return resp.json()
                    except ValueError as e:
                        raise ProviderError(f"{url}: response is not JSON") from e
                last = f"HTTP {resp.status_code}: {resp.text[:200]}"
                if resp.status_code not in RETRY_STATUS:
                    break
            if attempt < max_retries:
                log.warning("POST %s failed (%s); retry %d/%d", url, last, attempt + 1, max_retries)
                time.sleep(backoff * 2 ** attempt)
    finally:
        if owned:
            client.close()
    raise ProviderError(f"POST {url} failed: {last}")
