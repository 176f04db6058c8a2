"""Text embedding providers.

Every provider returns float32 rows of unit L2 norm and exposes ``dim`` and
``tag``. ``tag`` is stored in the index so a database is never queried with
vectors from a different encoder.
"""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Protocol, Sequence

import httpx
import numpy as np

from .._http import post_json
from ..errors import InvalidArgumentError, ProviderError

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
DEFAULT_DIM = 512
TABLE_SCHEMA = 1


class Embedder(Protocol):
    dim: int | None
    tag: str

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


def unit_rows(vectors) -> np.ndarray:
    """L2-normalize rows in float64, then store as float32."""
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2:
        raise ProviderError(f"expected a 2-D batch of embeddings, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ProviderError("embedding contains non-finite values")
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ProviderError("embedding has zero norm")
    return (v / norms).astype(np.float32)


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


class StubEmbedder:
    """Deterministic bag-of-tokens hashing embedder.

    Lowercase, split on whitespace, hash each token's UTF-8 bytes with
    FNV-1a 64, add 1 to bucket ``hash % dim``, L2-normalize.
    """

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim < 1:
            raise InvalidArgumentError("embedding dim must be >= 1")
        self.dim = int(dim)
        self.tag = f"stub-fnv1a-{self.dim}"

    def counts(self, text: str) -> np.ndarray:
        tokens = text.lower().split()
        if not tokens:
            raise InvalidArgumentError("cannot embed empty text")
        v = np.zeros(self.dim)
        for tok in tokens:
            v[fnv1a_64(tok.encode("utf-8")) % self.dim] += 1.0
        return v

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), np.float32)
        return unit_rows([self.counts(t) for t in texts])


class TableEmbedder:
    """Precomputed vectors looked up by exact text.

    File format: ``{"schema_version": 1, "provider_tag", "dim", "vectors": {text: [...]}}``.
    """

    def __init__(self, vectors: dict, tag: str, dim: int | None = None):
        self.vectors = {k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()}
        dims = {v.shape for v in self.vectors.values()}
        if dim is None:
            if len(dims) != 1:
                raise InvalidArgumentError("embedding table is empty or has mixed dimensions")
            dim = next(iter(dims))[0]
        if any(s != (dim,) for s in dims):
            raise InvalidArgumentError(f"embedding table rows must all have dim {dim}")
        self.dim = int(dim)
        self.tag = tag

    @classmethod
    def from_file(cls, path) -> "TableEmbedder":
        try:
            d = json.loads(Path(path).read_text("utf-8"))
        except (OSError, ValueError) as exc:
            raise InvalidArgumentError(f"{path}: cannot read embedding table: {exc}") from None
        if d.get("schema_version") != TABLE_SCHEMA:
            raise InvalidArgumentError(f"{path}: unsupported schema_version {d.get('schema_version')}")
        return cls(d["vectors"], d.get("provider_tag", f"table:{Path(path).name}"), d.get("dim"))

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        missing = [t for t in texts if t not in self.vectors]
        if missing:
            raise ProviderError("text not in embedding table", key=missing[0])
        if not texts:
            return np.zeros((0, self.dim), np.float32)
        return unit_rows([self.vectors[t] for t in texts])


class RemoteEmbedder:
    """Client for ``POST {base_url}/v1/embeddings``."""

    def __init__(self, base_url: str, model: str, api_key: str | None = None, *, dim: int | None = None,
                 timeout: float = 60.0, max_retries: int = 3, backoff: float = 1.0,
                 client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.dim = dim
        self.tag = f"remote:{model}"
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.client = client

    @classmethod
    def from_env(cls, base_url: str | None = None, model: str | None = None, **kwargs) -> "RemoteEmbedder":
        base_url = base_url or os.environ.get("RMD_EMBED_BASE_URL")
        model = model or os.environ.get("RMD_EMBED_MODEL")
        if not base_url or not model:
            raise ProviderError("remote embedder needs a base URL and model (RMD_EMBED_BASE_URL, RMD_EMBED_MODEL)")
        return cls(base_url, model, os.environ.get("RMD_EMBED_API_KEY"), **kwargs)

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        texts = list(texts)
        if not texts:
            return np.zeros((0, self.dim or 0), np.float32)
        body = post_json(f"{self.base_url}/v1/embeddings", {"model": self.model, "input": texts}, self.api_key,
                         client=self.client, timeout=self.timeout, max_retries=self.max_retries,
                         backoff=self.backoff)
        try:
            data = body["data"]
            if len(data) != len(texts):
                raise ProviderError(f"embeddings response has {len(data)} rows for {len(texts)} inputs")
            if all("index" in row for row in data):
                data = sorted(data, key=lambda row: row["index"])
            rows = [row["embedding"] for row in data]
        except (KeyError, TypeError):
            raise ProviderError("embeddings response lacks data[i].embedding") from None
        out = unit_rows(rows)
        if self.dim is not None and out.shape[1] != self.dim:
            raise ProviderError(f"embedding dim {out.shape[1]} != expected {self.dim}")
        self.dim = out.shape[1]
        return out
