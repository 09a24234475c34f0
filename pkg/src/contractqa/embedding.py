"""Text embedding behind a pluggable provider.

Ships a deterministic offline provider (hashed character trigrams) so the
whole pipeline is testable without network access; a remote HTTP provider
covers production use.
"""

from __future__ import annotations

import hashlib
import math
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import httpx

from .errors import EmptyText, ProviderUnavailable

DEFAULT_DIMS = 1536
_NGRAM = 3


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    @property
    def dims(self) -> int:
        return len(self.values)

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding contains non-finite values")


@dataclass(frozen=True)
class EmbedderConfig:
    provider: str = "deterministic-local"   # or "remote"
    dims: int = DEFAULT_DIMS
    endpoint: str = ""
    model: str = ""
    api_key: str = ""
    max_in_flight: int = 4
    retry_attempts: int = 3
    retry_base_s: float = 0.25

    def __post_init__(self):
        if self.dims < 8:
            raise ValueError("dims must be >= 8")
        if self.provider not in ("deterministic-local", "remote"):
            raise ValueError(f"unknown provider {self.provider!r}")
        if self.provider == "remote" and not (self.endpoint and self.model):
            raise ValueError("remote provider requires endpoint and model")


def _local_embed(text: str, dims: int) -> EmbeddingVector:
    # Hashed character trigrams with a hash-derived sign, L2-normalized.
    # Pure function of (text, dims); no model weights involved.
    grams = [text[i:i + _NGRAM] for i in range(len(text) - _NGRAM + 1)] or [text]
    buckets = [0.0] * dims
    for gram in grams:
        h = int.from_bytes(hashlib.md5(gram.encode("utf-8")).digest()[:8], "little")
        sign = 1.0 if (h >> 62) & 1 == 0 else -1.0
        buckets[h % dims] += sign
    norm = math.sqrt(sum(v * v for v in buckets))
    if norm == 0.0:
        # all signs cancelled; fall back to unsigned counts so the vector is usable
        for gram in grams:
            h = int.from_bytes(hashlib.md5(gram.encode("utf-8")).digest()[:8], "little")
            buckets[h % dims] += 1.0
        norm = math.sqrt(sum(v * v for v in buckets))
    return EmbeddingVector(tuple(v / norm for v in buckets))


class RemoteEmbedder:
    """HTTP embedding endpoint client: {model, input: [...]} -> one vector per input."""

    def __init__(self, cfg: EmbedderConfig, client: Optional[httpx.Client] = None):
        self.cfg = cfg
        self._client = client or httpx.Client(timeout=30.0)
        self._slots = threading.Semaphore(cfg.max_in_flight)

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        payload = {"model": self.cfg.model, "input": list(texts)}
        headers = {}
        if self.cfg.api_key:
            headers["Authorization"] = f"Bearer {self.cfg.api_key}"
        last_exc = None
        for attempt in range(self.cfg.retry_attempts):
            try:
                with self._slots:
                    resp = self._client.post(self.cfg.endpoint, json=payload, headers=headers)
                resp.raise_for_status()
                data = resp.json()["data"]
                vectors = [EmbeddingVector(tuple(float(v) for v in item["embedding"]))
                           for item in data]
                for vec in vectors:
                    if vec.dims != self.cfg.dims:
                        raise ProviderUnavailable(
                            f"provider returned dims {vec.dims}, expected {self.cfg.dims}")
                return vectors
            except (httpx.HTTPError, KeyError, ValueError) as exc:
                last_exc = exc
                time.sleep(self.cfg.retry_base_s * (2 ** attempt))
        # never leak credentials into the error text
        raise ProviderUnavailable(f"embedding endpoint failed after "
                                  f"{self.cfg.retry_attempts} attempts") from last_exc


def embed_text(text: str, cfg: EmbedderConfig) -> EmbeddingVector:
    if not text.strip():
        raise EmptyText("cannot embed empty text")
    if cfg.provider == "deterministic-local":
        return _local_embed(text, cfg.dims)
    return RemoteEmbedder(cfg).embed([text])[0]


def embed_batch(texts: Sequence[str], cfg: EmbedderConfig) -> list[EmbeddingVector]:
    """Order-preserving batch embed; element i equals embed_text(texts[i])."""
    for i, text in enumerate(texts):
        if not text.strip():
            raise EmptyText(f"text at index {i} is empty")
    if not texts:
        return []
    if cfg.provider == "deterministic-local":
        return [_local_embed(t, cfg.dims) for t in texts]
    return RemoteEmbedder(cfg).embed(texts)
