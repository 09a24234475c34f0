"""Exact (linear-scan) vector store with metadata filtering and persistence.

Filtering is always applied BEFORE ranking; the corpus is small enough that
exact search keeps results reproducible and trivially verifiable against a
brute-force oracle.
"""

from __future__ import annotations

import struct
import threading
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .embedding import EmbeddingVector
from .errors import CorruptIndexFile, DimensionMismatch, ZeroVector
from .ingest import Chunk, ChunkMetadata

METRICS = ("cosine", "euclidean", "manhattan")
DEFAULT_METRIC = "cosine"
DEFAULT_K = 4

_MAGIC = b"CQIX"
_VERSION = 1


@dataclass(frozen=True)
class MetadataFilter:
    source: Optional[str] = None
    contract: Optional[str] = None
    clause: Optional[str] = None
    clause_substring: bool = False   # case-insensitive substring match on clause

    def is_empty(self) -> bool:
        return self.source is None and self.contract is None and self.clause is None

    def matches(self, md: ChunkMetadata) -> bool:
        if self.source is not None and md.source != self.source:
            return False
        if self.contract is not None and md.contract != self.contract:
            return False
        if self.clause is not None:
            if self.clause_substring:
                if self.clause.lower() not in md.clause.lower():
                    return False
            elif md.clause != self.clause:
                return False
        return True

    def to_dict(self) -> dict:
        return {"source": self.source, "contract": self.contract,
                "clause": self.clause, "clause_substring": self.clause_substring}


@dataclass(frozen=True)
class SearchHit:
    chunk_id: str
    score: float
    metric: str
    chunk: Chunk


def similarity(a: EmbeddingVector, b: EmbeddingVector, metric: str = DEFAULT_METRIC) -> float:
    if a.dims != b.dims:
        raise DimensionMismatch(f"dims {a.dims} != {b.dims}")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    va = np.asarray(a.values, dtype=np.float64)
    vb = np.asarray(b.values, dtype=np.float64)
    if metric == "cosine":
        na, nb = np.linalg.norm(va), np.linalg.norm(vb)
        if na == 0.0 or nb == 0.0:
            raise ZeroVector("cosine similarity undefined for zero vector")
        return float(va @ vb / (na * nb))
    if metric == "euclidean":
        return float(np.linalg.norm(va - vb))
    return float(np.abs(va - vb).sum())


class VectorStore:
    """In-memory store of embedded chunks; filtered top-k similarity queries.

    Thread contract: a single lock serializes writers against readers, so no
    query ever observes a half-applied upsert batch.
    """

    def __init__(self, dims: int, default_metric: str = DEFAULT_METRIC):
        if dims < 1:
            raise ValueError("dims must be positive")
        if default_metric not in METRICS:
            raise ValueError(f"unknown metric {default_metric!r}")
        self.dims = dims
        self.default_metric = default_metric
        self._records: dict[str, Chunk] = {}
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._records)

    def get(self, chunk_id: str) -> Optional[Chunk]:
        with self._lock:
            return self._records.get(chunk_id)

    def upsert(self, chunks: list[Chunk]) -> int:
        """Idempotent by chunk_id; re-upsert replaces text, metadata, vector."""
        for chunk in chunks:
            if chunk.embedding is None or chunk.embedding.dims != self.dims:
                got = None if chunk.embedding is None else chunk.embedding.dims
                raise DimensionMismatch(
                    f"chunk {chunk.chunk_id}: embedding dims {got}, store dims {self.dims}")
        with self._lock:
            for chunk in chunks:
                self._records[chunk.chunk_id] = chunk
        return len(chunks)

    def query(self, vector: EmbeddingVector, k: int = DEFAULT_K,
              filter: MetadataFilter = MetadataFilter(),
              metric: Optional[str] = None) -> list[SearchHit]:
        """Filter first, then rank; ties broken by ascending chunk_id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        if vector.dims != self.dims:
            raise DimensionMismatch(f"query dims {vector.dims}, store dims {self.dims}")
        metric = metric or self.default_metric
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}")

        with self._lock:
            candidates = sorted(
                (c for c in self._records.values() if filter.matches(c.metadata)),
                key=lambda c: c.chunk_id)

        if not candidates:
            return []
        q = np.asarray(vector.values, dtype=np.float64)
        mat = np.stack([np.asarray(c.embedding.values, dtype=np.float64) for c in candidates])
        if metric == "cosine":
            qn = np.linalg.norm(q)
            if qn == 0.0:
                raise ZeroVector("cosine similarity undefined for zero query vector")
            norms = np.linalg.norm(mat, axis=1)
            if np.any(norms == 0.0):
                raise ZeroVector("store contains a zero vector; cosine undefined")
            scores = mat @ q / (norms * qn)
            order = np.argsort(-scores, kind="stable")
        else:
            diff = mat - q
            if metric == "euclidean":
                scores = np.linalg.norm(diff, axis=1)
            else:
                scores = np.abs(diff).sum(axis=1)
            order = np.argsort(scores, kind="stable")

        return [SearchHit(candidates[i].chunk_id, float(scores[i]), metric, candidates[i])
                for i in order[:k]]

    def delete_by_source(self, source_id: str) -> int:
        with self._lock:
            doomed = [cid for cid, c in self._records.items() if c.metadata.source == source_id]
            for cid in doomed:
                del self._records[cid]
        return len(doomed)

    # --- persistence ------------------------------------------------------
    # Single file, little-endian: magic, version, dims, count, default metric,
    # CRC-32 of the record payload, then the records.

    def persist(self, path: str | Path) -> None:
        with self._lock:
            records = [self._records[cid] for cid in sorted(self._records)]
            payload = bytearray()
            for c in records:
                for s in (c.chunk_id, c.metadata.source, c.metadata.contract,
                          c.metadata.clause, c.text, c.core_text):
                    raw = s.encode("utf-8")
                    payload += struct.pack("<I", len(raw)) + raw
                payload += np.asarray(c.embedding.values, dtype="<f8").tobytes()
            metric_raw = self.default_metric.encode("utf-8")
            header = _MAGIC + struct.pack(
                "<HII B", _VERSION, self.dims, len(records), len(metric_raw))
            header += metric_raw + struct.pack("<I", zlib.crc32(bytes(payload)))
            Path(path).write_bytes(header + payload)

    @classmethod
    def load(cls, path: str | Path) -> "VectorStore":
        blob = Path(path).read_bytes()
        try:
            if blob[:4] != _MAGIC:
                raise CorruptIndexFile("bad magic")
            version, dims, count, mlen = struct.unpack_from("<HII B", blob, 4)
            if version != _VERSION:
                raise CorruptIndexFile(f"unsupported version {version}")
            off = 4 + struct.calcsize("<HII B")
            metric = blob[off:off + mlen].decode("utf-8")
            off += mlen
            (crc,) = struct.unpack_from("<I", blob, off)
            off += 4
            payload = blob[off:]
            if zlib.crc32(payload) != crc:
                raise CorruptIndexFile("checksum mismatch")

            store = cls(dims, metric)
            pos = 0

            def read_str() -> str:
                nonlocal pos
                (n,) = struct.unpack_from("<I", payload, pos)
                pos += 4
                s = payload[pos:pos + n].decode("utf-8")
                pos += n
                return s

            for _ in range(count):
                chunk_id = read_str()
                source, contract, clause = read_str(), read_str(), read_str()
                text, core_text = read_str(), read_str()
                vec = np.frombuffer(payload, dtype="<f8", count=dims, offset=pos)
                pos += dims * 8
                store._records[chunk_id] = Chunk(
                    chunk_id=chunk_id, text=text, core_text=core_text,
                    metadata=ChunkMetadata(source, contract, clause),
                    embedding=EmbeddingVector(tuple(float(v) for v in vec)))
            if pos != len(payload):
                raise CorruptIndexFile("trailing bytes in payload")
            return store
        except (struct.error, UnicodeDecodeError, IndexError) as exc:
            raise CorruptIndexFile(f"unreadable index: {exc}") from exc
