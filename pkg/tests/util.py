"""Shared test helpers: synthetic contract generation and the independent
brute-force retrieval oracle (pure python, no numpy, kept deliberately
separate from the store implementation)."""

from __future__ import annotations

import math
import random

from contractqa.embedding import EmbeddingVector
from contractqa.ingest import Chunk, ChunkMetadata, DocumentSource

WORDS = ("services support delivery supplier invoice payment obligations "
         "penalty deadline maintenance hosting warranty termination scope "
         "liability schedule report manager data system").split()

HEADING_TITLES = ("OBJECT", "TERM", "PENALTIES", "CONTRACT MANAGER", "PAYMENT",
                  "WARRANTY", "TERMINATION", "CONFIDENTIALITY", "LIABILITY")


def make_synthetic_contract(rng: random.Random, source_id: str = "syn.txt",
                            contract_number: str = "001/2024",
                            n_clauses: int | None = None) -> DocumentSource:
    n_clauses = n_clauses if n_clauses is not None else rng.randint(1, 8)
    lines = []
    for i in range(n_clauses):
        title = HEADING_TITLES[i % len(HEADING_TITLES)]
        lines.append(f"{i + 1}. {title}")
        for _ in range(rng.randint(1, 5)):
            lines.append(" ".join(rng.choice(WORDS) for _ in range(rng.randint(3, 10))))
        if rng.random() < 0.3:
            lines.append("")
    return DocumentSource(source_id, contract_number, "\n".join(lines))


def random_vector(rng: random.Random, dims: int) -> EmbeddingVector:
    return EmbeddingVector(tuple(rng.gauss(0, 1) for _ in range(dims)))


def make_random_chunk(rng: random.Random, i: int, dims: int,
                      sources=("a.txt", "b.txt", "c.txt"),
                      contracts=("111/2021", "222/2022", "333/2023"),
                      clauses=("1. OBJECT", "2. TERM", "3. PENALTIES")) -> Chunk:
    return Chunk(
        chunk_id=f"{rng.choice(sources)}#{i:04d}",
        text=f"synthetic chunk {i}",
        metadata=ChunkMetadata(rng.choice(sources), rng.choice(contracts),
                               rng.choice(clauses)),
        embedding=random_vector(rng, dims))


def _filter_matches(flt, md) -> bool:
    if flt.source is not None and md.source != flt.source:
        return False
    if flt.contract is not None and md.contract != flt.contract:
        return False
    if flt.clause is not None:
        if flt.clause_substring:
            return flt.clause.lower() in md.clause.lower()
        return md.clause == flt.clause
    return True


def brute_force_query(chunks, query: EmbeddingVector, k: int, flt, metric: str):
    """Exhaustive scan + sort, written independently of the vector store.
    Returns (chunk_id, score) best-first."""
    q = query.values
    scored = []
    for c in chunks:
        if not _filter_matches(flt, c.metadata):
            continue
        v = c.embedding.values
        if metric == "cosine":
            dot = math.fsum(a * b for a, b in zip(q, v))
            nq = math.sqrt(math.fsum(a * a for a in q))
            nv = math.sqrt(math.fsum(b * b for b in v))
            score = dot / (nq * nv)
            scored.append((c.chunk_id, score))
        elif metric == "euclidean":
            scored.append((c.chunk_id,
                           math.sqrt(math.fsum((a - b) ** 2 for a, b in zip(q, v)))))
        else:
            scored.append((c.chunk_id,
                           math.fsum(abs(a - b) for a, b in zip(q, v))))
    if metric == "cosine":
        scored.sort(key=lambda t: (-t[1], t[0]))
    else:
        scored.sort(key=lambda t: (t[1], t[0]))
    return scored[:k]
