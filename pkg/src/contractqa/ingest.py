"""Clause-aligned chunking of pre-extracted contract text.

Contracts are segmented at clause headings so each chunk is one semantic
unit; every chunk carries (source, contract, clause) metadata used later
for filtered retrieval.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .errors import ManifestError, MetadataMismatch

CONTRACT_NUMBER_RE = re.compile(r"^\d+/\d{4}$")

# Default heading grammar: numbered section titles ("1. OBJECT", "2.1) Scope")
# and explicit clause labels ("CLAUSE ONE"). Configurable; contracts in the
# wild vary.
DEFAULT_HEADING_PATTERNS: tuple[str, ...] = (
    r"^\s*(\d+(\.\d+)*)[.)-]\s+[A-Z]",
    r"(?i)^\s*CLAUSE\s+\w+",
)

FULL_DOCUMENT_CLAUSE = "FULL_DOCUMENT"
PREAMBLE_CLAUSE = "PREAMBLE"


@dataclass(frozen=True)
class DocumentSource:
    source_id: str          # file name, unique per corpus
    contract_number: str    # NNN/YYYY
    raw_text: str

    def __post_init__(self):
        if not self.source_id:
            raise ValueError("source_id must be non-empty")
        if not CONTRACT_NUMBER_RE.match(self.contract_number):
            raise ValueError(f"contract_number {self.contract_number!r} does not match NNN/YYYY")
        if not self.raw_text:
            raise ValueError("raw_text must be non-empty")


@dataclass(frozen=True)
class ChunkMetadata:
    source: str
    contract: str
    clause: str


@dataclass
class Chunk:
    chunk_id: str
    text: str
    metadata: ChunkMetadata
    embedding: Optional["EmbeddingVector"] = None  # noqa: F821 - set by the embedding stage
    core_text: str = ""         # text without neighbor-overlap lines
    warning: Optional[str] = None

    def __post_init__(self):
        if not self.core_text:
            self.core_text = self.text


@dataclass(frozen=True)
class SegmentationConfig:
    heading_patterns: tuple[str, ...] = DEFAULT_HEADING_PATTERNS
    neighbor_overlap: bool = False


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def _compile(patterns) -> list[re.Pattern]:
    return [re.compile(p) for p in patterns]


def segment_clauses(doc: DocumentSource, cfg: SegmentationConfig = SegmentationConfig()) -> list[Chunk]:
    """Split a document at clause headings, one chunk per clause.

    Deterministic: same (doc, cfg) always yields the same chunk list.
    If no heading matches, the whole document becomes a single chunk with
    clause FULL_DOCUMENT and a warning attached.
    """
    patterns = _compile(cfg.heading_patterns)
    lines = doc.raw_text.splitlines()

    heading_idx = [i for i, line in enumerate(lines)
                   if any(p.search(line) for p in patterns)]

    if not heading_idx:
        return [Chunk(
            chunk_id=f"{doc.source_id}#0000",
            text=doc.raw_text,
            metadata=ChunkMetadata(doc.source_id, doc.contract_number, FULL_DOCUMENT_CLAUSE),
            warning="no clause heading matched; document kept whole",
        )]

    # (clause label, core text) in document order
    sections: list[tuple[str, str]] = []
    if heading_idx[0] > 0:
        pre = "\n".join(lines[:heading_idx[0]])
        if pre.strip():
            sections.append((PREAMBLE_CLAUSE, pre))
    bounds = heading_idx + [len(lines)]
    for start, end in zip(heading_idx, bounds[1:]):
        body = "\n".join(lines[start:end])
        sections.append((lines[start].strip(), body))

    chunks: list[Chunk] = []
    for i, (clause, core) in enumerate(sections):
        text = core
        if cfg.neighbor_overlap:
            parts = []
            if i > 0:
                parts.append(sections[i - 1][0])
            parts.append(core)
            if i < len(sections) - 1:
                parts.append(sections[i + 1][0])
            text = "\n".join(parts)
        chunks.append(Chunk(
            chunk_id=f"{doc.source_id}#{i:04d}",
            text=text,
            core_text=core,
            metadata=ChunkMetadata(doc.source_id, doc.contract_number, clause),
        ))
    return chunks


def attach_metadata(chunks: list[Chunk], doc: DocumentSource) -> list[Chunk]:
    """Stamp every chunk with the owning document's source and contract."""
    out = []
    for chunk in chunks:
        if not chunk.chunk_id.startswith(f"{doc.source_id}#"):
            raise MetadataMismatch(
                f"chunk {chunk.chunk_id} does not belong to source {doc.source_id}")
        out.append(replace(
            chunk,
            metadata=ChunkMetadata(doc.source_id, doc.contract_number, chunk.metadata.clause),
        ))
    return out


def chunk_document(doc: DocumentSource, cfg: SegmentationConfig = SegmentationConfig()) -> list[Chunk]:
    return attach_metadata(segment_clauses(doc, cfg), doc)


# --- corpus manifest ------------------------------------------------------

def load_manifest(manifest_path: str | Path, docs_dir: str | Path) -> list[DocumentSource]:
    """Read a line-delimited JSON manifest and the .txt files it points to.

    Each record needs source_id, contract_number and path (relative to
    docs_dir unless absolute).
    """
    docs_dir = Path(docs_dir)
    docs: list[DocumentSource] = []
    seen: set[str] = set()
    with open(manifest_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"invalid JSON: {exc.msg}", lineno) from exc
            for key in ("source_id", "contract_number", "path"):
                if key not in rec:
                    raise ManifestError(f"missing field {key!r}", lineno)
            if rec["source_id"] in seen:
                raise ManifestError(f"duplicate source_id {rec['source_id']!r}", lineno)
            seen.add(rec["source_id"])
            path = Path(rec["path"])
            if not path.is_absolute():
                path = docs_dir / path
            try:
                raw = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise ManifestError(f"cannot read {path}: {exc}", lineno) from exc
            try:
                docs.append(DocumentSource(rec["source_id"], rec["contract_number"], raw))
            except ValueError as exc:
                raise ManifestError(str(exc), lineno) from exc
    return docs
