"""Decision-making layer: query routing, the RAG and SQL answer paths, the
graph post-processor, and session-scoped orchestration.

Routing is a priority-ordered table of regular expressions with capture
groups feeding the metadata filter; the highest-priority matching rule
wins and every question gets exactly one route.
"""

from __future__ import annotations

import json
import math
import re
import time
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import prompts
from .embedding import EmbedderConfig, embed_text
from .errors import (ContractQAError, NoContext, NotChartable,
                     ProviderUnavailable, SqlGenerationFailed,
                     SqlValidationError)
from .ingest import Chunk, ChunkMetadata, DocumentSource, SegmentationConfig, chunk_document
from .llm import (DEFAULT_TEMPERATURE_RAG, DEFAULT_TEMPERATURE_SQL,
                  ChatClient, CompletionRequest)
from .structured import (ContractRecord, ContractStore, ResultTable,
                         ValidatedQuery, flatten_record_to_text, validate_sql)
from .vectorstore import DEFAULT_K, MetadataFilter, SearchHit, VectorStore

NOT_FOUND_TEXT = "Not found in the available documents."
HISTORY_LIMIT = 20
DB_SOURCE = "db"
DB_CLAUSE = "DB_RECORD"


# --- routing --------------------------------------------------------------

@dataclass(frozen=True)
class RoutingRule:
    rule_id: str
    priority: int
    pattern: str
    target: str                       # "rag" or "sql"
    extractors: dict = field(default_factory=dict)  # capture group -> filter field

    def compiled(self) -> re.Pattern:
        return re.compile(self.pattern)


@dataclass(frozen=True)
class RuleTable:
    rules: tuple[RoutingRule, ...]
    default_target: str = "rag"
    synonyms: dict = field(default_factory=dict)  # term -> expansion terms; ships empty

    def __post_init__(self):
        priorities = [r.priority for r in self.rules]
        if len(set(priorities)) != len(priorities):
            raise ValueError("rule priorities must be unique")
        for r in self.rules:
            re.compile(r.pattern)
            if r.target not in ("rag", "sql"):
                raise ValueError(f"rule {r.rule_id}: unknown target {r.target!r}")


@dataclass(frozen=True)
class QueryRoute:
    target: str
    filter: MetadataFilter
    matched_rule: str   # rule id or "default"

    def to_dict(self) -> dict:
        return {"target": self.target, "filter": self.filter.to_dict(),
                "matched_rule": self.matched_rule}


def load_rule_table(path: Optional[str | Path] = None) -> RuleTable:
    if path is None:
        raw = resources.files("contractqa").joinpath("data/routing_rules.json") \
            .read_text(encoding="utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    data = json.loads(raw)
    rules = tuple(RoutingRule(r["rule_id"], r["priority"], r["pattern"],
                              r["target"], r.get("extractors", {}))
                  for r in data["rules"])
    return RuleTable(rules, data.get("default_target", "rag"),
                     data.get("synonyms", {}))


def expand_synonyms(question: str, table: RuleTable) -> str:
    """Append configured synonym terms when their trigger appears; the shipped
    mapping is empty, this is a hook for domain terms retrieval misses."""
    extra = [alt for term, alts in table.synonyms.items()
             if term.lower() in question.lower() for alt in alts]
    return question + (" (" + "; ".join(extra) + ")" if extra else "")


def route(question: str, table: RuleTable) -> QueryRoute:
    """Total function: highest-priority matching rule, else the default."""
    if not question.strip():
        raise ValueError("question must be non-empty")
    for rule in sorted(table.rules, key=lambda r: -r.priority):
        m = rule.compiled().search(question)
        if m:
            fields = {}
            for group, filter_field in rule.extractors.items():
                value = m.groupdict().get(group)
                if value:
                    fields[filter_field] = value
            flt = MetadataFilter(
                source=fields.get("source"),
                contract=fields.get("contract"),
                clause=fields.get("clause"),
                clause_substring="clause" in fields)
            return QueryRoute(rule.target, flt, rule.rule_id)
    return QueryRoute(table.default_target, MetadataFilter(), "default")


# --- answer envelope ------------------------------------------------------

@dataclass(frozen=True)
class ChartSpec:
    kind: str
    title: str
    labels: list[str]
    values: list[float]
    value_axis_label: str

    def __post_init__(self):
        if self.kind != "bar":
            raise ValueError("only bar charts are supported")
        if len(self.labels) != len(self.values):
            raise ValueError("labels and values must have equal length")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("chart values must be finite")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "title": self.title, "labels": list(self.labels),
                "values": list(self.values), "value_axis_label": self.value_axis_label}


@dataclass(frozen=True)
class Citation:
    chunk_id: str
    source: str
    contract: str
    clause: str

    def to_dict(self) -> dict:
        return {"chunk_id": self.chunk_id, "source": self.source,
                "contract": self.contract, "clause": self.clause}


@dataclass
class AnswerEnvelope:
    question: str
    answer_text: str
    route: QueryRoute
    citations: list[Citation] = field(default_factory=list)
    table: Optional[ResultTable] = None
    chart: Optional[ChartSpec] = None
    executed_sql: Optional[str] = None
    sql_attempts: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    error: Optional[str] = None          # error kind name for typed failures
    timings_ms: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "answer_text": self.answer_text,
            "route": self.route.to_dict(),
            "citations": [c.to_dict() for c in self.citations],
            "table": self.table.to_dict() if self.table else None,
            "chart": self.chart.to_dict() if self.chart else None,
            "executed_sql": self.executed_sql,
            "sql_attempts": list(self.sql_attempts),
            "warnings": list(self.warnings),
            "error": self.error,
            "timings_ms": dict(self.timings_ms),
        }


def extract_sql(text: str) -> str:
    """First fenced code block, else the bare statement."""
    m = re.search(r"```(?:sql)?\s*(.*?)```", text, re.DOTALL | re.IGNORECASE)
    if m:
        return m.group(1).strip()
    return text.strip()


# --- engine ---------------------------------------------------------------

class Engine:
    """Wires ingest, retrieval, the contract store and the LLM together and
    owns per-session history (bounded, oldest evicted)."""

    def __init__(self, vector_store: VectorStore, contract_store: ContractStore,
                 llm: ChatClient, embedder_cfg: EmbedderConfig,
                 rule_table: Optional[RuleTable] = None,
                 templates: Optional[prompts.TemplateSet] = None,
                 k: int = DEFAULT_K, metric: Optional[str] = None,
                 budget: int = prompts.DEFAULT_BUDGET,
                 history_limit: int = HISTORY_LIMIT,
                 sql_timeout_ms: int = 5000,
                 segmentation: SegmentationConfig = SegmentationConfig()):
        if embedder_cfg.dims != vector_store.dims:
            raise ValueError("embedder dims must match the vector store")
        self.vector_store = vector_store
        self.contract_store = contract_store
        self.llm = llm
        self.embedder_cfg = embedder_cfg
        self.rule_table = rule_table or load_rule_table()
        self.templates = templates or prompts.TemplateSet.default()
        self.k = k
        self.metric = metric or vector_store.default_metric
        self.budget = budget
        self.history_limit = history_limit
        self.sql_timeout_ms = sql_timeout_ms
        self.segmentation = segmentation
        self.sessions: dict[str, deque] = {}

    # --- ingestion --------------------------------------------------------

    def index_documents(self, docs: Sequence[DocumentSource]) -> int:
        """Chunk, embed and upsert documents; returns the chunk count."""
        total = 0
        for doc in docs:
            chunks = chunk_document(doc, self.segmentation)
            for chunk in chunks:
                chunk.embedding = embed_text(chunk.text, self.embedder_cfg)
            total += self.vector_store.upsert(chunks)
        return total

    def load_contract_records(self, records: Sequence[ContractRecord],
                              embed_flattened: bool = True) -> int:
        """Load rows into the relational store and (optionally) embed their
        flattened text into the same vectorstore as the documents."""
        count = self.contract_store.load_contracts(records)
        if embed_flattened:
            chunks = []
            for rec in records:
                text = flatten_record_to_text(rec)
                chunks.append(Chunk(
                    chunk_id=f"{DB_SOURCE}#{rec.contract_number}",
                    text=text,
                    metadata=ChunkMetadata(DB_SOURCE, rec.contract_number, DB_CLAUSE),
                    embedding=embed_text(text, self.embedder_cfg)))
            self.vector_store.upsert(chunks)
        return count

    # --- answer paths -----------------------------------------------------

    def _history(self, session_id: str) -> deque:
        if session_id not in self.sessions:
            self.sessions[session_id] = deque(maxlen=self.history_limit)
        return self.sessions[session_id]

    def rag_answer(self, question: str, route_: QueryRoute,
                   history: Sequence[tuple[str, str]] = ()) -> AnswerEnvelope:
        retrieval_text = expand_synonyms(question, self.rule_table)
        query_vec = embed_text(retrieval_text, self.embedder_cfg)
        hits = self.vector_store.query(query_vec, self.k, route_.filter, self.metric)
        try:
            prompt = prompts.build_rag_prompt(question, hits, history,
                                              self.budget, self.templates)
        except NoContext:
            return AnswerEnvelope(question, NOT_FOUND_TEXT, route_)
        if not prompt.included_hits:
            return AnswerEnvelope(question, NOT_FOUND_TEXT, route_)
        answer = self.llm.complete(CompletionRequest(
            prompt.messages, temperature=DEFAULT_TEMPERATURE_RAG))
        citations = [Citation(h.chunk_id, h.chunk.metadata.source,
                              h.chunk.metadata.contract, h.chunk.metadata.clause)
                     for h in prompt.included_hits]
        return AnswerEnvelope(question, answer, route_, citations=citations)

    def sql_answer(self, question: str, route_: QueryRoute,
                   history: Sequence[tuple[str, str]] = ()) -> AnswerEnvelope:
        schema = self.contract_store.schema_description()
        prompt = prompts.build_sql_prompt(question, schema, "sqlite", history,
                                          templates=self.templates)
        attempts: list[str] = []
        validated: Optional[ValidatedQuery] = None
        req = CompletionRequest(prompt.messages, temperature=DEFAULT_TEMPERATURE_SQL)
        last_error = ""
        for _ in range(2):   # initial attempt + one self-correction retry
            sql = extract_sql(self.llm.complete(req))
            attempts.append(sql)
            try:
                validated = validate_sql(sql, schema)
                break
            except SqlValidationError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                retry_messages = prompt.messages + [(
                    "user",
                    f"The previous statement was rejected ({last_error}). "
                    f"Return exactly one valid SELECT statement and nothing else.")]
                req = CompletionRequest(retry_messages,
                                        temperature=DEFAULT_TEMPERATURE_SQL)
        if validated is None:
            return AnswerEnvelope(
                question,
                "I could not translate this question into a safe database query.",
                route_, sql_attempts=attempts,
                error=SqlGenerationFailed.__name__)

        table = self.contract_store.execute_sql(validated, self.sql_timeout_ms)

        summary_messages = [
            ("system", f"{prompts.ROLE_PREAMBLE} Summarize the result table as a "
                       f"direct answer to the user's question. Keep every value exact."),
            ("user", _render_table_text(table) + f"\n\nQuestion: {question}"),
        ]
        answer = self.llm.complete(CompletionRequest(
            summary_messages, temperature=DEFAULT_TEMPERATURE_SQL))
        return AnswerEnvelope(question, answer, route_, table=table,
                              executed_sql=validated.sql_text, sql_attempts=attempts)

    def graph_augment(self, env: AnswerEnvelope) -> AnswerEnvelope:
        """Attach a bar ChartSpec when the table has a label and a numeric
        column; degrades to a warning, never fails the envelope."""
        if env.table is None or not env.table.rows:
            return env
        try:
            label_idx, value_idx = prompts.chartable_columns(env.table)
            labels = [str(r[label_idx]) for r in env.table.rows]
            values = [float(r[value_idx]) for r in env.table.rows]
            env.chart = ChartSpec("bar", env.question, labels, values,
                                  env.table.columns[value_idx][0])
        except NotChartable:
            pass
        except (ValueError, TypeError) as exc:
            env.warnings.append(f"chart skipped: {exc}")
        return env

    def orchestrate(self, session_id: str, question: str) -> AnswerEnvelope:
        """route -> dispatch -> graph_augment -> record the turn."""
        history = self._history(session_id)
        timings: dict[str, float] = {}
        t0 = time.perf_counter()
        route_ = route(expand_synonyms(question, self.rule_table), self.rule_table)
        timings["route"] = (time.perf_counter() - t0) * 1000

        t1 = time.perf_counter()
        try:
            if route_.target == "sql":
                env = self.sql_answer(question, route_, list(history))
            else:
                env = self.rag_answer(question, route_, list(history))
        except ProviderUnavailable:
            raise
        except ContractQAError as exc:
            env = AnswerEnvelope(question,
                                 "The question could not be answered due to an "
                                 "internal error.",
                                 route_, error=type(exc).__name__)
        timings["answer"] = (time.perf_counter() - t1) * 1000

        t2 = time.perf_counter()
        env = self.graph_augment(env)
        timings["graph"] = (time.perf_counter() - t2) * 1000
        timings["total"] = (time.perf_counter() - t0) * 1000
        env.timings_ms = timings

        history.append((question, env.answer_text))
        return env


def _render_table_text(table: ResultTable) -> str:
    header = " | ".join(name for name, _ in table.columns)
    body = "\n".join(" | ".join(str(v) for v in row) for row in table.rows)
    text = f"{header}\n{body}" if body else header
    if table.truncated:
        text += "\n(truncated)"
    return text
