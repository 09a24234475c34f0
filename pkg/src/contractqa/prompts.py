"""Dynamic prompt assembly for the three agent kinds, under a token budget.

Templates live in plain-text files with {{slot}} markers (one per agent
kind) and can be overridden from a directory at startup. The question and
the grounding directive always survive truncation; history goes first,
then the lowest-ranked hits.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .errors import NoContext, NotChartable, TemplateError
from .structured import ResultTable, SchemaDescription
from .vectorstore import SearchHit

DEFAULT_BUDGET = 6000
MAX_FEW_SHOT = 2

ROLE_PREAMBLE = "You are a contract management assistant."
GROUNDING_DIRECTIVE = "Do not use prior knowledge."

_SLOT = re.compile(r"\{\{(\w+)\}\}")


def estimate_tokens(text: str) -> int:
    """Byte heuristic (ceil(bytes/4)); budgeting only, never billing."""
    return math.ceil(len(text.encode("utf-8")) / 4)


@dataclass
class RenderedPrompt:
    messages: list[tuple[str, str]]   # (role in {system, user}, text)
    estimated_tokens: int
    included_hits: list[SearchHit] = field(default_factory=list)

    def flat_text(self) -> str:
        return "\n".join(text for _, text in self.messages)


@dataclass(frozen=True)
class TemplateSet:
    rag: str
    sql: str
    graph: str

    @classmethod
    def default(cls) -> "TemplateSet":
        base = resources.files("contractqa").joinpath("data/templates")
        return cls(rag=(base / "rag.txt").read_text(encoding="utf-8"),
                   sql=(base / "sql.txt").read_text(encoding="utf-8"),
                   graph=(base / "graph.txt").read_text(encoding="utf-8"))

    @classmethod
    def from_dir(cls, path: str | Path) -> "TemplateSet":
        path = Path(path)
        return cls(rag=(path / "rag.txt").read_text(encoding="utf-8"),
                   sql=(path / "sql.txt").read_text(encoding="utf-8"),
                   graph=(path / "graph.txt").read_text(encoding="utf-8"))


def render_template(template: str, slots: dict[str, str]) -> list[tuple[str, str]]:
    """Fill {{slot}} markers and split the [system]/[user] sections."""
    def sub(m: re.Match) -> str:
        name = m.group(1)
        if name not in slots:
            raise TemplateError(f"unfilled slot {{{{{name}}}}}")
        return slots[name]

    filled = _SLOT.sub(sub, template)
    messages: list[tuple[str, str]] = []
    role, lines = None, []
    for line in filled.splitlines():
        m = re.fullmatch(r"\[(system|user)\]", line.strip())
        if m:
            if role is not None:
                messages.append((role, "\n".join(lines).strip()))
            role, lines = m.group(1), []
        else:
            lines.append(line)
    if role is None:
        raise TemplateError("template has no [system]/[user] sections")
    messages.append((role, "\n".join(lines).strip()))
    return messages


def citation_tag(hit: SearchHit) -> str:
    md = hit.chunk.metadata
    return f"[{md.source} | {md.contract} | {md.clause}]"


def _history_block(history: Sequence[tuple[str, str]]) -> str:
    if not history:
        return ""
    lines = []
    for q, a in history:
        lines.append(f"User: {q}")
        lines.append(f"Assistant: {a}")
    return "Conversation so far:\n" + "\n".join(lines) + "\n\n"


def _prompt_tokens(messages: list[tuple[str, str]]) -> int:
    return sum(estimate_tokens(text) for _, text in messages)


def build_rag_prompt(question: str, hits: Sequence[SearchHit],
                     history: Sequence[tuple[str, str]] = (),
                     budget: int = DEFAULT_BUDGET,
                     templates: Optional[TemplateSet] = None) -> RenderedPrompt:
    if not question.strip():
        raise ValueError("question must be non-empty")
    if not hits:
        raise NoContext("no retrieved chunks for this question")
    templates = templates or TemplateSet.default()

    kept_history = list(history)
    kept_hits = list(hits)
    while True:
        context = "\n\n".join(f"{citation_tag(h)}\n{h.chunk.text}" for h in kept_hits)
        if context:
            context += "\n\n"
        messages = render_template(templates.rag, {
            "preamble": ROLE_PREAMBLE,
            "directive": GROUNDING_DIRECTIVE,
            "history": _history_block(kept_history),
            "context": context,
            "question": question,
        })
        tokens = _prompt_tokens(messages)
        if tokens <= budget:
            break
        if kept_history:
            kept_history.pop(0)          # oldest history first
        elif kept_hits:
            kept_hits.pop()              # then lowest-ranked hit
        else:
            break                        # question and directive are never dropped
    return RenderedPrompt(messages, tokens, included_hits=kept_hits)


def load_few_shot(path: Optional[str | Path] = None) -> list[tuple[str, str]]:
    """Question->SQL exemplar pairs from a line-delimited JSON fixture file."""
    if path is None:
        raw = resources.files("contractqa").joinpath("data/sql_examples.jsonl") \
            .read_text(encoding="utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    pairs = []
    for line in raw.splitlines():
        if line.strip():
            rec = json.loads(line)
            pairs.append((rec["question"], rec["sql"]))
    return pairs[:MAX_FEW_SHOT]


def build_sql_prompt(question: str, schema: SchemaDescription,
                     dialect: str = "sqlite",
                     history: Sequence[tuple[str, str]] = (),
                     few_shot: Optional[Sequence[tuple[str, str]]] = None,
                     templates: Optional[TemplateSet] = None) -> RenderedPrompt:
    if not question.strip():
        raise ValueError("question must be non-empty")
    templates = templates or TemplateSet.default()
    if few_shot is None:
        few_shot = load_few_shot()
    examples = ""
    if few_shot:
        blocks = [f"Question: {q}\nSQL: {sql}" for q, sql in list(few_shot)[:MAX_FEW_SHOT]]
        examples = "Examples:\n" + "\n\n".join(blocks)
    messages = render_template(templates.sql, {
        "preamble": ROLE_PREAMBLE,
        "dialect": dialect,
        "schema": schema.ddl,
        "examples": examples,
        "history": _history_block(history),
        "question": question,
    })
    return RenderedPrompt(messages, _prompt_tokens(messages))


def chartable_columns(table: ResultTable) -> tuple[int, int]:
    """(label column index, value column index) or NotChartable."""
    label_idx = next((i for i, (_, tag) in enumerate(table.columns) if tag == "text"), None)
    value_idx = next((i for i, (_, tag) in enumerate(table.columns)
                      if tag in ("integer", "real")), None)
    if value_idx is None:
        raise NotChartable("no numeric column in result table")
    if label_idx is None:
        raise NotChartable("no label-like column in result table")
    return label_idx, value_idx


def build_graph_prompt(table: ResultTable,
                       templates: Optional[TemplateSet] = None) -> RenderedPrompt:
    templates = templates or TemplateSet.default()
    label_idx, value_idx = chartable_columns(table)
    header = " | ".join(name for name, _ in table.columns)
    body = "\n".join(" | ".join(str(v) for v in row) for row in table.rows)
    messages = render_template(templates.graph, {
        "preamble": ROLE_PREAMBLE,
        "table": f"{header}\n{body}",
        "label_column": table.columns[label_idx][0],
        "value_column": table.columns[value_idx][0],
    })
    return RenderedPrompt(messages, _prompt_tokens(messages))
