import pytest

from contractqa.embedding import EmbeddingVector
from contractqa.errors import NoContext, NotChartable, TemplateError
from contractqa.ingest import Chunk, ChunkMetadata
from contractqa.prompts import (GROUNDING_DIRECTIVE, ROLE_PREAMBLE,
                                build_graph_prompt, build_rag_prompt,
                                build_sql_prompt, citation_tag,
                                estimate_tokens, render_template)
from contractqa.structured import ContractStore, ResultTable
from contractqa.vectorstore import SearchHit


def hit(cid, source, contract, clause, text, score=0.9):
    chunk = Chunk(chunk_id=cid, text=text,
                  metadata=ChunkMetadata(source, contract, clause),
                  embedding=EmbeddingVector((1.0,) * 8))
    return SearchHit(cid, score, "cosine", chunk)


HITS = [
    hit("c123.txt#0001", "c123.txt", "123/2024", "2. CONTRACT MANAGER",
        "The contract manager is Alice Souza.", 0.95),
    hit("c123.txt#0002", "c123.txt", "123/2024", "3. TERM",
        "Valid 2024-01-01 to 2026-12-31.", 0.80),
]


def test_estimate_tokens():
    assert estimate_tokens("") == 0
    assert estimate_tokens("12345678") == 2
    a, b = "abc", "defgh"
    assert estimate_tokens(a + b) >= max(estimate_tokens(a), estimate_tokens(b))


def test_rag_prompt_structure():
    prompt = build_rag_prompt("Who is the manager?", HITS)
    roles = [role for role, _ in prompt.messages]
    assert roles == ["system", "user"]
    system, user = prompt.messages[0][1], prompt.messages[1][1]
    assert ROLE_PREAMBLE in system
    assert GROUNDING_DIRECTIVE in system
    for h in HITS:
        assert citation_tag(h) in user
        assert h.chunk.text in user
    assert user.rstrip().endswith("Question: Who is the manager?")
    assert prompt.included_hits == HITS


def test_rag_prompt_exemplar_question():
    q = "Who is the contract manager of contract number 123/2024?"
    prompt = build_rag_prompt(q, HITS)
    flat = prompt.flat_text()
    assert "123/2024" in flat
    assert "Alice Souza" in flat


def test_rag_truncation_drops_worst_hits_last_question_never():
    many = [hit(f"x#{i:04d}", "x", "1/2020", f"{i}. CLAUSE",
                "word " * 200, score=1.0 - i / 100) for i in range(10)]
    prompt = build_rag_prompt("short question", many, budget=600)
    assert prompt.estimated_tokens <= 600
    kept = prompt.included_hits
    assert kept == many[:len(kept)]        # lowest-ranked dropped first
    assert "Question: short question" in prompt.messages[1][1]
    assert GROUNDING_DIRECTIVE in prompt.messages[0][1]


def test_rag_truncation_drops_history_before_hits():
    history = [("old question " * 50, "old answer " * 50)] * 3
    prompt = build_rag_prompt("q", HITS, history=history, budget=400)
    assert prompt.included_hits  # hits survived, history went first
    assert "old question" not in prompt.flat_text()


def test_rag_empty_hits_raises():
    with pytest.raises(NoContext):
        build_rag_prompt("q", [])


def test_rag_deterministic():
    a = build_rag_prompt("q", HITS, budget=500)
    b = build_rag_prompt("q", HITS, budget=500)
    assert a.messages == b.messages


def test_sql_prompt_contents():
    schema = ContractStore(":memory:").schema_description()
    prompt = build_sql_prompt("Who are the managers of contracts that we have with IBM?",
                              schema)
    flat = prompt.flat_text()
    assert "CREATE TABLE contracts" in flat
    assert "sqlite" in flat
    assert "exactly one SELECT statement" in flat
    assert "Who are the managers" in flat


def test_sql_prompt_history_block_only_when_nonempty():
    schema = ContractStore(":memory:").schema_description()
    without = build_sql_prompt("q", schema)
    assert "Conversation so far" not in without.flat_text()
    with_history = build_sql_prompt("q", schema, history=[("a", "b")])
    assert "Conversation so far" in with_history.flat_text()


def test_graph_prompt():
    table = ResultTable([("supplier", "text"), ("total_value", "real")],
                        [("IBM", 3.0), ("Oracle", 2.0), ("SAP", 1.0)])
    prompt = build_graph_prompt(table)
    flat = prompt.flat_text()
    for label in ("IBM", "Oracle", "SAP"):
        assert label in flat
    assert "bar chart" in flat


def test_graph_prompt_single_row_ok():
    table = ResultTable([("supplier", "text"), ("n", "integer")], [("IBM", 1)])
    assert build_graph_prompt(table)


def test_graph_prompt_text_only_rejected():
    table = ResultTable([("a", "text"), ("b", "text")], [("x", "y")])
    with pytest.raises(NotChartable):
        build_graph_prompt(table)


def test_render_template_unfilled_slot():
    with pytest.raises(TemplateError):
        render_template("[system]\n{{missing}}", {})
