import pytest
from fastapi.testclient import TestClient

from contractqa.agents import Engine
from contractqa.api import create_app
from contractqa.embedding import EmbedderConfig
from contractqa.errors import ProviderUnavailable
from contractqa.llm import CompletionRequest
from contractqa.structured import ContractStore
from contractqa.vectorstore import VectorStore

from conftest import FIXTURES, TEST_DIMS, build_engine


@pytest.fixture
def client(engine):
    return TestClient(create_app(engine, provider_mode="stub"))


@pytest.fixture
def empty_client(stub):
    engine = Engine(VectorStore(TEST_DIMS), ContractStore(":memory:"), stub,
                    EmbedderConfig(dims=TEST_DIMS))
    return TestClient(create_app(engine, provider_mode="stub"))


def test_ask_valid_question(client):
    resp = client.post("/ask", json={"session_id": "s", "question": "hello"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["request"]["question"] == "hello"
    assert body["envelope"]["route"]["target"] == "rag"
    assert "total" in body["envelope"]["timings_ms"]


def test_ask_empty_question_400(client):
    assert client.post("/ask", json={"session_id": "s", "question": ""}).status_code == 400
    assert client.post("/ask", json={"session_id": "s",
                                     "question": "x" * 4001}).status_code == 400


def test_ask_ibm_question_has_chart(client):
    resp = client.post("/ask", json={
        "session_id": "s",
        "question": "Who are the managers of contracts that we have with IBM?"})
    env = resp.json()["envelope"]
    assert env["chart"]["labels"] == ["Alice Souza", "Bruno Lima"]
    assert env["table"]["rows"] == [["Alice Souza", 1], ["Bruno Lima", 1]]
    assert env["executed_sql"]


def test_ask_provider_unavailable_503(engine):
    class DownProvider:
        def complete(self, req: CompletionRequest) -> str:
            raise ProviderUnavailable("endpoint down")
    engine.llm = DownProvider()
    client = TestClient(create_app(engine), raise_server_exceptions=False)
    resp = client.post("/ask", json={"session_id": "s", "question": "hello"})
    assert resp.status_code == 503


def test_ingest_documents(empty_client, fixture_docs):
    doc = fixture_docs[0]
    resp = empty_client.post("/ingest/documents", json={"documents": [
        {"source_id": doc.source_id, "contract_number": doc.contract_number,
         "text": doc.raw_text}]})
    assert resp.status_code == 200
    assert resp.json() == {"documents": 1, "chunks": 3}
    # re-ingest is idempotent
    resp2 = empty_client.post("/ingest/documents", json={"documents": [
        {"source_id": doc.source_id, "contract_number": doc.contract_number,
         "text": doc.raw_text}]})
    assert resp2.json() == {"documents": 1, "chunks": 3}
    assert empty_client.get("/health").json()["chunks"] == 3


def test_ingest_documents_malformed_400(empty_client):
    resp = empty_client.post("/ingest/documents", json={"documents": [
        {"source_id": "a.txt", "contract_number": "not-a-number", "text": "x"}]})
    assert resp.status_code == 400
    assert "contract_number" in resp.json()["error"]


def test_ingest_contracts(empty_client):
    csv_text = (FIXTURES / "contracts.csv").read_text()
    resp = empty_client.post("/ingest/contracts", json={"csv": csv_text})
    assert resp.status_code == 200
    assert resp.json() == {"rows": 3}
    contracts = empty_client.get("/contracts").json()["contracts"]
    assert len(contracts) == 3
    assert contracts[0]["contract_number"] == "123/2024"


def test_ingest_contracts_malformed_400(empty_client):
    resp = empty_client.post("/ingest/contracts",
                             json={"csv": "contract_number,supplier\n1/2020,X\n"})
    assert resp.status_code == 400


def test_health_fresh_server(empty_client):
    body = empty_client.get("/health").json()
    assert body["chunks"] == 0
    assert body["contracts"] == 0
    assert body["provider"] == "stub"


def test_unknown_session_empty_history(client):
    body = client.get("/sessions/nope/history").json()
    assert body["turns"] == []


def test_session_history_after_ask(client):
    client.post("/ask", json={"session_id": "h1", "question": "hello"})
    body = client.get("/sessions/h1/history").json()
    assert len(body["turns"]) == 1
    assert body["turns"][0]["question"] == "hello"


def test_chunk_lookup(client):
    body = client.get("/chunks/c123.txt%230001").json()  # '#' must be escaped
    assert body["clause"] == "2. CONTRACT MANAGER"
    assert client.get("/chunks/absent").status_code == 404


def test_two_servers_same_stores_answer_identically(tmp_path, fixture_docs,
                                                    fixture_records, stub):
    engine = build_engine(fixture_docs, fixture_records, stub,
                          db_path=str(tmp_path / "c.db"))
    engine.vector_store.persist(tmp_path / "v.idx")

    def fresh():
        eng = Engine(VectorStore.load(tmp_path / "v.idx"),
                     ContractStore(str(tmp_path / "c.db")), stub,
                     EmbedderConfig(dims=TEST_DIMS))
        return TestClient(create_app(eng))

    q = {"session_id": "s", "question":
         "Who is the contract manager of contract number 123/2024?"}
    a = fresh().post("/ask", json=q).json()["envelope"]
    b = fresh().post("/ask", json=q).json()["envelope"]
    a.pop("timings_ms"), b.pop("timings_ms")
    assert a == b
