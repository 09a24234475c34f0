from pathlib import Path

import pytest

from contractqa.agents import Engine
from contractqa.embedding import EmbedderConfig
from contractqa.ingest import load_manifest
from contractqa.llm import load_stub_script
from contractqa.structured import ContractStore, load_contracts_file
from contractqa.vectorstore import VectorStore

FIXTURES = Path(__file__).parent / "fixtures"
TEST_DIMS = 64


@pytest.fixture
def fixture_docs():
    return load_manifest(FIXTURES / "manifest.jsonl", FIXTURES / "docs")


@pytest.fixture
def fixture_records():
    return load_contracts_file(FIXTURES / "contracts.csv")


@pytest.fixture
def stub():
    return load_stub_script(FIXTURES / "stub_rules.json")


def build_engine(fixture_docs, fixture_records, stub, dims=TEST_DIMS,
                 db_path=":memory:"):
    engine = Engine(VectorStore(dims), ContractStore(db_path), stub,
                    EmbedderConfig(dims=dims))
    engine.index_documents(fixture_docs)
    engine.load_contract_records(fixture_records)
    return engine


@pytest.fixture
def engine(fixture_docs, fixture_records, stub):
    return build_engine(fixture_docs, fixture_records, stub)
