"""HTTP service over the engine: ask, ingest, inspect.

Domain failures come back as 200 with a typed envelope (the UI renders
them); 400 is reserved for malformed requests and 503 for an unavailable
provider.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .agents import Engine
from .errors import (ContractQAError, InvariantViolation, ManifestError,
                     ProviderUnavailable)
from .ingest import DocumentSource
from .structured import parse_contracts_csv

MAX_QUESTION_CHARS = 4000


class AskRequest(BaseModel):
    session_id: str = Field(default="default", min_length=1)
    question: str = Field(min_length=1, max_length=MAX_QUESTION_CHARS)


class DocumentIn(BaseModel):
    source_id: str = Field(min_length=1)
    contract_number: str = Field(pattern=r"^\d+/\d{4}$")
    text: str = Field(min_length=1)


class IngestDocumentsRequest(BaseModel):
    documents: list[DocumentIn]


class IngestContractsRequest(BaseModel):
    csv: str = Field(min_length=1)


def create_app(engine: Engine, provider_mode: str = "stub",
               static_dir: Optional[str | Path] = None) -> FastAPI:
    app = FastAPI(title="contractqa")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = ".".join(str(p) for p in first.get("loc", []))
        return JSONResponse(status_code=400,
                            content={"error": f"{loc}: {first.get('msg', 'invalid request')}"})

    @app.exception_handler(ProviderUnavailable)
    async def provider_handler(request: Request, exc: ProviderUnavailable):
        return JSONResponse(status_code=503, content={"error": str(exc)})

    @app.post("/ask")
    def ask(req: AskRequest):
        envelope = engine.orchestrate(req.session_id, req.question)
        return {
            "request": {"session_id": req.session_id, "question": req.question},
            "envelope": envelope.to_dict(),
            "server_timings_ms": envelope.timings_ms,
        }

    @app.post("/ingest/documents")
    def ingest_documents(req: IngestDocumentsRequest):
        docs = []
        for i, d in enumerate(req.documents, start=1):
            try:
                docs.append(DocumentSource(d.source_id, d.contract_number, d.text))
            except ValueError as exc:
                return JSONResponse(status_code=400,
                                    content={"error": f"document {i}: {exc}"})
        chunks = engine.index_documents(docs)
        return {"documents": len(docs), "chunks": chunks}

    @app.post("/ingest/contracts")
    def ingest_contracts(req: IngestContractsRequest):
        try:
            records = parse_contracts_csv(req.csv)
        except (InvariantViolation, ManifestError) as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        count = engine.load_contract_records(records)
        return {"rows": count}

    @app.get("/contracts")
    def contracts():
        return {"contracts": [
            {"contract_number": r.contract_number, "supplier": r.supplier,
             "manager": r.manager, "subject": r.subject,
             "start_date": r.start_date.isoformat(),
             "end_date": r.end_date.isoformat(),
             "value": float(r.value), "status": r.status}
            for r in engine.contract_store.all_records()]}

    @app.get("/sessions/{session_id}/history")
    def session_history(session_id: str):
        turns = engine.sessions.get(session_id, [])
        return {"session_id": session_id,
                "turns": [{"question": q, "answer": a} for q, a in turns]}

    @app.get("/chunks/{chunk_id}")
    def chunk_text(chunk_id: str):
        chunk = engine.vector_store.get(chunk_id)
        if chunk is None:
            return JSONResponse(status_code=404, content={"error": "unknown chunk"})
        md = chunk.metadata
        return {"chunk_id": chunk.chunk_id, "text": chunk.text,
                "source": md.source, "contract": md.contract, "clause": md.clause}

    @app.get("/health")
    def health():
        return {"chunks": len(engine.vector_store),
                "contracts": len(engine.contract_store.all_records()),
                "provider": provider_mode,
                "dims": engine.vector_store.dims}

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app
