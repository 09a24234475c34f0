"""Operator command line: ingest corpora, ask questions, serve the API, and
run the evaluation harness.

Exit codes: 0 success, 2 usage/config problems, 3 runtime/provider failures.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .agents import Engine, load_rule_table
from .api import create_app
from .embedding import EmbedderConfig
from .errors import ContractQAError, ManifestError, ProviderUnavailable
from .ingest import load_manifest
from .llm import RemoteChatClient, load_stub_script
from .structured import ContractStore, load_contracts_file
from .vectorstore import VectorStore

DEFAULT_DIMS = 256   # offline default; remote providers typically use 1536


def _engine_options(fn):
    fn = click.option("--index", "index_path", default="contractqa.idx",
                      show_default=True, help="Vector index file.")(fn)
    fn = click.option("--db", "db_path", default="contracts.db",
                      show_default=True, help="Contract database file.")(fn)
    fn = click.option("--provider", type=click.Choice(["stub", "remote"]),
                      default="stub", show_default=True)(fn)
    fn = click.option("--stub-script", type=click.Path(), default=None,
                      help="Stub rules JSON (required with --provider stub).")(fn)
    fn = click.option("--llm-base-url", default="", help="Remote chat endpoint.")(fn)
    fn = click.option("--llm-model", default="", help="Remote model name.")(fn)
    fn = click.option("--rules", "rules_path", type=click.Path(exists=True),
                      default=None, help="Routing rule table JSON override.")(fn)
    return fn


def _build_engine(index_path, db_path, provider, stub_script,
                  llm_base_url, llm_model, rules_path) -> tuple[Engine, str]:
    if not Path(index_path).exists():
        raise click.UsageError(f"index file {index_path} not found; run ingest first")
    store = VectorStore.load(index_path)
    contracts = ContractStore(db_path)
    if provider == "stub":
        if not stub_script:
            raise click.UsageError("--provider stub requires --stub-script")
        if not Path(stub_script).exists():
            raise click.UsageError(f"stub script {stub_script} not found")
        llm = load_stub_script(stub_script)
    else:
        if not (llm_base_url and llm_model):
            raise click.UsageError("--provider remote requires --llm-base-url and --llm-model")
        llm = RemoteChatClient(llm_base_url, llm_model)
    rule_table = load_rule_table(rules_path)
    cfg = EmbedderConfig(provider="deterministic-local", dims=store.dims)
    return Engine(store, contracts, llm, cfg, rule_table=rule_table), provider


@click.group()
def main():
    """Question answering over contract documents and contract data."""


@main.command()
@click.option("--docs", "docs_dir", type=click.Path(exists=True, file_okay=False),
              required=True, help="Directory of .txt contract documents.")
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Line-delimited JSON corpus manifest.")
@click.option("--contracts", "contracts_file", type=click.Path(exists=True, dir_okay=False),
              required=True, help="CSV of contract records.")
@click.option("--index", "index_path", default="contractqa.idx", show_default=True)
@click.option("--db", "db_path", default="contracts.db", show_default=True)
@click.option("--dims", default=DEFAULT_DIMS, show_default=True)
def ingest(docs_dir, manifest, contracts_file, index_path, db_path, dims):
    """Chunk, embed and index documents; load contract rows."""
    try:
        docs = load_manifest(manifest, docs_dir)
        records = load_contracts_file(contracts_file)
    except (ManifestError, ContractQAError) as exc:
        raise click.UsageError(str(exc))

    store = (VectorStore.load(index_path) if Path(index_path).exists()
             else VectorStore(dims))
    contracts = ContractStore(db_path)
    engine = Engine(store, contracts, llm=None,  # ingestion never calls the LLM
                    embedder_cfg=EmbedderConfig(dims=store.dims))
    chunk_count = engine.index_documents(docs)
    row_count = engine.load_contract_records(records)
    store.persist(index_path)
    click.echo(f"{len(docs)} documents, {chunk_count} chunks, {row_count} contract rows")


@main.command()
@click.argument("question")
@click.option("--session", default="cli", show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Emit the full envelope as JSON.")
@_engine_options
def ask(question, session, as_json, **engine_opts):
    """Ask one question and print the answer with its citations."""
    engine, _ = _build_engine(**engine_opts)
    try:
        env = engine.orchestrate(session, question)
    except ProviderUnavailable as exc:
        click.echo(f"provider unavailable: {exc}", err=True)
        sys.exit(3)
    if as_json:
        click.echo(json.dumps(env.to_dict(), indent=2))
        return
    click.echo(env.answer_text)
    for cit in env.citations:
        click.echo(f"  [{cit.source} | {cit.contract} | {cit.clause}]")
    if env.executed_sql:
        click.echo(f"  sql: {env.executed_sql}")
    if env.chart:
        click.echo(f"  chart: {len(env.chart.labels)} bars ({env.chart.value_axis_label})")


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--static-dir", type=click.Path(), default=None,
              help="Built web UI bundle to serve at /.")
@_engine_options
def serve(port, host, static_dir, **engine_opts):
    """Run the HTTP API."""
    import uvicorn
    engine, provider = _build_engine(**engine_opts)
    app = create_app(engine, provider_mode=provider, static_dir=static_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except (OSError, SystemExit) as exc:
        click.echo(f"server failed to start: {exc}", err=True)
        sys.exit(2)


@main.command("eval")
@click.option("--questions", "questions_file", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Line-delimited JSON question suite.")
@click.option("--report", "report_path", type=click.Path(), required=True)
@_engine_options
def eval_cmd(questions_file, report_path, **engine_opts):
    """Run the benchmark suite; report answer- and route-match rates per
    category (direct vs indirect)."""
    suite = []
    for lineno, line in enumerate(Path(questions_file).read_text(encoding="utf-8").splitlines(),
                                  start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            suite.append({
                "question": rec["question"],
                "category": rec["category"],
                "expect_substrings": rec["expect_substrings"],
                "expected_route": rec["expected_route"],
            })
        except (json.JSONDecodeError, KeyError) as exc:
            raise click.UsageError(f"{questions_file}:{lineno}: {exc}")
    if not suite:
        raise click.UsageError("question suite is empty")

    engine, _ = _build_engine(**engine_opts)
    results = []
    for i, item in enumerate(suite):
        try:
            env = engine.orchestrate(f"eval-{i}", item["question"])
        except ProviderUnavailable as exc:
            click.echo(f"provider unavailable: {exc}", err=True)
            sys.exit(3)
        route_match = env.route.target == item["expected_route"]
        answer_match = all(s.lower() in env.answer_text.lower()
                           for s in item["expect_substrings"])
        results.append({
            "question": item["question"],
            "category": item["category"],
            "route": env.route.target,
            "matched_rule": env.route.matched_rule,
            "route_match": route_match,
            "answer_match": answer_match,
            "answer": env.answer_text,
        })

    categories = {}
    for cat in sorted({r["category"] for r in results}):
        sub = [r for r in results if r["category"] == cat]
        categories[cat] = {
            "count": len(sub),
            "route_match_rate": sum(r["route_match"] for r in sub) / len(sub),
            "answer_match_rate": sum(r["answer_match"] for r in sub) / len(sub),
        }
    report = {"total": len(results), "categories": categories, "questions": results}
    Path(report_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                 encoding="utf-8")
    for cat, stats in categories.items():
        click.echo(f"{cat}: {stats['count']} questions, "
                   f"route match {stats['route_match_rate']:.0%}, "
                   f"answer match {stats['answer_match_rate']:.0%}")


if __name__ == "__main__":
    main()
