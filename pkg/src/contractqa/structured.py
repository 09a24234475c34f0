"""Relational contract store: record loading, text flattening, and guarded
execution of generated SQL.

Read-only enforcement is belt-and-braces: statements are validated before
execution AND the connection runs under a deny-by-default authorizer, so no
generated query can mutate the store.
"""

from __future__ import annotations

import csv
import hashlib
import io
import re
import sqlite3
import threading
import time
from dataclasses import dataclass, field
from datetime import date
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Optional

from .errors import (DuplicateInBatch, EngineError, ExecutionTimeout,
                     InvariantViolation, MultiStatement, NotReadOnly,
                     ParseError, UnknownTable)
from .ingest import CONTRACT_NUMBER_RE

STATUSES = ("active", "expired", "terminated")
DEFAULT_ROW_CAP = 500
DEFAULT_TIMEOUT_MS = 5000


@dataclass(frozen=True)
class ContractRecord:
    contract_number: str
    supplier: str
    manager: str
    subject: str
    start_date: date
    end_date: date
    value: Decimal
    status: str

    def validate(self) -> None:
        if not CONTRACT_NUMBER_RE.match(self.contract_number):
            raise InvariantViolation("contract_number", "must match NNN/YYYY")
        for name in ("supplier", "manager", "subject"):
            if not getattr(self, name):
                raise InvariantViolation(name, "must be non-empty")
        if self.end_date < self.start_date:
            raise InvariantViolation("end_date", "must not precede start_date")
        if self.value < 0:
            raise InvariantViolation("value", "must be >= 0")
        if self.status not in STATUSES:
            raise InvariantViolation("status", f"must be one of {STATUSES}")


def flatten_record_to_text(record: ContractRecord) -> str:
    """Canonical one-sentence rendering, suitable for embedding alongside
    document chunks (metadata source="db", clause="DB_RECORD")."""
    record.validate()
    return (f"Contract {record.contract_number}: supplier {record.supplier}; "
            f"manager {record.manager}; subject {record.subject}; "
            f"valid {record.start_date.isoformat()} to {record.end_date.isoformat()}; "
            f"value {record.value:.2f}; status {record.status}.")


@dataclass(frozen=True)
class ValidatedQuery:
    sql_text: str
    referenced_tables: frozenset[str]


@dataclass
class ResultTable:
    columns: list[tuple[str, str]]   # (name, type tag)
    rows: list[tuple]
    truncated: bool = False

    def to_dict(self) -> dict:
        return {"columns": [list(c) for c in self.columns],
                "rows": [list(r) for r in self.rows],
                "truncated": self.truncated}

    @classmethod
    def from_dict(cls, d: dict) -> "ResultTable":
        return cls([tuple(c) for c in d["columns"]],
                   [tuple(r) for r in d["rows"]], d.get("truncated", False))


_DDL = """\
CREATE TABLE contracts (
    contract_number TEXT PRIMARY KEY,  -- contract id, format NNN/YYYY
    supplier        TEXT NOT NULL,     -- supplier company name
    manager         TEXT NOT NULL,     -- contract manager's full name
    subject         TEXT NOT NULL,     -- what the contract is for
    start_date      TEXT NOT NULL,     -- ISO-8601 date
    end_date        TEXT NOT NULL,     -- ISO-8601 date
    value           REAL NOT NULL,     -- contract value in currency units
    status          TEXT NOT NULL      -- one of: active, expired, terminated
);"""


@dataclass(frozen=True)
class SchemaDescription:
    ddl: str
    tables: frozenset[str]


# --- SQL validation -------------------------------------------------------

_FORBIDDEN = re.compile(
    r"\b(INSERT|UPDATE|DELETE|DROP|ALTER|CREATE|ATTACH|DETACH|PRAGMA|REPLACE"
    r"|TRUNCATE|VACUUM|REINDEX|GRANT|REVOKE|MERGE|EXEC|EXECUTE|CALL)\b",
    re.IGNORECASE)
_TABLE_REF = re.compile(r"\b(?:FROM|JOIN)\s+([A-Za-z_]\w*)", re.IGNORECASE)


def _mask_literals(sql: str) -> str:
    """Replace single-quoted string literals with spaces so keyword and
    separator scans never fire inside literals ('' escaping handled)."""
    out = []
    i, n = 0, len(sql)
    while i < n:
        ch = sql[i]
        if ch == "'":
            j = i + 1
            while j < n:
                if sql[j] == "'":
                    if j + 1 < n and sql[j + 1] == "'":
                        j += 2
                        continue
                    break
                j += 1
            out.append(" " * (min(j, n - 1) - i + 1))
            i = j + 1
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _strip_comments(masked: str) -> str:
    masked = re.sub(r"--[^\n]*", " ", masked)
    return re.sub(r"/\*.*?\*/", " ", masked, flags=re.DOTALL)


def validate_sql(sql: str, schema: SchemaDescription) -> ValidatedQuery:
    """Accept exactly one read-only SELECT over the published schema."""
    if not sql or not sql.strip():
        raise ParseError("empty statement")
    masked = _strip_comments(_mask_literals(sql))

    m = _FORBIDDEN.search(masked)
    if m:
        raise NotReadOnly(f"forbidden keyword {m.group(1).upper()}")

    parts = [p for p in masked.split(";") if p.strip()]
    if len(parts) > 1:
        raise MultiStatement(f"{len(parts)} statements supplied")

    first = re.search(r"\S+", masked)
    kind = first.group(0).upper() if first else ""
    if kind not in ("SELECT", "WITH"):
        raise ParseError(f"statement kind {kind or '<empty>'} is not SELECT")

    tables = {t.lower() for t in _TABLE_REF.findall(masked)}
    ctes = {t.lower() for t in re.findall(
        r"(?i)\b([A-Za-z_]\w*)\s*(?:\([^)]*\))?\s+AS\s*\(", masked)}
    tables -= ctes
    known = {t.lower() for t in schema.tables}
    unknown = tables - known
    if unknown:
        raise UnknownTable(f"unknown table(s): {', '.join(sorted(unknown))}")

    # syntax check against a scratch database holding only the schema
    scratch = sqlite3.connect(":memory:")
    try:
        scratch.executescript(schema.ddl)
        try:
            scratch.execute("EXPLAIN " + sql.rstrip().rstrip(";"))
        except sqlite3.OperationalError as exc:
            msg = str(exc)
            if "no such table" in msg:
                raise UnknownTable(msg) from exc
            raise ParseError(msg) from exc
    finally:
        scratch.close()

    return ValidatedQuery(sql.rstrip().rstrip(";"), frozenset(tables))


def _readonly_authorizer(action, *args):
    if action in (sqlite3.SQLITE_SELECT, sqlite3.SQLITE_READ,
                  sqlite3.SQLITE_FUNCTION, sqlite3.SQLITE_RECURSIVE):
        return sqlite3.SQLITE_OK
    return sqlite3.SQLITE_DENY


def _allow_all_authorizer(action, *args):
    # set_authorizer(None) does not clear the callback on Python 3.10
    return sqlite3.SQLITE_OK


class ContractStore:
    """SQLite-backed store of ContractRecords; loads are serialized, generated
    queries run read-only."""

    def __init__(self, path: str | Path = ":memory:",
                 row_cap: int = DEFAULT_ROW_CAP):
        self.path = str(path)
        self.row_cap = row_cap
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        with self._lock:
            exists = self._conn.execute(
                "SELECT 1 FROM sqlite_master WHERE name='contracts'").fetchone()
            if not exists:
                self._conn.executescript(_DDL)
                self._conn.commit()

    def schema_description(self) -> SchemaDescription:
        return SchemaDescription(ddl=_DDL, tables=frozenset({"contracts"}))

    def load_contracts(self, records: Iterable[ContractRecord]) -> int:
        records = list(records)
        seen: set[str] = set()
        for rec in records:
            rec.validate()
            if rec.contract_number in seen:
                raise DuplicateInBatch(rec.contract_number)
            seen.add(rec.contract_number)
        with self._lock:
            self._conn.executemany(
                "INSERT OR REPLACE INTO contracts VALUES (?,?,?,?,?,?,?,?)",
                [(r.contract_number, r.supplier, r.manager, r.subject,
                  r.start_date.isoformat(), r.end_date.isoformat(),
                  float(r.value), r.status) for r in records])
            self._conn.commit()
        return len(records)

    def all_records(self) -> list[ContractRecord]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM contracts ORDER BY contract_number").fetchall()
        return [ContractRecord(r[0], r[1], r[2], r[3],
                               date.fromisoformat(r[4]), date.fromisoformat(r[5]),
                               Decimal(str(r[6])), r[7]) for r in rows]

    def execute_sql(self, q: ValidatedQuery,
                    timeout_ms: int = DEFAULT_TIMEOUT_MS) -> ResultTable:
        deadline = time.monotonic() + timeout_ms / 1000.0
        with self._lock:
            self._conn.set_authorizer(_readonly_authorizer)
            self._conn.set_progress_handler(
                lambda: 1 if time.monotonic() > deadline else 0, 500)
            try:
                cur = self._conn.execute(q.sql_text)
                rows = cur.fetchmany(self.row_cap + 1)
                columns = [d[0] for d in cur.description] if cur.description else []
            except sqlite3.OperationalError as exc:
                if "interrupted" in str(exc).lower():
                    raise ExecutionTimeout(f"query exceeded {timeout_ms} ms") from exc
                raise EngineError("query execution failed") from exc
            except sqlite3.DatabaseError as exc:
                raise EngineError("query execution failed") from exc
            finally:
                self._conn.set_authorizer(_allow_all_authorizer)
                self._conn.set_progress_handler(None, 0)

        truncated = len(rows) > self.row_cap
        rows = rows[:self.row_cap]
        tags = []
        for idx, name in enumerate(columns):
            sample = next((r[idx] for r in rows if r[idx] is not None), None)
            if isinstance(sample, bool) or isinstance(sample, str) or sample is None:
                tags.append("text")
            elif isinstance(sample, int):
                tags.append("integer")
            elif isinstance(sample, float):
                tags.append("real")
            else:
                tags.append("text")
        return ResultTable(list(zip(columns, tags)), [tuple(r) for r in rows], truncated)

    def content_hash(self) -> str:
        with self._lock:
            h = hashlib.sha256()
            for row in self._conn.execute(
                    "SELECT * FROM contracts ORDER BY contract_number"):
                h.update(repr(row).encode("utf-8"))
            for row in self._conn.execute(
                    "SELECT name, sql FROM sqlite_master ORDER BY name"):
                h.update(repr(row).encode("utf-8"))
        return h.hexdigest()

    def close(self) -> None:
        self._conn.close()


# --- delimited-file ingestion --------------------------------------------

_CSV_FIELDS = ["contract_number", "supplier", "manager", "subject",
               "start_date", "end_date", "value", "status"]


def parse_contracts_csv(text: str) -> list[ContractRecord]:
    """Header-row CSV, one ContractRecord per line; raises InvariantViolation
    with field attribution on bad values."""
    reader = csv.DictReader(io.StringIO(text))
    missing = set(_CSV_FIELDS) - set(reader.fieldnames or [])
    if missing:
        raise InvariantViolation("header", f"missing column(s): {', '.join(sorted(missing))}")
    records = []
    for row in reader:
        try:
            start = date.fromisoformat(row["start_date"])
        except ValueError as exc:
            raise InvariantViolation("start_date", str(exc)) from exc
        try:
            end = date.fromisoformat(row["end_date"])
        except ValueError as exc:
            raise InvariantViolation("end_date", str(exc)) from exc
        try:
            value = Decimal(row["value"])
        except InvalidOperation as exc:
            raise InvariantViolation("value", f"not a decimal: {row['value']!r}") from exc
        rec = ContractRecord(row["contract_number"], row["supplier"], row["manager"],
                             row["subject"], start, end, value, row["status"])
        rec.validate()
        records.append(rec)
    return records


def load_contracts_file(path: str | Path) -> list[ContractRecord]:
    return parse_contracts_csv(Path(path).read_text(encoding="utf-8"))
