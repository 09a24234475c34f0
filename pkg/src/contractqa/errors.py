"""Typed errors shared across the engine."""


class ContractQAError(Exception):
    """Base class for all engine errors."""


# --- ingest ---------------------------------------------------------------

class MetadataMismatch(ContractQAError):
    """A chunk references a different source than the document it came from."""


class ManifestError(ContractQAError):
    """Corpus manifest is malformed; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


# --- embedding ------------------------------------------------------------

class EmptyText(ContractQAError):
    """Text is empty after whitespace trim; cannot be embedded."""


class ProviderUnavailable(ContractQAError):
    """Remote provider transport failure after retries; retriable."""


# --- vectorstore ----------------------------------------------------------

class DimensionMismatch(ContractQAError):
    """Vector dimension differs from the store's configured dimension."""


class ZeroVector(ContractQAError):
    """Cosine similarity is undefined for a zero vector."""


class CorruptIndexFile(ContractQAError):
    """Persisted index failed its magic/version/checksum validation."""


# --- structured -----------------------------------------------------------

class DuplicateInBatch(ContractQAError):
    """Same contract_number appears twice in one load batch."""


class InvariantViolation(ContractQAError):
    """A record field violates a type invariant."""

    def __init__(self, field: str, message: str = ""):
        super().__init__(f"{field}: {message}" if message else field)
        self.field = field


class SqlValidationError(ContractQAError):
    """Base for SQL validation failures."""


class NotReadOnly(SqlValidationError):
    """Statement contains data-definition or data-modification keywords."""


class MultiStatement(SqlValidationError):
    """More than one SQL statement was supplied."""


class UnknownTable(SqlValidationError):
    """Statement references a table outside the published schema."""


class ParseError(SqlValidationError):
    """Statement could not be parsed as a single SELECT."""


class ExecutionTimeout(ContractQAError):
    """Query exceeded its execution time budget."""


class EngineError(ContractQAError):
    """Database engine failure, message sanitized."""


# --- prompts --------------------------------------------------------------

class NoContext(ContractQAError):
    """No retrieved chunks; the orchestrator must answer not-found."""


class NotChartable(ContractQAError):
    """Result table has no numeric column to chart."""


class TemplateError(ContractQAError):
    """A template slot was left unfilled at render time."""


# --- llm ------------------------------------------------------------------

class ResponseEmpty(ContractQAError):
    """Provider returned an empty completion."""


class BudgetExceeded(ContractQAError):
    """Request estimated over the provider's token limit."""


# --- agents ---------------------------------------------------------------

class SqlGenerationFailed(ContractQAError):
    """The model failed to produce a valid SELECT after the retry."""
