"""Multi-source question answering over contract documents and a relational
contract store: clause-aligned retrieval, guarded text-to-SQL, and
rule-based agent routing."""

__version__ = "0.1.0"
