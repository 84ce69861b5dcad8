"""Exception hierarchy with machine-readable error codes.

Every error carries a stable ``code`` string so the service layer and CLI
can map failures to wire responses and exit codes without string matching.
"""

from __future__ import annotations


class CfdError(Exception):
    """Base for all domain errors."""

    code = "domain-error"

    def __init__(self, message: str, entity_ref: str | None = None):
        super().__init__(message)
        self.message = message
        self.entity_ref = entity_ref

    def envelope(self) -> dict:
        return {"code": self.code, "message": self.message, "entity_ref": self.entity_ref}


class MalformedDocument(CfdError):
    code = "malformed-document"


class SchemaViolation(CfdError):
    code = "schema-violation"


class UnknownReference(CfdError):
    code = "unknown-reference"


class UnknownCard(CfdError):
    code = "unknown-card"


class UnknownEntry(CfdError):
    code = "unknown-entry"


class UnknownParent(CfdError):
    code = "unknown-parent"


class UnknownLabel(CfdError):
    code = "unknown-label"


class UnknownSubtreeRoot(CfdError):
    code = "unknown-subtree-root"


class EmptyName(CfdError):
    code = "empty-name"


class StaleVersion(CfdError):
    code = "stale-version"


class WrongState(CfdError):
    code = "wrong-state"


class WrongActor(CfdError):
    code = "wrong-actor"


class IllegalOutcome(CfdError):
    code = "illegal-outcome"


class ForeignEvidence(CfdError):
    code = "foreign-evidence"


class InvalidReport(CfdError):
    code = "invalid-report"


class NonAcceptedReport(CfdError):
    code = "non-accepted-report"


class DomainError(CfdError):
    code = "domain-error"


class TooEarly(CfdError):
    code = "too-early"


class NoObservers(CfdError):
    code = "no-observers"


class CycleDetected(CfdError):
    code = "cycle-detected"


class ConnectorUnreachable(CfdError):
    code = "connector-unreachable"


class Unauthenticated(CfdError):
    code = "unauthenticated"


class Unauthorized(CfdError):
    code = "unauthorized"


class GapDetected(CfdError):
    code = "gap-detected"


class CorruptRecord(CfdError):
    code = "corrupt-record"
