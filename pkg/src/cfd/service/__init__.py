from .auth import Principal, PrincipalRole, TokenTable, authorize
from .core import (
    CoordinationService,
    EventLogRecord,
    ServiceConfig,
    read_log,
    tracker_to_document,
    write_log,
)
from .http import create_app

__all__ = [
    "CoordinationService",
    "EventLogRecord",
    "Principal",
    "PrincipalRole",
    "ServiceConfig",
    "TokenTable",
    "authorize",
    "create_app",
    "read_log",
    "tracker_to_document",
    "write_log",
]
