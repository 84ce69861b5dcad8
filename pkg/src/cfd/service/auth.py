"""Principals, bearer tokens, and role-based authorization.

Authentication is a static token table from the service config: the pilot
context implies a closed participant set, so there is no account management.
Vendor-role principals are bound to one vendor name and may only act on cases
and cards targeting that vendor.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..errors import Unauthenticated, Unauthorized


class PrincipalRole(str, Enum):
    SUBMITTER = "submitter"
    VENDOR = "vendor"
    ADJUDICATOR = "adjudicator"
    ADMIN = "admin"


@dataclass(frozen=True)
class Principal:
    principal_id: str
    role: PrincipalRole
    vendor_binding: str | None = None

    def __post_init__(self):
        if self.role is PrincipalRole.VENDOR and not self.vendor_binding:
            raise ValueError("vendor principals need a vendor_binding")


# Operation name -> roles allowed to call it. Vendor-role calls additionally
# require the vendor binding to match the target entity.
OPERATION_ROLES: dict[str, frozenset[PrincipalRole]] = {
    "submit_report": frozenset({PrincipalRole.SUBMITTER}),
    "run_verification": frozenset({PrincipalRole.VENDOR}),
    "triage": frozenset({PrincipalRole.VENDOR}),
    "review": frozenset({PrincipalRole.VENDOR}),
    "flag_common_use": frozenset({PrincipalRole.VENDOR}),
    "appeal": frozenset({PrincipalRole.SUBMITTER}),
    "adjudicate": frozenset({PrincipalRole.ADJUDICATOR}),
    "edge_adjudicate": frozenset({PrincipalRole.ADJUDICATOR}),
    "record_remediation": frozenset({PrincipalRole.VENDOR}),
    "mark_remediated": frozenset({PrincipalRole.VENDOR}),
    "run_reverification": frozenset({PrincipalRole.VENDOR, PrincipalRole.ADMIN}),
    "close_case": frozenset({PrincipalRole.VENDOR}),
    "register_card": frozenset({PrincipalRole.VENDOR, PrincipalRole.ADMIN}),
    "revise_card": frozenset({PrincipalRole.VENDOR, PrincipalRole.ADMIN}),
    "validate_card": frozenset(PrincipalRole),
    "record_observation": frozenset({PrincipalRole.VENDOR, PrincipalRole.ADMIN}),
    "run_review_cycle": frozenset({PrincipalRole.VENDOR, PrincipalRole.ADMIN}),
    "cue_create": frozenset({PrincipalRole.ADMIN}),
    "cue_update": frozenset({PrincipalRole.ADMIN}),
    "cue_link": frozenset({PrincipalRole.ADMIN}),
    "export_corpus": frozenset({PrincipalRole.VENDOR, PrincipalRole.ADMIN}),
    "export_log": frozenset({PrincipalRole.ADMIN}),
}


class TokenTable:
    def __init__(self, tokens: dict[str, Principal]):
        self._tokens = dict(tokens)

    @classmethod
    def from_config(cls, entries: list[dict]) -> "TokenTable":
        tokens = {}
        for entry in entries:
            tokens[entry["token"]] = Principal(
                principal_id=entry["id"],
                role=PrincipalRole(entry["role"]),
                vendor_binding=entry.get("vendor"),
            )
        return cls(tokens)

    def authenticate(self, token: str | None) -> Principal:
        if not token or token not in self._tokens:
            raise Unauthenticated("missing or unknown bearer token")
        return self._tokens[token]


def authorize(principal: Principal, operation: str,
              target_vendor: str | None = None) -> None:
    """Raise unless the principal's role (and vendor binding) allow the operation."""
    allowed = OPERATION_ROLES.get(operation)
    if allowed is None:
        raise Unauthorized(f"operation {operation!r} has no authorization rule")
    if principal.role not in allowed:
        raise Unauthorized(
            f"{principal.role.value} role may not perform {operation}")
    if (principal.role is PrincipalRole.VENDOR and target_vendor is not None
            and principal.vendor_binding != target_vendor):
        raise Unauthorized(
            f"vendor {principal.vendor_binding!r} may not act on "
            f"{target_vendor!r} entities")
