"""The CFE issuance state machine: triage, review, appeal, adjudication,
edge-case handling, remediation, and the embargo clock.

Every case carries an append-only transition history; folding the history
from ``submitted`` always reproduces the current state. The allowed
transition table below is the single source of truth for what each actor
role may do; the service layer and the web client both derive their action
availability from it.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from enum import Enum

from .cards import ScopeDecision, ScopeVerdict
from .errors import (
    DomainError,
    ForeignEvidence,
    IllegalOutcome,
    SchemaViolation,
    WrongActor,
    WrongState,
)
from .reports import FlawReport

DEFAULT_EMBARGO_DAYS = 90
MAX_DATA_REQUESTS = 3


class CaseState(str, Enum):
    SUBMITTED = "submitted"
    TRIAGED = "triaged"
    REJECTED_TECHNICAL = "rejected_technical"
    IN_REVIEW = "in_review"
    DATA_REQUESTED = "data_requested"
    ACCEPTED = "accepted"
    REJECTED_OUT_OF_SCOPE = "rejected_out_of_scope"
    REJECTED_IN_INTENT = "rejected_in_intent"
    REJECTED_STATISTICAL = "rejected_statistical"
    APPEALED = "appealed"
    IN_ADJUDICATION = "in_adjudication"
    AWARDED = "awarded"
    REJECTION_UPHELD = "rejection_upheld"
    FLAGGED_COMMON_USE = "flagged_common_use"
    EDGE_ASSESSMENT = "edge_assessment"
    REMEDIATION = "remediation"
    REVERIFICATION = "reverification"
    REGRESSED = "regressed"
    PUBLISHED = "published"
    CLOSED = "closed"


TERMINAL_STATES = frozenset({CaseState.REJECTION_UPHELD, CaseState.CLOSED})

REJECTED_STATES = frozenset({
    CaseState.REJECTED_TECHNICAL,
    CaseState.REJECTED_OUT_OF_SCOPE,
    CaseState.REJECTED_IN_INTENT,
    CaseState.REJECTED_STATISTICAL,
})


class ActorRole(str, Enum):
    SUBMITTER = "submitter"
    VENDOR = "vendor"
    ADJUDICATOR = "adjudicator"
    SYSTEM = "system"


class PanelOutcome(str, Enum):
    AWARD = "award"
    UPHOLD_REJECTION = "uphold_rejection"
    INCLUDE_IN_CFD = "include_in_cfd"
    UPDATE_MODEL_CARD = "update_model_card"
    INTERIM_MITIGATION = "interim_mitigation"
    PUBLIC_DISCLOSURE = "public_disclosure"


STANDARD_PATH_OUTCOMES = frozenset({PanelOutcome.AWARD, PanelOutcome.UPHOLD_REJECTION})
EDGE_PATH_OUTCOMES = frozenset(PanelOutcome) - STANDARD_PATH_OUTCOMES


# The fixed interpretation of the issuance flowchart: (from, to, actor).
ALLOWED_TRANSITIONS: frozenset[tuple[CaseState, CaseState, ActorRole]] = frozenset({
    (CaseState.SUBMITTED, CaseState.TRIAGED, ActorRole.VENDOR),
    (CaseState.SUBMITTED, CaseState.REJECTED_TECHNICAL, ActorRole.VENDOR),
    (CaseState.SUBMITTED, CaseState.FLAGGED_COMMON_USE, ActorRole.VENDOR),
    (CaseState.TRIAGED, CaseState.FLAGGED_COMMON_USE, ActorRole.VENDOR),
    (CaseState.TRIAGED, CaseState.IN_REVIEW, ActorRole.VENDOR),
    (CaseState.DATA_REQUESTED, CaseState.IN_REVIEW, ActorRole.VENDOR),
    (CaseState.IN_REVIEW, CaseState.REJECTED_OUT_OF_SCOPE, ActorRole.VENDOR),
    (CaseState.IN_REVIEW, CaseState.REJECTED_IN_INTENT, ActorRole.VENDOR),
    (CaseState.IN_REVIEW, CaseState.REJECTED_STATISTICAL, ActorRole.VENDOR),
    (CaseState.IN_REVIEW, CaseState.DATA_REQUESTED, ActorRole.VENDOR),
    (CaseState.IN_REVIEW, CaseState.ACCEPTED, ActorRole.VENDOR),
    (CaseState.REJECTED_TECHNICAL, CaseState.APPEALED, ActorRole.SUBMITTER),
    (CaseState.REJECTED_OUT_OF_SCOPE, CaseState.APPEALED, ActorRole.SUBMITTER),
    (CaseState.REJECTED_IN_INTENT, CaseState.APPEALED, ActorRole.SUBMITTER),
    (CaseState.REJECTED_STATISTICAL, CaseState.APPEALED, ActorRole.SUBMITTER),
    (CaseState.APPEALED, CaseState.IN_ADJUDICATION, ActorRole.ADJUDICATOR),
    (CaseState.IN_ADJUDICATION, CaseState.AWARDED, ActorRole.ADJUDICATOR),
    (CaseState.IN_ADJUDICATION, CaseState.REJECTION_UPHELD, ActorRole.ADJUDICATOR),
    (CaseState.FLAGGED_COMMON_USE, CaseState.EDGE_ASSESSMENT, ActorRole.ADJUDICATOR),
    (CaseState.EDGE_ASSESSMENT, CaseState.REJECTED_OUT_OF_SCOPE, ActorRole.ADJUDICATOR),
    (CaseState.EDGE_ASSESSMENT, CaseState.TRIAGED, ActorRole.ADJUDICATOR),
    (CaseState.EDGE_ASSESSMENT, CaseState.CLOSED, ActorRole.ADJUDICATOR),
    (CaseState.EDGE_ASSESSMENT, CaseState.PUBLISHED, ActorRole.ADJUDICATOR),
    (CaseState.ACCEPTED, CaseState.REMEDIATION, ActorRole.VENDOR),
    (CaseState.AWARDED, CaseState.REMEDIATION, ActorRole.VENDOR),
    (CaseState.REMEDIATION, CaseState.REVERIFICATION, ActorRole.VENDOR),
    (CaseState.REVERIFICATION, CaseState.REGRESSED, ActorRole.SYSTEM),
    (CaseState.REGRESSED, CaseState.REMEDIATION, ActorRole.SYSTEM),
    (CaseState.REVERIFICATION, CaseState.CLOSED, ActorRole.VENDOR),
    (CaseState.PUBLISHED, CaseState.CLOSED, ActorRole.VENDOR),
})


@dataclass(frozen=True)
class Transition:
    from_state: CaseState
    to_state: CaseState
    actor_role: ActorRole
    reason: str
    occurred_at: datetime
    evidence_ref: str | None = None
    evidence_sensitive: bool = False


@dataclass(frozen=True)
class EdgeAssessment:
    is_common_use: bool
    harm_level: str  # low / medium / high
    vendor_notes: str = ""

    def __post_init__(self):
        if self.harm_level not in ("low", "medium", "high"):
            raise SchemaViolation(f"harm_level must be low/medium/high, got {self.harm_level!r}")


@dataclass(frozen=True)
class PanelDecision:
    outcome: PanelOutcome
    justification: str
    vendor_data_reviewed: bool = False

    def __post_init__(self):
        if not self.justification.strip():
            raise SchemaViolation("panel decisions need a justification")


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    report_ref: str
    state: CaseState
    history: tuple[Transition, ...] = ()
    cfe_id: str | None = None
    embargo_deadline: datetime | None = None
    panel_decision: PanelDecision | None = None
    vendor_name: str = ""
    followups: tuple[str, ...] = ()

    def last_time(self) -> datetime | None:
        return self.history[-1].occurred_at if self.history else None


class EmbargoStatus(str, Enum):
    EMBARGOED = "embargoed"
    PUBLISHABLE = "publishable"


class CfeAllocator:
    """Atomic CFE-<year>-<seq> identifier allocation; sequences reset per year."""

    def __init__(self, counters: dict[int, int] | None = None):
        self._lock = threading.Lock()
        self._counters: dict[int, int] = dict(counters or {})

    def allocate(self, year: int) -> str:
        with self._lock:
            seq = self._counters.get(year, 0) + 1
            self._counters[year] = seq
        return f"CFE-{year}-{seq:04d}"

    def snapshot(self) -> dict[int, int]:
        with self._lock:
            return dict(self._counters)


# --- transition plumbing -----------------------------------------------------

def _append(case: CaseRecord, to_state: CaseState, actor: ActorRole, reason: str,
            now: datetime, evidence_ref: str | None = None,
            evidence_sensitive: bool = False) -> CaseRecord:
    if case.state in TERMINAL_STATES:
        raise WrongState(f"case {case.case_id} is terminal in {case.state.value}", case.case_id)
    if (case.state, to_state, actor) not in ALLOWED_TRANSITIONS:
        raise WrongState(
            f"{actor.value} may not move case {case.case_id} "
            f"from {case.state.value} to {to_state.value}",
            case.case_id,
        )
    last = case.last_time()
    if last is not None and now < last:
        now = last  # clamp: occurred_at is nondecreasing within a case
    transition = Transition(case.state, to_state, actor, reason, now,
                            evidence_ref, evidence_sensitive)
    return replace(case, state=to_state, history=case.history + (transition,))


def _require_role(actor: ActorRole, expected: ActorRole, action: str) -> None:
    if actor is not expected:
        raise WrongActor(f"{action} requires the {expected.value} role, not {actor.value}")


def replay_history(case_id: str, history: tuple[Transition, ...]) -> CaseState:
    """Fold a transition history from submitted; raises if any step is illegal."""
    state = CaseState.SUBMITTED
    for t in history:
        if t.from_state is not state:
            raise DomainError(
                f"history of case {case_id} does not chain: "
                f"{t.from_state.value} after {state.value}", case_id)
        if (t.from_state, t.to_state, t.actor_role) not in ALLOWED_TRANSITIONS:
            raise DomainError(
                f"history of case {case_id} contains a forbidden transition "
                f"{t.from_state.value} -> {t.to_state.value}", case_id)
        state = t.to_state
    return state


# --- operations --------------------------------------------------------------

def submit(report: FlawReport, case_id: str, now: datetime,
           embargo_days: int = DEFAULT_EMBARGO_DAYS) -> CaseRecord:
    """Open a new case for a validated report; the embargo clock starts now."""
    return CaseRecord(
        case_id=case_id,
        report_ref=report.report_id,
        state=CaseState.SUBMITTED,
        embargo_deadline=now + timedelta(days=embargo_days),
        vendor_name=report.vendor_name,
    )


def triage(case: CaseRecord, actor: ActorRole, repro, now: datetime) -> CaseRecord:
    """Vendor checks that the sample/output pairs actually reproduce."""
    _require_role(actor, ActorRole.VENDOR, "triage")
    if case.state is not CaseState.SUBMITTED:
        raise WrongState(f"triage requires submitted, case is {case.state.value}", case.case_id)
    if repro.case_ref != case.case_id:
        raise ForeignEvidence(
            f"verification result {repro.result_id} belongs to case {repro.case_ref}",
            case.case_id)
    if repro.all_reproduced:
        return _append(case, CaseState.TRIAGED, actor, "all samples reproduced", now,
                       evidence_ref=repro.result_id)
    return _append(case, CaseState.REJECTED_TECHNICAL, actor,
                   "samples did not reproduce; rejected on technical grounds", now,
                   evidence_ref=repro.result_id)


def review(case: CaseRecord, actor: ActorRole, scope_decision: ScopeDecision,
           stats, now: datetime, allocator: CfeAllocator) -> CaseRecord:
    """Vendor decides scope/intent and, for in-scope violations, the statistics.

    Passes through in_review so the review step itself is visible in history.
    ``stats`` is a StatisticalVerdict or None; absent stats on an in-scope
    violation means the vendor is requesting additional data (bounded).
    """
    _require_role(actor, ActorRole.VENDOR, "review")
    if case.state not in (CaseState.TRIAGED, CaseState.DATA_REQUESTED):
        raise WrongState(f"review requires triaged or data_requested, case is {case.state.value}",
                         case.case_id)
    case = _append(case, CaseState.IN_REVIEW, actor, "review started", now)

    verdict = scope_decision.verdict
    if verdict is ScopeVerdict.OUT_OF_SCOPE:
        return _append(case, CaseState.REJECTED_OUT_OF_SCOPE, actor,
                       "claim matches an out-of-scope entry", now,
                       evidence_ref=scope_decision.matched_entry)
    if verdict is ScopeVerdict.IN_INTENT:
        return _append(case, CaseState.REJECTED_IN_INTENT, actor,
                       "claimed behavior does not contradict the card", now,
                       evidence_ref=scope_decision.matched_entry)
    # in_scope_violation from here on
    if stats is None:
        already = sum(1 for t in case.history if t.to_state is CaseState.DATA_REQUESTED)
        if already >= MAX_DATA_REQUESTS:
            raise DomainError(
                f"data requested {already} times already; the vendor must decide",
                case.case_id)
        return _append(case, CaseState.DATA_REQUESTED, actor,
                       "additional data requested", now)
    if not stats.violates:
        return _append(case, CaseState.REJECTED_STATISTICAL, actor,
                       "sample set does not show a statistically significant violation", now,
                       evidence_ref=getattr(stats, "result_id", None))
    case = _append(case, CaseState.ACCEPTED, actor, "in-scope violation confirmed", now,
                   evidence_ref=getattr(stats, "result_id", None))
    if case.cfe_id is None:
        case = replace(case, cfe_id=allocator.allocate(now.year))
    return case


def appeal(case: CaseRecord, actor: ActorRole, grounds: str, now: datetime) -> CaseRecord:
    _require_role(actor, ActorRole.SUBMITTER, "appeal")
    if case.state not in REJECTED_STATES:
        raise WrongState(f"only rejected cases can be appealed, case is {case.state.value}",
                         case.case_id)
    return _append(case, CaseState.APPEALED, actor, grounds or "appeal filed", now)


def adjudicate(case: CaseRecord, actor: ActorRole, decision: PanelDecision,
               now: datetime, allocator: CfeAllocator,
               evidence_ref: str | None = None) -> CaseRecord:
    """Standard-path panel decision: award the CFE or uphold the rejection."""
    _require_role(actor, ActorRole.ADJUDICATOR, "adjudicate")
    if case.state not in (CaseState.APPEALED, CaseState.IN_ADJUDICATION):
        raise WrongState(f"adjudicate requires an appealed case, not {case.state.value}",
                         case.case_id)
    if decision.outcome not in STANDARD_PATH_OUTCOMES:
        raise IllegalOutcome(
            f"{decision.outcome.value} is only available on the edge-case path", case.case_id)
    if case.state is CaseState.APPEALED:
        case = _append(case, CaseState.IN_ADJUDICATION, actor, "panel convened", now)
    sensitive = decision.vendor_data_reviewed and evidence_ref is not None
    if decision.outcome is PanelOutcome.AWARD:
        case = _append(case, CaseState.AWARDED, actor, decision.justification, now,
                       evidence_ref=evidence_ref, evidence_sensitive=sensitive)
        if case.cfe_id is None:
            case = replace(case, cfe_id=allocator.allocate(now.year))
    else:
        case = _append(case, CaseState.REJECTION_UPHELD, actor, decision.justification, now,
                       evidence_ref=evidence_ref, evidence_sensitive=sensitive)
    return replace(case, panel_decision=decision)


def flag_common_use(case: CaseRecord, actor: ActorRole, reason: str,
                    now: datetime) -> CaseRecord:
    """Route a report outside stated intent but apparently in common use to the panel."""
    _require_role(actor, ActorRole.VENDOR, "flag_common_use")
    if case.state not in (CaseState.SUBMITTED, CaseState.TRIAGED):
        raise WrongState(
            f"flag_common_use requires submitted or triaged, case is {case.state.value}",
            case.case_id)
    return _append(case, CaseState.FLAGGED_COMMON_USE, actor,
                   reason or "outside stated intent but appears within common use", now)


def run_edge_adjudication(case: CaseRecord, actor: ActorRole, assessment: EdgeAssessment,
                          decision: PanelDecision, now: datetime) -> CaseRecord:
    """Six-step edge-case path for flagged reports, ending in a four-way decision."""
    _require_role(actor, ActorRole.ADJUDICATOR, "run_edge_adjudication")
    if case.state is not CaseState.FLAGGED_COMMON_USE:
        raise WrongState(
            f"edge adjudication requires flagged_common_use, case is {case.state.value}",
            case.case_id)
    case = _append(case, CaseState.EDGE_ASSESSMENT, actor,
                   "common-use assessment and harm evaluation", now)
    if not assessment.is_common_use:
        case = _append(case, CaseState.REJECTED_OUT_OF_SCOPE, actor,
                       "use case does not meet the common-use threshold", now)
        return replace(case, panel_decision=decision)

    outcome = decision.outcome
    if outcome not in EDGE_PATH_OUTCOMES:
        raise IllegalOutcome(
            f"{outcome.value} is a standard-path outcome; edge cases need an edge outcome",
            case.case_id)
    followups = case.followups
    if outcome is PanelOutcome.INCLUDE_IN_CFD:
        case = _append(case, CaseState.TRIAGED, actor, decision.justification, now)
        followups += ("include in CFD process",)
    elif outcome is PanelOutcome.UPDATE_MODEL_CARD:
        case = _append(case, CaseState.CLOSED, actor, decision.justification, now)
        followups += ("propose model card update for this use case",)
    elif outcome is PanelOutcome.INTERIM_MITIGATION:
        case = _append(case, CaseState.CLOSED, actor, decision.justification, now)
        followups += ("advise interim mitigation",)
    else:  # public_disclosure
        case = _append(case, CaseState.PUBLISHED, actor, decision.justification, now)
        followups += ("public disclosure due to potential impact",)
    return replace(case, panel_decision=decision, followups=followups)


def record_remediation(case: CaseRecord, actor: ActorRole, note: str,
                       now: datetime) -> CaseRecord:
    _require_role(actor, ActorRole.VENDOR, "record_remediation")
    if case.state not in (CaseState.ACCEPTED, CaseState.AWARDED):
        raise WrongState(f"remediation requires an accepted or awarded case, "
                         f"not {case.state.value}", case.case_id)
    return _append(case, CaseState.REMEDIATION, actor, note or "mitigation started", now)


def mark_remediated(case: CaseRecord, actor: ActorRole, note: str,
                    now: datetime) -> CaseRecord:
    """Vendor asserts the fix landed; the case enters periodic re-verification."""
    _require_role(actor, ActorRole.VENDOR, "mark_remediated")
    if case.state is not CaseState.REMEDIATION:
        raise WrongState(f"mark_remediated requires remediation, case is {case.state.value}",
                         case.case_id)
    return _append(case, CaseState.REVERIFICATION, actor, note or "fix deployed", now)


def record_regression(case: CaseRecord, now: datetime,
                      evidence_ref: str | None = None) -> CaseRecord:
    """Re-verification found the flaw again; back to remediation automatically."""
    if case.state is not CaseState.REVERIFICATION:
        raise WrongState(f"regression requires reverification, case is {case.state.value}",
                         case.case_id)
    case = _append(case, CaseState.REGRESSED, ActorRole.SYSTEM,
                   "flaw reproduced again in a later model iteration", now,
                   evidence_ref=evidence_ref)
    return _append(case, CaseState.REMEDIATION, ActorRole.SYSTEM,
                   "reopened for remediation after regression", now)


def close(case: CaseRecord, actor: ActorRole, reason: str, now: datetime) -> CaseRecord:
    _require_role(actor, ActorRole.VENDOR, "close")
    if case.state not in (CaseState.REVERIFICATION, CaseState.PUBLISHED):
        raise WrongState(f"close requires reverification or published, case is "
                         f"{case.state.value}", case.case_id)
    return _append(case, CaseState.CLOSED, actor, reason or "case closed", now)


def embargo_status(case: CaseRecord, now: datetime) -> EmbargoStatus:
    """Pure function of (case, now); the deadline instant itself is publishable."""
    if case.state is CaseState.PUBLISHED:
        return EmbargoStatus.PUBLISHABLE
    if case.embargo_deadline is not None and now >= case.embargo_deadline:
        return EmbargoStatus.PUBLISHABLE
    return EmbargoStatus.EMBARGOED


# Named case actions: which actor role may perform them, from which states.
# Derived from ALLOWED_TRANSITIONS; the web client checks itself against this.
CASE_ACTIONS: dict[str, tuple[ActorRole, frozenset[CaseState]]] = {
    "triage": (ActorRole.VENDOR, frozenset({CaseState.SUBMITTED})),
    "review": (ActorRole.VENDOR, frozenset({CaseState.TRIAGED, CaseState.DATA_REQUESTED})),
    "flag_common_use": (ActorRole.VENDOR,
                        frozenset({CaseState.SUBMITTED, CaseState.TRIAGED})),
    "appeal": (ActorRole.SUBMITTER, REJECTED_STATES),
    "adjudicate": (ActorRole.ADJUDICATOR,
                   frozenset({CaseState.APPEALED, CaseState.IN_ADJUDICATION})),
    "edge_adjudicate": (ActorRole.ADJUDICATOR, frozenset({CaseState.FLAGGED_COMMON_USE})),
    "record_remediation": (ActorRole.VENDOR,
                           frozenset({CaseState.ACCEPTED, CaseState.AWARDED})),
    "mark_remediated": (ActorRole.VENDOR, frozenset({CaseState.REMEDIATION})),
    "reverify": (ActorRole.SYSTEM, frozenset({CaseState.REVERIFICATION})),
    "close": (ActorRole.VENDOR,
              frozenset({CaseState.REVERIFICATION, CaseState.PUBLISHED})),
}


def available_actions(state: CaseState, role: ActorRole) -> list[str]:
    return sorted(name for name, (actor, states) in CASE_ACTIONS.items()
                  if actor is role and state in states)


def action_matrix() -> dict:
    """Machine-readable action availability fixture for clients."""
    return {
        "states": [s.value for s in CaseState],
        "roles": [r.value for r in ActorRole],
        "actions": {
            name: {"role": actor.value, "states": sorted(s.value for s in states)}
            for name, (actor, states) in CASE_ACTIONS.items()
        },
        "terminal_states": sorted(s.value for s in TERMINAL_STATES),
        "rejected_states": sorted(s.value for s in REJECTED_STATES),
    }


# --- serialization -----------------------------------------------------------

def transition_to_document(t: Transition) -> dict:
    from . import canonical

    return {
        "from": t.from_state.value,
        "to": t.to_state.value,
        "actor": t.actor_role.value,
        "reason": t.reason,
        "occurred_at": canonical.format_ts(t.occurred_at),
        "evidence_ref": t.evidence_ref,
        "evidence_sensitive": t.evidence_sensitive,
    }


def transition_from_document(doc: dict) -> Transition:
    from . import canonical

    return Transition(
        from_state=CaseState(doc["from"]),
        to_state=CaseState(doc["to"]),
        actor_role=ActorRole(doc["actor"]),
        reason=doc.get("reason", ""),
        occurred_at=canonical.parse_ts(doc["occurred_at"]),
        evidence_ref=doc.get("evidence_ref"),
        evidence_sensitive=doc.get("evidence_sensitive", False),
    )


def decision_to_document(d: PanelDecision | None) -> dict | None:
    if d is None:
        return None
    return {
        "outcome": d.outcome.value,
        "justification": d.justification,
        "vendor_data_reviewed": d.vendor_data_reviewed,
    }


def decision_from_document(doc: dict | None) -> PanelDecision | None:
    if doc is None:
        return None
    return PanelDecision(
        outcome=PanelOutcome(doc["outcome"]),
        justification=doc.get("justification", ""),
        vendor_data_reviewed=doc.get("vendor_data_reviewed", False),
    )


def case_to_document(case: CaseRecord) -> dict:
    from . import canonical

    return {
        "case_id": case.case_id,
        "report_ref": case.report_ref,
        "state": case.state.value,
        "history": [transition_to_document(t) for t in case.history],
        "cfe_id": case.cfe_id,
        "embargo_deadline": canonical.format_ts(case.embargo_deadline)
        if case.embargo_deadline else None,
        "panel_decision": decision_to_document(case.panel_decision),
        "vendor": case.vendor_name,
        "followups": list(case.followups),
    }


def case_from_document(doc: dict) -> CaseRecord:
    from . import canonical

    return CaseRecord(
        case_id=doc["case_id"],
        report_ref=doc.get("report_ref", ""),
        state=CaseState(doc["state"]),
        history=tuple(transition_from_document(t) for t in doc.get("history", [])),
        cfe_id=doc.get("cfe_id"),
        embargo_deadline=canonical.parse_ts(doc["embargo_deadline"])
        if doc.get("embargo_deadline") else None,
        panel_decision=decision_from_document(doc.get("panel_decision")),
        vendor_name=doc.get("vendor", ""),
        followups=tuple(doc.get("followups", [])),
    )


def export_transition_log(cases: list[CaseRecord]) -> str:
    """Newline-delimited audit export, deterministically ordered by (case_id, sequence)."""
    lines = []
    for case in sorted(cases, key=lambda c: c.case_id):
        for i, t in enumerate(case.history, start=1):
            lines.append("\t".join([
                case.case_id, str(i), t.from_state.value, t.to_state.value,
                t.actor_role.value, t.reason.replace("\t", " ").replace("\n", " "),
                t.occurred_at.isoformat(),
            ]))
    return "\n".join(lines) + ("\n" if lines else "")
