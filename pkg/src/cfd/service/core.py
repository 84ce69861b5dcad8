"""Event-sourced coordination core.

Every mutation runs as a named operation with fully resolved, JSON-serializable
arguments (timestamps included), executes atomically with its event-log append,
and can be replayed deterministically from the log alone. Side-effecting work
(invoking model connectors) happens outside the log; only its recorded outcome
is an event.
"""

from __future__ import annotations

import hashlib
import struct
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable

from .. import canonical, cards, common_use, cue, lifecycle, reports, verification
from ..errors import (
    CfdError,
    CorruptRecord,
    GapDetected,
    InvalidReport,
    UnknownCard,
    UnknownEntry,
    UnknownReference,
)

EVIDENCE_REDACTION_MARKER = "[redacted-evidence]"

# Which case states are ever exposed on the public feed once the embargo lifts.
FEED_STATES = frozenset({
    lifecycle.CaseState.ACCEPTED,
    lifecycle.CaseState.AWARDED,
    lifecycle.CaseState.PUBLISHED,
    lifecycle.CaseState.REMEDIATION,
    lifecycle.CaseState.REVERIFICATION,
    lifecycle.CaseState.REGRESSED,
    lifecycle.CaseState.CLOSED,
})


@dataclass(frozen=True)
class ServiceConfig:
    embargo_days: int = lifecycle.DEFAULT_EMBARGO_DAYS
    alpha: float = verification.DEFAULT_ALPHA
    parallelism: int = 4
    reverify_period_days: int = 30


@dataclass(frozen=True)
class EventLogRecord:
    sequence: int
    entity_kind: str  # case | card | cue | tracker
    entity_id: str
    payload: dict  # {"op": ..., "args": {...}}
    recorded_at: datetime

    def to_document(self) -> dict:
        return {
            "sequence": self.sequence,
            "entity_kind": self.entity_kind,
            "entity_id": self.entity_id,
            "payload": self.payload,
            "recorded_at": canonical.format_ts(self.recorded_at),
        }

    @classmethod
    def from_document(cls, doc: dict) -> "EventLogRecord":
        try:
            return cls(
                sequence=doc["sequence"],
                entity_kind=doc["entity_kind"],
                entity_id=doc["entity_id"],
                payload=doc["payload"],
                recorded_at=canonical.parse_ts(doc["recorded_at"]),
            )
        except (KeyError, TypeError) as exc:
            raise CorruptRecord(f"bad event record: {exc}") from exc


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class CoordinationService:
    """Single-node service state: cards, reports, cases, trackers, CUE, event log."""

    def __init__(self, config: ServiceConfig | None = None,
                 clock: Callable[[], datetime] | None = None):
        self.config = config or ServiceConfig()
        self.clock = clock or _utcnow
        self.cards = cards.CardStore()
        self.reports: dict[str, reports.FlawReport] = {}  # keyed by case_id
        self.cases: dict[str, lifecycle.CaseRecord] = {}
        self.schedules: dict[str, verification.ReverificationSchedule] = {}
        self.trackers: dict[str, common_use.CommonUseTracker] = {}
        self.cue = cue.CueRegistry()
        self.verifications: dict[str, verification.VerificationResult] = {}
        self.connectors: dict[str, verification.ModelConnector] = {}
        self.log: list[EventLogRecord] = []
        self.outbox: list[dict] = []  # intended notifications; never delivered
        self.cfe = lifecycle.CfeAllocator()
        self._case_seq = 0
        self._result_seq = 0
        self._lock = threading.RLock()
        self.crash_hook: Callable[[], None] | None = None

    # --- event machinery -----------------------------------------------------

    def _execute(self, op: str, entity_kind: str, entity_id: str, args: dict):
        """Stage the op, run the crash hook, then commit state + log atomically."""
        applier = getattr(self, f"_apply_{op}", None)
        if applier is None:
            raise CorruptRecord(f"unknown operation {op!r}")
        with self._lock:
            commit, response = applier(args)
            if self.crash_hook is not None:
                self.crash_hook()
            commit()
            self.log.append(EventLogRecord(
                sequence=len(self.log) + 1,
                entity_kind=entity_kind,
                entity_id=entity_id,
                payload={"op": op, "args": args},
                recorded_at=canonical.parse_ts(args["now"]),
            ))
        return response

    def _now_arg(self, now: datetime | None) -> str:
        return canonical.format_ts(now or self.clock())

    def _notify(self, audience: str, subject: str):
        self.outbox.append({"audience": audience, "subject": subject})

    def _get_case(self, case_id: str) -> lifecycle.CaseRecord:
        if case_id not in self.cases:
            raise UnknownReference(f"no case {case_id!r}", case_id)
        return self.cases[case_id]

    def _put_case(self, case: lifecycle.CaseRecord) -> Callable[[], None]:
        def commit():
            self.cases[case.case_id] = case
        return commit

    # --- cards ---------------------------------------------------------------

    def register_card(self, card_document: dict, now: datetime | None = None):
        return self._execute("register_card", "card", card_document.get("card_id", ""),
                             {"card": card_document, "now": self._now_arg(now)})

    def _apply_register_card(self, args):
        card = cards.card_from_document(args["card"])
        if card.card_id in set(self.cards.card_ids()):
            from ..errors import StaleVersion
            raise StaleVersion(f"card {card.card_id} already registered", card.card_id)
        if card.version != 1:
            from ..errors import SchemaViolation
            raise SchemaViolation("new cards must start at version 1", card.card_id)

        def commit():
            self.cards.register(card)
        return commit, card

    def revise_card(self, card_id: str, changes: cards.CardChangeSet,
                    now: datetime | None = None):
        return self._execute("revise_card", "card", card_id, {
            "card_id": card_id,
            "changes": cards.changeset_to_document(changes),
            "now": self._now_arg(now),
        })

    def _apply_revise_card(self, args):
        changes = cards.changeset_from_document(args["changes"])
        latest = self.cards.get(args["card_id"])
        revised = cards.revise_card(latest, changes,
                                    created_at=canonical.parse_ts(args["now"]))

        def commit():
            self.cards._versions[revised.card_id].append(revised)
        return commit, revised

    # --- reports and cases ---------------------------------------------------

    def submit_report(self, report_document: dict, now: datetime | None = None):
        return self._execute("submit_report", "case", "", {
            "report": report_document, "now": self._now_arg(now),
        })

    def _apply_submit_report(self, args):
        try:
            report = reports.report_from_document(args["report"])
        except CfdError as exc:
            raise InvalidReport(f"report rejected: {exc.message}") from exc
        card_id, card_version = report.card_ref
        self.cards.get(card_id, card_version)  # raises unknown-card
        now = canonical.parse_ts(args["now"])
        case_id = f"case-{self._case_seq + 1:06d}"
        case = lifecycle.submit(report, case_id, now,
                                embargo_days=self.config.embargo_days)

        def commit():
            self._case_seq += 1
            self.reports[case_id] = report
            self.cases[case_id] = case
            self._notify(f"vendor:{report.vendor_name}", f"new report on case {case_id}")
        return commit, case

    def run_verification(self, case_id: str, connector_id: str,
                         now: datetime | None = None):
        """Invoke the connector outside the log, then record the outcome."""
        case = self._get_case(case_id)
        connector = self._get_connector(connector_id)
        ts = now or self.clock()
        with self._lock:
            result_id = f"vr-{self._result_seq + 1:06d}"
        result = verification.reproduce(self.reports[case_id], connector, case.case_id,
                                        ts, result_id=result_id,
                                        parallelism=self.config.parallelism)
        return self._execute("record_verification", "case", case_id, {
            "case_id": case_id,
            "result": verification.result_to_document(result),
            "now": canonical.format_ts(ts),
        })

    def _apply_record_verification(self, args):
        result = verification.result_from_document(args["result"])
        self._get_case(args["case_id"])

        def commit():
            self._result_seq = max(self._result_seq,
                                   int(result.result_id.split("-")[-1]))
            self.verifications[result.result_id] = result
        return commit, result

    def triage(self, case_id: str, result_id: str, now: datetime | None = None):
        return self._execute("triage", "case", case_id, {
            "case_id": case_id, "result_id": result_id, "now": self._now_arg(now),
        })

    def _apply_triage(self, args):
        case = self._get_case(args["case_id"])
        if args["result_id"] not in self.verifications:
            raise UnknownReference(f"no verification result {args['result_id']!r}")
        result = self.verifications[args["result_id"]]
        case = lifecycle.triage(case, lifecycle.ActorRole.VENDOR, result,
                                canonical.parse_ts(args["now"]))
        return self._put_case(case), case

    def review(self, case_id: str, scope_decision: cards.ScopeDecision | None = None,
               stats: verification.StatisticalVerdict | None = None,
               now: datetime | None = None):
        """Vendor review; the scope decision defaults to matching the report's claim."""
        case = self._get_case(case_id)
        if scope_decision is None:
            report = self.reports[case_id]
            card = self.cards.get(*report.card_ref)
            scope_decision = cards.match_claim(card, report.claim, observed=stats)
        return self._execute("review", "case", case_id, {
            "case_id": case_id,
            "scope": {"verdict": scope_decision.verdict.value,
                      "matched_entry": scope_decision.matched_entry},
            "stats": verification.verdict_to_document(stats),
            "now": self._now_arg(now),
        })

    def _apply_review(self, args):
        case = self._get_case(args["case_id"])
        decision = cards.ScopeDecision(
            verdict=cards.ScopeVerdict(args["scope"]["verdict"]),
            matched_entry=args["scope"].get("matched_entry"),
        )
        stats = verification.verdict_from_document(args.get("stats"))
        allocator = lifecycle.CfeAllocator(self.cfe.snapshot())
        case = lifecycle.review(case, lifecycle.ActorRole.VENDOR, decision, stats,
                                canonical.parse_ts(args["now"]), allocator)

        def commit():
            self.cases[case.case_id] = case
            self.cfe = allocator
            if case.state is lifecycle.CaseState.ACCEPTED:
                self._notify("submitter", f"case {case.case_id} accepted as {case.cfe_id}")
        return commit, case

    def appeal(self, case_id: str, grounds: str, now: datetime | None = None):
        return self._execute("appeal", "case", case_id, {
            "case_id": case_id, "grounds": grounds, "now": self._now_arg(now),
        })

    def _apply_appeal(self, args):
        case = self._get_case(args["case_id"])
        case = lifecycle.appeal(case, lifecycle.ActorRole.SUBMITTER, args["grounds"],
                                canonical.parse_ts(args["now"]))
        return self._put_case(case), case

    def adjudicate(self, case_id: str, decision: lifecycle.PanelDecision,
                   evidence_ref: str | None = None, now: datetime | None = None):
        return self._execute("adjudicate", "case", case_id, {
            "case_id": case_id,
            "decision": lifecycle.decision_to_document(decision),
            "evidence_ref": evidence_ref,
            "now": self._now_arg(now),
        })

    def _apply_adjudicate(self, args):
        case = self._get_case(args["case_id"])
        decision = lifecycle.decision_from_document(args["decision"])
        allocator = lifecycle.CfeAllocator(self.cfe.snapshot())
        case = lifecycle.adjudicate(case, lifecycle.ActorRole.ADJUDICATOR, decision,
                                    canonical.parse_ts(args["now"]), allocator,
                                    evidence_ref=args.get("evidence_ref"))

        def commit():
            self.cases[case.case_id] = case
            self.cfe = allocator
        return commit, case

    def flag_common_use(self, case_id: str, reason: str = "",
                        now: datetime | None = None):
        return self._execute("flag_common_use", "case", case_id, {
            "case_id": case_id, "reason": reason, "now": self._now_arg(now),
        })

    def _apply_flag_common_use(self, args):
        case = self._get_case(args["case_id"])
        case = lifecycle.flag_common_use(case, lifecycle.ActorRole.VENDOR,
                                         args["reason"], canonical.parse_ts(args["now"]))
        return self._put_case(case), case

    def edge_adjudicate(self, case_id: str, assessment: lifecycle.EdgeAssessment,
                        decision: lifecycle.PanelDecision,
                        now: datetime | None = None):
        return self._execute("edge_adjudicate", "case", case_id, {
            "case_id": case_id,
            "assessment": {
                "is_common_use": assessment.is_common_use,
                "harm_level": assessment.harm_level,
                "vendor_notes": assessment.vendor_notes,
            },
            "decision": lifecycle.decision_to_document(decision),
            "now": self._now_arg(now),
        })

    def _apply_edge_adjudicate(self, args):
        case = self._get_case(args["case_id"])
        assessment = lifecycle.EdgeAssessment(
            is_common_use=args["assessment"]["is_common_use"],
            harm_level=args["assessment"]["harm_level"],
            vendor_notes=args["assessment"].get("vendor_notes", ""),
        )
        decision = lifecycle.decision_from_document(args["decision"])
        case = lifecycle.run_edge_adjudication(case, lifecycle.ActorRole.ADJUDICATOR,
                                               assessment, decision,
                                               canonical.parse_ts(args["now"]))

        def commit():
            self.cases[case.case_id] = case
            for followup in case.followups:
                self._notify("panel", f"case {case.case_id}: {followup}")
        return commit, case

    def record_remediation(self, case_id: str, note: str = "",
                           now: datetime | None = None):
        return self._execute("record_remediation", "case", case_id, {
            "case_id": case_id, "note": note, "now": self._now_arg(now),
        })

    def _apply_record_remediation(self, args):
        case = self._get_case(args["case_id"])
        now = canonical.parse_ts(args["now"])
        case = lifecycle.record_remediation(case, lifecycle.ActorRole.VENDOR,
                                            args["note"], now)
        schedule = verification.make_schedule(
            case.case_id, now, period_days=self.config.reverify_period_days)

        def commit():
            self.cases[case.case_id] = case
            self.schedules[case.case_id] = schedule
        return commit, case

    def mark_remediated(self, case_id: str, note: str = "",
                        now: datetime | None = None):
        return self._execute("mark_remediated", "case", case_id, {
            "case_id": case_id, "note": note, "now": self._now_arg(now),
        })

    def _apply_mark_remediated(self, args):
        case = self._get_case(args["case_id"])
        case = lifecycle.mark_remediated(case, lifecycle.ActorRole.VENDOR, args["note"],
                                         canonical.parse_ts(args["now"]))
        return self._put_case(case), case

    def run_reverification(self, case_id: str, connector_id: str,
                           now: datetime | None = None):
        """Periodic replay of an accepted flaw's samples; records the outcome."""
        case = self._get_case(case_id)
        if case_id not in self.schedules:
            raise UnknownReference(f"case {case_id} has no re-verification schedule",
                                   case_id)
        connector = self._get_connector(connector_id)
        ts = now or self.clock()
        with self._lock:
            result_id = f"vr-{self._result_seq + 1:06d}"
        schedule, result = verification.run_reverification(
            self.schedules[case_id], self.reports[case_id], connector, ts,
            result_id=result_id)
        regressed = schedule.last_outcome is verification.ReverificationOutcome.REGRESSED
        return self._execute("record_reverification", "case", case_id, {
            "case_id": case_id,
            "result": verification.result_to_document(result),
            "schedule": verification.schedule_to_document(schedule),
            "regressed": regressed,
            "now": canonical.format_ts(ts),
        })

    def _apply_record_reverification(self, args):
        case = self._get_case(args["case_id"])
        result = verification.result_from_document(args["result"])
        schedule = verification.schedule_from_document(args["schedule"])
        if args["regressed"]:
            case = lifecycle.record_regression(case, canonical.parse_ts(args["now"]),
                                               evidence_ref=result.result_id)

        def commit():
            self._result_seq = max(self._result_seq,
                                   int(result.result_id.split("-")[-1]))
            self.verifications[result.result_id] = result
            self.schedules[case.case_id] = schedule
            self.cases[case.case_id] = case
            if args["regressed"]:
                self._notify(f"vendor:{case.vendor_name}",
                             f"case {case.case_id} regressed")
        return commit, case

    def close_case(self, case_id: str, reason: str = "", now: datetime | None = None):
        return self._execute("close_case", "case", case_id, {
            "case_id": case_id, "reason": reason, "now": self._now_arg(now),
        })

    def _apply_close_case(self, args):
        case = self._get_case(args["case_id"])
        case = lifecycle.close(case, lifecycle.ActorRole.VENDOR, args["reason"],
                               canonical.parse_ts(args["now"]))
        return self._put_case(case), case

    # --- common use ----------------------------------------------------------

    def record_observation(self, card_id: str, key: str, observer: str,
                           delta: int = 1, now: datetime | None = None):
        return self._execute("record_observation", "tracker", card_id, {
            "card_id": card_id, "key": key, "observer": observer,
            "delta": delta, "now": self._now_arg(now),
        })

    def _apply_record_observation(self, args):
        self.cards.get(args["card_id"])
        tracker = self.trackers.get(args["card_id"]) or common_use.CommonUseTracker(
            card_ref=args["card_id"])
        obs = common_use.UseCaseObservation(
            use_case_key=args["key"],
            observer=args["observer"],
            deployment_count_delta=args["delta"],
            observed_at=canonical.parse_ts(args["now"]),
        )
        tracker = common_use.record_observation(tracker, obs)

        def commit():
            self.trackers[args["card_id"]] = tracker
        return commit, tracker

    def run_review_cycle(self, card_id: str, now: datetime | None = None):
        return self._execute("run_review_cycle", "tracker", card_id, {
            "card_id": card_id, "now": self._now_arg(now),
        })

    def _apply_run_review_cycle(self, args):
        card = self.cards.get(args["card_id"])
        if card.common_use_clause is None:
            raise UnknownReference(f"card {card.card_id} has no common-use clause",
                                   card.card_id)
        tracker = self.trackers.get(args["card_id"]) or common_use.CommonUseTracker(
            card_ref=args["card_id"])
        tracker, outcome = common_use.run_review_cycle(
            tracker, card.common_use_clause, card, canonical.parse_ts(args["now"]))

        def commit():
            self.trackers[args["card_id"]] = tracker
        return commit, outcome

    # --- CUE -----------------------------------------------------------------

    def cue_create(self, name: str, description: str = "", parent: str | None = None,
                   metadata: dict | None = None, now: datetime | None = None):
        return self._execute("cue_create", "cue", "", {
            "name": name, "description": description, "parent": parent,
            "metadata": metadata or {}, "now": self._now_arg(now),
        })

    def _apply_cue_create(self, args):
        entry = self.cue.prepare_create(
            args["name"], args.get("description", ""), args.get("parent"),
            cue.metadata_from_document(args.get("metadata", {})),
            now=canonical.parse_ts(args["now"]))

        def commit():
            self.cue.commit_entry(entry)
        return commit, entry

    def cue_update(self, cue_id: str, changes: dict, change_note: str = "",
                   now: datetime | None = None):
        return self._execute("cue_update", "cue", cue_id, {
            "cue_id": cue_id, "changes": changes, "change_note": change_note,
            "now": self._now_arg(now),
        })

    def _apply_cue_update(self, args):
        raw = args["changes"]
        changes = cue.CueChanges(
            name=raw.get("name"),
            description=raw.get("description"),
            parent=raw.get("parent"),
            reparent=raw.get("reparent", False),
            metadata=cue.metadata_from_document(raw["metadata"])
            if raw.get("metadata") is not None else None,
        )
        entry = self.cue.prepare_update(args["cue_id"], changes,
                                        args.get("change_note", ""),
                                        now=canonical.parse_ts(args["now"]))

        def commit():
            self.cue.commit_entry(entry)
        return commit, entry

    def cue_link(self, cue_id: str, card_id: str, now: datetime | None = None):
        return self._execute("cue_link", "cue", cue_id, {
            "cue_id": cue_id, "card_id": card_id, "now": self._now_arg(now),
        })

    def _apply_cue_link(self, args):
        if args["card_id"] not in set(self.cards.card_ids()):
            raise UnknownCard(f"no card {args['card_id']!r}", args["card_id"])
        entry = self.cue.prepare_link(args["cue_id"], args["card_id"],
                                      now=canonical.parse_ts(args["now"]))

        def commit():
            self.cue.commit_entry(entry)
        return commit, entry

    # --- connectors (infrastructure config, not event-sourced) ---------------

    def register_connector(self, connector: verification.ModelConnector):
        self.connectors[connector.connector_id] = connector
        return connector

    def _get_connector(self, connector_id: str) -> verification.ModelConnector:
        if connector_id not in self.connectors:
            raise UnknownReference(f"no connector {connector_id!r}", connector_id)
        return self.connectors[connector_id]

    # --- reads ---------------------------------------------------------------

    def case_document(self, case_id: str,
                      viewer_role: lifecycle.ActorRole | None = None) -> dict:
        """Case serialization with adjudicator-only evidence filtered by role."""
        case = self._get_case(case_id)
        doc = lifecycle.case_to_document(case)
        if viewer_role is not lifecycle.ActorRole.ADJUDICATOR:
            for item in doc["history"]:
                if item["evidence_sensitive"]:
                    item["evidence_ref"] = EVIDENCE_REDACTION_MARKER
        return doc

    def public_feed(self, now: datetime | None = None) -> list[dict]:
        """Everything past its embargo (or force-published), reporter contact redacted."""
        ts = now or self.clock()
        items = []
        for case in self.cases.values():
            if case.state not in FEED_STATES:
                continue
            if lifecycle.embargo_status(case, ts) is not lifecycle.EmbargoStatus.PUBLISHABLE:
                continue
            case_doc = self.case_document(case.case_id, viewer_role=None)
            report = reports.redact_for_publication(self.reports[case.case_id])
            items.append({
                "cfe_id": case.cfe_id,
                "case": case_doc,
                "report": reports.report_to_document(report),
            })
        items.sort(key=lambda item: (item["cfe_id"] is None, item["cfe_id"] or "",
                                     item["case"]["case_id"]))
        return items

    def cue_linked_cards(self, cue_id: str) -> list[str]:
        return list(self.cue.get(cue_id).linked_cards)

    def card_links(self, card_id: str) -> list[str]:
        self.cards.get(card_id)
        return [e.cue_id for e in self.cue.entries() if card_id in e.linked_cards]

    def export_corpus(self) -> bytes:
        entries = [(self.reports[case_id], case)
                   for case_id, case in sorted(self.cases.items())
                   if case.cfe_id is not None]
        return verification.export_test_corpus(entries)

    def snapshot_documents(self) -> dict[str, bytes]:
        """Canonical serialization of every entity, for replay comparison."""
        out: dict[str, bytes] = {}
        for card_id in self.cards.card_ids():
            for card in self.cards.versions(card_id):
                out[f"card/{card_id}/v{card.version}"] = cards.serialize_model_card(card)
        for case_id in sorted(self.cases):
            out[f"case/{case_id}"] = canonical.dumps(
                lifecycle.case_to_document(self.cases[case_id]))
            out[f"report/{case_id}"] = reports.serialize_report(self.reports[case_id])
        for case_id in sorted(self.schedules):
            out[f"schedule/{case_id}"] = canonical.dumps(
                verification.schedule_to_document(self.schedules[case_id]))
        for card_id in sorted(self.trackers):
            out[f"tracker/{card_id}"] = canonical.dumps(
                tracker_to_document(self.trackers[card_id]))
        for result_id in sorted(self.verifications):
            out[f"verification/{result_id}"] = canonical.dumps(
                verification.result_to_document(self.verifications[result_id]))
        out["cue-registry"] = self.cue.export()
        return out

    # --- replay --------------------------------------------------------------

    @classmethod
    def replay_from_log(cls, records: list[EventLogRecord],
                        config: ServiceConfig | None = None) -> "CoordinationService":
        service = cls(config=config)
        for i, record in enumerate(records, start=1):
            if record.sequence != i:
                raise GapDetected(
                    f"event log gap: expected sequence {i}, found {record.sequence}")
            payload = record.payload
            if not isinstance(payload, dict) or "op" not in payload or "args" not in payload:
                raise CorruptRecord(f"record {record.sequence} has no op/args payload")
            service._execute(payload["op"], record.entity_kind, record.entity_id,
                             payload["args"])
        return service


def tracker_to_document(tracker: common_use.CommonUseTracker) -> dict:
    return {
        "card_ref": tracker.card_ref,
        "deployments": dict(sorted(tracker.deployments.items())),
        "observers": {k: sorted(v) for k, v in sorted(tracker.observers_by_key.items())},
        "last_review": canonical.format_ts(tracker.last_review)
        if tracker.last_review else None,
    }


# --- on-disk event log -------------------------------------------------------

def write_log(records: list[EventLogRecord], path) -> None:
    """Length-prefixed, checksummed records; deterministic bytes for a given log."""
    with open(path, "wb") as fh:
        for record in records:
            payload = canonical.dumps(record.to_document())
            fh.write(struct.pack(">I", len(payload)))
            fh.write(payload)
            fh.write(hashlib.sha256(payload).digest())


def read_log(path) -> list[EventLogRecord]:
    records: list[EventLogRecord] = []
    with open(path, "rb") as fh:
        while True:
            header = fh.read(4)
            if not header:
                break
            if len(header) < 4:
                raise CorruptRecord("truncated record header")
            (length,) = struct.unpack(">I", header)
            payload = fh.read(length)
            checksum = fh.read(32)
            if len(payload) < length or len(checksum) < 32:
                raise CorruptRecord("truncated record body")
            if hashlib.sha256(payload).digest() != checksum:
                raise CorruptRecord("record checksum mismatch")
            records.append(EventLogRecord.from_document(canonical.loads(payload)))
    return records
