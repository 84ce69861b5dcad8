"""Shared builders: a realistic card/report pair, a controllable clock, and a
service wired to a deterministic mock connector."""

from __future__ import annotations

import base64
from datetime import datetime, timedelta, timezone

import pytest

from cfd import canonical, cards, reports, verification
from cfd.service import CoordinationService, ServiceConfig

T0 = datetime(2026, 3, 1, 12, 0, 0, tzinfo=timezone.utc)


class Clock:
    """Mutable test clock injected into the service."""

    def __init__(self, start: datetime = T0):
        self.now = start

    def __call__(self) -> datetime:
        return self.now

    def advance(self, **kwargs) -> datetime:
        self.now += timedelta(**kwargs)
        return self.now


def make_card(card_id="card-judge", vendor="acme-ai", system="dispute-judge",
              with_clause=True, fraction=0.05, count=None,
              review_period_days=90) -> dict:
    """A dispute-resolution model card document with the canonical rate claims."""
    clause = None
    if with_clause:
        clause = {"threshold_fraction": fraction, "threshold_count": count,
                  "review_period_days": review_period_days}
    return {
        "card_id": card_id,
        "version": 1,
        "vendor": vendor,
        "system": system,
        "mission": "Resolve consumer billing disputes from submitted evidence.",
        "measures": [
            {"id": "fpr", "kind": "false_positive_rate", "value": 0.001,
             "comparator": "at_most", "tolerance": None, "population": None},
            {"id": "fnr", "kind": "false_negative_rate", "value": 0.1,
             "comparator": "at_most", "tolerance": None, "population": None},
        ],
        "scope": [
            {"id": "s-lang", "direction": "in_scope",
             "description": "Judgments on non-English dispute narratives",
             "rationale": None, "origin": "authored", "resolve_horizon": None},
            {"id": "s-adv", "direction": "out_of_scope",
             "description": "Adversarial prompt injection in evidence fields",
             "rationale": "known unfixable for this architecture",
             "origin": "authored", "resolve_horizon": "fundamental_flaw"},
        ],
        "common_use": clause,
        "created_at": canonical.format_ts(T0),
    }


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def make_report(card_doc: dict | None = None, n_samples=3, report_id="rep-1",
                flaw_class="error", error_kind="systematic",
                claim=None, submitted_at: datetime = T0) -> dict:
    card_doc = card_doc or make_card()
    claim = claim or {"measure": "fpr", "scope_entry": None,
                      "behavior": "judgments favor the filer far above the declared rate"}
    samples = [
        {
            "input": {"media": "text", "data": _b64(f"dispute {i}".encode())},
            "forbidden": {"media": "text", "data": _b64(f"uphold {i}".encode())},
            "match_rule": "exact",
            "predicate": None,
        }
        for i in range(n_samples)
    ]
    return {
        "report_id": report_id,
        "reporter": {"name": "Rowan Vale", "contact": "rowan@example.org"},
        "target": {"vendor": card_doc["vendor"], "system": card_doc["system"],
                   "card_id": card_doc["card_id"], "card_version": card_doc["version"]},
        "classification": {"flaw_class": flaw_class, "error_kind": error_kind},
        "narrative": "The model upholds disputes it should reject on specific inputs.",
        "claim": claim,
        "samples": samples,
        "submitted_at": canonical.format_ts(submitted_at),
    }


def connector_for(report_doc: dict, reproduce_all=True,
                  connector_id="mock-1", snapshot="snap-a") -> verification.ModelConnector:
    """Local mock wired so every report sample does (or does not) reproduce."""
    rules = {}
    if reproduce_all:
        for raw in report_doc["samples"]:
            rules[base64.b64decode(raw["input"]["data"])] = \
                base64.b64decode(raw["forbidden"]["data"])
    return verification.ModelConnector(
        connector_id=connector_id,
        kind=verification.ConnectorKind.LOCAL_MOCK,
        mock=verification.MockModel(rule_table=rules, snapshot_tag=snapshot),
    )


def violating_stats() -> verification.StatisticalVerdict:
    """A verdict that clearly contradicts the 0.001 declared rate."""
    return verification.binomial_violation_test(0.001, n=10, k=10)


@pytest.fixture
def clock():
    return Clock()


@pytest.fixture
def service(clock):
    return CoordinationService(ServiceConfig(), clock=clock)


def accepted_case(service: CoordinationService, card_doc=None, report_doc=None):
    """Drive a fresh report through submit -> verify -> triage -> review(accept)."""
    card_doc = card_doc or make_card()
    if card_doc["card_id"] not in service.cards.card_ids():
        service.register_card(card_doc)
    report_doc = report_doc or make_report(card_doc)
    service.register_connector(connector_for(report_doc))
    case = service.submit_report(report_doc)
    result = service.run_verification(case.case_id, "mock-1")
    service.triage(case.case_id, result.result_id)
    return service.review(case.case_id, stats=violating_stats())
