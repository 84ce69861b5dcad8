"""HTTP layer: bearer auth, role enforcement, vendor binding, error envelopes."""

from __future__ import annotations

from datetime import timedelta

import pytest
from fastapi.testclient import TestClient

from cfd import canonical, lifecycle
from cfd.service import CoordinationService, ServiceConfig, TokenTable, create_app

from conftest import Clock, connector_for, make_card, make_report, violating_stats

TOKENS = [
    {"token": "tok-sub", "id": "rowan", "role": "submitter"},
    {"token": "tok-acme", "id": "acme-ops", "role": "vendor", "vendor": "acme-ai"},
    {"token": "tok-other", "id": "rival-ops", "role": "vendor", "vendor": "rival-ai"},
    {"token": "tok-adj", "id": "panel-1", "role": "adjudicator"},
    {"token": "tok-admin", "id": "registry", "role": "admin"},
]


@pytest.fixture
def harness(clock):
    service = CoordinationService(ServiceConfig(), clock=clock)
    app = create_app(service, TokenTable.from_config(TOKENS))
    return service, TestClient(app, raise_server_exceptions=False)


def auth(token):
    return {"authorization": f"Bearer {token}"}


def submit_accepted(service, client):
    card_doc = make_card()
    assert client.post("/cards", json=card_doc, headers=auth("tok-acme")).status_code == 201
    report_doc = make_report(card_doc)
    service.register_connector(connector_for(report_doc))
    created = client.post("/reports", json=report_doc, headers=auth("tok-sub"))
    assert created.status_code == 201
    case_id = created.json()["entity"]["case_id"]
    result = client.post(f"/cases/{case_id}/verify", json={"connector_id": "mock-1"},
                         headers=auth("tok-acme")).json()["entity"]
    client.post(f"/cases/{case_id}/triage", json={"result_id": result["result_id"]},
                headers=auth("tok-acme"))
    from cfd import verification

    resp = client.post(f"/cases/{case_id}/review",
                       json={"stats": verification.verdict_to_document(violating_stats())},
                       headers=auth("tok-acme"))
    assert resp.json()["entity"]["state"] == "accepted"
    return case_id


def test_missing_or_bad_token_is_401(harness):
    _, client = harness
    assert client.get("/cases").status_code == 401
    assert client.get("/cases", headers=auth("tok-nope")).status_code == 401
    body = client.get("/cases", headers=auth("tok-nope")).json()
    assert body["code"] == "unauthenticated"


def test_role_enforcement(harness):
    service, client = harness
    card_doc = make_card()
    client.post("/cards", json=card_doc, headers=auth("tok-acme"))
    # A vendor may not submit reports; a submitter may not register cards.
    assert client.post("/reports", json=make_report(card_doc),
                       headers=auth("tok-acme")).status_code == 403
    assert client.post("/cards", json=make_card(card_id="x"),
                       headers=auth("tok-sub")).status_code == 403
    # CUE mutations are admin-only.
    assert client.post("/cue", json={"name": "n"},
                       headers=auth("tok-adj")).status_code == 403
    assert client.post("/cue", json={"name": "n"},
                       headers=auth("tok-admin")).status_code == 201


def test_vendor_binding_blocks_other_vendors(harness):
    service, client = harness
    card_doc = make_card()
    client.post("/cards", json=card_doc, headers=auth("tok-acme"))
    report_doc = make_report(card_doc)
    service.register_connector(connector_for(report_doc))
    case_id = client.post("/reports", json=report_doc,
                          headers=auth("tok-sub")).json()["entity"]["case_id"]
    denied = client.post(f"/cases/{case_id}/verify", json={"connector_id": "mock-1"},
                         headers=auth("tok-other"))
    assert denied.status_code == 403
    assert denied.json()["code"] == "unauthorized"
    # A vendor cannot register a card claiming another vendor's name.
    assert client.post("/cards", json=make_card(card_id="c2", vendor="rival-ai"),
                       headers=auth("tok-acme")).status_code == 403


def test_error_envelope_statuses(harness):
    _, client = harness
    assert client.get("/cases/case-404", headers=auth("tok-sub")).status_code == 404
    bad_card = make_card()
    del bad_card["mission"]
    resp = client.post("/cards", json=bad_card, headers=auth("tok-acme"))
    assert resp.status_code == 422
    assert resp.json()["code"] == "schema-violation"
    # Wrong-state transitions are conflicts.
    card_doc = make_card()
    client.post("/cards", json=card_doc, headers=auth("tok-acme"))
    case_id = client.post("/reports", json=make_report(card_doc),
                          headers=auth("tok-sub")).json()["entity"]["case_id"]
    conflict = client.post(f"/cases/{case_id}/close", json={},
                           headers=auth("tok-acme"))
    assert conflict.status_code == 409


def test_full_case_flow_over_http(harness, clock):
    service, client = harness
    case_id = submit_accepted(service, client)
    doc = client.get(f"/cases/{case_id}", headers=auth("tok-acme")).json()
    assert doc["state"] == "accepted"
    assert doc["available_actions"] == ["record_remediation"]

    client.post(f"/cases/{case_id}/remediate", json={"note": "patch"},
                headers=auth("tok-acme"))
    client.post(f"/cases/{case_id}/mark-remediated", json={},
                headers=auth("tok-acme"))
    clock.advance(days=30)
    resp = client.post(f"/cases/{case_id}/reverify", json={"connector_id": "mock-1"},
                       headers=auth("tok-acme"))
    assert resp.json()["entity"]["state"] == "remediation"

    results = client.get(f"/cases/{case_id}/verifications",
                         headers=auth("tok-sub")).json()["results"]
    assert len(results) == 2
    report = client.get(f"/cases/{case_id}/report", headers=auth("tok-sub")).json()
    assert report["report_id"] == "rep-1"


def test_sensitive_evidence_redaction_by_viewer(harness):
    service, client = harness
    card_doc = make_card()
    client.post("/cards", json=card_doc, headers=auth("tok-acme"))
    report_doc = make_report(card_doc)
    service.register_connector(connector_for(report_doc))
    case_id = client.post("/reports", json=report_doc,
                          headers=auth("tok-sub")).json()["entity"]["case_id"]
    result = client.post(f"/cases/{case_id}/verify", json={"connector_id": "mock-1"},
                         headers=auth("tok-acme")).json()["entity"]
    client.post(f"/cases/{case_id}/triage", json={"result_id": result["result_id"]},
                headers=auth("tok-acme"))
    from cfd import verification

    clean = verification.verdict_to_document(
        verification.binomial_violation_test(0.1, 20, 0))
    client.post(f"/cases/{case_id}/review", json={"stats": clean},
                headers=auth("tok-acme"))
    client.post(f"/cases/{case_id}/appeal", json={"grounds": "bias in sampling"},
                headers=auth("tok-sub"))
    client.post(f"/cases/{case_id}/adjudicate", json={
        "decision": {"outcome": "award", "justification": "telemetry decisive",
                     "vendor_data_reviewed": True},
        "evidence_ref": "telemetry-1",
    }, headers=auth("tok-adj"))

    as_vendor = client.get(f"/cases/{case_id}", headers=auth("tok-acme")).json()
    assert as_vendor["history"][-1]["evidence_ref"] == "[redacted-evidence]"
    as_adj = client.get(f"/cases/{case_id}", headers=auth("tok-adj")).json()
    assert as_adj["history"][-1]["evidence_ref"] == "telemetry-1"


def test_feed_is_public_and_matrix_matches_fixture(harness, clock):
    service, client = harness
    case_id = submit_accepted(service, client)
    assert client.get("/feed").json()["disclosures"] == []
    clock.advance(days=90)
    feed = client.get("/feed").json()["disclosures"]
    assert [d["case"]["case_id"] for d in feed] == [case_id]
    assert feed[0]["report"]["reporter"]["contact"] == "[redacted]"

    assert client.get("/matrix").json() == lifecycle.action_matrix()


def test_cards_and_cue_endpoints(harness):
    service, client = harness
    card_doc = make_card()
    client.post("/cards", json=card_doc, headers=auth("tok-acme"))
    assert client.get("/cards", headers=auth("tok-sub")).json()["cards"] == ["card-judge"]

    revision = {"base_version": 1, "set_mission": "Resolve disputes and appeals."}
    resp = client.post("/cards/card-judge/revise", json=revision,
                       headers=auth("tok-acme"))
    assert resp.json()["entity"]["version"] == 2
    old = client.get("/cards/card-judge", params={"version": 1},
                     headers=auth("tok-sub")).json()
    assert old["card"]["version"] == 1

    validation = client.post("/cards/validate", json=make_card(with_clause=False),
                             headers=auth("tok-sub")).json()
    assert [f["severity"] for f in validation["findings"]] == ["warn"]

    client.post("/cue", json={"name": "Generation"}, headers=auth("tok-admin"))
    client.post("/cue", json={"name": "Summarization", "parent": "CUE-001"},
                headers=auth("tok-admin"))
    client.post("/cue/CUE-002/link", json={"card_id": "card-judge"},
                headers=auth("tok-admin"))
    entries = client.get("/cue", params={"name_term": "summar"},
                         headers=auth("tok-sub")).json()["entries"]
    assert [e["cue_id"] for e in entries] == ["CUE-002"]
    linked = client.get("/cards/card-judge", headers=auth("tok-sub")).json()
    assert linked["linked_cues"] == ["CUE-002"]
    update = client.patch("/cue/CUE-002",
                          json={"changes": {"description": "condensing text"}},
                          headers=auth("tok-admin"))
    assert update.json()["entity"]["description"] == "condensing text"


def test_observation_and_review_cycle_endpoints(harness):
    service, client = harness
    card_doc = make_card(fraction=0.05)
    client.post("/cards", json=card_doc, headers=auth("tok-acme"))
    observations = [{"key": "contract triage", "observer": f"org-{i}"}
                    for i in range(5)]
    observations += [{"key": f"filler {i}", "observer": f"org-{i+10}"}
                     for i in range(95)]
    resp = client.post("/cards/card-judge/observations",
                       json={"observations": observations}, headers=auth("tok-acme"))
    assert resp.status_code == 200
    cycle = client.post("/cards/card-judge/review-cycle",
                        headers=auth("tok-acme")).json()["entity"]
    assert len(cycle["proposals"]) == 1
    proposal = cycle["proposals"][0]
    applied = client.post("/cards/card-judge/revise", json=proposal,
                          headers=auth("tok-acme")).json()["entity"]
    assert applied["version"] == 2
    origins = {e["origin"] for e in applied["scope"]}
    assert "common_use_expansion" in origins


def test_now_override_header(harness):
    service, client = harness
    case_id = submit_accepted(service, client)
    deadline = service.cases[case_id].embargo_deadline
    before = canonical.format_ts(deadline - timedelta(seconds=1))
    at = canonical.format_ts(deadline)
    assert client.get("/feed", headers={"x-now-override": before}).json()[
        "disclosures"] == []
    assert len(client.get("/feed", headers={"x-now-override": at}).json()[
        "disclosures"]) == 1


def test_admin_exports(harness):
    service, client = harness
    case_id = submit_accepted(service, client)
    corpus = client.get("/corpus", headers=auth("tok-admin"))
    assert corpus.status_code == 200 and b"cfd-test-corpus" in corpus.content
    assert client.get("/corpus", headers=auth("tok-sub")).status_code == 403
    log = client.get("/log", headers=auth("tok-admin"))
    assert case_id in log.text
    assert client.get("/log", headers=auth("tok-acme")).status_code == 403
