"""HTTP API over the coordination core.

Resource-oriented endpoints on a single port; every mutating call maps 1:1 to
one core operation, and errors come back as a machine-readable envelope
{code, message, entity_ref}.
"""

from __future__ import annotations

from datetime import datetime
from pathlib import Path

from fastapi import Depends, FastAPI, Header, Request
from fastapi.responses import JSONResponse, PlainTextResponse, Response

from .. import canonical, cards, lifecycle, reports, verification
from ..cue import entry_to_document
from ..errors import CfdError, Unauthenticated
from .auth import Principal, PrincipalRole, TokenTable, authorize
from .core import CoordinationService, tracker_to_document

_STATUS_BY_CODE = {
    "unauthenticated": 401,
    "unauthorized": 403,
    "unknown-card": 404,
    "unknown-entry": 404,
    "unknown-parent": 404,
    "unknown-reference": 404,
    "unknown-subtree-root": 404,
    "wrong-state": 409,
    "wrong-actor": 409,
    "stale-version": 409,
    "cycle-detected": 409,
    "too-early": 409,
    "connector-unreachable": 502,
    "gap-detected": 500,
    "corrupt-record": 500,
}


def _status_for(error: CfdError) -> int:
    return _STATUS_BY_CODE.get(error.code, 422)


def _role_for(principal: Principal) -> lifecycle.ActorRole | None:
    mapping = {
        PrincipalRole.SUBMITTER: lifecycle.ActorRole.SUBMITTER,
        PrincipalRole.VENDOR: lifecycle.ActorRole.VENDOR,
        PrincipalRole.ADJUDICATOR: lifecycle.ActorRole.ADJUDICATOR,
    }
    return mapping.get(principal.role)


def create_app(service: CoordinationService, tokens: TokenTable,
               static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="cfd-coordination", docs_url=None, redoc_url=None)

    @app.exception_handler(CfdError)
    async def handle_cfd_error(request: Request, exc: CfdError):
        return JSONResponse(status_code=_status_for(exc), content=exc.envelope())

    def principal(authorization: str | None = Header(default=None)) -> Principal:
        if authorization is None or not authorization.startswith("Bearer "):
            raise Unauthenticated("expected an Authorization: Bearer header")
        return tokens.authenticate(authorization.removeprefix("Bearer "))

    def now_override(x_now_override: str | None = Header(default=None)) -> datetime | None:
        """Test-only clock override, threaded through from the CLI flag."""
        return canonical.parse_ts(x_now_override) if x_now_override else None

    def _case_vendor(case_id: str) -> str:
        return service._get_case(case_id).vendor_name

    def _entity_response(doc: dict) -> dict:
        return {"entity": doc, "sequence": len(service.log)}

    def _case_response(case, who: Principal) -> dict:
        return _entity_response(service.case_document(case.case_id, _role_for(who)))

    # --- reports and cases ---------------------------------------------------

    @app.post("/reports", status_code=201)
    def submit_report(body: dict, who: Principal = Depends(principal),
                      now: datetime | None = Depends(now_override)):
        authorize(who, "submit_report")
        case = service.submit_report(body, now=now)
        return _case_response(case, who)

    @app.get("/cases")
    def list_cases(who: Principal = Depends(principal)):
        return {
            "cases": [service.case_document(case_id, _role_for(who))
                      for case_id in sorted(service.cases)]
        }

    @app.get("/cases/{case_id}")
    def get_case(case_id: str, who: Principal = Depends(principal)):
        doc = service.case_document(case_id, _role_for(who))
        role = _role_for(who)
        doc["available_actions"] = (
            [] if role is None
            else lifecycle.available_actions(lifecycle.CaseState(doc["state"]), role))
        return doc

    @app.get("/cases/{case_id}/report")
    def get_case_report(case_id: str, who: Principal = Depends(principal)):
        service._get_case(case_id)
        return reports.report_to_document(service.reports[case_id])

    @app.get("/cases/{case_id}/verifications")
    def get_case_verifications(case_id: str, who: Principal = Depends(principal)):
        service._get_case(case_id)
        return {"results": [
            verification.result_to_document(r)
            for r in sorted(service.verifications.values(), key=lambda r: r.result_id)
            if r.case_ref == case_id
        ]}

    @app.post("/cases/{case_id}/verify")
    def run_verification(case_id: str, body: dict, who: Principal = Depends(principal),
                         now: datetime | None = Depends(now_override)):
        authorize(who, "run_verification", _case_vendor(case_id))
        result = service.run_verification(case_id, body["connector_id"], now=now)
        return _entity_response(verification.result_to_document(result))

    @app.post("/cases/{case_id}/triage")
    def triage(case_id: str, body: dict, who: Principal = Depends(principal),
               now: datetime | None = Depends(now_override)):
        authorize(who, "triage", _case_vendor(case_id))
        case = service.triage(case_id, body["result_id"], now=now)
        return _case_response(case, who)

    @app.post("/cases/{case_id}/review")
    def review(case_id: str, body: dict, who: Principal = Depends(principal),
               now: datetime | None = Depends(now_override)):
        authorize(who, "review", _case_vendor(case_id))
        scope = None
        if body.get("scope") is not None:
            scope = cards.ScopeDecision(
                verdict=cards.ScopeVerdict(body["scope"]["verdict"]),
                matched_entry=body["scope"].get("matched_entry"),
            )
        stats = verification.verdict_from_document(body.get("stats"))
        case = service.review(case_id, scope_decision=scope, stats=stats, now=now)
        return _case_response(case, who)

    @app.post("/cases/{case_id}/appeal")
    def appeal(case_id: str, body: dict, who: Principal = Depends(principal),
               now: datetime | None = Depends(now_override)):
        authorize(who, "appeal")
        case = service.appeal(case_id, body.get("grounds", ""), now=now)
        return _case_response(case, who)

    @app.post("/cases/{case_id}/adjudicate")
    def adjudicate(case_id: str, body: dict, who: Principal = Depends(principal),
                   now: datetime | None = Depends(now_override)):
        authorize(who, "adjudicate")
        decision = lifecycle.decision_from_document(body["decision"])
        case = service.adjudicate(case_id, decision,
                                  evidence_ref=body.get("evidence_ref"), now=now)
        return _case_response(case, who)

    @app.post("/cases/{case_id}/flag")
    def flag_common_use(case_id: str, body: dict, who: Principal = Depends(principal),
                        now: datetime | None = Depends(now_override)):
        authorize(who, "flag_common_use", _case_vendor(case_id))
        case = service.flag_common_use(case_id, body.get("reason", ""), now=now)
        return _case_response(case, who)

    @app.post("/cases/{case_id}/edge")
    def edge_adjudicate(case_id: str, body: dict, who: Principal = Depends(principal),
                        now: datetime | None = Depends(now_override)):
        authorize(who, "edge_adjudicate")
        assessment = lifecycle.EdgeAssessment(
            is_common_use=body["assessment"]["is_common_use"],
            harm_level=body["assessment"]["harm_level"],
            vendor_notes=body["assessment"].get("vendor_notes", ""),
        )
        decision = lifecycle.decision_from_document(body["decision"])
        case = service.edge_adjudicate(case_id, assessment, decision, now=now)
        return _case_response(case, who)

    @app.post("/cases/{case_id}/remediate")
    def record_remediation(case_id: str, body: dict, who: Principal = Depends(principal),
                           now: datetime | None = Depends(now_override)):
        authorize(who, "record_remediation", _case_vendor(case_id))
        case = service.record_remediation(case_id, body.get("note", ""), now=now)
        return _case_response(case, who)

    @app.post("/cases/{case_id}/mark-remediated")
    def mark_remediated(case_id: str, body: dict, who: Principal = Depends(principal),
                        now: datetime | None = Depends(now_override)):
        authorize(who, "mark_remediated", _case_vendor(case_id))
        case = service.mark_remediated(case_id, body.get("note", ""), now=now)
        return _case_response(case, who)

    @app.post("/cases/{case_id}/reverify")
    def run_reverification(case_id: str, body: dict, who: Principal = Depends(principal),
                           now: datetime | None = Depends(now_override)):
        authorize(who, "run_reverification",
                  _case_vendor(case_id) if who.role is PrincipalRole.VENDOR else None)
        case = service.run_reverification(case_id, body["connector_id"], now=now)
        return _case_response(case, who)

    @app.post("/cases/{case_id}/close")
    def close_case(case_id: str, body: dict, who: Principal = Depends(principal),
                   now: datetime | None = Depends(now_override)):
        authorize(who, "close_case", _case_vendor(case_id))
        case = service.close_case(case_id, body.get("reason", ""), now=now)
        return _case_response(case, who)

    # --- cards ---------------------------------------------------------------

    @app.post("/cards", status_code=201)
    def register_card(body: dict, who: Principal = Depends(principal),
                      now: datetime | None = Depends(now_override)):
        authorize(who, "register_card", body.get("vendor")
                  if who.role is PrincipalRole.VENDOR else None)
        card = service.register_card(body, now=now)
        return _entity_response(cards.card_to_document(card))

    @app.get("/cards")
    def list_cards(who: Principal = Depends(principal)):
        return {"cards": service.cards.card_ids()}

    @app.get("/cards/{card_id}")
    def get_card(card_id: str, version: int | None = None,
                 who: Principal = Depends(principal)):
        card = service.cards.get(card_id, version)
        return {"card": cards.card_to_document(card),
                "linked_cues": service.card_links(card_id)}

    @app.post("/cards/{card_id}/revise")
    def revise_card(card_id: str, body: dict, who: Principal = Depends(principal),
                    now: datetime | None = Depends(now_override)):
        authorize(who, "revise_card", service.cards.get(card_id).vendor_name
                  if who.role is PrincipalRole.VENDOR else None)
        changes = cards.changeset_from_document(body)
        card = service.revise_card(card_id, changes, now=now)
        return _entity_response(cards.card_to_document(card))

    @app.post("/cards/validate")
    def validate_card(body: dict, who: Principal = Depends(principal)):
        card = cards.card_from_document(body)
        findings = cards.validate_completeness(card)
        return {"findings": [{"severity": f.severity.value, "message": f.message}
                             for f in findings]}

    @app.post("/cards/{card_id}/observations")
    def record_observation(card_id: str, body: dict, who: Principal = Depends(principal),
                           now: datetime | None = Depends(now_override)):
        authorize(who, "record_observation", service.cards.get(card_id).vendor_name
                  if who.role is PrincipalRole.VENDOR else None)
        observations = body["observations"] if "observations" in body else [body]
        tracker = None
        for obs in observations:
            tracker = service.record_observation(
                card_id, obs["key"], obs["observer"], obs.get("delta", 1), now=now)
        return _entity_response(tracker_to_document(tracker))

    @app.post("/cards/{card_id}/review-cycle")
    def run_review_cycle(card_id: str, who: Principal = Depends(principal),
                         now: datetime | None = Depends(now_override)):
        authorize(who, "run_review_cycle", service.cards.get(card_id).vendor_name
                  if who.role is PrincipalRole.VENDOR else None)
        outcome = service.run_review_cycle(card_id, now=now)
        return _entity_response({
            "proposals": [cards.changeset_to_document(p) for p in outcome.proposals],
            "next_review": canonical.format_ts(outcome.next_review),
        })

    # --- CUE -----------------------------------------------------------------

    @app.get("/cue")
    def query_cue(subtree_root: str | None = None, metadata_term: str | None = None,
                  name_term: str | None = None, who: Principal = Depends(principal)):
        entries = service.cue.query(subtree_root=subtree_root,
                                    metadata_term=metadata_term, name_term=name_term)
        return {"entries": [entry_to_document(e) for e in entries]}

    @app.post("/cue", status_code=201)
    def create_cue(body: dict, who: Principal = Depends(principal),
                   now: datetime | None = Depends(now_override)):
        authorize(who, "cue_create")
        entry = service.cue_create(body["name"], body.get("description", ""),
                                   body.get("parent"), body.get("metadata"), now=now)
        return _entity_response(entry_to_document(entry))

    @app.patch("/cue/{cue_id}")
    def update_cue(cue_id: str, body: dict, who: Principal = Depends(principal),
                   now: datetime | None = Depends(now_override)):
        authorize(who, "cue_update")
        entry = service.cue_update(cue_id, body.get("changes", {}),
                                   body.get("change_note", ""), now=now)
        return _entity_response(entry_to_document(entry))

    @app.post("/cue/{cue_id}/link")
    def link_cue(cue_id: str, body: dict, who: Principal = Depends(principal),
                 now: datetime | None = Depends(now_override)):
        authorize(who, "cue_link")
        entry = service.cue_link(cue_id, body["card_id"], now=now)
        return _entity_response(entry_to_document(entry))

    @app.get("/cue-export")
    def export_cue(who: Principal = Depends(principal)):
        return Response(content=service.cue.export(), media_type="application/json")

    # --- public surfaces -----------------------------------------------------

    @app.get("/feed")
    def public_feed(now: datetime | None = Depends(now_override)):
        return {"disclosures": service.public_feed(now=now)}

    @app.get("/matrix")
    def action_matrix():
        return lifecycle.action_matrix()

    @app.get("/corpus")
    def export_corpus(who: Principal = Depends(principal)):
        authorize(who, "export_corpus")
        return Response(content=service.export_corpus(), media_type="application/json")

    @app.get("/log")
    def export_log(who: Principal = Depends(principal)):
        authorize(who, "export_log")
        return PlainTextResponse(
            lifecycle.export_transition_log(list(service.cases.values())))

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
