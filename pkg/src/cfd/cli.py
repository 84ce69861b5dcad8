"""Command-line client and operator tool.

Every subcommand performs exactly one API call against a running coordination
service, except the offline ``validate`` commands, which run the same parsers
and completeness checks locally so documents can be linted before submission.

Exit codes: 0 success, 2 usage error, 3 authentication/authorization failure,
4 domain error, 5 I/O error (unreadable file, unreachable server).
"""

from __future__ import annotations

import sys

import click
import httpx

from . import canonical, cards, reports
from .errors import CfdError

EXIT_AUTH = 3
EXIT_DOMAIN = 4
EXIT_IO = 5


class Session:
    def __init__(self, server: str | None, token: str | None,
                 json_output: bool, now_override: str | None):
        self.server = server
        self.token = token
        self.json_output = json_output
        self.now_override = now_override

    def request(self, method: str, path: str, body: dict | None = None,
                params: dict | None = None) -> dict | str:
        if not self.server:
            raise click.UsageError("no server configured; pass --server or set CFD_SERVER")
        headers = {}
        if self.token:
            headers["authorization"] = f"Bearer {self.token}"
        if self.now_override:
            headers["x-now-override"] = self.now_override
        try:
            resp = httpx.request(method, self.server.rstrip("/") + path,
                                 json=body, params=params, headers=headers,
                                 timeout=30.0)
        except httpx.HTTPError as exc:
            click.echo(f"error: cannot reach {self.server}: {exc}", err=True)
            sys.exit(EXIT_IO)
        if resp.status_code in (401, 403):
            click.echo(f"error: {resp.json().get('message', 'not authorized')}", err=True)
            sys.exit(EXIT_AUTH)
        if resp.status_code >= 400:
            try:
                envelope = resp.json()
            except ValueError:
                envelope = {"code": "http-error", "message": resp.text}
            click.echo(f"error [{envelope.get('code')}]: {envelope.get('message')}",
                       err=True)
            sys.exit(EXIT_DOMAIN)
        content_type = resp.headers.get("content-type", "")
        return resp.json() if "json" in content_type else resp.text

    def emit(self, payload, human_lines=None):
        if self.json_output or human_lines is None:
            click.echo(canonical.dumps(payload).decode().rstrip("\n"))
        else:
            for line in human_lines:
                click.echo(line)


pass_session = click.make_pass_decorator(Session)


def _load_document(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return canonical.loads(fh.read())
    except OSError as exc:
        click.echo(f"error: cannot read {path}: {exc}", err=True)
        sys.exit(EXIT_IO)
    except (ValueError, CfdError) as exc:
        click.echo(f"error: {path} is not a valid document: {exc}", err=True)
        sys.exit(EXIT_DOMAIN)


def _case_lines(doc: dict) -> list[str]:
    case = doc.get("entity", doc)
    lines = [f"case {case['case_id']}  state={case['state']}"]
    if case.get("cfe_id"):
        lines.append(f"  cfe: {case['cfe_id']}")
    if case.get("embargo_deadline"):
        lines.append(f"  embargo until: {case['embargo_deadline']}")
    return lines


@click.group()
@click.option("--server", envvar="CFD_SERVER", default=None,
              help="Coordination service base URL (or CFD_SERVER).")
@click.option("--token", envvar="CFD_TOKEN", default=None,
              help="Bearer token (or CFD_TOKEN). Never echoed back.")
@click.option("--json-output", is_flag=True, help="Emit structured JSON output.")
@click.option("--now-override", default=None, metavar="TIMESTAMP",
              help="Test-only clock override (ISO-8601 UTC).")
@click.pass_context
def main(ctx, server, token, json_output, now_override):
    """Coordinated flaw disclosure client."""
    ctx.obj = Session(server, token, json_output, now_override)


# --- report ------------------------------------------------------------------

@main.group()
def report():
    """Submit and lint flaw reports."""


@report.command("submit")
@click.option("--file", "path", required=True, type=click.Path())
@pass_session
def report_submit(session, path):
    doc = _load_document(path)
    out = session.request("POST", "/reports", body=doc)
    session.emit(out, _case_lines(out))


@report.command("validate")
@click.option("--file", "path", required=True, type=click.Path())
@pass_session
def report_validate(session, path):
    """Offline structural validation; same parser the server runs."""
    doc = _load_document(path)
    try:
        parsed = reports.report_from_document(doc)
    except CfdError as exc:
        click.echo(f"invalid [{exc.code}]: {exc.message}", err=True)
        sys.exit(EXIT_DOMAIN)
    session.emit({"valid": True, "samples": len(parsed.samples)},
                 [f"valid report: {len(parsed.samples)} sample(s)"])


# --- card --------------------------------------------------------------------

@main.group()
def card():
    """Register, validate, and revise model cards."""


@card.command("register")
@click.option("--file", "path", required=True, type=click.Path())
@pass_session
def card_register(session, path):
    doc = _load_document(path)
    out = session.request("POST", "/cards", body=doc)
    entity = out["entity"]
    session.emit(out, [f"card {entity['card_id']} v{entity['version']} registered"])


@card.command("validate")
@click.option("--file", "path", required=True, type=click.Path())
@pass_session
def card_validate(session, path):
    """Offline completeness check; identical findings to the server endpoint."""
    doc = _load_document(path)
    try:
        parsed = cards.card_from_document(doc)
    except CfdError as exc:
        click.echo(f"invalid [{exc.code}]: {exc.message}", err=True)
        sys.exit(EXIT_DOMAIN)
    findings = cards.validate_completeness(parsed)
    payload = {"findings": [{"severity": f.severity.value, "message": f.message}
                            for f in findings]}
    lines = [f"{f.severity.value}: {f.message}" for f in findings] or ["complete"]
    session.emit(payload, lines)
    if any(f.severity.value == "block" for f in findings):
        sys.exit(EXIT_DOMAIN)


@card.command("revise")
@click.argument("card_id")
@click.option("--file", "path", required=True, type=click.Path(),
              help="Change-set document.")
@pass_session
def card_revise(session, card_id, path):
    doc = _load_document(path)
    out = session.request("POST", f"/cards/{card_id}/revise", body=doc)
    entity = out["entity"]
    session.emit(out, [f"card {entity['card_id']} now v{entity['version']}"])


@card.command("show")
@click.argument("card_id")
@click.option("--version", type=int, default=None)
@pass_session
def card_show(session, card_id, version):
    params = {"version": version} if version is not None else None
    out = session.request("GET", f"/cards/{card_id}", params=params)
    c = out["card"]
    session.emit(out, [
        f"card {c['card_id']} v{c['version']} ({c['vendor']} / {c['system']})",
        f"  mission: {c['mission']}",
        f"  measures: {len(c['measures'])}  scope entries: {len(c['scope'])}",
        f"  linked CUEs: {', '.join(out['linked_cues']) or 'none'}",
    ])


@card.command("list")
@pass_session
def card_list(session):
    out = session.request("GET", "/cards")
    session.emit(out, out["cards"] or ["no cards"])


# --- case --------------------------------------------------------------------

@main.group()
def case():
    """Drive the case lifecycle."""


@case.command("list")
@pass_session
def case_list(session):
    out = session.request("GET", "/cases")
    lines = [f"{c['case_id']}  {c['state']}" for c in out["cases"]] or ["no cases"]
    session.emit(out, lines)


@case.command("show")
@click.argument("case_id")
@pass_session
def case_show(session, case_id):
    out = session.request("GET", f"/cases/{case_id}")
    lines = _case_lines(out)
    lines.append(f"  actions: {', '.join(out.get('available_actions', [])) or 'none'}")
    for item in out["history"]:
        lines.append(f"  {item['occurred_at']}  {item['from']} -> "
                     f"{item['to']} ({item['actor']})")
    session.emit(out, lines)


@case.command("verify")
@click.argument("case_id")
@click.option("--connector", "connector_id", required=True)
@pass_session
def case_verify(session, case_id, connector_id):
    out = session.request("POST", f"/cases/{case_id}/verify",
                          body={"connector_id": connector_id})
    result = out["entity"]
    session.emit(out, [
        f"verification {result['result_id']}: "
        f"{'all reproduced' if result['all_reproduced'] else 'not all reproduced'}",
    ])


@case.command("triage")
@click.argument("case_id")
@click.option("--result-id", required=True)
@pass_session
def case_triage(session, case_id, result_id):
    out = session.request("POST", f"/cases/{case_id}/triage",
                          body={"result_id": result_id})
    session.emit(out, _case_lines(out))


@case.command("review")
@click.argument("case_id")
@click.option("--file", "path", default=None, type=click.Path(),
              help="Optional review document with scope/stats overrides.")
@pass_session
def case_review(session, case_id, path):
    body = _load_document(path) if path else {}
    out = session.request("POST", f"/cases/{case_id}/review", body=body)
    session.emit(out, _case_lines(out))


@case.command("appeal")
@click.argument("case_id")
@click.option("--grounds", required=True)
@pass_session
def case_appeal(session, case_id, grounds):
    out = session.request("POST", f"/cases/{case_id}/appeal",
                          body={"grounds": grounds})
    session.emit(out, _case_lines(out))


@case.command("adjudicate")
@click.argument("case_id")
@click.option("--file", "path", required=True, type=click.Path(),
              help="Panel decision document.")
@pass_session
def case_adjudicate(session, case_id, path):
    out = session.request("POST", f"/cases/{case_id}/adjudicate",
                          body=_load_document(path))
    session.emit(out, _case_lines(out))


@case.command("flag")
@click.argument("case_id")
@click.option("--reason", default="")
@pass_session
def case_flag(session, case_id, reason):
    out = session.request("POST", f"/cases/{case_id}/flag", body={"reason": reason})
    session.emit(out, _case_lines(out))


@case.command("edge")
@click.argument("case_id")
@click.option("--file", "path", required=True, type=click.Path(),
              help="Edge assessment + decision document.")
@pass_session
def case_edge(session, case_id, path):
    out = session.request("POST", f"/cases/{case_id}/edge", body=_load_document(path))
    session.emit(out, _case_lines(out))


@case.command("remediate")
@click.argument("case_id")
@click.option("--note", default="")
@pass_session
def case_remediate(session, case_id, note):
    out = session.request("POST", f"/cases/{case_id}/remediate", body={"note": note})
    session.emit(out, _case_lines(out))


@case.command("mark-remediated")
@click.argument("case_id")
@click.option("--note", default="")
@pass_session
def case_mark_remediated(session, case_id, note):
    out = session.request("POST", f"/cases/{case_id}/mark-remediated",
                          body={"note": note})
    session.emit(out, _case_lines(out))


@case.command("reverify")
@click.argument("case_id")
@click.option("--connector", "connector_id", required=True)
@pass_session
def case_reverify(session, case_id, connector_id):
    out = session.request("POST", f"/cases/{case_id}/reverify",
                          body={"connector_id": connector_id})
    session.emit(out, _case_lines(out))


@case.command("close")
@click.argument("case_id")
@click.option("--reason", default="")
@pass_session
def case_close(session, case_id, reason):
    out = session.request("POST", f"/cases/{case_id}/close", body={"reason": reason})
    session.emit(out, _case_lines(out))


# --- cue ---------------------------------------------------------------------

@main.group()
def cue():
    """Manage the use-case enumeration registry."""


@cue.command("add")
@click.option("--name", required=True)
@click.option("--description", default="")
@click.option("--parent", default=None)
@pass_session
def cue_add(session, name, description, parent):
    out = session.request("POST", "/cue", body={
        "name": name, "description": description, "parent": parent,
    })
    entity = out["entity"]
    session.emit(out, [f"{entity['cue_id']}: {entity['name']}"])


@cue.command("update")
@click.argument("cue_id")
@click.option("--file", "path", required=True, type=click.Path(),
              help="Changes document ({changes: ..., change_note: ...}).")
@pass_session
def cue_update(session, cue_id, path):
    out = session.request("PATCH", f"/cue/{cue_id}", body=_load_document(path))
    entity = out["entity"]
    session.emit(out, [f"{entity['cue_id']} updated to v{entity['version']}"])


@cue.command("link")
@click.argument("cue_id")
@click.argument("card_id")
@pass_session
def cue_link(session, cue_id, card_id):
    out = session.request("POST", f"/cue/{cue_id}/link", body={"card_id": card_id})
    entity = out["entity"]
    session.emit(out, [f"{entity['cue_id']} linked to "
                       f"{', '.join(entity['linked_cards'])}"])


@cue.command("list")
@click.option("--subtree", default=None)
@click.option("--name-term", default=None)
@click.option("--metadata-term", default=None)
@pass_session
def cue_list(session, subtree, name_term, metadata_term):
    params = {k: v for k, v in (("subtree_root", subtree), ("name_term", name_term),
                                ("metadata_term", metadata_term)) if v}
    out = session.request("GET", "/cue", params=params or None)
    lines = [f"{e['cue_id']}  {e['name']}"
             + (f"  (parent {e['parent']})" if e.get("parent") else "")
             for e in out["entries"]] or ["no entries"]
    session.emit(out, lines)


# --- read surfaces -----------------------------------------------------------

@main.command("feed")
@pass_session
def feed(session):
    out = session.request("GET", "/feed")
    lines = [f"{d['cfe_id'] or '(no cfe)'}  {d['case']['case_id']}  "
             f"{d['case']['state']}" for d in out["disclosures"]] or ["empty feed"]
    session.emit(out, lines)


@main.command("matrix")
@pass_session
def matrix(session):
    out = session.request("GET", "/matrix")
    session.emit(out)


@main.command("corpus")
@pass_session
def corpus(session):
    out = session.request("GET", "/corpus")
    session.emit(out)


# --- serve -------------------------------------------------------------------

@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path())
def serve(config_path):
    """Run the coordination service from a YAML config file."""
    import uvicorn
    import yaml

    from . import verification
    from .service import CoordinationService, ServiceConfig, TokenTable, create_app

    try:
        with open(config_path) as fh:
            cfg = yaml.safe_load(fh) or {}
    except OSError as exc:
        click.echo(f"error: cannot read {config_path}: {exc}", err=True)
        sys.exit(EXIT_IO)

    service = CoordinationService(ServiceConfig(
        embargo_days=cfg.get("embargo_days", 90),
        alpha=cfg.get("alpha", verification.DEFAULT_ALPHA),
        parallelism=cfg.get("parallelism", 4),
        reverify_period_days=cfg.get("reverify_period_days", 30),
    ))
    for spec in cfg.get("connectors", []):
        kind = verification.ConnectorKind(spec.get("kind", "local_mock"))
        mock = None
        if kind is verification.ConnectorKind.LOCAL_MOCK:
            rules = {k.encode(): v.encode()
                     for k, v in (spec.get("rules") or {}).items()}
            mock = verification.MockModel(rule_table=rules,
                                          snapshot_tag=spec.get("snapshot", "mock"))
        service.register_connector(verification.ModelConnector(
            connector_id=spec["id"], kind=kind,
            descriptor=spec.get("endpoint", ""), mock=mock))

    tokens = TokenTable.from_config(cfg.get("tokens", []))
    app = create_app(service, tokens, static_dir=cfg.get("static_dir"))
    listen = cfg.get("listen", {})
    uvicorn.run(app, host=listen.get("host", "127.0.0.1"),
                port=int(listen.get("port", 8400)))


if __name__ == "__main__":
    main()
