"""Command-line client: offline validation, exit-code partitioning, API calls."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from cfd import canonical, cli
from cfd.service import CoordinationService, ServiceConfig, TokenTable, create_app

from conftest import Clock, connector_for, make_card, make_report

TOKENS = [
    {"token": "tok-sub", "id": "rowan", "role": "submitter"},
    {"token": "tok-acme", "id": "acme-ops", "role": "vendor", "vendor": "acme-ai"},
]


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def served(monkeypatch, clock):
    """Route the CLI's HTTP calls into an in-process app instance."""
    service = CoordinationService(ServiceConfig(), clock=clock)
    app = create_app(service, TokenTable.from_config(TOKENS))
    client = TestClient(app, raise_server_exceptions=False)

    def fake_request(method, url, json=None, params=None, headers=None, timeout=None):
        path = url.removeprefix("http://cfd.test")
        return client.request(method, path, json=json, params=params, headers=headers)

    monkeypatch.setattr(cli.httpx, "request", fake_request)
    return service


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_bytes(canonical.dumps(doc))
    return str(path)


SERVER = ["--server", "http://cfd.test"]


# --- offline validation -------------------------------------------------------

def test_card_validate_ok(runner, tmp_path):
    path = write(tmp_path, "card.json", make_card())
    result = runner.invoke(cli.main, ["card", "validate", "--file", path])
    assert result.exit_code == 0
    assert "complete" in result.output


def test_card_validate_blocks_exit_4(runner, tmp_path):
    doc = make_card(with_clause=False)
    doc["measures"] = []
    path = write(tmp_path, "sparse.json", doc)
    result = runner.invoke(cli.main, ["card", "validate", "--file", path])
    assert result.exit_code == 4
    assert "block" in result.output


def test_card_validate_json_output_round_trips(runner, tmp_path):
    doc = make_card(with_clause=False)
    doc["measures"] = []
    path = write(tmp_path, "sparse.json", doc)
    result = runner.invoke(cli.main, ["--json-output", "card", "validate",
                                      "--file", path])
    findings = json.loads(result.output)["findings"]
    assert {f["severity"] for f in findings} == {"block", "warn"}


def test_report_validate(runner, tmp_path):
    good = write(tmp_path, "r.json", make_report())
    assert runner.invoke(cli.main, ["report", "validate", "--file", good]).exit_code == 0

    bad_doc = make_report()
    bad_doc["samples"] = []
    bad = write(tmp_path, "bad.json", bad_doc)
    result = runner.invoke(cli.main, ["report", "validate", "--file", bad])
    assert result.exit_code == 4
    assert "schema-violation" in result.output


def test_unreadable_file_exit_5(runner, tmp_path):
    result = runner.invoke(cli.main, ["card", "validate", "--file",
                                      str(tmp_path / "missing.json")])
    assert result.exit_code == 5


def test_unknown_subcommand_exit_2(runner):
    result = runner.invoke(cli.main, ["explode"])
    assert result.exit_code == 2
    assert "Usage" in result.output


# --- server-backed commands ---------------------------------------------------

def test_submit_and_case_flow(runner, served, tmp_path):
    card_path = write(tmp_path, "card.json", make_card())
    reg = runner.invoke(cli.main, SERVER + ["--token", "tok-acme", "card",
                                            "register", "--file", card_path])
    assert reg.exit_code == 0, reg.output

    report_doc = make_report()
    served.register_connector(connector_for(report_doc))
    report_path = write(tmp_path, "report.json", report_doc)
    sub = runner.invoke(cli.main, SERVER + ["--token", "tok-sub", "report",
                                            "submit", "--file", report_path])
    assert sub.exit_code == 0
    assert "case-000001" in sub.output

    verify = runner.invoke(cli.main, SERVER + ["--token", "tok-acme", "case",
                                               "verify", "case-000001",
                                               "--connector", "mock-1"])
    assert verify.exit_code == 0 and "all reproduced" in verify.output

    triage = runner.invoke(cli.main, SERVER + ["--token", "tok-acme", "case",
                                               "triage", "case-000001",
                                               "--result-id", "vr-000001"])
    assert triage.exit_code == 0 and "state=triaged" in triage.output

    show = runner.invoke(cli.main, SERVER + ["--token", "tok-acme", "case",
                                             "show", "case-000001"])
    assert "submitted -> triaged" in show.output
    listing = runner.invoke(cli.main, SERVER + ["--token", "tok-sub", "case", "list"])
    assert "case-000001" in listing.output


def test_auth_failures_exit_3(runner, served, tmp_path):
    card_path = write(tmp_path, "card.json", make_card())
    missing = runner.invoke(cli.main, SERVER + ["card", "register",
                                                "--file", card_path])
    assert missing.exit_code == 3
    wrong_role = runner.invoke(cli.main, SERVER + ["--token", "tok-sub", "card",
                                                   "register", "--file", card_path])
    assert wrong_role.exit_code == 3


def test_domain_errors_exit_4(runner, served, tmp_path):
    report_path = write(tmp_path, "report.json", make_report())
    result = runner.invoke(cli.main, SERVER + ["--token", "tok-sub", "report",
                                               "submit", "--file", report_path])
    assert result.exit_code == 4  # card never registered
    assert "unknown-card" in result.output


def test_unreachable_server_exit_5(runner, monkeypatch, tmp_path):
    import httpx

    def down(*args, **kwargs):
        raise httpx.ConnectError("connection refused")

    monkeypatch.setattr(cli.httpx, "request", down)
    path = write(tmp_path, "card.json", make_card())
    result = runner.invoke(cli.main, ["--server", "http://down.test", "--token",
                                      "t", "card", "register", "--file", path])
    assert result.exit_code == 5


def test_env_fallbacks(runner, served, monkeypatch, tmp_path):
    monkeypatch.setenv("CFD_SERVER", "http://cfd.test")
    monkeypatch.setenv("CFD_TOKEN", "tok-acme")
    path = write(tmp_path, "card.json", make_card())
    result = runner.invoke(cli.main, ["card", "register", "--file", path])
    assert result.exit_code == 0


def test_feed_and_matrix(runner, served):
    feed = runner.invoke(cli.main, SERVER + ["feed"])
    assert feed.exit_code == 0 and "empty feed" in feed.output
    matrix = runner.invoke(cli.main, SERVER + ["matrix"])
    assert matrix.exit_code == 0
    assert "rejected_states" in matrix.output


def test_offline_findings_match_server(runner, served, tmp_path):
    """The lint the CLI runs locally is exactly what the server would say."""
    doc = make_card(with_clause=False)
    doc["measures"] = []
    path = write(tmp_path, "card.json", doc)
    local = runner.invoke(cli.main, ["--json-output", "card", "validate",
                                     "--file", path])
    local_findings = json.loads(local.output)["findings"]

    from fastapi.testclient import TestClient as TC

    remote = cli.httpx.request("POST", "http://cfd.test/cards/validate", json=doc,
                               headers={"authorization": "Bearer tok-sub"})
    assert remote.json()["findings"] == local_findings
