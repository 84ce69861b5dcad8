"""Flaw report schema, sample tables, classification hints, and redaction."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfd import canonical, reports
from cfd.cards import ViolationClaim
from cfd.errors import MalformedDocument, SchemaViolation

from conftest import T0, make_report


def test_minimal_report_parses():
    report = reports.report_from_document(make_report())
    assert report.card_ref == ("card-judge", 1)
    assert len(report.samples) == 3
    assert report.error_kind is reports.ErrorKind.SYSTEMATIC


def test_error_kind_consistency():
    with pytest.raises(SchemaViolation):
        reports.report_from_document(
            make_report(flaw_class="error", error_kind="not_applicable"))
    with pytest.raises(SchemaViolation):
        reports.report_from_document(
            make_report(flaw_class="infrastructure", error_kind="one_off"))
    ok = reports.report_from_document(
        make_report(flaw_class="model_design_failure", error_kind="not_applicable"))
    assert ok.flaw_class is reports.FlawClass.MODEL_DESIGN_FAILURE


def test_samples_required():
    doc = make_report()
    doc["samples"] = []
    with pytest.raises(SchemaViolation):
        reports.report_from_document(doc)
    single = reports.report_from_document(make_report(n_samples=1))
    assert len(single.samples) == 1


def test_sample_payload_rules():
    with pytest.raises(SchemaViolation):
        reports.SamplePair(b"", reports.MediaType.TEXT, b"out", reports.MediaType.TEXT)
    with pytest.raises(SchemaViolation):
        reports.SamplePair(b"in", reports.MediaType.TEXT, b"", reports.MediaType.TEXT)
    with pytest.raises(SchemaViolation):
        reports.SamplePair(b"in", reports.MediaType.TEXT, b"out", reports.MediaType.TEXT,
                           reports.MatchRule.PREDICATE_TAG)  # no predicate named
    with pytest.raises(SchemaViolation):
        reports.SamplePair(b"in", reports.MediaType.TEXT, b"out", reports.MediaType.TEXT,
                           reports.MatchRule.EXACT, predicate="contains-substring")


def test_bad_base64_is_malformed():
    doc = make_report()
    doc["samples"][0]["input"]["data"] = "@@not-base64@@"
    with pytest.raises(MalformedDocument):
        reports.report_from_document(doc)


def test_samples_table_normalizes_to_text_pairs():
    doc = make_report()
    del doc["samples"]
    doc["samples_table"] = [["billing question", "account closed"],
                            ["refund request", "refund denied forever"]]
    report = reports.report_from_document(doc)
    assert len(report.samples) == 2
    pair = report.samples[0]
    assert pair.input_payload == b"billing question"
    assert pair.forbidden_output == b"account closed"
    assert pair.match_rule is reports.MatchRule.EXACT
    assert pair.input_media is reports.MediaType.TEXT


def test_samples_and_table_are_mutually_exclusive():
    doc = make_report()
    doc["samples_table"] = [["a", "b"]]
    with pytest.raises(SchemaViolation):
        reports.report_from_document(doc)
    doc = make_report()
    del doc["samples"]
    doc["samples_table"] = [["only-one-column"]]
    with pytest.raises(SchemaViolation):
        reports.report_from_document(doc)


def test_unknown_report_keys_rejected():
    doc = make_report()
    doc["rating"] = 5
    with pytest.raises(MalformedDocument):
        reports.report_from_document(doc)


# --- classification hints -----------------------------------------------------

def test_classify_hint_thresholds():
    many = reports.report_from_document(make_report(n_samples=10))
    hint = reports.classify_hint(many)
    assert hint.suggested_error_kind is reports.ErrorKind.SYSTEMATIC

    one = reports.report_from_document(
        make_report(n_samples=1, error_kind="systematic"))
    assert reports.classify_hint(one).suggested_error_kind is reports.ErrorKind.ONE_OFF

    few = reports.report_from_document(make_report(n_samples=4, error_kind="one_off"))
    assert reports.classify_hint(few).suggested_error_kind is reports.ErrorKind.ONE_OFF

    infra = reports.report_from_document(
        make_report(flaw_class="infrastructure", error_kind="not_applicable"))
    assert reports.classify_hint(infra).suggested_error_kind \
        is reports.ErrorKind.NOT_APPLICABLE


# --- redaction ----------------------------------------------------------------

def test_redaction_is_idempotent_and_preserves_evidence():
    report = reports.report_from_document(make_report())
    redacted = reports.redact_for_publication(report)
    assert redacted.reporter.contact_channel == reports.REDACTION_MARKER
    assert redacted.reporter.name == report.reporter.name
    assert redacted.samples == report.samples
    assert reports.redact_for_publication(redacted) == redacted


# --- round trip ---------------------------------------------------------------

_payloads = st.binary(min_size=1, max_size=40)

_sample_pairs = st.one_of(
    st.builds(reports.SamplePair,
              input_payload=_payloads,
              input_media=st.sampled_from(reports.MediaType),
              forbidden_output=_payloads,
              output_media=st.sampled_from(reports.MediaType),
              match_rule=st.sampled_from([reports.MatchRule.EXACT,
                                          reports.MatchRule.NORMALIZED_TEXT]),
              predicate=st.none()),
    st.builds(reports.SamplePair,
              input_payload=_payloads,
              input_media=st.sampled_from(reports.MediaType),
              forbidden_output=_payloads,
              output_media=st.sampled_from(reports.MediaType),
              match_rule=st.just(reports.MatchRule.PREDICATE_TAG),
              predicate=st.sampled_from(["contains-substring", "regex-class",
                                         "length-threshold"])),
)

_texts = st.text(min_size=1, max_size=30).filter(lambda s: s.strip())

report_strategy = st.builds(
    reports.FlawReport,
    report_id=st.uuids().map(str),
    reporter=st.builds(reports.ContactInfo, name=_texts, contact_channel=_texts),
    vendor_name=_texts,
    system_name=_texts,
    card_ref=st.tuples(_texts, st.integers(1, 5)),
    flaw_class=st.just(reports.FlawClass.ERROR),
    error_kind=st.sampled_from([reports.ErrorKind.ONE_OFF, reports.ErrorKind.SYSTEMATIC]),
    narrative=_texts,
    claim=st.builds(ViolationClaim, cited_measure=st.none() | _texts,
                    cited_scope_entry=st.none(), behavior_description=_texts),
    samples=st.lists(_sample_pairs, min_size=1, max_size=5).map(tuple),
    submitted_at=st.just(T0),
)


@given(report=report_strategy)
@settings(max_examples=100, deadline=None)
def test_report_serialization_round_trips(report):
    data = reports.serialize_report(report)
    again = reports.parse_report(data)
    assert again == report
    assert reports.serialize_report(again) == data


def test_canonical_bytes_are_stable():
    doc = make_report()
    first = canonical.dumps(reports.report_to_document(
        reports.report_from_document(doc)))
    second = canonical.dumps(reports.report_to_document(
        reports.report_from_document(canonical.loads(first))))
    assert first == second
    assert first.endswith(b"\n")
