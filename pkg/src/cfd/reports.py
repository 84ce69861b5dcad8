"""Structured flaw reports: classification, narrative, claim, and sample evidence.

A report pairs inputs with the outputs the model should not generate. Sample
sets are accepted either inline as a table of text rows or as structured
records; both normalize to the same list of sample pairs.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum

from . import canonical
from .cards import ViolationClaim
from .errors import MalformedDocument, SchemaViolation

REDACTION_MARKER = "[redacted]"


class FlawClass(str, Enum):
    INFRASTRUCTURE = "infrastructure"
    MODEL_DESIGN_FAILURE = "model_design_failure"
    ERROR = "error"


class ErrorKind(str, Enum):
    ONE_OFF = "one_off"
    SYSTEMATIC = "systematic"
    NOT_APPLICABLE = "not_applicable"


class MediaType(str, Enum):
    TEXT = "text"
    IMAGE = "image"
    BINARY = "binary"


class MatchRule(str, Enum):
    EXACT = "exact"
    NORMALIZED_TEXT = "normalized_text"
    PREDICATE_TAG = "predicate_tag"


# Advisory cutoff for suggesting a systematic (vs one-off) error classification.
MIN_SYSTEMATIC_SAMPLES = 10


@dataclass(frozen=True)
class SamplePair:
    input_payload: bytes
    input_media: MediaType
    forbidden_output: bytes
    output_media: MediaType
    match_rule: MatchRule = MatchRule.EXACT
    predicate: str | None = None

    def __post_init__(self):
        if not self.input_payload:
            raise SchemaViolation("sample input payload must be nonempty")
        if not self.forbidden_output:
            raise SchemaViolation("sample forbidden output must be nonempty")
        if self.match_rule is MatchRule.PREDICATE_TAG and not self.predicate:
            raise SchemaViolation("predicate_tag samples must name a predicate")
        if self.match_rule is not MatchRule.PREDICATE_TAG and self.predicate:
            raise SchemaViolation("predicate only allowed with match_rule predicate_tag")


@dataclass(frozen=True)
class ContactInfo:
    name: str
    contact_channel: str


@dataclass(frozen=True)
class FlawReport:
    report_id: str
    reporter: ContactInfo
    vendor_name: str
    system_name: str
    card_ref: tuple[str, int]
    flaw_class: FlawClass
    error_kind: ErrorKind
    narrative: str
    claim: ViolationClaim
    samples: tuple[SamplePair, ...]
    submitted_at: datetime

    def __post_init__(self):
        if not self.report_id:
            raise SchemaViolation("report_id must be nonempty")
        if not self.narrative.strip():
            raise SchemaViolation("narrative must be nonempty", self.report_id)
        if not self.samples:
            raise SchemaViolation("samples must be nonempty; even a single sample is acceptable",
                                  self.report_id)
        is_error = self.flaw_class is FlawClass.ERROR
        if is_error and self.error_kind is ErrorKind.NOT_APPLICABLE:
            raise SchemaViolation("error reports must say one_off or systematic", self.report_id)
        if not is_error and self.error_kind is not ErrorKind.NOT_APPLICABLE:
            raise SchemaViolation(
                f"error_kind only applies to error reports, not {self.flaw_class.value}",
                self.report_id,
            )


@dataclass(frozen=True)
class ClassificationHint:
    suggested_class: FlawClass
    suggested_error_kind: ErrorKind
    rationale: str


# --- serialization -----------------------------------------------------------

_REPORT_KEYS = {"report_id", "reporter", "target", "classification", "narrative", "claim",
                "samples", "samples_table", "submitted_at"}
_SAMPLE_KEYS = {"input", "forbidden", "match_rule", "predicate"}


def _payload_to_doc(data: bytes, media: MediaType) -> dict:
    return {"media": media.value, "data": base64.b64encode(data).decode("ascii")}


def _payload_from_doc(raw: dict, where: str) -> tuple[bytes, MediaType]:
    if not isinstance(raw, dict) or "data" not in raw:
        raise SchemaViolation(f"bad payload in {where}")
    try:
        media = MediaType(raw.get("media", "text"))
    except ValueError:
        raise SchemaViolation(f"unknown media type {raw.get('media')!r} in {where}") from None
    try:
        data = base64.b64decode(raw["data"], validate=True)
    except Exception as exc:
        raise MalformedDocument(f"bad base64 payload in {where}: {exc}") from exc
    return data, media


def sample_to_document(pair: SamplePair) -> dict:
    return {
        "input": _payload_to_doc(pair.input_payload, pair.input_media),
        "forbidden": _payload_to_doc(pair.forbidden_output, pair.output_media),
        "match_rule": pair.match_rule.value,
        "predicate": pair.predicate,
    }


def sample_from_document(raw: dict) -> SamplePair:
    canonical.reject_unknown_keys(raw, _SAMPLE_KEYS, "sample")
    input_payload, input_media = _payload_from_doc(raw.get("input"), "sample input")
    forbidden, output_media = _payload_from_doc(raw.get("forbidden"), "sample forbidden output")
    try:
        rule = MatchRule(raw.get("match_rule", "exact"))
    except ValueError:
        raise SchemaViolation(f"unknown match_rule {raw.get('match_rule')!r}") from None
    return SamplePair(input_payload, input_media, forbidden, output_media, rule,
                      raw.get("predicate"))


def report_to_document(report: FlawReport) -> dict:
    return {
        "report_id": report.report_id,
        "reporter": {"name": report.reporter.name, "contact": report.reporter.contact_channel},
        "target": {
            "vendor": report.vendor_name,
            "system": report.system_name,
            "card_id": report.card_ref[0],
            "card_version": report.card_ref[1],
        },
        "classification": {
            "flaw_class": report.flaw_class.value,
            "error_kind": report.error_kind.value,
        },
        "narrative": report.narrative,
        "claim": {
            "measure": report.claim.cited_measure,
            "scope_entry": report.claim.cited_scope_entry,
            "behavior": report.claim.behavior_description,
        },
        "samples": [sample_to_document(p) for p in report.samples],
        "submitted_at": canonical.format_ts(report.submitted_at),
    }


def serialize_report(report: FlawReport) -> bytes:
    return canonical.dumps(report_to_document(report))


def report_from_document(doc: dict) -> FlawReport:
    canonical.reject_unknown_keys(doc, _REPORT_KEYS, "report")
    reporter = doc.get("reporter")
    if not isinstance(reporter, dict):
        raise SchemaViolation("report is missing its reporter block")
    target = doc.get("target")
    if not isinstance(target, dict):
        raise SchemaViolation("report is missing its target block")
    classification = doc.get("classification")
    if not isinstance(classification, dict):
        raise SchemaViolation("report is missing its classification block")
    claim_raw = doc.get("claim")
    if not isinstance(claim_raw, dict):
        raise SchemaViolation("report is missing its claim block")

    try:
        flaw_class = FlawClass(classification.get("flaw_class"))
    except ValueError:
        raise SchemaViolation(
            f"unknown flaw_class {classification.get('flaw_class')!r}") from None
    try:
        error_kind = ErrorKind(classification.get("error_kind", "not_applicable"))
    except ValueError:
        raise SchemaViolation(
            f"unknown error_kind {classification.get('error_kind')!r}") from None

    samples: list[SamplePair] = []
    if "samples" in doc and "samples_table" in doc:
        raise SchemaViolation("report may carry samples or samples_table, not both")
    for raw in doc.get("samples", []):
        samples.append(sample_from_document(raw))
    # Table rows are (input, forbidden output) text pairs compared byte-exactly.
    for row in doc.get("samples_table", []):
        if not (isinstance(row, list) and len(row) == 2):
            raise SchemaViolation("samples_table rows must be [input, forbidden] pairs")
        samples.append(SamplePair(
            input_payload=str(row[0]).encode("utf-8"),
            input_media=MediaType.TEXT,
            forbidden_output=str(row[1]).encode("utf-8"),
            output_media=MediaType.TEXT,
            match_rule=MatchRule.EXACT,
        ))

    card_version = target.get("card_version", 1)
    if not isinstance(card_version, int) or card_version < 1:
        raise SchemaViolation("card_version must be a positive integer")
    submitted = doc.get("submitted_at")
    if not submitted:
        raise SchemaViolation("report is missing submitted_at")
    return FlawReport(
        report_id=doc.get("report_id", ""),
        reporter=ContactInfo(name=reporter.get("name", ""),
                             contact_channel=reporter.get("contact", "")),
        vendor_name=target.get("vendor", ""),
        system_name=target.get("system", ""),
        card_ref=(target.get("card_id", ""), card_version),
        flaw_class=flaw_class,
        error_kind=error_kind,
        narrative=doc.get("narrative", ""),
        claim=ViolationClaim(
            cited_measure=claim_raw.get("measure"),
            cited_scope_entry=claim_raw.get("scope_entry"),
            behavior_description=claim_raw.get("behavior", ""),
        ),
        samples=tuple(samples),
        submitted_at=canonical.parse_ts(submitted),
    )


def parse_report(document: bytes | str) -> FlawReport:
    return report_from_document(canonical.loads(document))


# --- operations --------------------------------------------------------------

def classify_hint(report: FlawReport) -> ClassificationHint:
    """Advisory classification check; never mutates the report."""
    if report.flaw_class is not FlawClass.ERROR:
        return ClassificationHint(report.flaw_class, ErrorKind.NOT_APPLICABLE,
                                  "non-error reports have no error kind")
    n = len(report.samples)
    if n >= MIN_SYSTEMATIC_SAMPLES:
        return ClassificationHint(FlawClass.ERROR, ErrorKind.SYSTEMATIC,
                                  f"{n} samples suggest a systematic error")
    if n == 1:
        return ClassificationHint(FlawClass.ERROR, ErrorKind.ONE_OFF,
                                  "a single sample suggests a one-off error")
    return ClassificationHint(FlawClass.ERROR, report.error_kind,
                              f"{n} samples are inconclusive; keeping the reported kind")


def redact_for_publication(report: FlawReport) -> FlawReport:
    """Strip the reporter's contact channel before anything leaves the embargo."""
    if report.reporter.contact_channel == REDACTION_MARKER:
        return report
    return replace(report, reporter=replace(report.reporter, contact_channel=REDACTION_MARKER))
