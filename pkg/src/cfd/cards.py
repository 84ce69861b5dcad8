"""Extended model/system cards: machine-checkable intent and scope.

A card declares a mission statement, quantified efficacy measures, explicit
in/out scope entries, and an optional common-use clause. Cards are versioned;
every revision bumps the version by one and older versions stay retrievable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum

from . import canonical
from .errors import SchemaViolation, StaleVersion, UnknownCard, UnknownReference


class MetricKind(str, Enum):
    FALSE_POSITIVE_RATE = "false_positive_rate"
    FALSE_NEGATIVE_RATE = "false_negative_rate"
    DEMOGRAPHIC_RATE = "demographic_rate"
    CUSTOM_RATE = "custom_rate"


class Comparator(str, Enum):
    AT_MOST = "at_most"
    AT_LEAST = "at_least"
    EQUALS_WITHIN = "equals_within"


class ScopeDirection(str, Enum):
    IN_SCOPE = "in_scope"
    OUT_OF_SCOPE = "out_of_scope"


class ScopeOrigin(str, Enum):
    AUTHORED = "authored"
    COMMON_USE_EXPANSION = "common_use_expansion"


class ResolveHorizon(str, Enum):
    FUNDAMENTAL_FLAW = "fundamental_flaw"
    UNDER_DEVELOPMENT = "under_development"


class ScopeVerdict(str, Enum):
    IN_SCOPE_VIOLATION = "in_scope_violation"
    OUT_OF_SCOPE = "out_of_scope"
    IN_INTENT = "in_intent"


class FindingSeverity(str, Enum):
    WARN = "warn"
    BLOCK = "block"


@dataclass(frozen=True)
class EfficacyMeasure:
    measure_id: str
    metric_kind: MetricKind
    declared_value: float
    comparator: Comparator
    tolerance: float | None = None
    population_qualifier: str | None = None

    def __post_init__(self):
        if not self.measure_id:
            raise SchemaViolation("measure_id must be nonempty")
        if not 0.0 <= self.declared_value <= 1.0:
            raise SchemaViolation(
                f"declared_value {self.declared_value} outside [0, 1]", self.measure_id
            )
        if self.comparator is Comparator.EQUALS_WITHIN:
            if self.tolerance is None:
                raise SchemaViolation("equals_within requires a tolerance", self.measure_id)
            if not 0.0 <= self.tolerance <= 1.0:
                raise SchemaViolation(f"tolerance {self.tolerance} outside [0, 1]", self.measure_id)
        elif self.tolerance is not None:
            raise SchemaViolation(
                f"tolerance only allowed with equals_within, not {self.comparator.value}",
                self.measure_id,
            )


@dataclass(frozen=True)
class ScopeEntry:
    entry_id: str
    direction: ScopeDirection
    description: str
    rationale: str | None = None
    origin: ScopeOrigin = ScopeOrigin.AUTHORED
    resolve_horizon: ResolveHorizon | None = None

    def __post_init__(self):
        if not self.entry_id:
            raise SchemaViolation("entry_id must be nonempty")
        if not self.description.strip():
            raise SchemaViolation("scope entry description must be nonempty", self.entry_id)
        if self.direction is ScopeDirection.IN_SCOPE and self.resolve_horizon is not None:
            raise SchemaViolation(
                "in_scope entries never carry a resolve_horizon", self.entry_id
            )


@dataclass(frozen=True)
class CommonUseClause:
    threshold_fraction: float | None = None
    threshold_count: int | None = None
    review_period_days: int = 90

    def __post_init__(self):
        if self.threshold_fraction is None and self.threshold_count is None:
            raise SchemaViolation("common-use clause needs a fraction or count threshold")
        if self.threshold_fraction is not None and not 0.0 < self.threshold_fraction <= 1.0:
            raise SchemaViolation(f"threshold_fraction {self.threshold_fraction} outside (0, 1]")
        if self.threshold_count is not None and self.threshold_count < 1:
            raise SchemaViolation("threshold_count must be positive")
        if self.review_period_days < 1:
            raise SchemaViolation("review_period_days must be >= 1")


@dataclass(frozen=True)
class ModelCard:
    card_id: str
    version: int
    vendor_name: str
    system_name: str
    mission_statement: str
    efficacy_measures: tuple[EfficacyMeasure, ...] = ()
    scope_entries: tuple[ScopeEntry, ...] = ()
    common_use_clause: CommonUseClause | None = None
    created_at: datetime | None = None

    def __post_init__(self):
        if not self.card_id:
            raise SchemaViolation("card_id must be nonempty")
        if self.version < 1:
            raise SchemaViolation("version must be a positive integer", self.card_id)
        if not self.mission_statement.strip():
            raise SchemaViolation("mission_statement must be nonempty", self.card_id)
        descriptions = [e.description for e in self.scope_entries]
        if len(set(descriptions)) != len(descriptions):
            raise SchemaViolation("duplicate scope entry descriptions", self.card_id)
        measure_ids = [m.measure_id for m in self.efficacy_measures]
        if len(set(measure_ids)) != len(measure_ids):
            raise SchemaViolation("duplicate measure ids", self.card_id)
        entry_ids = [e.entry_id for e in self.scope_entries]
        if len(set(entry_ids)) != len(entry_ids):
            raise SchemaViolation("duplicate scope entry ids", self.card_id)

    def measure(self, measure_id: str) -> EfficacyMeasure:
        for m in self.efficacy_measures:
            if m.measure_id == measure_id:
                return m
        raise UnknownReference(f"measure {measure_id!r} not on card {self.card_id} v{self.version}")

    def scope_entry(self, entry_id: str) -> ScopeEntry:
        for e in self.scope_entries:
            if e.entry_id == entry_id:
                return e
        raise UnknownReference(f"scope entry {entry_id!r} not on card {self.card_id} v{self.version}")


@dataclass(frozen=True)
class Finding:
    severity: FindingSeverity
    message: str


@dataclass(frozen=True)
class ViolationClaim:
    """What the reporter says the system violated: a measure, a scope entry, or free text."""

    cited_measure: str | None = None
    cited_scope_entry: str | None = None
    behavior_description: str = ""

    def __post_init__(self):
        if not (self.cited_measure or self.cited_scope_entry or self.behavior_description.strip()):
            raise SchemaViolation("claim must cite a measure, a scope entry, or describe behavior")


@dataclass(frozen=True)
class ScopeDecision:
    verdict: ScopeVerdict
    matched_entry: str | None = None


_UNSET = object()


@dataclass(frozen=True)
class CardChangeSet:
    """A revision to apply against a specific base version of a card."""

    base_version: int
    set_mission: str | None = None
    add_measures: tuple[EfficacyMeasure, ...] = ()
    add_scope_entries: tuple[ScopeEntry, ...] = ()
    remove_scope_entry_ids: tuple[str, ...] = ()
    set_common_use: object = _UNSET  # CommonUseClause, None to clear, or unset


# --- serialization -----------------------------------------------------------

_CARD_KEYS = {"card_id", "version", "vendor", "system", "mission", "measures", "scope",
              "common_use", "created_at"}
_MEASURE_KEYS = {"id", "kind", "value", "comparator", "tolerance", "population"}
_SCOPE_KEYS = {"id", "direction", "description", "rationale", "origin", "resolve_horizon"}
_CLAUSE_KEYS = {"threshold_fraction", "threshold_count", "review_period_days"}


def _enum(cls, value, where: str):
    try:
        return cls(value)
    except ValueError:
        raise SchemaViolation(f"bad {cls.__name__} value {value!r} in {where}") from None


def measure_to_document(m: EfficacyMeasure) -> dict:
    return {
        "id": m.measure_id,
        "kind": m.metric_kind.value,
        "value": m.declared_value,
        "comparator": m.comparator.value,
        "tolerance": m.tolerance,
        "population": m.population_qualifier,
    }


def scope_entry_to_document(e: ScopeEntry) -> dict:
    return {
        "id": e.entry_id,
        "direction": e.direction.value,
        "description": e.description,
        "rationale": e.rationale,
        "origin": e.origin.value,
        "resolve_horizon": e.resolve_horizon.value if e.resolve_horizon else None,
    }


def clause_to_document(clause: CommonUseClause | None) -> dict | None:
    if clause is None:
        return None
    return {
        "threshold_fraction": clause.threshold_fraction,
        "threshold_count": clause.threshold_count,
        "review_period_days": clause.review_period_days,
    }


def card_to_document(card: ModelCard) -> dict:
    return {
        "card_id": card.card_id,
        "version": card.version,
        "vendor": card.vendor_name,
        "system": card.system_name,
        "mission": card.mission_statement,
        "measures": [measure_to_document(m) for m in card.efficacy_measures],
        "scope": [scope_entry_to_document(e) for e in card.scope_entries],
        "common_use": clause_to_document(card.common_use_clause),
        "created_at": canonical.format_ts(card.created_at) if card.created_at else None,
    }


def serialize_model_card(card: ModelCard) -> bytes:
    return canonical.dumps(card_to_document(card))


def measure_from_document(raw: dict) -> EfficacyMeasure:
    canonical.reject_unknown_keys(raw, _MEASURE_KEYS, "measure")
    return EfficacyMeasure(
        measure_id=raw.get("id", ""),
        metric_kind=_enum(MetricKind, raw.get("kind"), "measure"),
        declared_value=float(raw.get("value", -1)),
        comparator=_enum(Comparator, raw.get("comparator"), "measure"),
        tolerance=raw.get("tolerance"),
        population_qualifier=raw.get("population"),
    )


def scope_entry_from_document(raw: dict) -> ScopeEntry:
    canonical.reject_unknown_keys(raw, _SCOPE_KEYS, "scope entry")
    horizon = raw.get("resolve_horizon")
    return ScopeEntry(
        entry_id=raw.get("id", ""),
        direction=_enum(ScopeDirection, raw.get("direction"), "scope entry"),
        description=raw.get("description", ""),
        rationale=raw.get("rationale"),
        origin=_enum(ScopeOrigin, raw.get("origin", "authored"), "scope entry"),
        resolve_horizon=_enum(ResolveHorizon, horizon, "scope entry") if horizon else None,
    )


def clause_from_document(raw: dict | None) -> CommonUseClause | None:
    if raw is None:
        return None
    canonical.reject_unknown_keys(raw, _CLAUSE_KEYS, "common_use")
    return CommonUseClause(
        threshold_fraction=raw.get("threshold_fraction"),
        threshold_count=raw.get("threshold_count"),
        review_period_days=raw.get("review_period_days", 90),
    )


def card_from_document(doc: dict) -> ModelCard:
    canonical.reject_unknown_keys(doc, _CARD_KEYS, "card")
    for key in ("card_id", "vendor", "system"):
        if key not in doc or not isinstance(doc[key], str):
            raise SchemaViolation(f"card field {key!r} missing or not a string")
    if "mission" not in doc or not isinstance(doc.get("mission"), str):
        raise SchemaViolation("card is missing its mission statement")
    version = doc.get("version", 1)
    if not isinstance(version, int):
        raise SchemaViolation("version must be an integer")

    measures = [measure_from_document(raw) for raw in doc.get("measures", [])]
    scope = [scope_entry_from_document(raw) for raw in doc.get("scope", [])]
    clause = clause_from_document(doc.get("common_use"))
    created = doc.get("created_at")
    return ModelCard(
        card_id=doc["card_id"],
        version=version,
        vendor_name=doc["vendor"],
        system_name=doc["system"],
        mission_statement=doc["mission"],
        efficacy_measures=tuple(measures),
        scope_entries=tuple(scope),
        common_use_clause=clause,
        created_at=canonical.parse_ts(created) if created else None,
    )


def parse_model_card(document: bytes | str) -> ModelCard:
    return card_from_document(canonical.loads(document))


# --- operations --------------------------------------------------------------

def validate_completeness(card: ModelCard) -> list[Finding]:
    """Check whether a card is usable as a disclosure baseline.

    Block findings mean reports cannot be judged against the card at all;
    warn findings flag gaps that weaken the process but do not stop it.
    """
    findings: list[Finding] = []
    if not card.mission_statement.strip():
        findings.append(Finding(FindingSeverity.BLOCK, "card has no mission statement"))
    if not card.efficacy_measures:
        findings.append(Finding(FindingSeverity.BLOCK, "card declares no efficacy measures"))
    if not card.scope_entries:
        findings.append(Finding(FindingSeverity.WARN, "card declares no scope entries"))
    if card.common_use_clause is None:
        findings.append(Finding(FindingSeverity.WARN, "card has no common-use clause"))
    return findings


def match_claim(card: ModelCard, claim: ViolationClaim, observed=None) -> ScopeDecision:
    """Decide whether a claim is an in-scope violation, out of scope, or in intent.

    ``observed`` is an optional statistical verdict from verification; a cited
    measure only contradicts the card when the verdict says it is violated.
    Free-text-only claims never auto-match scope entries: they come back
    in_intent with no matched entry, leaving the call to a human reviewer.
    """
    if claim.cited_scope_entry:
        entry = card.scope_entry(claim.cited_scope_entry)
        if entry.direction is ScopeDirection.OUT_OF_SCOPE:
            return ScopeDecision(ScopeVerdict.OUT_OF_SCOPE, matched_entry=entry.entry_id)
        return ScopeDecision(ScopeVerdict.IN_SCOPE_VIOLATION, matched_entry=entry.entry_id)
    if claim.cited_measure:
        measure = card.measure(claim.cited_measure)
        if observed is not None and getattr(observed, "violates", False):
            return ScopeDecision(ScopeVerdict.IN_SCOPE_VIOLATION, matched_entry=measure.measure_id)
        return ScopeDecision(ScopeVerdict.IN_INTENT, matched_entry=measure.measure_id)
    return ScopeDecision(ScopeVerdict.IN_INTENT, matched_entry=None)


def revise_card(card: ModelCard, changes: CardChangeSet,
                created_at: datetime | None = None) -> ModelCard:
    """Apply a change set to the latest version of a card, bumping the version."""
    if changes.base_version != card.version:
        raise StaleVersion(
            f"changes target version {changes.base_version} but latest is {card.version}",
            card.card_id,
        )
    kept = tuple(e for e in card.scope_entries
                 if e.entry_id not in set(changes.remove_scope_entry_ids))
    clause = card.common_use_clause if changes.set_common_use is _UNSET else changes.set_common_use
    return replace(
        card,
        version=card.version + 1,
        mission_statement=changes.set_mission or card.mission_statement,
        efficacy_measures=card.efficacy_measures + changes.add_measures,
        scope_entries=kept + changes.add_scope_entries,
        common_use_clause=clause,
        created_at=created_at or card.created_at,
    )


def changeset_to_document(changes: CardChangeSet) -> dict:
    doc = {
        "base_version": changes.base_version,
        "set_mission": changes.set_mission,
        "add_measures": [measure_to_document(m) for m in changes.add_measures],
        "add_scope": [scope_entry_to_document(e) for e in changes.add_scope_entries],
        "remove_scope_ids": list(changes.remove_scope_entry_ids),
    }
    if changes.set_common_use is _UNSET:
        doc["set_common_use"] = {"unchanged": True}
    else:
        doc["set_common_use"] = clause_to_document(changes.set_common_use)
    return doc


def changeset_from_document(doc: dict) -> CardChangeSet:
    raw_clause = doc.get("set_common_use", {"unchanged": True})
    if isinstance(raw_clause, dict) and raw_clause.get("unchanged"):
        clause = _UNSET
    else:
        clause = clause_from_document(raw_clause)
    base = doc.get("base_version")
    if not isinstance(base, int):
        raise SchemaViolation("change set needs an integer base_version")
    return CardChangeSet(
        base_version=base,
        set_mission=doc.get("set_mission"),
        add_measures=tuple(measure_from_document(m) for m in doc.get("add_measures", [])),
        add_scope_entries=tuple(scope_entry_from_document(e) for e in doc.get("add_scope", [])),
        remove_scope_entry_ids=tuple(doc.get("remove_scope_ids", [])),
        set_common_use=clause,
    )


class CardStore:
    """In-memory versioned card store; revisions serialize via optimistic version check."""

    def __init__(self):
        self._versions: dict[str, list[ModelCard]] = {}

    def register(self, card: ModelCard) -> ModelCard:
        if card.card_id in self._versions:
            raise StaleVersion(f"card {card.card_id} already registered", card.card_id)
        if card.version != 1:
            raise SchemaViolation("new cards must start at version 1", card.card_id)
        self._versions[card.card_id] = [card]
        return card

    def get(self, card_id: str, version: int | None = None) -> ModelCard:
        if card_id not in self._versions:
            raise UnknownCard(f"no card {card_id!r}", card_id)
        history = self._versions[card_id]
        if version is None:
            return history[-1]
        if not 1 <= version <= len(history):
            raise UnknownCard(f"card {card_id} has no version {version}", card_id)
        return history[version - 1]

    def versions(self, card_id: str) -> list[ModelCard]:
        if card_id not in self._versions:
            raise UnknownCard(f"no card {card_id!r}", card_id)
        return list(self._versions[card_id])

    def card_ids(self) -> list[str]:
        return sorted(self._versions)

    def revise(self, card_id: str, changes: CardChangeSet,
               created_at: datetime | None = None) -> ModelCard:
        latest = self.get(card_id)
        revised = revise_card(latest, changes, created_at=created_at)
        self._versions[card_id].append(revised)
        return revised
