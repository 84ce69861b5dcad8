"""Dynamic scope expansion: track observed use cases and propose card updates.

The denominator for the fraction threshold is distinct observers of the model
overall; threshold comparisons are inclusive.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from enum import Enum

from .cards import (
    CardChangeSet,
    CommonUseClause,
    ModelCard,
    ScopeDirection,
    ScopeEntry,
    ScopeOrigin,
)
from .errors import NoObservers, SchemaViolation, TooEarly


class ThresholdCriterion(str, Enum):
    FRACTION = "fraction"
    COUNT = "count"
    BOTH = "both"


@dataclass(frozen=True)
class UseCaseObservation:
    use_case_key: str
    observer: str
    deployment_count_delta: int
    observed_at: datetime

    def __post_init__(self):
        if not self.use_case_key.strip():
            raise SchemaViolation("use_case_key must be nonempty")
        if self.deployment_count_delta < 1:
            raise SchemaViolation("deployment_count_delta must be strictly positive")


def normalize_key(key: str) -> str:
    return " ".join(key.casefold().split())


@dataclass
class CommonUseTracker:
    card_ref: str
    deployments: dict[str, int] = field(default_factory=dict)
    observers_by_key: dict[str, frozenset[str]] = field(default_factory=dict)
    last_review: datetime | None = None

    @property
    def total_observers(self) -> int:
        all_observers: set[str] = set()
        for observers in self.observers_by_key.values():
            all_observers |= observers
        return len(all_observers)

    def distinct_observers(self, key: str) -> int:
        return len(self.observers_by_key.get(key, frozenset()))


@dataclass(frozen=True)
class ThresholdHit:
    use_case_key: str
    met_by: ThresholdCriterion


@dataclass(frozen=True)
class ReviewOutcome:
    proposals: tuple[CardChangeSet, ...]
    next_review: datetime


def record_observation(tracker: CommonUseTracker,
                       obs: UseCaseObservation) -> CommonUseTracker:
    """Fold one observation in; counters never decrease."""
    key = normalize_key(obs.use_case_key)
    deployments = dict(tracker.deployments)
    deployments[key] = deployments.get(key, 0) + obs.deployment_count_delta
    observers = dict(tracker.observers_by_key)
    observers[key] = observers.get(key, frozenset()) | {obs.observer}
    return replace(tracker, deployments=deployments, observers_by_key=observers)


def evaluate_thresholds(tracker: CommonUseTracker,
                        clause: CommonUseClause) -> list[ThresholdHit]:
    """Which use cases currently qualify as common under the card's clause."""
    total = tracker.total_observers
    if clause.threshold_fraction is not None and total == 0:
        raise NoObservers("fraction threshold requested but no observers recorded",
                          tracker.card_ref)
    hits: list[ThresholdHit] = []
    for key in sorted(tracker.deployments):
        by_fraction = (
            clause.threshold_fraction is not None
            and tracker.distinct_observers(key) / total >= clause.threshold_fraction
        )
        by_count = (
            clause.threshold_count is not None
            and tracker.deployments[key] >= clause.threshold_count
        )
        if by_fraction and by_count:
            hits.append(ThresholdHit(key, ThresholdCriterion.BOTH))
        elif by_fraction:
            hits.append(ThresholdHit(key, ThresholdCriterion.FRACTION))
        elif by_count:
            hits.append(ThresholdHit(key, ThresholdCriterion.COUNT))
    return hits


def expansion_entry(card: ModelCard, key: str) -> ScopeEntry:
    import hashlib

    digest = hashlib.sha256(key.encode("utf-8")).hexdigest()[:8]
    return ScopeEntry(
        entry_id=f"cu-{digest}",
        direction=ScopeDirection.IN_SCOPE,
        description=f"Common use: {key}",
        rationale="adoption passed the card's common-use threshold",
        origin=ScopeOrigin.COMMON_USE_EXPANSION,
    )


def _covered(card: ModelCard, key: str) -> bool:
    wanted = f"common use: {key}"
    return any(
        e.direction is ScopeDirection.IN_SCOPE and e.description.casefold() == wanted
        for e in card.scope_entries
    )


def run_review_cycle(tracker: CommonUseTracker, clause: CommonUseClause,
                     card: ModelCard, now: datetime,
                     ) -> tuple[CommonUseTracker, ReviewOutcome]:
    """Periodic review: one scope-expansion proposal per newly common use case.

    Proposals are advisory change sets; applying one is a vendor-role card
    revision, after which reporting against the new scope becomes possible.
    """
    if tracker.last_review is not None:
        due = tracker.last_review + timedelta(days=clause.review_period_days)
        if now < due:
            raise TooEarly(f"next review for card {tracker.card_ref} is at {due.isoformat()}",
                           tracker.card_ref)
    proposals = tuple(
        CardChangeSet(base_version=card.version,
                      add_scope_entries=(expansion_entry(card, hit.use_case_key),))
        for hit in evaluate_thresholds(tracker, clause)
        if not _covered(card, hit.use_case_key)
    )
    tracker = replace(tracker, last_review=now)
    outcome = ReviewOutcome(proposals=proposals,
                            next_review=now + timedelta(days=clause.review_period_days))
    return tracker, outcome
