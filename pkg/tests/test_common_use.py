"""Common-use tracking, threshold evaluation, and scope-expansion proposals."""

from __future__ import annotations

from datetime import timedelta

import pytest

from cfd import cards, common_use
from cfd.errors import NoObservers, SchemaViolation, TooEarly

from conftest import T0, make_card


def obs(key, observer, delta=1, at=T0):
    return common_use.UseCaseObservation(key, observer, delta, at)


def tracker_with(observations):
    tracker = common_use.CommonUseTracker(card_ref="card-judge")
    for o in observations:
        tracker = common_use.record_observation(tracker, o)
    return tracker


def test_observation_guards():
    with pytest.raises(SchemaViolation):
        obs("  ", "org-1")
    with pytest.raises(SchemaViolation):
        obs("summarize contracts", "org-1", delta=0)


def test_keys_normalize_and_observers_dedupe():
    tracker = tracker_with([
        obs("Summarize  Contracts", "org-1"),
        obs("summarize contracts", "org-1", delta=2),
        obs("summarize contracts", "org-2"),
    ])
    assert tracker.deployments == {"summarize contracts": 4}
    assert tracker.distinct_observers("summarize contracts") == 2
    assert tracker.total_observers == 2


def test_total_observers_is_union_across_keys():
    tracker = tracker_with([
        obs("use a", "org-1"), obs("use b", "org-1"), obs("use b", "org-2"),
    ])
    assert tracker.total_observers == 2


def test_thresholds_are_inclusive():
    tracker = tracker_with(
        [obs("popular use", f"org-{i}") for i in range(5)]
        + [obs("niche use", "org-95")]
        + [obs(f"filler {i}", f"org-{i+100}") for i in range(94)]
    )
    assert tracker.total_observers == 100
    clause = cards.CommonUseClause(threshold_fraction=0.05)
    hits = common_use.evaluate_thresholds(tracker, clause)
    assert [h.use_case_key for h in hits] == ["popular use"]
    assert hits[0].met_by is common_use.ThresholdCriterion.FRACTION

    # 4/100 misses an inclusive 0.05 threshold; 5/100 meets it exactly.
    smaller = tracker_with(
        [obs("popular use", f"org-{i}") for i in range(4)]
        + [obs(f"filler {i}", f"org-{i+100}") for i in range(96)]
    )
    assert common_use.evaluate_thresholds(smaller, clause) == []


def test_count_threshold_and_both():
    tracker = tracker_with([obs("bulk use", "org-1", delta=10)])
    by_count = cards.CommonUseClause(threshold_count=10)
    hits = common_use.evaluate_thresholds(tracker, by_count)
    assert hits[0].met_by is common_use.ThresholdCriterion.COUNT

    both = cards.CommonUseClause(threshold_fraction=0.5, threshold_count=10)
    hits = common_use.evaluate_thresholds(tracker, both)
    assert hits[0].met_by is common_use.ThresholdCriterion.BOTH


def test_fraction_without_observers_raises():
    tracker = common_use.CommonUseTracker(card_ref="card-judge")
    clause = cards.CommonUseClause(threshold_fraction=0.1)
    with pytest.raises(NoObservers):
        common_use.evaluate_thresholds(tracker, clause)
    # A pure count clause is fine with zero observers.
    assert common_use.evaluate_thresholds(
        tracker, cards.CommonUseClause(threshold_count=3)) == []


def test_expansion_entry_shape():
    card = cards.card_from_document(make_card())
    entry = common_use.expansion_entry(card, "summarize contracts")
    assert entry.origin is cards.ScopeOrigin.COMMON_USE_EXPANSION
    assert entry.direction is cards.ScopeDirection.IN_SCOPE
    assert entry.description == "Common use: summarize contracts"
    # Stable id per use case, distinct across use cases.
    again = common_use.expansion_entry(card, "summarize contracts")
    other = common_use.expansion_entry(card, "draft emails")
    assert entry.entry_id == again.entry_id != other.entry_id


def test_review_cycle_proposes_once_then_respects_cadence():
    card = cards.card_from_document(make_card(fraction=0.05))
    clause = card.common_use_clause
    tracker = tracker_with(
        [obs("contract triage", f"org-{i}") for i in range(5)]
        + [obs(f"filler {i}", f"org-{i+10}") for i in range(95)]
    )

    tracker, outcome = common_use.run_review_cycle(tracker, clause, card, T0)
    assert len(outcome.proposals) == 1
    assert outcome.next_review == T0 + timedelta(days=90)

    # Second cycle before the cadence elapses is refused.
    with pytest.raises(TooEarly):
        common_use.run_review_cycle(tracker, clause, card,
                                    T0 + timedelta(days=89))

    # Apply the proposal; the next due cycle proposes nothing new.
    revised = cards.revise_card(card, outcome.proposals[0])
    assert revised.version == 2
    added = [e for e in revised.scope_entries
             if e.origin is cards.ScopeOrigin.COMMON_USE_EXPANSION]
    assert len(added) == 1
    tracker, outcome = common_use.run_review_cycle(
        tracker, clause, revised, T0 + timedelta(days=90))
    assert outcome.proposals == ()
