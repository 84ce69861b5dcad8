"""Automatic flaw verification: sample replay, exact statistics, re-verification.

Statistical tests run in exact rational arithmetic; declared rates like 0.001
make normal approximations unsafe at the sample sizes reports actually carry.
"""

from __future__ import annotations

import hashlib
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from enum import Enum
from fractions import Fraction
from math import comb

from scipy.stats import chi2 as _chi2

from .cards import Comparator, EfficacyMeasure
from .errors import (
    ConnectorUnreachable,
    DomainError,
    NonAcceptedReport,
    TooEarly,
    UnknownLabel,
)
from .lifecycle import CaseRecord
from .reports import FlawReport, MatchRule, SamplePair
from . import canonical

DEFAULT_ALPHA = 0.01
EXACT_MULTINOMIAL_MAX_N = 12


class ConnectorKind(str, Enum):
    HTTP_ENDPOINT = "http_endpoint"
    LOCAL_MOCK = "local_mock"


class TestKind(str, Enum):
    BINOMIAL_TAIL = "binomial_tail"
    RATE_COMPARISON = "rate_comparison"
    DISTRIBUTION_SHIFT = "distribution_shift"


class ReverificationOutcome(str, Enum):
    STILL_FIXED = "still_fixed"
    REGRESSED = "regressed"


@dataclass
class MockModel:
    """Deterministic stand-in model: exact input -> output rules, echo otherwise.

    ``injected_error_rate`` deterministically garbles that share of inputs,
    keyed by a hash of (seed, input), so reruns always agree.
    """

    rule_table: dict[bytes, bytes] = field(default_factory=dict)
    injected_error_rate: float = 0.0
    seed: int = 0
    snapshot_tag: str = "mock-v1"

    def invoke(self, input_payload: bytes) -> bytes:
        output = self.rule_table.get(input_payload, input_payload)
        if self.injected_error_rate > 0.0:
            digest = hashlib.sha256(str(self.seed).encode() + b"|" + input_payload).digest()
            draw = int.from_bytes(digest[:8], "big") / 2**64
            if draw < self.injected_error_rate:
                output = b"[garbled]" + output
        return output


@dataclass
class ModelConnector:
    """Black box mapping input bytes to output bytes; no hidden retries."""

    connector_id: str
    kind: ConnectorKind
    descriptor: str = ""
    timeout: float = 10.0
    mock: MockModel | None = None

    def invoke(self, input_payload: bytes, media_type: str = "text") -> tuple[bytes, str]:
        """Returns (output bytes, self-reported snapshot tag)."""
        if self.kind is ConnectorKind.LOCAL_MOCK:
            if self.mock is None:
                raise ConnectorUnreachable(f"connector {self.connector_id} has no mock bound")
            return self.mock.invoke(input_payload), self.mock.snapshot_tag
        import httpx

        try:
            resp = httpx.post(
                self.descriptor,
                content=input_payload,
                headers={"content-type": f"application/x-cfd-{media_type}"},
                timeout=self.timeout,
            )
        except httpx.TimeoutException:
            raise TimeoutError(f"connector {self.connector_id} timed out") from None
        except httpx.HTTPError as exc:
            raise ConnectorUnreachable(f"connector {self.connector_id}: {exc}") from exc
        return resp.content, resp.headers.get("x-model-snapshot", "")


@dataclass(frozen=True)
class SampleResult:
    sample_index: int
    reproduced: bool
    observed_output_hash: str
    timed_out: bool = False


@dataclass(frozen=True)
class VerificationResult:
    result_id: str
    case_ref: str
    per_sample: tuple[SampleResult, ...]
    all_reproduced: bool
    executed_at: datetime
    model_snapshot_tag: str = ""


@dataclass(frozen=True)
class StatisticalVerdict:
    test_kind: TestKind
    n: int
    k: int
    declared_rate: float
    p_value: float
    alpha: float
    violates: bool


@dataclass(frozen=True)
class ReverificationSchedule:
    case_ref: str
    period_days: int
    next_run: datetime
    connector_id: str = ""
    last_outcome: ReverificationOutcome | None = None


# --- sample matching ---------------------------------------------------------

def normalize_text(data: bytes) -> str:
    """Case-fold and collapse all whitespace runs to single spaces."""
    text = data.decode("utf-8", errors="replace")
    return " ".join(text.casefold().split())


def _predicate_contains_substring(observed: bytes, forbidden: bytes) -> bool:
    return forbidden in observed


def _predicate_regex_class(observed: bytes, forbidden: bytes) -> bool:
    pattern = forbidden.decode("utf-8", errors="replace")
    return re.search(pattern, observed.decode("utf-8", errors="replace")) is not None


def _predicate_length_threshold(observed: bytes, forbidden: bytes) -> bool:
    try:
        threshold = int(forbidden.decode("ascii").strip())
    except ValueError:
        raise DomainError("length-threshold predicate needs an integer forbidden payload") from None
    return len(observed) >= threshold


PREDICATE_REGISTRY: dict[str, callable] = {
    "contains-substring": _predicate_contains_substring,
    "regex-class": _predicate_regex_class,
    "length-threshold": _predicate_length_threshold,
}


def matches_forbidden(pair: SamplePair, observed: bytes) -> bool:
    """True when the model produced the output it should not generate."""
    if pair.match_rule is MatchRule.EXACT:
        return observed == pair.forbidden_output
    if pair.match_rule is MatchRule.NORMALIZED_TEXT:
        return normalize_text(observed) == normalize_text(pair.forbidden_output)
    predicate = PREDICATE_REGISTRY.get(pair.predicate or "")
    if predicate is None:
        raise DomainError(f"unknown predicate tag {pair.predicate!r}")
    return predicate(observed, pair.forbidden_output)


def reproduce(report: FlawReport, connector: ModelConnector, case_ref: str,
              now: datetime, result_id: str | None = None,
              parallelism: int = 4) -> VerificationResult:
    """Replay every sample pair against the connector and compare per match rule.

    Per-sample timeouts count as not reproduced (with a marker); an unreachable
    connector raises instead of fabricating results.
    """

    snapshot_tags: list[str] = []

    def run_one(index_pair):
        index, pair = index_pair
        try:
            observed, tag = connector.invoke(pair.input_payload, pair.input_media.value)
        except TimeoutError:
            return SampleResult(index, reproduced=False, observed_output_hash="", timed_out=True)
        snapshot_tags.append(tag)
        return SampleResult(
            index,
            reproduced=matches_forbidden(pair, observed),
            observed_output_hash=hashlib.sha256(observed).hexdigest(),
        )

    indexed = list(enumerate(report.samples))
    if parallelism > 1 and len(indexed) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(run_one, indexed))
    else:
        results = [run_one(p) for p in indexed]
    results.sort(key=lambda r: r.sample_index)
    per_sample = tuple(results)
    return VerificationResult(
        result_id=result_id or f"vr-{hashlib.sha256(repr(per_sample).encode()).hexdigest()[:12]}",
        case_ref=case_ref,
        per_sample=per_sample,
        all_reproduced=all(r.reproduced for r in per_sample),
        executed_at=now,
        model_snapshot_tag=snapshot_tags[0] if snapshot_tags else "",
    )


# --- statistics --------------------------------------------------------------

def as_rational(value) -> Fraction:
    """Decimal-faithful conversion: floats go through their shortest repr."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


def binomial_upper_tail(p: Fraction, n: int, k: int) -> Fraction:
    """P(X >= k) for X ~ Binomial(n, p), exactly.

    Computed by a multiplicative term recurrence from the k-th term; the test
    suite checks it against a direct term-by-term sum.
    """
    if k <= 0:
        return Fraction(1)
    if k > n:
        return Fraction(0)
    if p == 0:
        return Fraction(0)
    if p == 1:
        return Fraction(1)
    q = 1 - p
    term = Fraction(comb(n, k)) * p**k * q**(n - k)
    total = term
    for i in range(k, n):
        term = term * (n - i) * p / ((i + 1) * q)
        total += term
    return total


def binomial_violation_test(declared_rate, n: int, k: int,
                            alpha=DEFAULT_ALPHA) -> StatisticalVerdict:
    """One-sided upper-tail exact binomial test against the declared rate."""
    p = as_rational(declared_rate)
    a = as_rational(alpha)
    if not 0 <= k <= n or n < 1:
        raise DomainError(f"need 0 <= k <= n with n >= 1, got n={n}, k={k}")
    if not 0 <= p <= 1:
        raise DomainError(f"declared_rate {declared_rate} outside [0, 1]")
    if not 0 < a < 1:
        raise DomainError(f"alpha {alpha} outside (0, 1)")
    p_value = binomial_upper_tail(p, n, k)
    return StatisticalVerdict(
        test_kind=TestKind.BINOMIAL_TAIL,
        n=n,
        k=k,
        declared_rate=float(p),
        p_value=float(p_value),
        alpha=float(a),
        violates=p_value < a,
    )


def rate_comparison(measure: EfficacyMeasure, observed_k: int, observed_n: int,
                    alpha=DEFAULT_ALPHA) -> StatisticalVerdict:
    """Test observed counts against a card measure, honoring its comparator.

    ``observed_k`` counts adverse events for at_most measures and successes
    for at_least measures.
    """
    if observed_n < 1:
        raise DomainError("observed_n must be positive")
    if not 0 <= observed_k <= observed_n:
        raise DomainError(f"need 0 <= k <= n, got k={observed_k}, n={observed_n}")
    value = as_rational(measure.declared_value)
    a = as_rational(alpha)

    if measure.comparator is Comparator.AT_MOST:
        inner = binomial_violation_test(value, observed_n, observed_k, a)
        return replace(inner, test_kind=TestKind.RATE_COMPARISON)
    if measure.comparator is Comparator.AT_LEAST:
        # Too few successes: upper tail on failures at the complementary rate.
        inner = binomial_violation_test(1 - value, observed_n, observed_n - observed_k, a)
        return replace(inner, test_kind=TestKind.RATE_COMPARISON,
                       n=observed_n, k=observed_k, declared_rate=float(value))
    # equals_within: two one-sided tests against value +/- tolerance.
    tol = as_rational(measure.tolerance)
    hi = min(Fraction(1), value + tol)
    lo = max(Fraction(0), value - tol)
    upper = binomial_upper_tail(hi, observed_n, observed_k)          # too many
    lower = binomial_upper_tail(1 - lo, observed_n, observed_n - observed_k)  # too few
    worst = min(upper, lower)
    return StatisticalVerdict(
        test_kind=TestKind.RATE_COMPARISON,
        n=observed_n,
        k=observed_k,
        declared_rate=float(value),
        p_value=float(worst),
        alpha=float(a),
        violates=worst < a / 2,
    )


def _compositions(total: int, parts: int):
    """All nonnegative integer vectors of the given length summing to total."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _multinomial_pmf(counts: tuple[int, ...], probs: list[Fraction]) -> Fraction:
    n = sum(counts)
    coef = 1
    remaining = n
    for c in counts:
        coef *= comb(remaining, c)
        remaining -= c
    prob = Fraction(1)
    for c, p in zip(counts, probs):
        prob *= p**c
    return coef * prob


def sampling_bias_check(report_inputs: list[str], reference_distribution: dict,
                        alpha=DEFAULT_ALPHA) -> StatisticalVerdict:
    """Goodness-of-fit of the report's sample categories against a reference.

    A violating verdict means the sample set is inconsistent with the
    reference, i.e. biased sampling is plausible. Exact multinomial test by
    full enumeration for small counts, chi-square tail otherwise.
    """
    a = as_rational(alpha)
    probs = {label: as_rational(p) for label, p in reference_distribution.items()}
    total_prob = sum(probs.values())
    if abs(float(total_prob) - 1.0) > 1e-9:
        raise DomainError(f"reference distribution sums to {float(total_prob)}, not 1")
    counts: dict[str, int] = {label: 0 for label in probs}
    for label in report_inputs:
        if label not in probs:
            raise UnknownLabel(f"label {label!r} absent from the reference distribution")
        counts[label] += 1
    n = len(report_inputs)
    if n == 0:
        raise DomainError("no report inputs to check")

    for label, p in probs.items():
        if p == 0 and counts[label] > 0:
            return StatisticalVerdict(TestKind.DISTRIBUTION_SHIFT, n, counts[label],
                                      0.0, 0.0, float(a), violates=True)

    labels = sorted(probs)
    prob_vec = [probs[label] for label in labels]
    observed = tuple(counts[label] for label in labels)

    if n <= EXACT_MULTINOMIAL_MAX_N:
        p_obs = _multinomial_pmf(observed, prob_vec)
        p_value = Fraction(0)
        for outcome in _compositions(n, len(labels)):
            pmf = _multinomial_pmf(outcome, prob_vec)
            if pmf <= p_obs:
                p_value += pmf
        p_float = float(min(p_value, Fraction(1)))
        violates = p_value < a
    else:
        stat = 0.0
        for obs, p in zip(observed, prob_vec):
            expected = float(p) * n
            if expected == 0:
                continue
            stat += (obs - expected) ** 2 / expected
        p_float = float(_chi2.sf(stat, df=len(labels) - 1))
        violates = p_float < float(a)

    k_off = max(observed) if observed else 0
    return StatisticalVerdict(TestKind.DISTRIBUTION_SHIFT, n, k_off, 0.0,
                              p_float, float(a), violates)


# --- re-verification ---------------------------------------------------------

def make_schedule(case_ref: str, now: datetime, period_days: int = 30,
                  connector_id: str = "") -> ReverificationSchedule:
    return ReverificationSchedule(case_ref=case_ref, period_days=period_days,
                                  next_run=now + timedelta(days=period_days),
                                  connector_id=connector_id)


def run_reverification(schedule: ReverificationSchedule, report: FlawReport,
                       connector: ModelConnector, now: datetime,
                       result_id: str | None = None,
                       ) -> tuple[ReverificationSchedule, VerificationResult]:
    """Replay the accepted samples again; any reproduction means regression."""
    if now < schedule.next_run:
        raise TooEarly(f"next re-verification for case {schedule.case_ref} is at "
                       f"{schedule.next_run.isoformat()}", schedule.case_ref)
    result = reproduce(report, connector, schedule.case_ref, now, result_id=result_id)
    regressed = any(r.reproduced for r in result.per_sample)
    outcome = ReverificationOutcome.REGRESSED if regressed else ReverificationOutcome.STILL_FIXED
    schedule = replace(schedule,
                       next_run=schedule.next_run + timedelta(days=schedule.period_days),
                       last_outcome=outcome)
    return schedule, result


# --- serialization -----------------------------------------------------------

def result_to_document(result: VerificationResult) -> dict:
    return {
        "result_id": result.result_id,
        "case_ref": result.case_ref,
        "per_sample": [
            {
                "sample_index": s.sample_index,
                "reproduced": s.reproduced,
                "observed_output_hash": s.observed_output_hash,
                "timed_out": s.timed_out,
            }
            for s in result.per_sample
        ],
        "all_reproduced": result.all_reproduced,
        "executed_at": canonical.format_ts(result.executed_at),
        "model_snapshot_tag": result.model_snapshot_tag,
    }


def result_from_document(doc: dict) -> VerificationResult:
    return VerificationResult(
        result_id=doc["result_id"],
        case_ref=doc["case_ref"],
        per_sample=tuple(
            SampleResult(
                sample_index=s["sample_index"],
                reproduced=s["reproduced"],
                observed_output_hash=s.get("observed_output_hash", ""),
                timed_out=s.get("timed_out", False),
            )
            for s in doc.get("per_sample", [])
        ),
        all_reproduced=doc["all_reproduced"],
        executed_at=canonical.parse_ts(doc["executed_at"]),
        model_snapshot_tag=doc.get("model_snapshot_tag", ""),
    )


def verdict_to_document(v: StatisticalVerdict | None) -> dict | None:
    if v is None:
        return None
    return {
        "test_kind": v.test_kind.value,
        "n": v.n,
        "k": v.k,
        "declared_rate": v.declared_rate,
        "p_value": v.p_value,
        "alpha": v.alpha,
        "violates": v.violates,
    }


def verdict_from_document(doc: dict | None) -> StatisticalVerdict | None:
    if doc is None:
        return None
    return StatisticalVerdict(
        test_kind=TestKind(doc["test_kind"]),
        n=doc["n"],
        k=doc["k"],
        declared_rate=doc["declared_rate"],
        p_value=doc["p_value"],
        alpha=doc["alpha"],
        violates=doc["violates"],
    )


def schedule_to_document(s: ReverificationSchedule) -> dict:
    return {
        "case_ref": s.case_ref,
        "period_days": s.period_days,
        "next_run": canonical.format_ts(s.next_run),
        "connector_id": s.connector_id,
        "last_outcome": s.last_outcome.value if s.last_outcome else None,
    }


def schedule_from_document(doc: dict) -> ReverificationSchedule:
    outcome = doc.get("last_outcome")
    return ReverificationSchedule(
        case_ref=doc["case_ref"],
        period_days=doc["period_days"],
        next_run=canonical.parse_ts(doc["next_run"]),
        connector_id=doc.get("connector_id", ""),
        last_outcome=ReverificationOutcome(outcome) if outcome else None,
    )


# --- corpus export -----------------------------------------------------------

def export_test_corpus(entries: list[tuple[FlawReport, CaseRecord]]) -> bytes:
    """Deterministic, deduplicated sample corpus from accepted reports.

    Dedup key is (input hash, forbidden-output hash); output is sorted by that
    key so any input ordering yields identical bytes.
    """
    from .reports import sample_to_document

    seen: dict[tuple[str, str], dict] = {}
    for report, case in entries:
        if case.cfe_id is None:
            raise NonAcceptedReport(
                f"case {case.case_id} was never accepted or awarded", case.case_id)
        for pair in report.samples:
            key = (hashlib.sha256(pair.input_payload).hexdigest(),
                   hashlib.sha256(pair.forbidden_output).hexdigest())
            seen.setdefault(key, sample_to_document(pair))
    samples = [seen[key] for key in sorted(seen)]
    return canonical.dumps({"corpus": "cfd-test-corpus", "samples": samples})
