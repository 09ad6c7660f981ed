"""Neuroscience questionnaire scoring and cohort aggregation.

Twenty items on a 1..7 agreement scale, five items per domain
(UserExperience, GameMechanics, InGameAssistance, VRISE), so each domain
sub-score spans 5..35 and the total spans 20..140.  Which printed item
belongs to which domain is a config input — a validated partition of items
1..20 into four five-item groups — because deployments order their
questionnaires differently.

Cohort statistics are medians with median absolute deviations: the
questionnaire's scale is ordinal and cohorts are small, so rank-based
summaries are the honest choice.  Two cut-off tiers gate a build: the
minimum tier asks every domain median to reach 25 and the total median 100;
the parsimonious tier raises those bars to 30 and 120.  All cut-offs are
inclusive.
"""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .config import DEFAULT_DOMAIN_MAPPING, validate_domain_mapping

DOMAINS = ("UserExperience", "GameMechanics", "InGameAssistance", "VRISE")
ITEM_COUNT = 20
SCALE_MIN, SCALE_MAX = 1, 7

CUTOFFS = {
    "minimum": {"sub": 25, "total": 100},
    "parsimonious": {"sub": 30, "total": 120},
}


class VrnqError(Exception):
    """Raised for malformed questionnaire data."""


@dataclass(frozen=True)
class VrnqResponseSet:
    """One participant's 20 item ratings, in printed-item order."""

    participant_id: str
    items: tuple[int, ...]
    feedback: Optional[str] = None  # stored verbatim, never analyzed

    def __post_init__(self) -> None:
        if len(self.items) != ITEM_COUNT:
            raise VrnqError(
                f"{self.participant_id}: expected {ITEM_COUNT} items, "
                f"got {len(self.items)}")
        for index, value in enumerate(self.items, start=1):
            if isinstance(value, bool) or not isinstance(value, int):
                raise VrnqError(
                    f"{self.participant_id}: item {index} must be an integer")
            if not SCALE_MIN <= value <= SCALE_MAX:
                raise VrnqError(
                    f"{self.participant_id}: item {index} value {value} "
                    f"outside {SCALE_MIN}..{SCALE_MAX}")


@dataclass(frozen=True)
class VrnqScores:
    participant_id: str
    sub_scores: dict[str, int]  # domain -> 5..35
    total: int  # 20..140


def score_vrnq(responses: VrnqResponseSet,
               domain_mapping: Optional[Mapping[str, Sequence[int]]] = None) -> VrnqScores:
    """Sum items into the four domain sub-scores and the total."""
    mapping = domain_mapping if domain_mapping is not None else DEFAULT_DOMAIN_MAPPING
    validate_domain_mapping(mapping)
    subs = {
        domain: sum(responses.items[item - 1] for item in mapping[domain])
        for domain in DOMAINS
    }
    return VrnqScores(participant_id=responses.participant_id,
                      sub_scores=subs, total=sum(subs.values()))


def _median(values: Sequence[float]) -> float:
    # even-length medians are the mean of the two middle values
    return float(statistics.median(values))


def median_absolute_deviation(values: Sequence[float]) -> float:
    """Median of absolute deviations from the median (no scaling constant)."""
    if not values:
        raise VrnqError("cannot aggregate an empty cohort")
    center = _median(values)
    return _median([abs(v - center) for v in values])


@dataclass(frozen=True)
class ScoreStats:
    median: float
    mad: float
    n: int


@dataclass(frozen=True)
class CohortAggregate:
    """Median/MAD summary per domain and for the total."""

    sub_stats: dict[str, ScoreStats]
    total_stats: ScoreStats


def aggregate_cohort(cohort: Iterable[VrnqScores]) -> CohortAggregate:
    scored = list(cohort)
    if not scored:
        raise VrnqError("cannot aggregate an empty cohort")
    sub_stats = {}
    for domain in DOMAINS:
        values = [s.sub_scores[domain] for s in scored]
        sub_stats[domain] = ScoreStats(
            median=_median(values), mad=median_absolute_deviation(values),
            n=len(values))
    totals = [s.total for s in scored]
    total_stats = ScoreStats(
        median=_median(totals), mad=median_absolute_deviation(totals),
        n=len(totals))
    return CohortAggregate(sub_stats=sub_stats, total_stats=total_stats)


@dataclass(frozen=True)
class CutoffVerdict:
    tier: str
    passes: dict[str, bool]  # four domains plus "total"
    overall: bool


def check_cutoffs(aggregate: CohortAggregate, tier: str = "parsimonious") -> CutoffVerdict:
    """Gate a cohort summary against a cut-off tier (inclusive thresholds)."""
    if tier not in CUTOFFS:
        raise VrnqError(f"unknown cut-off tier {tier!r}")
    bars = CUTOFFS[tier]
    passes = {
        domain: aggregate.sub_stats[domain].median >= bars["sub"]
        for domain in DOMAINS
    }
    passes["total"] = aggregate.total_stats.median >= bars["total"]
    return CutoffVerdict(tier=tier, passes=passes, overall=all(passes.values()))


# ---------------------------------------------------------------------------
# CSV interchange


CSV_COLUMNS = ["participant_id"] + [f"q{i}" for i in range(1, ITEM_COUNT + 1)]


def read_cohort_csv(source: str | Path | io.TextIOBase) -> list[VrnqResponseSet]:
    """Read a cohort CSV: header ``participant_id,q1,...,q20``.

    An optional trailing ``feedback`` column is stored verbatim.  Any other
    deviation raises :class:`VrnqError`.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            return _read_cohort(handle)
    return _read_cohort(source)


def _read_cohort(handle) -> list[VrnqResponseSet]:
    reader = csv.reader(handle)
    try:
        header = next(reader)
    except StopIteration:
        raise VrnqError("CSV is empty") from None
    has_feedback = header == CSV_COLUMNS + ["feedback"]
    if not has_feedback and header != CSV_COLUMNS:
        raise VrnqError(
            "CSV header must be participant_id,q1,...,q20 "
            "(optionally plus feedback)")
    expected_len = len(CSV_COLUMNS) + (1 if has_feedback else 0)
    rows: list[VrnqResponseSet] = []
    seen_ids: set[str] = set()
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != expected_len:
            raise VrnqError(f"line {line_no}: expected {expected_len} fields")
        participant_id = row[0].strip()
        if not participant_id:
            raise VrnqError(f"line {line_no}: empty participant_id")
        if participant_id in seen_ids:
            raise VrnqError(f"line {line_no}: duplicate participant {participant_id!r}")
        seen_ids.add(participant_id)
        try:
            items = tuple(int(cell) for cell in row[1:ITEM_COUNT + 1])
        except ValueError as exc:
            raise VrnqError(f"line {line_no}: non-integer item value") from exc
        feedback = row[ITEM_COUNT + 1] if has_feedback else None
        rows.append(VrnqResponseSet(participant_id=participant_id,
                                    items=items, feedback=feedback))
    if not rows:
        raise VrnqError("CSV contains no responses")
    return rows


def write_cohort_csv(cohort: Sequence[VrnqResponseSet], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        any_feedback = any(r.feedback is not None for r in cohort)
        writer.writerow(CSV_COLUMNS + (["feedback"] if any_feedback else []))
        for response in cohort:
            row = [response.participant_id, *map(str, response.items)]
            if any_feedback:
                row.append(response.feedback or "")
            writer.writerow(row)
