"""Task scoring rules for the errand battery.

Each scorer is a pure function over task-level inputs; none of them touch a
log.  :func:`aggregate_scorecard` bridges the two worlds: it replays a full
session log through the scenario engine (rejecting anything the engine
rejects), folds the events into task inputs, and applies every scorer with
the :class:`~errandlab.config.ScoringConfig` in force.

Scoring summary:

* Recognition boards (immediate and delayed): 2 points per intended item
  selected, 1 point per related variant (qualitative or quantitative),
  0 per absent item; 10 intended items, so 20 is the ceiling.
* Route planning: 15 minus the absolute deviation from the ideal 15 street
  units, floored at 0, then a timing modifier in whole-point steps of the
  normative z-score (fast is rewarded, slow penalised, two points max).
* Cooking: each of the three items lands in one of seven timing bands;
  band points default to 3/2/1/0 symmetric around OnTime.
* Reminder cascades: acting unprompted earns 6, after prompts 1..3 earns
  4/2/1, never acting earns 0.
* Conversation (companion) tasks: points from a matrix over when the user
  affirmed (prompt 1..3) and what they picked from the item board.  False
  reminders invert: affirming at prompt 1/2/3 deducts 3/2/1, resisting all
  three deducts nothing; at most 3 per scene and 6 across the session.
* Collection: one point per distinct target item gathered (six exist);
  grabbing anything else counts an error but deducts nothing.
* Visual attention: +1 per distinct target spotted, -1 per distractor.
* Auditory attention: +2 for a target answered with the same-side
  controller, +1 with the opposite one, -1 for responding to a distractor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Collection, Iterable, Mapping, Optional, Sequence

from .config import BAND_NAMES, ScoringConfig
from .scenario import (
    AUDITORY_STIMULUS_KINDS,
    COOKING_ITEMS,
    EngineError,
    EventKind,
    NpcChoice,
    PM_TASKS,
    PmPolarity,
    ROUTE_IDEAL_UNITS,
    ROUTE_UNIT_COUNT,
    SHOPPING_LIST_LENGTH,
    SIDES,
    VISUAL_STIMULUS_KINDS,
    replay,
)
from .sessionlog import (
    IncompleteSession,
    MalformedLog,
    SessionLog,
    Telemetry,
    derive_telemetry,
)


class ScoringError(Exception):
    """Base class for scoring-input problems."""


class UnknownItem(ScoringError):
    """A selection names an item outside the configured catalog."""


class DuplicateSpot(ScoringError):
    """The same attention stimulus appears twice."""


# ---------------------------------------------------------------------------
# Recognition


@dataclass(frozen=True)
class RecognitionScore:
    points: int
    targets: int
    qualitative: int
    quantitative: int
    false_items: int


def score_recognition(selected: Collection[str], config: ScoringConfig) -> RecognitionScore:
    """Score a shopping-list recognition selection.

    2 points per intended item, 1 per related (qualitative or quantitative)
    variant, 0 per absent item.  Duplicate or unknown selections raise, as
    does a selection larger than the ten-item list, which keeps the result
    inside [0, 20].
    """
    seen = set()
    for item in selected:
        if item in seen:
            raise UnknownItem(f"item {item!r} selected twice")
        seen.add(item)
    if len(seen) > SHOPPING_LIST_LENGTH:
        raise ScoringError(
            f"{len(seen)} selections exceed the {SHOPPING_LIST_LENGTH}-item list")
    targets = set(config.recognition_targets)
    qualitative = set(config.recognition_qualitative)
    quantitative = set(config.recognition_quantitative)
    false_items = set(config.recognition_false)
    n_target = n_qual = n_quant = n_false = 0
    for item in seen:
        if item in targets:
            n_target += 1
        elif item in qualitative:
            n_qual += 1
        elif item in quantitative:
            n_quant += 1
        elif item in false_items:
            n_false += 1
        else:
            raise UnknownItem(f"item {item!r} is not in the recognition catalog")
    points = 2 * n_target + (n_qual + n_quant)
    return RecognitionScore(points=points, targets=n_target, qualitative=n_qual,
                            quantitative=n_quant, false_items=n_false)


# ---------------------------------------------------------------------------
# Planning


@dataclass(frozen=True)
class PlanningScore:
    units_selected: int
    route_score: int
    time_modifier: int
    total: int
    completion_time_s: float
    time_z: float


def planning_time_modifier(completion_time_s: float, mean_s: float, sd_s: float) -> int:
    """Whole-point timing modifier from the normative z-score.

    Two or more SDs faster than the norm earns +2, between one and two +1;
    the mirror-image slowness costs -1 and -2; the middle band is neutral.
    """
    z = (completion_time_s - mean_s) / sd_s
    if z <= -2:
        return 2
    if z <= -1:
        return 1
    if z < 1:
        return 0
    if z < 2:
        return -1
    return -2


def score_planning(selected_units: Collection[int], completion_time_s: float,
                   config: ScoringConfig) -> PlanningScore:
    """Score the street-unit route: deviation from the ideal plus timing."""
    units = set()
    for unit in selected_units:
        if not 1 <= unit <= ROUTE_UNIT_COUNT:
            raise ScoringError(f"street unit {unit} out of range")
        if unit in units:
            raise ScoringError(f"street unit {unit} selected twice")
        units.add(unit)
    if completion_time_s < 0 or not math.isfinite(completion_time_s):
        raise ScoringError("completion_time_s must be finite and non-negative")
    route_score = max(0, ROUTE_IDEAL_UNITS - abs(len(units) - ROUTE_IDEAL_UNITS))
    modifier = planning_time_modifier(
        completion_time_s, config.normative_route_mean_s, config.normative_route_sd_s)
    z = (completion_time_s - config.normative_route_mean_s) / config.normative_route_sd_s
    return PlanningScore(
        units_selected=len(units), route_score=route_score, time_modifier=modifier,
        total=route_score + modifier, completion_time_s=completion_time_s, time_z=z)


# ---------------------------------------------------------------------------
# Cooking


# Centisecond band edges per item: (very_early_hi, on_time_lo, on_time_hi,
# very_late_lo).  The printed table is closed at every endpoint; working on
# an integer centisecond grid keeps the seven bands a gap-free partition.
_COOKING_EDGES_CS: dict[str, tuple[int, int, int, int]] = {
    "omelette": (1399, 1800, 2200, 2601),
    "sausages": (1799, 2200, 2600, 3001),
    "kettle": (1099, 1500, 1700, 2101),
}


@dataclass(frozen=True)
class CookingItemScore:
    band: str
    points: int


def _to_centiseconds(seconds: float) -> int:
    # round half up on the centisecond grid
    return int(math.floor(seconds * 100.0 + 0.5))


def classify_cooking_time(item: str, cook_time_s: float) -> str:
    """Name the timing band for one cooked item.

    Times are rounded half-up to centiseconds first; the printed band edges
    are closed on both sides, so the rounded grid partitions cleanly.
    """
    if item not in COOKING_ITEMS:
        raise ScoringError(f"unknown cooking item {item!r}")
    if not math.isfinite(cook_time_s) or cook_time_s < 0:
        raise ScoringError("cook_time_s must be finite and non-negative")
    cs = _to_centiseconds(cook_time_s)
    very_early_hi, on_time_lo, on_time_hi, very_late_lo = _COOKING_EDGES_CS[item]
    if cs <= very_early_hi:
        return "VeryEarly"
    if cs < on_time_lo - 200:
        return "Early"
    if cs < on_time_lo:
        return "SlightlyEarly"
    if cs <= on_time_hi:
        return "OnTime"
    if cs < on_time_hi + 200:
        return "SlightlyLate"
    if cs < very_late_lo:
        return "Late"
    return "VeryLate"


def score_cooking(cook_times_s: Mapping[str, float],
                  config: ScoringConfig) -> tuple[dict[str, CookingItemScore], int]:
    """Band and score all three items; items never placed rate VeryLate."""
    unknown = set(cook_times_s) - set(COOKING_ITEMS)
    if unknown:
        raise ScoringError(f"unknown cooking items: {sorted(unknown)}")
    per_item: dict[str, CookingItemScore] = {}
    total = 0
    for item in COOKING_ITEMS:
        if item in cook_times_s:
            band = classify_cooking_time(item, cook_times_s[item])
        else:
            band = "VeryLate"  # never taken off the heat
        points = int(config.band_points[band])
        per_item[item] = CookingItemScore(band=band, points=points)
        total += points
    return per_item, total


# ---------------------------------------------------------------------------
# Reminder cascades and conversation tasks


_CASCADE_POINTS = {0: 6, 1: 4, 2: 2, 3: 1, 4: 0}


def score_prompt_cascade(depth_when_done: int) -> int:
    """Points for a graded reminder cascade.

    ``depth_when_done`` counts the prompts shown before the user acted;
    4 means the user never acted at all.
    """
    if depth_when_done not in _CASCADE_POINTS:
        raise ScoringError("depth_when_done must be in 0..4")
    return _CASCADE_POINTS[depth_when_done]


def score_npc_pm_positive(affirmed_at: int, choice: Optional[str],
                          config: ScoringConfig) -> int:
    """Points for a companion-conversation task.

    ``affirmed_at`` is the prompt (1..3) at which the user said yes, or 0 if
    they never did.  ``choice`` is the board item category picked after
    affirming; it is required exactly when ``affirmed_at`` is nonzero.
    """
    if affirmed_at not in (0, 1, 2, 3):
        raise ScoringError("affirmed_at must be in 0..3")
    if affirmed_at == 0:
        if choice is not None:
            raise ScoringError("no board choice happens without an affirmation")
        return 0
    if choice is None:
        raise ScoringError("an affirmation must be followed by a board choice")
    if choice not in {c.value for c in NpcChoice}:
        raise ScoringError(f"unknown board choice {choice!r}")
    return int(config.npc_positive_matrix[str(affirmed_at)][choice])


def score_npc_pm_negative(affirmed_at: int, config: ScoringConfig) -> int:
    """Deduction for a false reminder: 0 if resisted, else by prompt."""
    if affirmed_at not in (0, 1, 2, 3):
        raise ScoringError("affirmed_at must be in 0..3")
    return int(config.npc_negative_deductions[str(affirmed_at)])


# ---------------------------------------------------------------------------
# Collection


@dataclass(frozen=True)
class CollectionScore:
    points: int
    errors: int


def score_collection(grabs: Sequence[str], config: ScoringConfig) -> CollectionScore:
    """One point per distinct target gathered; every other grab is an error.

    Grabs are attempts, so repeated swipes at the same distractor each count
    as an error; a target can only be held once.
    """
    targets = set(config.collection_targets)
    collected: set[str] = set()
    errors = 0
    for item in grabs:
        if item in targets:
            if item in collected:
                raise ScoringError(f"target {item!r} grabbed twice")
            collected.add(item)
        else:
            errors += 1
    return CollectionScore(points=len(collected), errors=errors)


# ---------------------------------------------------------------------------
# Attention


@dataclass(frozen=True)
class VisualResponse:
    stimulus_id: str
    stimulus_kind: str  # target | shape_distractor | color_distractor
    side: str


@dataclass(frozen=True)
class AuditoryResponse:
    stimulus_id: str
    stimulus_kind: str  # target | high_pitch_distractor | low_pitch_distractor
    stimulus_side: str
    response_side: Optional[str]  # None when the stimulus drew no response


@dataclass(frozen=True)
class VisualAttentionScore:
    points: int
    responded: dict[str, dict[str, int]]  # side -> kind -> count


@dataclass(frozen=True)
class AuditoryAttentionScore:
    points: int
    responded: dict[str, dict[str, int]]  # stimulus side -> kind -> count
    side_matched: int
    side_mismatched: int
    false_alarms: int


def _empty_counts(kinds: Iterable[str]) -> dict[str, dict[str, int]]:
    return {side: {kind: 0 for kind in kinds} for side in SIDES}


def _visual_capacity(config: ScoringConfig) -> dict[str, int]:
    return {
        "target": config.visual_targets_per_side,
        "shape_distractor": config.visual_shape_distractors_per_side,
        "color_distractor": config.visual_color_distractors_per_side,
    }


def score_visual_attention(responses: Sequence[VisualResponse],
                           config: ScoringConfig) -> VisualAttentionScore:
    """+1 per spotted target, -1 per spotted distractor, one spot each."""
    capacity = _visual_capacity(config)
    counts = _empty_counts(VISUAL_STIMULUS_KINDS)
    seen: set[str] = set()
    points = 0
    for response in responses:
        if response.stimulus_id in seen:
            raise DuplicateSpot(f"stimulus {response.stimulus_id!r} spotted twice")
        seen.add(response.stimulus_id)
        if response.stimulus_kind not in VISUAL_STIMULUS_KINDS:
            raise ScoringError(f"unknown stimulus kind {response.stimulus_kind!r}")
        if response.side not in SIDES:
            raise ScoringError(f"unknown side {response.side!r}")
        counts[response.side][response.stimulus_kind] += 1
        if counts[response.side][response.stimulus_kind] > capacity[response.stimulus_kind]:
            raise ScoringError(
                f"more {response.stimulus_kind} responses on the "
                f"{response.side} than stimuli exist")
        points += 1 if response.stimulus_kind == "target" else -1
    return VisualAttentionScore(points=points, responded=counts)


def _auditory_capacity(config: ScoringConfig) -> dict[str, int]:
    return {
        "target": config.auditory_targets_per_side,
        "high_pitch_distractor": config.auditory_high_distractors_per_side,
        "low_pitch_distractor": config.auditory_low_distractors_per_side,
    }


def score_auditory_attention(responses: Sequence[AuditoryResponse],
                             config: ScoringConfig) -> AuditoryAttentionScore:
    """Side-matched target +2, cross-side target +1, distractor response -1.

    Stimuli that drew no response (``response_side`` None) score nothing and
    are not counted as detections.
    """
    capacity = _auditory_capacity(config)
    counts = _empty_counts(AUDITORY_STIMULUS_KINDS)
    seen: set[str] = set()
    points = matched = mismatched = false_alarms = 0
    for response in responses:
        if response.stimulus_id in seen:
            raise DuplicateSpot(f"stimulus {response.stimulus_id!r} recorded twice")
        seen.add(response.stimulus_id)
        if response.stimulus_kind not in AUDITORY_STIMULUS_KINDS:
            raise ScoringError(f"unknown stimulus kind {response.stimulus_kind!r}")
        if response.stimulus_side not in SIDES:
            raise ScoringError(f"unknown side {response.stimulus_side!r}")
        if response.response_side is None:
            continue
        if response.response_side not in SIDES:
            raise ScoringError(f"unknown response side {response.response_side!r}")
        counts[response.stimulus_side][response.stimulus_kind] += 1
        if (counts[response.stimulus_side][response.stimulus_kind]
                > capacity[response.stimulus_kind]):
            raise ScoringError(
                f"more {response.stimulus_kind} responses on the "
                f"{response.stimulus_side} than stimuli exist")
        if response.stimulus_kind == "target":
            if response.response_side == response.stimulus_side:
                points += 2
                matched += 1
            else:
                points += 1
                mismatched += 1
        else:
            points -= 1
            false_alarms += 1
    return AuditoryAttentionScore(
        points=points, responded=counts, side_matched=matched,
        side_mismatched=mismatched, false_alarms=false_alarms)


# ---------------------------------------------------------------------------
# Whole-session aggregation


@dataclass(frozen=True)
class PmOutcome:
    task_id: str
    polarity: str
    points: int
    prompt_depth: int  # cascade depth when done (0..4) or affirmed prompt (0..3)
    choice: Optional[str] = None


@dataclass(frozen=True)
class TaskScorecard:
    notes_intent: tuple[bool, bool, bool]
    immediate_recognition: RecognitionScore
    planning: PlanningScore
    cooking: dict[str, CookingItemScore]
    cooking_total: int
    pm: dict[str, PmOutcome]
    pm_positive_total: int
    pm_deductions_total: int
    collection: CollectionScore
    visual: VisualAttentionScore
    delayed_recognition: RecognitionScore
    auditory: AuditoryAttentionScore
    telemetry: Telemetry = field(compare=False, default_factory=Telemetry)


def aggregate_scorecard(log: SessionLog, config: ScoringConfig) -> TaskScorecard:
    """Replay a complete session log and score every task.

    Raises :class:`MalformedLog` if the engine rejects any event and
    :class:`IncompleteSession` if the log never reaches the scenario's
    final button.
    """
    try:
        final_state, _ = replay(log.events)
    except EngineError as exc:
        raise MalformedLog(f"log rejected by the scenario engine: {exc}") from exc
    if not final_state.completed:
        raise IncompleteSession("log ends before the scenario's final button")

    selections_3: list[str] = []
    grabs_8: list[str] = []
    picks_14: list[str] = []
    route_units: set[int] = set()
    first_toggle_ms: Optional[int] = None
    submit_ms: Optional[int] = None
    cook_times: dict[str, float] = {}
    visual: list[VisualResponse] = []
    auditory: list[AuditoryResponse] = []
    intent = [False, False, False]

    for event in log.events:
        kind = event.kind
        if kind is EventKind.ITEM_SELECTED:
            if event.scene == 3:
                selections_3.append(event.payload["item"])
            elif event.scene == 8:
                grabs_8.append(event.payload["item"])
        elif kind is EventKind.SHOPPING_COLLECTED:
            picks_14.append(event.payload["item"])
        elif kind is EventKind.ROUTE_UNIT_TOGGLED:
            if first_toggle_ms is None:
                first_toggle_ms = event.sim_time_ms
            if event.payload["selected"]:
                route_units.add(event.payload["unit"])
            else:
                route_units.discard(event.payload["unit"])
        elif kind is EventKind.ROUTE_SUBMITTED:
            submit_ms = event.sim_time_ms
        elif kind is EventKind.COOKING_ITEM_PLACED:
            cook_times[event.payload["item"]] = float(event.payload["cook_time_s"])
        elif kind is EventKind.NOTES_INTENT_ANSWERED:
            intent[event.payload["prompt_index"] - 1] = bool(event.payload["yes"])
        elif kind is EventKind.POSTER_SPOTTED:
            visual.append(VisualResponse(
                stimulus_id=event.payload["stimulus_id"],
                stimulus_kind=event.payload["stimulus_kind"],
                side=event.payload["side"]))
        elif kind is EventKind.SOUND_TRIGGERED:
            auditory.append(AuditoryResponse(
                stimulus_id=event.payload["stimulus_id"],
                stimulus_kind=event.payload["stimulus_kind"],
                stimulus_side=event.payload["stimulus_side"],
                response_side=event.payload["response_side"]))

    if submit_ms is None:  # unreachable in a complete log; guard anyway
        raise MalformedLog("no route submission in a complete log")
    completion_s = ((submit_ms - first_toggle_ms) / 1000.0
                    if first_toggle_ms is not None else 0.0)

    try:
        immediate = score_recognition(selections_3, config)
        delayed = score_recognition(picks_14, config)
        planning = score_planning(route_units, completion_s, config)
        cooking, cooking_total = score_cooking(cook_times, config)
        collection = score_collection(grabs_8, config)
        visual_score = score_visual_attention(visual, config)
        auditory_score = score_auditory_attention(auditory, config)
    except ScoringError as exc:
        raise MalformedLog(f"log content failed scoring validation: {exc}") from exc

    pm: dict[str, PmOutcome] = {}
    positive_total = 0
    deductions_total = 0
    for scene_id, task in sorted(PM_TASKS.items()):
        if task.cascade.trigger.value == "npc_dialogue":
            affirmed_at = final_state.npc_affirmed_at.get(task.task_id, 0)
            choice = final_state.npc_choice.get(task.task_id)
            if task.polarity is PmPolarity.POSITIVE:
                points = score_npc_pm_positive(affirmed_at, choice, config)
            else:
                points = score_npc_pm_negative(affirmed_at, config)
            pm[task.task_id] = PmOutcome(
                task_id=task.task_id, polarity=task.polarity.value,
                points=points, prompt_depth=affirmed_at, choice=choice)
        else:
            depth = final_state.pm_done_depth.get(task.task_id, 4)
            points = score_prompt_cascade(depth)
            pm[task.task_id] = PmOutcome(
                task_id=task.task_id, polarity=task.polarity.value,
                points=points, prompt_depth=depth)
        if task.polarity is PmPolarity.POSITIVE:
            positive_total += pm[task.task_id].points
        else:
            deductions_total += pm[task.task_id].points

    # two false reminders at -3 apiece bound the total deduction
    assert -6 <= deductions_total <= 0

    return TaskScorecard(
        notes_intent=(intent[0], intent[1], intent[2]),
        immediate_recognition=immediate,
        planning=planning,
        cooking=cooking,
        cooking_total=cooking_total,
        pm=pm,
        pm_positive_total=positive_total,
        pm_deductions_total=deductions_total,
        collection=collection,
        visual=visual_score,
        delayed_recognition=delayed,
        auditory=auditory_score,
        telemetry=derive_telemetry(log),
    )


def scorecard_to_dict(card: TaskScorecard) -> dict:
    """JSON-native rendering of a scorecard, telemetry included."""
    return {
        "notes_intent": list(card.notes_intent),
        "immediate_recognition": vars(card.immediate_recognition).copy(),
        "planning": vars(card.planning).copy(),
        "cooking": {item: vars(entry).copy() for item, entry in card.cooking.items()},
        "cooking_total": card.cooking_total,
        "pm": {task_id: vars(outcome).copy() for task_id, outcome in card.pm.items()},
        "pm_positive_total": card.pm_positive_total,
        "pm_deductions_total": card.pm_deductions_total,
        "collection": vars(card.collection).copy(),
        "visual": vars(card.visual).copy(),
        "delayed_recognition": vars(card.delayed_recognition).copy(),
        "auditory": vars(card.auditory).copy(),
        "telemetry": {
            "scene_time_s": {str(k): v for k, v in card.telemetry.scene_time_s.items()},
            "tutorial_time_s": {str(k): v for k, v in card.telemetry.tutorial_time_s.items()},
            "practice_attempts": {str(k): v for k, v in card.telemetry.practice_attempts.items()},
            "notes_views": {str(k): vars(v).copy() for k, v in card.telemetry.notes_views.items()},
            "task_time_s": dict(card.telemetry.task_time_s),
            "notes_intent": list(card.telemetry.notes_intent),
            "total_time_s": card.telemetry.total_time_s,
        },
    }
