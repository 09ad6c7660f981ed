"""Seeded participant simulator that drives the scenario engine.

The simulator exists to exercise the engine and the scorers, not to model
cognition.  A :class:`ParticipantProfile` holds the behavioral dials (hit
probabilities, prompt compliance, timing noise, response latency); a session
is generated by walking the 22 scenes in order and emitting events through
:func:`errandlab.scenario.advance`, so every generated log is engine-accepted
by construction.

Determinism contract: each scene draws from its own
``numpy.random.default_rng([seed, scene_id])`` stream, so identical
``(profile, seed, config)`` inputs always reproduce the same log byte for
byte, and editing one scene's behavior model cannot perturb another scene's
draws.

The simulated clock targets ``config.session_target_s`` (default 3 732 s,
about an hour); each scene gets a fixed share of that budget and is padded
to it before exit, so the total session duration is stable across profiles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .config import ScoringConfig, config_hash, default_config
from .scenario import (
    AUDITORY_STIMULUS_KINDS,
    EventKind,
    NPC_SCENES,
    NpcChoice,
    PM_TASKS,
    PmDelay,
    PmPolarity,
    SHOPPING_LIST_LENGTH,
    SIDES,
    SessionEvent,
    SessionState,
    VISUAL_STIMULUS_KINDS,
    advance,
    initial_state,
    scene_sequence,
)
from .scoring import TaskScorecard, aggregate_scorecard
from .sessionlog import SessionLog, append_event, new_log


class LengthMismatch(Exception):
    """Cohort profiles and seeds differ in length."""


# Per-scene share of the simulated clock, in seconds, at the default target
# of 3 732 s.  The shares scale linearly with config.session_target_s.
_NOMINAL_DURATION_S: dict[int, int] = {
    1: 180, 2: 180, 3: 300, 4: 180, 5: 180, 6: 300, 7: 120, 8: 240,
    9: 180, 10: 150, 11: 150, 12: 150, 13: 90, 14: 240, 15: 120, 16: 90,
    17: 120, 18: 150, 19: 180, 20: 90, 21: 90, 22: 252,
}
assert sum(_NOMINAL_DURATION_S.values()) == 3732

# Cooking removal targets: the midpoint of each item's on-time window.
_COOKING_MIDPOINT_S = {"omelette": 20.0, "sausages": 24.0, "kettle": 16.0}

_PRACTICE_ATTEMPT_CAP = 5


@dataclass(frozen=True)
class ParticipantProfile:
    """Behavioral dials for one simulated participant.

    ``pm_hit_prob`` maps reminder delay (short/medium/long) to the chance of
    performing the task before any prompt; ``prompt_yield_probs`` gives the
    chance of complying after prompts 1..3.  Attention probabilities drive
    the rides, the practice gates, and item collection; the false-alarm
    probability doubles as the chance of affirming a false reminder.
    """

    pm_hit_prob: Mapping[str, float] = field(
        default_factory=lambda: {"short": 0.7, "medium": 0.5, "long": 0.35})
    prompt_yield_probs: tuple[float, float, float] = (0.6, 0.7, 0.8)
    recognition_target_prob: float = 0.85
    recognition_distractor_prob: float = 0.12
    planning_extra_units: int = 2
    cooking_timing_sd_s: float = 3.0
    attention_hit_prob: float = 0.85
    attention_false_alarm_prob: float = 0.08
    wrong_controller_prob: float = 0.1
    notes_use_prob: float = 0.6
    latency_mean_ms: float = 900.0
    latency_sd_ms: float = 300.0

    def __post_init__(self) -> None:
        delays = {d.value for d in PmDelay}
        if set(self.pm_hit_prob) != delays:
            raise ValueError(f"pm_hit_prob needs exactly the keys {sorted(delays)}")
        if len(self.prompt_yield_probs) != 3:
            raise ValueError("prompt_yield_probs must have three entries")
        probs = [*self.pm_hit_prob.values(), *self.prompt_yield_probs,
                 self.recognition_target_prob, self.recognition_distractor_prob,
                 self.attention_hit_prob, self.attention_false_alarm_prob,
                 self.wrong_controller_prob, self.notes_use_prob]
        for p in probs:
            if not (isinstance(p, (int, float)) and math.isfinite(p) and 0.0 <= p <= 1.0):
                raise ValueError(f"probability {p!r} outside [0, 1]")
        if not (isinstance(self.planning_extra_units, int)
                and self.planning_extra_units >= 0):
            raise ValueError("planning_extra_units must be a non-negative integer")
        for name in ("cooking_timing_sd_s", "latency_mean_ms", "latency_sd_ms"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be non-negative and finite")


def default_profile() -> ParticipantProfile:
    return ParticipantProfile()


def perfect_profile() -> ParticipantProfile:
    """Every action performed, no false alarms, no timing noise."""
    return ParticipantProfile(
        pm_hit_prob={"short": 1.0, "medium": 1.0, "long": 1.0},
        prompt_yield_probs=(1.0, 1.0, 1.0),
        recognition_target_prob=1.0, recognition_distractor_prob=0.0,
        planning_extra_units=0, cooking_timing_sd_s=0.0,
        attention_hit_prob=1.0, attention_false_alarm_prob=0.0,
        wrong_controller_prob=0.0, notes_use_prob=1.0,
        latency_mean_ms=600.0, latency_sd_ms=0.0)


def null_profile() -> ParticipantProfile:
    """No optional action is ever taken; the session still completes."""
    return ParticipantProfile(
        pm_hit_prob={"short": 0.0, "medium": 0.0, "long": 0.0},
        prompt_yield_probs=(0.0, 0.0, 0.0),
        recognition_target_prob=0.0, recognition_distractor_prob=0.0,
        planning_extra_units=0, cooking_timing_sd_s=0.0,
        attention_hit_prob=0.0, attention_false_alarm_prob=0.0,
        wrong_controller_prob=0.0, notes_use_prob=0.0,
        latency_mean_ms=800.0, latency_sd_ms=0.0)


PROFILE_PRESETS = {
    "default": default_profile,
    "perfect": perfect_profile,
    "null": null_profile,
}


def profile_to_dict(profile: ParticipantProfile) -> dict[str, Any]:
    return {
        "pm_hit_prob": dict(profile.pm_hit_prob),
        "prompt_yield_probs": list(profile.prompt_yield_probs),
        "recognition_target_prob": profile.recognition_target_prob,
        "recognition_distractor_prob": profile.recognition_distractor_prob,
        "planning_extra_units": profile.planning_extra_units,
        "cooking_timing_sd_s": profile.cooking_timing_sd_s,
        "attention_hit_prob": profile.attention_hit_prob,
        "attention_false_alarm_prob": profile.attention_false_alarm_prob,
        "wrong_controller_prob": profile.wrong_controller_prob,
        "notes_use_prob": profile.notes_use_prob,
        "latency_mean_ms": profile.latency_mean_ms,
        "latency_sd_ms": profile.latency_sd_ms,
    }


def profile_from_dict(data: Mapping[str, Any]) -> ParticipantProfile:
    known = set(profile_to_dict(ParticipantProfile()))
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown profile fields: {sorted(unknown)}")
    kwargs = dict(data)
    if "prompt_yield_probs" in kwargs:
        kwargs["prompt_yield_probs"] = tuple(kwargs["prompt_yield_probs"])
    return ParticipantProfile(**kwargs)


def load_profile(path: str) -> ParticipantProfile:
    with open(path, "r", encoding="utf-8") as handle:
        return profile_from_dict(json.load(handle))


def save_profile(profile: ParticipantProfile, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(profile_to_dict(profile), handle, indent=2, sort_keys=True)
        handle.write("\n")


# ---------------------------------------------------------------------------
# Session builder


class _SessionBuilder:
    """Feeds events through the engine while tracking a millisecond cursor."""

    def __init__(self, profile: ParticipantProfile, config: ScoringConfig) -> None:
        self.profile = profile
        self.config = config
        self.state: SessionState = initial_state()
        self.events: list[SessionEvent] = []
        self.cursor_ms = 0
        self.scene_entry_ms = 0
        self.rng: np.random.Generator = np.random.default_rng(0)

    def latency_ms(self) -> int:
        raw = (self.profile.latency_mean_ms
               + self.profile.latency_sd_ms * float(self.rng.standard_normal()))
        return max(0, int(round(raw)))

    def _emit(self, kind: EventKind, payload: Optional[dict[str, Any]] = None) -> None:
        event = SessionEvent(
            seq=len(self.events), sim_time_ms=self.cursor_ms,
            scene=self.state.current_scene, kind=kind, payload=payload or {})
        self.state, _ = advance(self.state, event)
        self.events.append(event)

    def enter(self, rng: np.random.Generator) -> None:
        self.rng = rng
        self.scene_entry_ms = self.cursor_ms
        self._emit(EventKind.SCENE_ENTERED)

    def act(self, kind: EventKind, payload: Optional[dict[str, Any]] = None, *,
            at_offset_ms: Optional[int] = None) -> None:
        if at_offset_ms is not None:
            self.cursor_ms = max(self.cursor_ms, self.scene_entry_ms + at_offset_ms)
        else:
            self.cursor_ms += self.latency_ms()
        self._emit(kind, payload)

    def exit_scene(self, duration_ms: int) -> None:
        self.cursor_ms = max(self.cursor_ms, self.scene_entry_ms + duration_ms)
        self._emit(EventKind.SCENE_EXITED)


def _bernoulli(rng: np.random.Generator, p: float) -> bool:
    if p <= 0.0:
        return False
    if p >= 1.0:
        return True
    return bool(rng.random() < p)


def _maybe_use_notes(b: _SessionBuilder) -> None:
    if _bernoulli(b.rng, b.profile.notes_use_prob):
        b.act(EventKind.NOTE_OPENED)
        b.act(EventKind.NOTE_CLOSED)


# --- per-scene behavior models ---------------------------------------------


def _plain_tutorial(b: _SessionBuilder, duration_ms: int) -> None:
    if b.state.current_scene == 4:
        # the notes tutorial invites opening the notes at least once
        _maybe_use_notes(b)
    b.act(EventKind.TUTORIAL_COMPLETED,
          at_offset_ms=max(duration_ms // 2, b.cursor_ms - b.scene_entry_ms))
    b.exit_scene(duration_ms)


def _gated_tutorial(b: _SessionBuilder, duration_ms: int) -> None:
    p = b.profile
    for attempt in range(1, _PRACTICE_ATTEMPT_CAP + 1):
        if attempt == _PRACTICE_ATTEMPT_CAP:
            targets, distractors = 3, 0  # the front end coaches until passed
        else:
            targets = int(b.rng.binomial(3, p.attention_hit_prob))
            distractors = int(b.rng.binomial(3, p.attention_false_alarm_prob))
        b.act(EventKind.PRACTICE_ATTEMPT,
              {"targets_hit": targets, "distractors_hit": distractors})
        if targets == 3 and distractors == 0:
            break
    b.exit_scene(duration_ms)


def _recognition_pick(b: _SessionBuilder, kind: EventKind, payload_key: str) -> None:
    # Walk the shelf in a seeded order, deciding item by item until the
    # ten-slot basket is full.
    p = b.profile
    targets = set(b.config.recognition_targets)
    catalog = (b.config.recognition_targets + b.config.recognition_qualitative
               + b.config.recognition_quantitative + b.config.recognition_false)
    order = b.rng.permutation(len(catalog))
    picked = 0
    for index in order:
        item = catalog[int(index)]
        prob = (p.recognition_target_prob if item in targets
                else p.recognition_distractor_prob)
        if _bernoulli(b.rng, prob):
            b.act(kind, {payload_key: item})
            picked += 1
            if picked >= SHOPPING_LIST_LENGTH:
                break


def _scene_planning(b: _SessionBuilder, duration_ms: int) -> None:
    p = b.profile
    for index in range(1, 4):
        b.act(EventKind.NOTES_INTENT_ANSWERED,
              {"prompt_index": index, "yes": _bernoulli(b.rng, p.notes_use_prob)})
    _recognition_pick(b, EventKind.ITEM_SELECTED, "item")
    deviation = 0
    if p.planning_extra_units > 0:
        deviation = int(b.rng.poisson(p.planning_extra_units))
        if _bernoulli(b.rng, 0.5):
            deviation = -deviation
    n_units = min(23, max(1, 15 + deviation))
    units = [int(u) for u in b.rng.choice(23, size=n_units, replace=False) + 1]
    for unit in units:
        b.act(EventKind.ROUTE_UNIT_TOGGLED, {"unit": unit, "selected": True})
    b.act(EventKind.ROUTE_SUBMITTED)
    b.exit_scene(duration_ms)


def _event_cascade(b: _SessionBuilder, trigger: EventKind, action: EventKind,
                   delay: str) -> None:
    # The reminder dance shared by breakfast (final button) and leaving the
    # flat (exit attempt): either act before touching the trigger, or keep
    # triggering and maybe comply after each prompt.
    p = b.profile
    if _bernoulli(b.rng, p.pm_hit_prob[delay]):
        b.act(action)
        b.act(trigger)
        return
    for depth in range(1, 4):
        b.act(trigger)  # shows prompt `depth`
        if _bernoulli(b.rng, p.prompt_yield_probs[depth - 1]):
            b.act(action)
            b.act(trigger)
            return
    b.act(trigger)  # fourth touch gives up and moves on


def _scene_breakfast(b: _SessionBuilder, duration_ms: int) -> None:
    p = b.profile
    _maybe_use_notes(b)
    for item in ("omelette", "sausages", "kettle"):
        noise = p.cooking_timing_sd_s * float(b.rng.standard_normal())
        cook_time = max(0.0, _COOKING_MIDPOINT_S[item] + noise)
        b.act(EventKind.COOKING_ITEM_PLACED,
              {"item": item, "cook_time_s": round(cook_time, 2)})
    _event_cascade(b, EventKind.FINAL_BUTTON_PRESSED, EventKind.MEDICATION_TAKEN,
                   PmDelay.SHORT.value)
    b.exit_scene(duration_ms)


def _scene_collect_and_pie(b: _SessionBuilder, duration_ms: int) -> None:
    p = b.profile
    _maybe_use_notes(b)
    for item in b.config.collection_targets:
        if _bernoulli(b.rng, p.attention_hit_prob):
            b.act(EventKind.ITEM_SELECTED, {"item": item})
    for item in b.config.collection_distractors:
        if _bernoulli(b.rng, p.attention_false_alarm_prob):
            b.act(EventKind.ITEM_SELECTED, {"item": item})
    _event_cascade(b, EventKind.EXIT_ATTEMPTED, EventKind.PIE_REMOVED,
                   PmDelay.SHORT.value)
    b.exit_scene(duration_ms)


def _npc_choice(b: _SessionBuilder) -> str:
    if _bernoulli(b.rng, b.profile.recognition_target_prob):
        return NpcChoice.CORRECT.value
    wrong = [c.value for c in NpcChoice if c is not NpcChoice.CORRECT]
    return wrong[int(b.rng.integers(len(wrong)))]


def _scene_npc(b: _SessionBuilder, scene_id: int, duration_ms: int) -> None:
    # The companion's first question is already showing (engine emits it on
    # entry).  Affirming a positive task opens the item board; affirming a
    # false one just costs points; three refusals end the conversation.
    p = b.profile
    task = PM_TASKS[scene_id]
    if task.polarity is PmPolarity.POSITIVE:
        yes_probs = (p.pm_hit_prob[task.delay.value],
                     p.prompt_yield_probs[1], p.prompt_yield_probs[2])
    else:
        fa = p.attention_false_alarm_prob
        yes_probs = (fa, fa, fa)
    affirmed = False
    for index in range(1, 4):
        if _bernoulli(b.rng, yes_probs[index - 1]):
            b.act(EventKind.NPC_PROMPT_ANSWERED, {"prompt_index": index, "yes": True})
            affirmed = True
            break
        b.act(EventKind.NPC_PROMPT_ANSWERED, {"prompt_index": index, "yes": False})
    if affirmed and task.polarity is PmPolarity.POSITIVE:
        b.act(EventKind.NPC_ITEM_CHOSEN, {"choice": _npc_choice(b)})
    if scene_id == 21 and affirmed:
        b.act(EventKind.KEYS_GIVEN)
    b.exit_scene(duration_ms)


def _ride_stimuli(b: _SessionBuilder, kinds: Sequence[str],
                  counts: Sequence[int]) -> list[tuple[str, str]]:
    # Fixed inventory (kind, side), shuffled per session so stimulus order
    # varies with the seed but stays deterministic.
    inventory: list[tuple[str, str]] = []
    for kind, count in zip(kinds, counts):
        for side in SIDES:
            inventory.extend((kind, side) for _ in range(count))
    order = b.rng.permutation(len(inventory))
    return [inventory[int(i)] for i in order]


def _scene_visual_ride(b: _SessionBuilder, duration_ms: int) -> None:
    p = b.profile
    cfg = b.config
    stimuli = _ride_stimuli(
        b, VISUAL_STIMULUS_KINDS,
        (cfg.visual_targets_per_side, cfg.visual_shape_distractors_per_side,
         cfg.visual_color_distractors_per_side))
    step = max(1, (duration_ms * 8 // 10) // max(1, len(stimuli)))
    for index, (kind, side) in enumerate(stimuli):
        hit_p = (p.attention_hit_prob if kind == "target"
                 else p.attention_false_alarm_prob)
        if _bernoulli(b.rng, hit_p):
            b.act(EventKind.POSTER_SPOTTED,
                  {"stimulus_id": f"poster_{index:02d}", "stimulus_kind": kind,
                   "side": side},
                  at_offset_ms=(index + 1) * step)
    b.exit_scene(duration_ms)


def _scene_auditory_ride(b: _SessionBuilder, duration_ms: int) -> None:
    p = b.profile
    cfg = b.config
    stimuli = _ride_stimuli(
        b, AUDITORY_STIMULUS_KINDS,
        (cfg.auditory_targets_per_side, cfg.auditory_high_distractors_per_side,
         cfg.auditory_low_distractors_per_side))
    step = max(1, (duration_ms * 8 // 10) // max(1, len(stimuli)))
    for index, (kind, side) in enumerate(stimuli):
        hit_p = (p.attention_hit_prob if kind == "target"
                 else p.attention_false_alarm_prob)
        response: Optional[str] = None
        if _bernoulli(b.rng, hit_p):
            response = side
            if _bernoulli(b.rng, p.wrong_controller_prob):
                response = "right" if side == "left" else "left"
        b.act(EventKind.SOUND_TRIGGERED,
              {"stimulus_id": f"sound_{index:02d}", "stimulus_kind": kind,
               "stimulus_side": side, "response_side": response},
              at_offset_ms=(index + 1) * step)
    b.exit_scene(duration_ms)


def _scene_supermarket(b: _SessionBuilder, duration_ms: int) -> None:
    _maybe_use_notes(b)
    _recognition_pick(b, EventKind.SHOPPING_COLLECTED, "item")
    b.act(EventKind.FINAL_BUTTON_PRESSED)  # the till ends the shop
    b.exit_scene(duration_ms)


def _scene_finale(b: _SessionBuilder, duration_ms: int) -> None:
    p = b.profile
    stow_at = min(30_000, duration_ms // 4)
    for offset, item in enumerate(b.config.recognition_targets[:2]):
        b.act(EventKind.ITEM_STOWED, {"item": item},
              at_offset_ms=stow_at + offset * 5_000)
    took = False
    if _bernoulli(b.rng, p.pm_hit_prob[PmDelay.LONG.value]):
        b.act(EventKind.MEDICATION_TAKEN,
              at_offset_ms=min(60_000, max(duration_ms // 2, stow_at + 10_000)))
        took = True
    else:
        for depth, offset_ms in enumerate((70_000, 80_000, 90_000), start=1):
            if _bernoulli(b.rng, p.prompt_yield_probs[depth - 1]):
                b.act(EventKind.MEDICATION_TAKEN,
                      at_offset_ms=offset_ms + min(b.latency_ms(), 9_000))
                took = True
                break
    final_offset = duration_ms if took or duration_ms > 95_000 else 95_000
    b.act(EventKind.FINAL_BUTTON_PRESSED, at_offset_ms=final_offset)
    b.exit_scene(duration_ms)


# ---------------------------------------------------------------------------
# Entry points


def simulate_session(profile: ParticipantProfile, seed: int,
                     config: Optional[ScoringConfig] = None) -> SessionLog:
    """Generate one complete, engine-accepted session log.

    Deterministic in ``(profile, seed, config)``; the log replays through
    the engine with zero errors and scores without raising.
    """
    cfg = config if config is not None else default_config()
    builder = _SessionBuilder(profile, cfg)
    scale = cfg.session_target_s / 3732.0
    stream_seed = seed & 0xFFFFFFFFFFFFFFFF

    for descriptor in scene_sequence():
        sid = descriptor.scene_id
        rng = np.random.default_rng([stream_seed, sid])
        builder.enter(rng)
        duration_ms = max(1_000, int(_NOMINAL_DURATION_S[sid] * scale * 1000))
        if sid in (11, 18):
            _gated_tutorial(builder, duration_ms)
        elif descriptor.kind.value == "tutorial":
            _plain_tutorial(builder, duration_ms)
        elif sid == 3:
            _scene_planning(builder, duration_ms)
        elif sid == 6:
            _scene_breakfast(builder, duration_ms)
        elif sid == 8:
            _scene_collect_and_pie(builder, duration_ms)
        elif sid in NPC_SCENES:
            _scene_npc(builder, sid, duration_ms)
        elif sid == 12:
            _scene_visual_ride(builder, duration_ms)
        elif sid == 14:
            _scene_supermarket(builder, duration_ms)
        elif sid == 19:
            _scene_auditory_ride(builder, duration_ms)
        elif sid == 22:
            _scene_finale(builder, duration_ms)
        else:  # pragma: no cover - the table above is exhaustive
            raise AssertionError(f"scene {sid} has no behavior model")

    log = new_log(seed=seed, config_hash=config_hash(cfg))
    for event in builder.events:
        log = append_event(log, event)
    return log


def simulate_cohort(profiles: Sequence[ParticipantProfile], seeds: Sequence[int],
                    config: Optional[ScoringConfig] = None,
                    ) -> list[tuple[SessionLog, TaskScorecard]]:
    """Simulate and score independent sessions, order-stable.

    Raises :class:`LengthMismatch` when the input lists differ in length.
    """
    if len(profiles) != len(seeds):
        raise LengthMismatch(
            f"{len(profiles)} profiles vs {len(seeds)} seeds")
    cfg = config if config is not None else default_config()
    out: list[tuple[SessionLog, TaskScorecard]] = []
    for profile, seed in zip(profiles, seeds):
        log = simulate_session(profile, seed, cfg)
        out.append((log, aggregate_scorecard(log, cfg)))
    return out
