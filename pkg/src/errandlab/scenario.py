"""Discrete-event state machine for the 22-scene errand scenario.

The scenario is a fixed linear sequence of scenes: nine tutorials that teach
one interaction each and thirteen storyline scenes that carry the assessed
tasks (list learning, route planning, multitask cooking, reminder cascades,
character conversations, item collection, attention rides, and a timed
finale).  The engine is deliberately engine-agnostic: it consumes timestamped
:class:`SessionEvent` records that a front end or simulator produces and it
emits :class:`Effect` values (prompts, transitions, retry signals, session
completion).  It never does I/O and never draws randomness.

Core invariants, enforced here and property-tested in the suite:

* ``advance`` is a pure function: identical ``(state, event)`` pairs yield
  identical ``(state, effects)`` pairs, and the input state is not mutated.
* Scene ids only ever move forward, one scene at a time.
* Within one reminder task the emitted prompt depths form a strictly
  increasing prefix of ``(1, 2, 3)``.
* The practice gates (scenes 11 and 18) pass only on an attempt with all
  three targets hit and zero distractors, so scene 12 (or 19) can never be
  entered without a :class:`PracticePassed` effect first.
* A timestamp regression raises :class:`OutOfOrderEvent`; an event stamped
  with the wrong scene raises :class:`WrongSceneEvent`.

Scene transitions are engine-emitted effects, never implicit: a scene's
resolving event (final button, exit attempt, conversation outcome, tutorial
completion, gate pass, or, for free-running scenes, the exit itself) produces
a :class:`SceneTransition`, after which only ``SceneExited`` is accepted for
the old scene.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Optional

logger = logging.getLogger(__name__)

SCENE_COUNT = 22

# Fixed storyline content.
ROUTE_UNIT_COUNT = 23
ROUTE_IDEAL_UNITS = 15
SHOPPING_LIST_LENGTH = 10
COOKING_ITEMS = ("omelette", "sausages", "kettle")

# Prompt scripts.  Event- and exit-triggered cascades escalate from a vague
# nudge to naming the task outright; conversation prompts are the companion's
# three questions; the finale prompts are clock reminders.
_BREAKFAST_PROMPTS = (
    "You Have to Do Something Else",
    "You Have to Do Something After Having your Breakfast",
    "You Have to Take Your Meds",
)
_LEAVING_PROMPTS = (
    "You Have to Do Something Else",
    "You Have to Do Something Before Leaving",
    "You Have to Take the Pie Out of the Oven",
)
_NPC_PROMPTS = (
    "Do we need to do something else at this time?",
    "Are you sure that we do not have to do something around this time?",
    "I think that we have to do something around this time.",
)
_FINALE_PROMPTS = (
    "Check the Time",
    "You Have to Do Something at One O'Clock",
    "You Have to Take Your Meds",
)

# Scene 22 reminders fire at these absolute offsets from scene entry.
FINALE_PROMPT_OFFSETS_MS = (70_000, 80_000, 90_000)


class SceneKind(str, Enum):
    TUTORIAL = "tutorial"
    STORYLINE = "storyline"


class PmBasis(str, Enum):
    EVENT_BASED = "event_based"
    TIME_BASED = "time_based"


class PmDelay(str, Enum):
    SHORT = "short"
    MEDIUM = "medium"
    LONG = "long"


class PmPolarity(str, Enum):
    # Positive tasks earn points; negative ones are false reminders where
    # affirming costs points.
    POSITIVE = "positive"
    NEGATIVE = "negative"


class TriggerKind(str, Enum):
    FINAL_BUTTON = "final_button"
    EXIT_ATTEMPT = "exit_attempt"
    NPC_DIALOGUE = "npc_dialogue"
    TIMER = "timer"


class NpcChoice(str, Enum):
    CORRECT = "correct"
    SEMANTIC_RELATIVE = "semantic_relative"
    OTHER_PM_TASK = "other_pm_task"
    UNRELATED = "unrelated"


@dataclass(frozen=True)
class CascadeSpec:
    """How a reminder task escalates: what triggers it and what it says."""

    trigger: TriggerKind
    prompt_texts: tuple[str, str, str]
    timer_offsets_ms: Optional[tuple[int, int, int]] = None


@dataclass(frozen=True)
class PmTaskSpec:
    task_id: str
    scene_id: int
    basis: PmBasis
    delay: PmDelay
    polarity: PmPolarity
    cascade: CascadeSpec


@dataclass(frozen=True)
class SceneDescriptor:
    scene_id: int
    kind: SceneKind
    title: str
    gated: bool = False
    pm_task: Optional[PmTaskSpec] = None


def _npc_task(task_id: str, scene_id: int, basis: PmBasis, delay: PmDelay,
              polarity: PmPolarity = PmPolarity.POSITIVE) -> PmTaskSpec:
    return PmTaskSpec(task_id, scene_id, basis, delay, polarity,
                      CascadeSpec(TriggerKind.NPC_DIALOGUE, _NPC_PROMPTS))


_SCENES: tuple[SceneDescriptor, ...] = (
    SceneDescriptor(1, SceneKind.TUTORIAL, "basic interaction and navigation"),
    SceneDescriptor(2, SceneKind.TUTORIAL, "interactive boards"),
    SceneDescriptor(3, SceneKind.STORYLINE, "task list, shopping list, and route planning"),
    SceneDescriptor(4, SceneKind.TUTORIAL, "reminder prompts and notes"),
    SceneDescriptor(5, SceneKind.TUTORIAL, "cooking controls"),
    SceneDescriptor(
        6, SceneKind.STORYLINE, "breakfast multitasking and morning medication",
        pm_task=PmTaskSpec(
            "take_medication", 6, PmBasis.EVENT_BASED, PmDelay.SHORT, PmPolarity.POSITIVE,
            CascadeSpec(TriggerKind.FINAL_BUTTON, _BREAKFAST_PROMPTS))),
    SceneDescriptor(7, SceneKind.TUTORIAL, "collecting items"),
    SceneDescriptor(
        8, SceneKind.STORYLINE, "collect belongings and oven pie",
        pm_task=PmTaskSpec(
            "remove_pie", 8, PmBasis.EVENT_BASED, PmDelay.SHORT, PmPolarity.POSITIVE,
            CascadeSpec(TriggerKind.EXIT_ATTEMPT, _LEAVING_PROMPTS))),
    SceneDescriptor(9, SceneKind.TUTORIAL, "talking with characters"),
    SceneDescriptor(
        10, SceneKind.STORYLINE, "front-gate conversation and planned phone call",
        pm_task=_npc_task("call_rose", 10, PmBasis.TIME_BASED, PmDelay.SHORT)),
    SceneDescriptor(11, SceneKind.TUTORIAL, "gaze practice", gated=True),
    SceneDescriptor(12, SceneKind.STORYLINE, "poster spotting on the ride into town"),
    SceneDescriptor(13, SceneKind.TUTORIAL, "shopping practice"),
    SceneDescriptor(14, SceneKind.STORYLINE, "supermarket shopping from memory"),
    SceneDescriptor(
        15, SceneKind.STORYLINE, "bakery order pickup",
        pm_task=_npc_task("collect_cake", 15, PmBasis.TIME_BASED, PmDelay.MEDIUM)),
    SceneDescriptor(
        16, SceneKind.STORYLINE, "false reminder outside the bakery",
        pm_task=_npc_task("false_prompt_library", 16, PmBasis.EVENT_BASED,
                          PmDelay.MEDIUM, PmPolarity.NEGATIVE)),
    SceneDescriptor(
        17, SceneKind.STORYLINE, "library book return",
        pm_task=_npc_task("return_book", 17, PmBasis.EVENT_BASED, PmDelay.MEDIUM)),
    SceneDescriptor(18, SceneKind.TUTORIAL, "sound localisation practice", gated=True),
    SceneDescriptor(19, SceneKind.STORYLINE, "sound spotting on the ride back"),
    SceneDescriptor(
        20, SceneKind.STORYLINE, "false reminder at the petrol station",
        pm_task=_npc_task("false_prompt_home", 20, PmBasis.TIME_BASED,
                          PmDelay.LONG, PmPolarity.NEGATIVE)),
    SceneDescriptor(
        21, SceneKind.STORYLINE, "handing over the flat keys",
        pm_task=_npc_task("give_keys", 21, PmBasis.EVENT_BASED, PmDelay.LONG)),
    SceneDescriptor(
        22, SceneKind.STORYLINE, "putting away shopping and afternoon medication",
        pm_task=PmTaskSpec(
            "evening_medication", 22, PmBasis.TIME_BASED, PmDelay.LONG, PmPolarity.POSITIVE,
            CascadeSpec(TriggerKind.TIMER, _FINALE_PROMPTS,
                        timer_offsets_ms=FINALE_PROMPT_OFFSETS_MS))),
)

SCENES_BY_ID: dict[int, SceneDescriptor] = {s.scene_id: s for s in _SCENES}
TUTORIAL_SCENES = frozenset(s.scene_id for s in _SCENES if s.kind is SceneKind.TUTORIAL)
STORYLINE_SCENES = frozenset(s.scene_id for s in _SCENES if s.kind is SceneKind.STORYLINE)
GATED_SCENES = frozenset(s.scene_id for s in _SCENES if s.gated)
NPC_SCENES = frozenset(
    s.scene_id for s in _SCENES
    if s.pm_task is not None and s.pm_task.cascade.trigger is TriggerKind.NPC_DIALOGUE)
PM_TASKS: dict[int, PmTaskSpec] = {
    s.scene_id: s.pm_task for s in _SCENES if s.pm_task is not None}
PM_SCENES = frozenset(PM_TASKS)


def scene_sequence() -> tuple[SceneDescriptor, ...]:
    """The full scene table in play order."""
    return _SCENES


# ---------------------------------------------------------------------------
# Events


class EventKind(str, Enum):
    SCENE_ENTERED = "SceneEntered"
    SCENE_EXITED = "SceneExited"
    TUTORIAL_COMPLETED = "TutorialCompleted"
    PRACTICE_ATTEMPT = "PracticeAttempt"
    NOTES_INTENT_ANSWERED = "NotesIntentAnswered"
    ITEM_SELECTED = "ItemSelected"
    ROUTE_UNIT_TOGGLED = "RouteUnitToggled"
    ROUTE_SUBMITTED = "RouteSubmitted"
    COOKING_ITEM_PLACED = "CookingItemPlaced"
    FINAL_BUTTON_PRESSED = "FinalButtonPressed"
    EXIT_ATTEMPTED = "ExitAttempted"
    MEDICATION_TAKEN = "MedicationTaken"
    PIE_REMOVED = "PieRemoved"
    NOTE_OPENED = "NoteOpened"
    NOTE_CLOSED = "NoteClosed"
    NPC_PROMPT_ANSWERED = "NpcPromptAnswered"
    NPC_ITEM_CHOSEN = "NpcItemChosen"
    POSTER_SPOTTED = "PosterSpotted"
    SOUND_TRIGGERED = "SoundTriggered"
    SHOPPING_COLLECTED = "ShoppingCollected"
    KEYS_GIVEN = "KeysGiven"
    ITEM_STOWED = "ItemStowed"


# Required payload fields per kind: name -> allowed types.  ``None`` in the
# tuple marks an optional null.
_PAYLOAD_FIELDS: dict[EventKind, dict[str, tuple[type, ...]]] = {
    EventKind.SCENE_ENTERED: {},
    EventKind.SCENE_EXITED: {},
    EventKind.TUTORIAL_COMPLETED: {},
    EventKind.PRACTICE_ATTEMPT: {"targets_hit": (int,), "distractors_hit": (int,)},
    EventKind.NOTES_INTENT_ANSWERED: {"prompt_index": (int,), "yes": (bool,)},
    EventKind.ITEM_SELECTED: {"item": (str,)},
    EventKind.ROUTE_UNIT_TOGGLED: {"unit": (int,), "selected": (bool,)},
    EventKind.ROUTE_SUBMITTED: {},
    EventKind.COOKING_ITEM_PLACED: {"item": (str,), "cook_time_s": (int, float)},
    EventKind.FINAL_BUTTON_PRESSED: {},
    EventKind.EXIT_ATTEMPTED: {},
    EventKind.MEDICATION_TAKEN: {},
    EventKind.PIE_REMOVED: {},
    EventKind.NOTE_OPENED: {},
    EventKind.NOTE_CLOSED: {},
    EventKind.NPC_PROMPT_ANSWERED: {"prompt_index": (int,), "yes": (bool,)},
    EventKind.NPC_ITEM_CHOSEN: {"choice": (str,)},
    EventKind.POSTER_SPOTTED: {
        "stimulus_id": (str,), "stimulus_kind": (str,), "side": (str,)},
    EventKind.SOUND_TRIGGERED: {
        "stimulus_id": (str,), "stimulus_kind": (str,),
        "stimulus_side": (str,), "response_side": (str, type(None))},
    EventKind.SHOPPING_COLLECTED: {"item": (str,)},
    EventKind.KEYS_GIVEN: {},
    EventKind.ITEM_STOWED: {"item": (str,)},
}

VISUAL_STIMULUS_KINDS = ("target", "shape_distractor", "color_distractor")
AUDITORY_STIMULUS_KINDS = ("target", "high_pitch_distractor", "low_pitch_distractor")
SIDES = ("left", "right")


def validate_payload(kind: EventKind, payload: dict[str, Any]) -> None:
    """Check a payload against the fixed schema for its event kind."""
    schema = _PAYLOAD_FIELDS[kind]
    extra = set(payload) - set(schema)
    missing = set(schema) - set(payload)
    if extra or missing:
        raise ValueError(
            f"{kind.value} payload has wrong fields "
            f"(missing={sorted(missing)}, unexpected={sorted(extra)})")
    for name, types in schema.items():
        value = payload[name]
        # bool is an int subclass; keep the two apart.
        if isinstance(value, bool) and bool not in types:
            raise ValueError(f"{kind.value}.{name} must not be a bool")
        if not isinstance(value, types):
            raise ValueError(
                f"{kind.value}.{name} has type {type(value).__name__}")
        if isinstance(value, float) and not math.isfinite(value):
            raise ValueError(f"{kind.value}.{name} must be finite")


@dataclass(frozen=True)
class SessionEvent:
    """One timestamped, scene-stamped record of something the user did."""

    seq: int
    sim_time_ms: int
    scene: int
    kind: EventKind
    payload: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.seq < 0:
            raise ValueError("seq must be non-negative")
        if self.sim_time_ms < 0:
            raise ValueError("sim_time_ms must be non-negative")
        if self.scene not in SCENES_BY_ID:
            raise ValueError(f"unknown scene id {self.scene}")
        validate_payload(self.kind, self.payload)


# ---------------------------------------------------------------------------
# Effects


@dataclass(frozen=True)
class PromptShown:
    task_id: str
    depth: int  # 1..3
    text: str


@dataclass(frozen=True)
class SceneTransition:
    to_scene: int


@dataclass(frozen=True)
class PracticeRetry:
    scene_id: int
    attempt: int


@dataclass(frozen=True)
class PracticePassed:
    scene_id: int
    attempts: int


@dataclass(frozen=True)
class SessionComplete:
    pass


Effect = object  # union of the five dataclasses above


# ---------------------------------------------------------------------------
# Errors


class EngineError(Exception):
    """Base class for event rejections."""


class OutOfOrderEvent(EngineError):
    """Event timestamp is earlier than the engine clock."""


class WrongSceneEvent(EngineError):
    """Event is stamped with a scene other than the current one."""


class NotAGatedScene(EngineError):
    """Practice attempt outside scenes 11 and 18."""


class InvalidEvent(EngineError):
    """Event is well-formed but impossible in the current state."""


# ---------------------------------------------------------------------------
# Gate


class GateResult(str, Enum):
    PASS = "pass"
    RETRY = "retry"


def practice_gate(scene_id: int, targets_hit: int, distractors_hit: int) -> GateResult:
    """Judge one practice attempt in a gated tutorial.

    The attempt passes only when all three practice targets were hit and no
    distractor drew a response; anything less repeats the trial.
    """
    if scene_id not in GATED_SCENES:
        raise NotAGatedScene(f"scene {scene_id} has no practice gate")
    if not 0 <= targets_hit <= 3:
        raise ValueError("targets_hit must be in 0..3")
    if distractors_hit < 0:
        raise ValueError("distractors_hit must be non-negative")
    if targets_hit == 3 and distractors_hit == 0:
        return GateResult.PASS
    return GateResult.RETRY


# ---------------------------------------------------------------------------
# State


@dataclass
class SessionState:
    """Everything the engine needs to validate the next event.

    Treat instances as values: :func:`advance` copies before mutating, so a
    state can be shared across threads or kept for inspection.
    """

    current_scene: int = 1
    entered: bool = False
    scene_entry_ms: int = 0
    sim_clock_ms: int = 0
    completed: bool = False
    armed_to: Optional[int] = None

    tutorial_done: bool = False
    practice_attempts: dict[int, int] = field(default_factory=dict)

    notes_prompts_answered: int = 0
    route_selected: set[int] = field(default_factory=set)
    route_submitted: bool = False
    selections: set[str] = field(default_factory=set)
    cooked_items: set[str] = field(default_factory=set)
    spotted_ids: set[str] = field(default_factory=set)
    note_open: bool = False
    keys_given: bool = False
    npc_answered: int = 0
    awaiting_choice: bool = False

    prompt_depth: dict[str, int] = field(default_factory=dict)
    pm_action_done: set[str] = field(default_factory=set)
    pm_done_depth: dict[str, int] = field(default_factory=dict)
    npc_affirmed_at: dict[str, int] = field(default_factory=dict)
    npc_choice: dict[str, str] = field(default_factory=dict)

    def copy(self) -> "SessionState":
        return dataclasses.replace(
            self,
            practice_attempts=dict(self.practice_attempts),
            route_selected=set(self.route_selected),
            selections=set(self.selections),
            cooked_items=set(self.cooked_items),
            spotted_ids=set(self.spotted_ids),
            prompt_depth=dict(self.prompt_depth),
            pm_action_done=set(self.pm_action_done),
            pm_done_depth=dict(self.pm_done_depth),
            npc_affirmed_at=dict(self.npc_affirmed_at),
            npc_choice=dict(self.npc_choice),
        )


def initial_state() -> SessionState:
    return SessionState()


def _reset_scene_fields(state: SessionState) -> None:
    state.tutorial_done = False
    state.notes_prompts_answered = 0
    state.route_selected = set()
    state.route_submitted = False
    state.selections = set()
    state.cooked_items = set()
    state.spotted_ids = set()
    state.note_open = False
    state.keys_given = False
    state.npc_answered = 0
    state.awaiting_choice = False


# ---------------------------------------------------------------------------
# Engine


def _fire_due_finale_prompts(state: SessionState, now_ms: int,
                             effects: list[Effect]) -> None:
    # Scene 22 reminders are clock-driven: any event whose timestamp reaches
    # an offset fires the prompts due up to that instant, oldest first,
    # before the event itself is applied.
    task = PM_TASKS[22]
    if task.task_id in state.pm_action_done:
        return
    depth = state.prompt_depth.get(task.task_id, 0)
    offsets = task.cascade.timer_offsets_ms or ()
    due = sum(1 for off in offsets if now_ms - state.scene_entry_ms >= off)
    while depth < due:
        depth += 1
        state.prompt_depth[task.task_id] = depth
        effects.append(PromptShown(task.task_id, depth,
                                   task.cascade.prompt_texts[depth - 1]))


def _resolve(state: SessionState, effects: list[Effect]) -> None:
    nxt = state.current_scene + 1
    state.armed_to = nxt
    effects.append(SceneTransition(nxt))


def _cascade_press(state: SessionState, task: PmTaskSpec,
                   effects: list[Effect]) -> None:
    # Shared by the breakfast final button and the flat exit attempt: a press
    # with the task done ends the scene; otherwise each press escalates one
    # prompt, and the press after the third prompt ends the scene unscored.
    if task.task_id in state.pm_action_done:
        _resolve(state, effects)
        return
    depth = state.prompt_depth.get(task.task_id, 0)
    if depth < 3:
        depth += 1
        state.prompt_depth[task.task_id] = depth
        effects.append(PromptShown(task.task_id, depth,
                                   task.cascade.prompt_texts[depth - 1]))
    else:
        state.pm_done_depth[task.task_id] = 4  # never done
        _resolve(state, effects)


def _pm_action(state: SessionState, task: PmTaskSpec) -> None:
    if task.task_id in state.pm_action_done:
        raise InvalidEvent(f"{task.task_id} already done")
    state.pm_action_done.add(task.task_id)
    state.pm_done_depth[task.task_id] = state.prompt_depth.get(task.task_id, 0)


def advance(state: SessionState, event: SessionEvent) -> tuple[SessionState, list[Effect]]:
    """Apply one event, returning the successor state and emitted effects.

    Raises :class:`OutOfOrderEvent` on a timestamp regression,
    :class:`WrongSceneEvent` on a scene mismatch, and :class:`InvalidEvent`
    (or :class:`NotAGatedScene`) when the event cannot happen in the current
    state.  The input state is never mutated.
    """
    if event.sim_time_ms < state.sim_clock_ms:
        raise OutOfOrderEvent(
            f"event {event.seq} at {event.sim_time_ms} ms behind clock "
            f"{state.sim_clock_ms} ms")
    if event.scene != state.current_scene:
        raise WrongSceneEvent(
            f"event {event.seq} stamped scene {event.scene}, "
            f"current scene is {state.current_scene}")

    new = state.copy()
    effects: list[Effect] = []
    kind = event.kind
    scene = SCENES_BY_ID[new.current_scene]
    sid = scene.scene_id

    if new.completed and kind is not EventKind.SCENE_EXITED:
        raise InvalidEvent("session already complete")

    if kind is EventKind.SCENE_ENTERED:
        if new.entered:
            raise InvalidEvent(f"scene {sid} already entered")
        new.entered = True
        new.armed_to = None
        new.scene_entry_ms = event.sim_time_ms
        _reset_scene_fields(new)
        if sid in NPC_SCENES:
            task = PM_TASKS[sid]
            new.prompt_depth[task.task_id] = 1
            effects.append(PromptShown(task.task_id, 1,
                                       task.cascade.prompt_texts[0]))
        new.sim_clock_ms = event.sim_time_ms
        return new, effects

    if not new.entered:
        raise InvalidEvent(f"scene {sid} not entered yet")

    if sid == 22 and not new.completed:
        _fire_due_finale_prompts(new, event.sim_time_ms, effects)

    if kind is EventKind.SCENE_EXITED:
        if new.completed:
            new.entered = False
        elif new.armed_to is not None:
            new.current_scene = new.armed_to
            new.armed_to = None
            new.entered = False
        elif sid in (12, 19):
            _resolve(new, effects)
            new.current_scene = new.armed_to
            new.armed_to = None
            new.entered = False
        elif sid == 3:
            if new.notes_prompts_answered < 3 or not new.route_submitted:
                raise InvalidEvent("scene 3 tasks unfinished")
            _resolve(new, effects)
            new.current_scene = new.armed_to
            new.armed_to = None
            new.entered = False
        else:
            raise InvalidEvent(f"scene {sid} is not finished")
        new.sim_clock_ms = event.sim_time_ms
        return new, effects

    if new.armed_to is not None and not (
            kind is EventKind.KEYS_GIVEN and sid == 21):
        raise InvalidEvent(
            f"scene {sid} already resolved; only SceneExited is valid")

    if kind is EventKind.TUTORIAL_COMPLETED:
        if scene.kind is not SceneKind.TUTORIAL or scene.gated:
            raise InvalidEvent(f"scene {sid} has no plain tutorial completion")
        if new.tutorial_done:
            raise InvalidEvent(f"tutorial {sid} already completed")
        new.tutorial_done = True
        _resolve(new, effects)

    elif kind is EventKind.PRACTICE_ATTEMPT:
        if not 0 <= event.payload["targets_hit"] <= 3:
            raise InvalidEvent("targets_hit must be in 0..3")
        if event.payload["distractors_hit"] < 0:
            raise InvalidEvent("distractors_hit must be non-negative")
        result = practice_gate(sid, event.payload["targets_hit"],
                               event.payload["distractors_hit"])
        attempts = new.practice_attempts.get(sid, 0) + 1
        new.practice_attempts[sid] = attempts
        if result is GateResult.PASS:
            effects.append(PracticePassed(sid, attempts))
            _resolve(new, effects)
        else:
            effects.append(PracticeRetry(sid, attempts))

    elif kind is EventKind.NOTES_INTENT_ANSWERED:
        if sid != 3:
            raise InvalidEvent("notes-intent prompts only occur in scene 3")
        expected = new.notes_prompts_answered + 1
        if event.payload["prompt_index"] != expected or expected > 3:
            raise InvalidEvent(
                f"notes-intent prompt {event.payload['prompt_index']} "
                f"out of order (expected {expected})")
        new.notes_prompts_answered = expected

    elif kind is EventKind.ITEM_SELECTED:
        item = event.payload["item"]
        if sid == 3:
            if item in new.selections:
                raise InvalidEvent(f"item {item!r} already selected")
            if len(new.selections) >= SHOPPING_LIST_LENGTH:
                raise InvalidEvent(
                    f"the list board holds {SHOPPING_LIST_LENGTH} items")
            new.selections.add(item)
        elif sid == 8:
            pass  # grabs are free-form; re-grab attempts are legitimate errors
        else:
            raise InvalidEvent(f"no item selection in scene {sid}")

    elif kind is EventKind.ROUTE_UNIT_TOGGLED:
        if sid != 3:
            raise InvalidEvent("route board only exists in scene 3")
        if new.route_submitted:
            raise InvalidEvent("route already submitted")
        unit = event.payload["unit"]
        if not 1 <= unit <= ROUTE_UNIT_COUNT:
            raise InvalidEvent(f"street unit {unit} out of range")
        if event.payload["selected"]:
            if unit in new.route_selected:
                raise InvalidEvent(f"street unit {unit} already selected")
            new.route_selected.add(unit)
        else:
            if unit not in new.route_selected:
                raise InvalidEvent(f"street unit {unit} not selected")
            new.route_selected.discard(unit)

    elif kind is EventKind.ROUTE_SUBMITTED:
        if sid != 3:
            raise InvalidEvent("route board only exists in scene 3")
        if new.route_submitted:
            raise InvalidEvent("route already submitted")
        new.route_submitted = True

    elif kind is EventKind.COOKING_ITEM_PLACED:
        if sid != 6:
            raise InvalidEvent("cooking only happens in scene 6")
        item = event.payload["item"]
        if item not in COOKING_ITEMS:
            raise InvalidEvent(f"unknown cooking item {item!r}")
        if item in new.cooked_items:
            raise InvalidEvent(f"{item} already placed on the worktop")
        if event.payload["cook_time_s"] < 0:
            raise InvalidEvent("cook_time_s must be non-negative")
        new.cooked_items.add(item)

    elif kind is EventKind.FINAL_BUTTON_PRESSED:
        if sid == 6:
            _cascade_press(new, PM_TASKS[6], effects)
        elif sid == 14:
            _resolve(new, effects)
        elif sid == 22:
            task = PM_TASKS[22]
            if task.task_id not in new.pm_action_done:
                new.pm_done_depth[task.task_id] = 4
            new.completed = True
            effects.append(SessionComplete())
        else:
            raise InvalidEvent(f"scene {sid} has no final button")

    elif kind is EventKind.EXIT_ATTEMPTED:
        if sid != 8:
            raise InvalidEvent("exit attempts only apply to scene 8")
        _cascade_press(new, PM_TASKS[8], effects)

    elif kind is EventKind.MEDICATION_TAKEN:
        if sid == 6:
            _pm_action(new, PM_TASKS[6])
        elif sid == 22:
            _pm_action(new, PM_TASKS[22])
        else:
            raise InvalidEvent(f"no medication to take in scene {sid}")

    elif kind is EventKind.PIE_REMOVED:
        if sid != 8:
            raise InvalidEvent("the oven pie belongs to scene 8")
        _pm_action(new, PM_TASKS[8])

    elif kind is EventKind.NOTE_OPENED:
        if new.note_open:
            raise InvalidEvent("notes already open")
        new.note_open = True

    elif kind is EventKind.NOTE_CLOSED:
        if not new.note_open:
            raise InvalidEvent("notes are not open")
        new.note_open = False

    elif kind is EventKind.NPC_PROMPT_ANSWERED:
        if sid not in NPC_SCENES:
            raise InvalidEvent(f"no conversation prompts in scene {sid}")
        if new.awaiting_choice:
            raise InvalidEvent("answer already given; choose an item")
        task = PM_TASKS[sid]
        expected = new.npc_answered + 1
        if event.payload["prompt_index"] != expected or expected > 3:
            raise InvalidEvent(
                f"conversation prompt {event.payload['prompt_index']} "
                f"out of order (expected {expected})")
        new.npc_answered = expected
        if event.payload["yes"]:
            new.npc_affirmed_at[task.task_id] = expected
            if task.polarity is PmPolarity.POSITIVE:
                new.awaiting_choice = True
            else:
                _resolve(new, effects)
        elif expected < 3:
            depth = expected + 1
            new.prompt_depth[task.task_id] = depth
            effects.append(PromptShown(task.task_id, depth,
                                       task.cascade.prompt_texts[depth - 1]))
        else:
            new.npc_affirmed_at[task.task_id] = 0
            _resolve(new, effects)

    elif kind is EventKind.NPC_ITEM_CHOSEN:
        if sid not in NPC_SCENES or not new.awaiting_choice:
            raise InvalidEvent("no item board is showing")
        choice = event.payload["choice"]
        if choice not in {c.value for c in NpcChoice}:
            raise InvalidEvent(f"unknown board choice {choice!r}")
        task = PM_TASKS[sid]
        new.npc_choice[task.task_id] = choice
        new.awaiting_choice = False
        _resolve(new, effects)

    elif kind is EventKind.POSTER_SPOTTED:
        if sid != 12:
            raise InvalidEvent("posters only appear in scene 12")
        if event.payload["stimulus_kind"] not in VISUAL_STIMULUS_KINDS:
            raise InvalidEvent(
                f"unknown poster kind {event.payload['stimulus_kind']!r}")
        if event.payload["side"] not in SIDES:
            raise InvalidEvent(f"unknown side {event.payload['side']!r}")
        stim = event.payload["stimulus_id"]
        if stim in new.spotted_ids:
            raise InvalidEvent(f"stimulus {stim!r} already spotted")
        new.spotted_ids.add(stim)

    elif kind is EventKind.SOUND_TRIGGERED:
        if sid != 19:
            raise InvalidEvent("sound stimuli only occur in scene 19")
        if event.payload["stimulus_kind"] not in AUDITORY_STIMULUS_KINDS:
            raise InvalidEvent(
                f"unknown sound kind {event.payload['stimulus_kind']!r}")
        if event.payload["stimulus_side"] not in SIDES:
            raise InvalidEvent(f"unknown side {event.payload['stimulus_side']!r}")
        if event.payload["response_side"] not in (None, "left", "right"):
            raise InvalidEvent(
                f"unknown response side {event.payload['response_side']!r}")
        stim = event.payload["stimulus_id"]
        if stim in new.spotted_ids:
            raise InvalidEvent(f"stimulus {stim!r} already recorded")
        new.spotted_ids.add(stim)

    elif kind is EventKind.SHOPPING_COLLECTED:
        if sid != 14:
            raise InvalidEvent("shelf picking only happens in scene 14")
        item = event.payload["item"]
        if item in new.selections:
            raise InvalidEvent(f"item {item!r} already in the basket")
        if len(new.selections) >= SHOPPING_LIST_LENGTH:
            raise InvalidEvent(
                f"the basket holds {SHOPPING_LIST_LENGTH} items")
        new.selections.add(item)

    elif kind is EventKind.KEYS_GIVEN:
        if sid != 21:
            raise InvalidEvent("the key handover belongs to scene 21")
        if new.keys_given:
            raise InvalidEvent("keys already handed over")
        new.keys_given = True

    elif kind is EventKind.ITEM_STOWED:
        if sid != 22:
            raise InvalidEvent("shopping is put away in scene 22")
        item = event.payload["item"]
        if item in new.selections:
            raise InvalidEvent(f"item {item!r} already put away")
        new.selections.add(item)

    else:  # pragma: no cover - every kind is handled above
        raise InvalidEvent(f"unhandled event kind {kind}")

    new.sim_clock_ms = event.sim_time_ms
    return new, effects


def replay(events: Iterable[SessionEvent],
           state: Optional[SessionState] = None,
           ) -> tuple[SessionState, list[tuple[SessionEvent, list[Effect]]]]:
    """Run a whole event stream through :func:`advance`.

    Returns the final state and the per-event effects.  Raises the first
    engine error encountered; a valid log replays with none.
    """
    current = state if state is not None else initial_state()
    trace: list[tuple[SessionEvent, list[Effect]]] = []
    for event in events:
        current, effects = advance(current, event)
        trace.append((event, effects))
    return current, trace
