from __future__ import annotations

import dataclasses

import pytest
from hypothesis import given, strategies as st

from errandlab.scenario import (
    EventKind,
    GateResult,
    GATED_SCENES,
    InvalidEvent,
    NPC_SCENES,
    NotAGatedScene,
    OutOfOrderEvent,
    PM_TASKS,
    PracticePassed,
    PracticeRetry,
    PromptShown,
    SceneKind,
    SceneTransition,
    SessionComplete,
    SessionEvent,
    SessionState,
    STORYLINE_SCENES,
    TUTORIAL_SCENES,
    WrongSceneEvent,
    advance,
    initial_state,
    practice_gate,
    replay,
    scene_sequence,
)
from walks import minimal_walk


def _ev(seq, t_ms, scene, kind, payload=None):
    return SessionEvent(seq=seq, sim_time_ms=t_ms, scene=scene, kind=kind,
                        payload=payload or {})


def _entered(scene_id, t_ms=0):
    state, _ = advance(
        SessionState(current_scene=scene_id),
        _ev(0, t_ms, scene_id, EventKind.SCENE_ENTERED))
    return state


class TestSceneTable:
    def test_sequence_shape(self):
        scenes = scene_sequence()
        assert len(scenes) == 22
        assert [s.scene_id for s in scenes] == list(range(1, 23))

    def test_partition(self):
        assert TUTORIAL_SCENES == {1, 2, 4, 5, 7, 9, 11, 13, 18}
        assert len(STORYLINE_SCENES) == 13
        assert TUTORIAL_SCENES | STORYLINE_SCENES == set(range(1, 23))
        assert not TUTORIAL_SCENES & STORYLINE_SCENES

    def test_gated_and_npc(self):
        assert GATED_SCENES == {11, 18}
        assert NPC_SCENES == {10, 15, 16, 17, 20, 21}

    def test_pm_tasks(self):
        assert set(PM_TASKS) == {6, 8, 10, 15, 16, 17, 20, 21, 22}
        negatives = {sid for sid, task in PM_TASKS.items()
                     if task.polarity.value == "negative"}
        assert negatives == {16, 20}


class TestPracticeGate:
    @pytest.mark.parametrize("targets", range(4))
    @pytest.mark.parametrize("distractors", range(4))
    def test_exhaustive(self, targets, distractors):
        result = practice_gate(11, targets, distractors)
        expected = (GateResult.PASS if targets == 3 and distractors == 0
                    else GateResult.RETRY)
        assert result is expected

    def test_not_gated(self):
        with pytest.raises(NotAGatedScene):
            practice_gate(5, 3, 0)

    def test_range_checks(self):
        with pytest.raises(ValueError):
            practice_gate(11, 4, 0)
        with pytest.raises(ValueError):
            practice_gate(18, 2, -1)


class TestFullWalk:
    def test_minimal_walk_completes(self):
        final, trace = replay(minimal_walk())
        assert final.completed
        assert final.current_scene == 22
        assert any(isinstance(e, SessionComplete)
                   for _, effects in trace for e in effects)

    def test_transitions_forward_one_step(self):
        _, trace = replay(minimal_walk())
        transitions = [e.to_scene for _, effects in trace
                       for e in effects if isinstance(e, SceneTransition)]
        assert transitions == list(range(2, 23))

    def test_prompt_depths_are_increasing_prefixes(self):
        _, trace = replay(minimal_walk())
        depths: dict[str, list[int]] = {}
        for _, effects in trace:
            for effect in effects:
                if isinstance(effect, PromptShown):
                    depths.setdefault(effect.task_id, []).append(effect.depth)
        assert depths  # the refusal-heavy walk triggers plenty of prompts
        for task_id, seen in depths.items():
            assert seen == list(range(1, len(seen) + 1)), task_id
            assert len(seen) <= 3


class TestAdvanceBasics:
    def test_purity(self):
        state = initial_state()
        before = dataclasses.replace(state)
        advance(state, _ev(0, 0, 1, EventKind.SCENE_ENTERED))
        assert state == before

    def test_out_of_order(self):
        state = _entered(1, t_ms=5_000)
        with pytest.raises(OutOfOrderEvent):
            advance(state, _ev(1, 4_999, 1, EventKind.TUTORIAL_COMPLETED))

    def test_wrong_scene(self):
        state = _entered(1)
        with pytest.raises(WrongSceneEvent):
            advance(state, _ev(1, 1, 2, EventKind.TUTORIAL_COMPLETED))

    def test_event_before_entry(self):
        with pytest.raises(InvalidEvent):
            advance(SessionState(current_scene=1),
                    _ev(0, 0, 1, EventKind.TUTORIAL_COMPLETED))

    def test_double_entry(self):
        state = _entered(1)
        with pytest.raises(InvalidEvent):
            advance(state, _ev(1, 1, 1, EventKind.SCENE_ENTERED))

    def test_after_resolution_only_exit(self):
        state = _entered(1)
        state, effects = advance(state, _ev(1, 1, 1, EventKind.TUTORIAL_COMPLETED))
        assert any(isinstance(e, SceneTransition) for e in effects)
        with pytest.raises(InvalidEvent):
            advance(state, _ev(2, 2, 1, EventKind.TUTORIAL_COMPLETED))
        state, _ = advance(state, _ev(2, 2, 1, EventKind.SCENE_EXITED))
        assert state.current_scene == 2
        assert not state.entered

    def test_unfinished_scene_cannot_exit(self):
        state = _entered(1)
        with pytest.raises(InvalidEvent):
            advance(state, _ev(1, 1, 1, EventKind.SCENE_EXITED))


class TestGatedScenes:
    def test_retry_then_pass(self):
        state = _entered(11)
        state, effects = advance(state, _ev(1, 1, 11, EventKind.PRACTICE_ATTEMPT,
                                            {"targets_hit": 2, "distractors_hit": 0}))
        assert effects == [PracticeRetry(11, 1)]
        state, effects = advance(state, _ev(2, 2, 11, EventKind.PRACTICE_ATTEMPT,
                                            {"targets_hit": 3, "distractors_hit": 1}))
        assert effects == [PracticeRetry(11, 2)]
        state, effects = advance(state, _ev(3, 3, 11, EventKind.PRACTICE_ATTEMPT,
                                            {"targets_hit": 3, "distractors_hit": 0}))
        assert effects[0] == PracticePassed(11, 3)
        assert effects[1] == SceneTransition(12)

    def test_gate_soundness(self):
        # scene 12 is unreachable from scene 11 without a passing attempt
        state = _entered(11)
        for seq in range(1, 5):
            state, effects = advance(
                state, _ev(seq, seq, 11, EventKind.PRACTICE_ATTEMPT,
                           {"targets_hit": seq % 3, "distractors_hit": 1}))
            assert all(not isinstance(e, SceneTransition) for e in effects)
        with pytest.raises(InvalidEvent):
            advance(state, _ev(5, 5, 11, EventKind.SCENE_EXITED))

    def test_payload_range_rejected(self):
        state = _entered(18)
        with pytest.raises(InvalidEvent):
            advance(state, _ev(1, 1, 18, EventKind.PRACTICE_ATTEMPT,
                               {"targets_hit": 5, "distractors_hit": 0}))


class TestBreakfastCascade:
    def test_act_before_any_prompt(self):
        state = _entered(6)
        state, _ = advance(state, _ev(1, 1, 6, EventKind.MEDICATION_TAKEN))
        assert state.pm_done_depth["take_medication"] == 0
        state, effects = advance(state, _ev(2, 2, 6, EventKind.FINAL_BUTTON_PRESSED))
        assert effects == [SceneTransition(7)]

    def test_three_prompts_then_give_up(self):
        state = _entered(6)
        for seq, depth in ((1, 1), (2, 2), (3, 3)):
            state, effects = advance(
                state, _ev(seq, seq, 6, EventKind.FINAL_BUTTON_PRESSED))
            assert isinstance(effects[0], PromptShown)
            assert effects[0].depth == depth
        state, effects = advance(state, _ev(4, 4, 6, EventKind.FINAL_BUTTON_PRESSED))
        assert effects == [SceneTransition(7)]
        assert state.pm_done_depth["take_medication"] == 4

    def test_yield_after_second_prompt(self):
        state = _entered(6)
        state, _ = advance(state, _ev(1, 1, 6, EventKind.FINAL_BUTTON_PRESSED))
        state, _ = advance(state, _ev(2, 2, 6, EventKind.FINAL_BUTTON_PRESSED))
        state, _ = advance(state, _ev(3, 3, 6, EventKind.MEDICATION_TAKEN))
        assert state.pm_done_depth["take_medication"] == 2
        _, effects = advance(state, _ev(4, 4, 6, EventKind.FINAL_BUTTON_PRESSED))
        assert effects == [SceneTransition(7)]

    def test_medication_twice_rejected(self):
        state = _entered(6)
        state, _ = advance(state, _ev(1, 1, 6, EventKind.MEDICATION_TAKEN))
        with pytest.raises(InvalidEvent):
            advance(state, _ev(2, 2, 6, EventKind.MEDICATION_TAKEN))


class TestNpcScenes:
    def test_prompt_one_on_entry(self):
        state = SessionState(current_scene=10)
        state, effects = advance(state, _ev(0, 0, 10, EventKind.SCENE_ENTERED))
        assert effects == [PromptShown("call_rose", 1,
                                       "Do we need to do something else at this time?")]

    def test_affirm_then_choose(self):
        state = _entered(10)
        state, effects = advance(
            state, _ev(1, 1, 10, EventKind.NPC_PROMPT_ANSWERED,
                       {"prompt_index": 1, "yes": True}))
        assert effects == []  # the item board opens; no transition yet
        assert state.awaiting_choice
        with pytest.raises(InvalidEvent):
            advance(state, _ev(2, 2, 10, EventKind.NPC_PROMPT_ANSWERED,
                               {"prompt_index": 2, "yes": False}))
        state, effects = advance(
            state, _ev(2, 2, 10, EventKind.NPC_ITEM_CHOSEN, {"choice": "correct"}))
        assert effects == [SceneTransition(11)]
        assert state.npc_affirmed_at["call_rose"] == 1
        assert state.npc_choice["call_rose"] == "correct"

    def test_refusals_escalate_then_resolve(self):
        state = _entered(15)
        state, effects = advance(
            state, _ev(1, 1, 15, EventKind.NPC_PROMPT_ANSWERED,
                       {"prompt_index": 1, "yes": False}))
        assert effects[0].depth == 2
        state, effects = advance(
            state, _ev(2, 2, 15, EventKind.NPC_PROMPT_ANSWERED,
                       {"prompt_index": 2, "yes": False}))
        assert effects[0].depth == 3
        state, effects = advance(
            state, _ev(3, 3, 15, EventKind.NPC_PROMPT_ANSWERED,
                       {"prompt_index": 3, "yes": False}))
        assert effects == [SceneTransition(16)]
        assert state.npc_affirmed_at["collect_cake"] == 0

    def test_false_prompt_affirm_resolves_without_board(self):
        state = _entered(16)
        state, effects = advance(
            state, _ev(1, 1, 16, EventKind.NPC_PROMPT_ANSWERED,
                       {"prompt_index": 1, "yes": True}))
        assert effects == [SceneTransition(17)]
        assert state.npc_affirmed_at["false_prompt_library"] == 1
        assert not state.awaiting_choice

    def test_out_of_order_prompt_index(self):
        state = _entered(10)
        with pytest.raises(InvalidEvent):
            advance(state, _ev(1, 1, 10, EventKind.NPC_PROMPT_ANSWERED,
                               {"prompt_index": 2, "yes": False}))

    def test_keys_allowed_after_resolution(self):
        state = _entered(21)
        state, _ = advance(state, _ev(1, 1, 21, EventKind.NPC_PROMPT_ANSWERED,
                                      {"prompt_index": 1, "yes": True}))
        state, _ = advance(state, _ev(2, 2, 21, EventKind.NPC_ITEM_CHOSEN,
                                      {"choice": "correct"}))
        assert state.armed_to == 22
        state, _ = advance(state, _ev(3, 3, 21, EventKind.KEYS_GIVEN))
        assert state.keys_given
        state, _ = advance(state, _ev(4, 4, 21, EventKind.SCENE_EXITED))
        assert state.current_scene == 22


class TestSceneThree:
    def test_exit_requires_prompts_and_submission(self):
        state = _entered(3)
        with pytest.raises(InvalidEvent):
            advance(state, _ev(1, 1, 3, EventKind.SCENE_EXITED))
        for index in (1, 2, 3):
            state, _ = advance(state, _ev(index, index, 3,
                                          EventKind.NOTES_INTENT_ANSWERED,
                                          {"prompt_index": index, "yes": True}))
        with pytest.raises(InvalidEvent):
            advance(state, _ev(4, 4, 3, EventKind.SCENE_EXITED))
        state, _ = advance(state, _ev(4, 4, 3, EventKind.ROUTE_SUBMITTED))
        state, effects = advance(state, _ev(5, 5, 3, EventKind.SCENE_EXITED))
        assert state.current_scene == 4

    def test_route_toggle_bounds_and_dedupe(self):
        state = _entered(3)
        state, _ = advance(state, _ev(1, 1, 3, EventKind.ROUTE_UNIT_TOGGLED,
                                      {"unit": 7, "selected": True}))
        with pytest.raises(InvalidEvent):
            advance(state, _ev(2, 2, 3, EventKind.ROUTE_UNIT_TOGGLED,
                               {"unit": 7, "selected": True}))
        with pytest.raises(InvalidEvent):
            advance(state, _ev(2, 2, 3, EventKind.ROUTE_UNIT_TOGGLED,
                               {"unit": 24, "selected": True}))
        state, _ = advance(state, _ev(2, 2, 3, EventKind.ROUTE_UNIT_TOGGLED,
                                      {"unit": 7, "selected": False}))
        assert state.route_selected == set()

    def test_toggles_frozen_after_submit(self):
        state = _entered(3)
        state, _ = advance(state, _ev(1, 1, 3, EventKind.ROUTE_SUBMITTED))
        with pytest.raises(InvalidEvent):
            advance(state, _ev(2, 2, 3, EventKind.ROUTE_UNIT_TOGGLED,
                               {"unit": 3, "selected": True}))

    def test_selection_capped_at_list_length(self):
        state = _entered(3)
        for i in range(10):
            state, _ = advance(state, _ev(i + 1, i + 1, 3, EventKind.ITEM_SELECTED,
                                          {"item": f"item_{i}"}))
        with pytest.raises(InvalidEvent):
            advance(state, _ev(11, 11, 3, EventKind.ITEM_SELECTED,
                               {"item": "one_too_many"}))


class TestFinaleTimers:
    def test_prompts_fire_at_offsets(self):
        state = _entered(22)
        state, effects = advance(state, _ev(1, 70_000, 22, EventKind.ITEM_STOWED,
                                            {"item": "milk"}))
        assert [e.depth for e in effects if isinstance(e, PromptShown)] == [1]
        state, effects = advance(state, _ev(2, 91_000, 22, EventKind.ITEM_STOWED,
                                            {"item": "bread"}))
        assert [e.depth for e in effects if isinstance(e, PromptShown)] == [2, 3]

    def test_action_just_before_first_prompt(self):
        state = _entered(22)
        state, effects = advance(state, _ev(1, 69_999, 22, EventKind.MEDICATION_TAKEN))
        assert effects == []
        assert state.pm_done_depth["evening_medication"] == 0

    def test_action_on_the_prompt_instant(self):
        state = _entered(22)
        state, effects = advance(state, _ev(1, 70_000, 22, EventKind.MEDICATION_TAKEN))
        assert [e.depth for e in effects if isinstance(e, PromptShown)] == [1]
        assert state.pm_done_depth["evening_medication"] == 1

    def test_entry_offset_is_respected(self):
        # prompts key off time since scene entry, not absolute time
        state = SessionState(current_scene=22)
        state, _ = advance(state, _ev(0, 500_000, 22, EventKind.SCENE_ENTERED))
        state, effects = advance(state, _ev(1, 569_999, 22, EventKind.ITEM_STOWED,
                                            {"item": "milk"}))
        assert effects == []
        state, effects = advance(state, _ev(2, 570_000, 22, EventKind.ITEM_STOWED,
                                            {"item": "bread"}))
        assert [e.depth for e in effects if isinstance(e, PromptShown)] == [1]

    def test_completion_and_single_exit(self):
        state = _entered(22)
        state, effects = advance(state, _ev(1, 1_000, 22,
                                            EventKind.FINAL_BUTTON_PRESSED))
        assert any(isinstance(e, SessionComplete) for e in effects)
        assert state.completed
        with pytest.raises(InvalidEvent):
            advance(state, _ev(2, 2_000, 22, EventKind.ITEM_STOWED, {"item": "x"}))
        state, _ = advance(state, _ev(2, 2_000, 22, EventKind.SCENE_EXITED))
        assert not state.entered

    def test_no_prompts_after_medication(self):
        state = _entered(22)
        state, _ = advance(state, _ev(1, 10_000, 22, EventKind.MEDICATION_TAKEN))
        _, effects = advance(state, _ev(2, 95_000, 22, EventKind.ITEM_STOWED,
                                        {"item": "milk"}))
        assert effects == []


class TestEventValidation:
    def test_unknown_scene_id(self):
        with pytest.raises(ValueError):
            SessionEvent(seq=0, sim_time_ms=0, scene=23,
                         kind=EventKind.SCENE_ENTERED)

    def test_payload_schema_enforced(self):
        with pytest.raises(ValueError):
            SessionEvent(seq=0, sim_time_ms=0, scene=3,
                         kind=EventKind.ITEM_SELECTED, payload={})
        with pytest.raises(ValueError):
            SessionEvent(seq=0, sim_time_ms=0, scene=3,
                         kind=EventKind.ITEM_SELECTED,
                         payload={"item": "milk", "extra": 1})

    def test_bool_is_not_int(self):
        with pytest.raises(ValueError):
            SessionEvent(seq=0, sim_time_ms=0, scene=11,
                         kind=EventKind.PRACTICE_ATTEMPT,
                         payload={"targets_hit": True, "distractors_hit": 0})

    def test_nonfinite_float_rejected(self):
        with pytest.raises(ValueError):
            SessionEvent(seq=0, sim_time_ms=0, scene=6,
                         kind=EventKind.COOKING_ITEM_PLACED,
                         payload={"item": "kettle", "cook_time_s": float("nan")})

    @given(targets=st.integers(0, 3), distractors=st.integers(0, 3))
    def test_gate_matches_engine(self, targets, distractors):
        state = _entered(11)
        _, effects = advance(state, _ev(1, 1, 11, EventKind.PRACTICE_ATTEMPT,
                                        {"targets_hit": targets,
                                         "distractors_hit": distractors}))
        passed = any(isinstance(e, PracticePassed) for e in effects)
        assert passed == (practice_gate(11, targets, distractors) is GateResult.PASS)
