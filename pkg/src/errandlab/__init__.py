"""Engine-agnostic logic for a 22-scene everyday-errand assessment.

The package covers the full pipeline: the scenario state machine
(:mod:`errandlab.scenario`), task scoring (:mod:`errandlab.scoring`),
append-only session logs and reports (:mod:`errandlab.sessionlog`),
questionnaire psychometrics (:mod:`errandlab.vrnq`), Bayesian paired
comparisons (:mod:`errandlab.bayes`), a seeded participant simulator
(:mod:`errandlab.simulate`), and a CLI (:mod:`errandlab.cli`).
"""

from __future__ import annotations

__version__ = "0.1.0"

from .bayes import (
    BayesComparison,
    DegenerateSample,
    Direction,
    EvidenceBand,
    IntegrationFailure,
    PairedSample,
    TTestResult,
    bf10_directional,
    classify_evidence,
    compare_paired,
    evidence_stars,
    nct_logpdf,
    paired_t,
)
from .config import (
    ConfigError,
    ScoringConfig,
    config_from_dict,
    config_hash,
    config_to_dict,
    default_config,
    load_config,
    save_config,
)
from .scenario import (
    EngineError,
    EventKind,
    GateResult,
    InvalidEvent,
    NotAGatedScene,
    OutOfOrderEvent,
    PracticePassed,
    PracticeRetry,
    PromptShown,
    SceneTransition,
    SessionComplete,
    SessionEvent,
    SessionState,
    WrongSceneEvent,
    advance,
    initial_state,
    practice_gate,
    replay,
    scene_sequence,
)
from .scoring import (
    TaskScorecard,
    aggregate_scorecard,
    classify_cooking_time,
    score_auditory_attention,
    score_cooking,
    score_collection,
    score_npc_pm_negative,
    score_npc_pm_positive,
    score_planning,
    score_prompt_cascade,
    score_recognition,
    score_visual_attention,
    scorecard_to_dict,
)
from .sessionlog import (
    IncompleteSession,
    LogError,
    MalformedLog,
    ParseError,
    SessionLog,
    Telemetry,
    append_event,
    derive_telemetry,
    deserialize_log,
    export_report,
    new_log,
    serialize_log,
)
from .simulate import (
    LengthMismatch,
    ParticipantProfile,
    default_profile,
    load_profile,
    null_profile,
    perfect_profile,
    save_profile,
    simulate_cohort,
    simulate_session,
)
from .vrnq import (
    CohortAggregate,
    CutoffVerdict,
    VrnqError,
    VrnqResponseSet,
    VrnqScores,
    aggregate_cohort,
    check_cutoffs,
    median_absolute_deviation,
    read_cohort_csv,
    score_vrnq,
    write_cohort_csv,
)
