"""Scoring configuration: the injectable knobs and their defaults.

Everything a study might legitimately re-tune lives here — the recognition
catalog, timing-band points, the conversation scoring matrices, normative
route timing, stimulus counts, and the target session length.  The structural
rules themselves (what gets multiplied by what) stay in :mod:`scoring`.

Configs serialize to canonical JSON; :func:`config_hash` over that JSON is
stamped into every session log header and run manifest so a log can always be
matched to the exact rules that scored it.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping


class ConfigError(Exception):
    """Raised for unknown, missing, or invalid configuration content."""


# Band names for the cooking timing classifier.
BAND_NAMES = (
    "VeryEarly", "Early", "SlightlyEarly", "OnTime",
    "SlightlyLate", "Late", "VeryLate",
)

DEFAULT_BAND_POINTS: dict[str, int] = {
    "OnTime": 3,
    "SlightlyEarly": 2,
    "SlightlyLate": 2,
    "Early": 1,
    "Late": 1,
    "VeryEarly": 0,
    "VeryLate": 0,
}

# Conversation tasks: points by (prompt the user affirmed at) x (board item
# category).  Affirming earlier and choosing the intended item pays best;
# a semantically related item pays half (rounded up), any other errand item
# pays a consolation point, an unrelated item pays nothing.
DEFAULT_NPC_POSITIVE_MATRIX: dict[str, dict[str, int]] = {
    "1": {"correct": 6, "semantic_relative": 3, "other_pm_task": 1, "unrelated": 0},
    "2": {"correct": 4, "semantic_relative": 2, "other_pm_task": 1, "unrelated": 0},
    "3": {"correct": 2, "semantic_relative": 1, "other_pm_task": 1, "unrelated": 0},
}

# False reminders: affirming earlier costs more.
DEFAULT_NPC_NEGATIVE_DEDUCTIONS: dict[str, int] = {
    "0": 0, "1": -3, "2": -2, "3": -1,
}

_DEFAULT_RECOGNITION_TARGETS = (
    "semi_skimmed_milk", "wholemeal_bread", "bananas", "potatoes_1kg",
    "orange_juice", "medium_eggs", "mild_cheddar", "tomato_soup",
    "basmati_rice", "ground_coffee",
)
_DEFAULT_RECOGNITION_QUALITATIVE = (
    "skimmed_milk", "white_bread", "plantains", "sweet_potatoes",
    "instant_coffee",
)
_DEFAULT_RECOGNITION_QUANTITATIVE = (
    "potatoes_2kg", "large_eggs", "milk_two_litres", "rice_2kg",
    "juice_two_litres",
)
_DEFAULT_RECOGNITION_FALSE = (
    "chocolate_bar", "washing_up_liquid", "cat_food", "frozen_pizza",
    "sparkling_water", "digestive_biscuits", "crisps", "vanilla_ice_cream",
    "kitchen_roll", "toothpaste",
)

_DEFAULT_COLLECTION_TARGETS = (
    "red_book", "twenty_pound_note", "smartphone", "library_card",
    "flat_keys", "car_keys",
)
_DEFAULT_COLLECTION_DISTRACTORS = (
    "magazine", "blue_book", "tv_remote", "notebook", "pencil",
    "chessboard", "wine_bottle",
)

# Default questionnaire domain mapping: contiguous five-item blocks in domain
# order.  Studies with a different printed item order override this.
DEFAULT_DOMAIN_MAPPING: dict[str, list[int]] = {
    "UserExperience": [1, 2, 3, 4, 5],
    "GameMechanics": [6, 7, 8, 9, 10],
    "InGameAssistance": [11, 12, 13, 14, 15],
    "VRISE": [16, 17, 18, 19, 20],
}


@dataclass(frozen=True)
class ScoringConfig:
    """All injectable scoring and simulation parameters."""

    recognition_targets: tuple[str, ...] = _DEFAULT_RECOGNITION_TARGETS
    recognition_qualitative: tuple[str, ...] = _DEFAULT_RECOGNITION_QUALITATIVE
    recognition_quantitative: tuple[str, ...] = _DEFAULT_RECOGNITION_QUANTITATIVE
    recognition_false: tuple[str, ...] = _DEFAULT_RECOGNITION_FALSE

    collection_targets: tuple[str, ...] = _DEFAULT_COLLECTION_TARGETS
    collection_distractors: tuple[str, ...] = _DEFAULT_COLLECTION_DISTRACTORS

    # Normative completion time for the route-planning task, used for the
    # +/-2-step timing modifier.
    normative_route_mean_s: float = 30.0
    normative_route_sd_s: float = 10.0

    band_points: Mapping[str, int] = field(
        default_factory=lambda: dict(DEFAULT_BAND_POINTS))
    npc_positive_matrix: Mapping[str, Mapping[str, int]] = field(
        default_factory=lambda: {k: dict(v) for k, v in DEFAULT_NPC_POSITIVE_MATRIX.items()})
    npc_negative_deductions: Mapping[str, int] = field(
        default_factory=lambda: dict(DEFAULT_NPC_NEGATIVE_DEDUCTIONS))

    # Attention stimulus counts, per side.
    visual_targets_per_side: int = 8
    visual_shape_distractors_per_side: int = 4
    visual_color_distractors_per_side: int = 4
    auditory_targets_per_side: int = 8
    auditory_high_distractors_per_side: int = 4
    auditory_low_distractors_per_side: int = 4

    # Simulated session length target, in seconds.
    session_target_s: float = 3732.0

    domain_mapping: Mapping[str, list[int]] = field(
        default_factory=lambda: {k: list(v) for k, v in DEFAULT_DOMAIN_MAPPING.items()})

    def validate(self) -> None:
        if len(self.recognition_targets) != 10:
            raise ConfigError("recognition_targets must list 10 items")
        if len(self.recognition_qualitative) != 5:
            raise ConfigError("recognition_qualitative must list 5 items")
        if len(self.recognition_quantitative) != 5:
            raise ConfigError("recognition_quantitative must list 5 items")
        if len(self.recognition_false) != 10:
            raise ConfigError("recognition_false must list 10 items")
        catalog = (self.recognition_targets + self.recognition_qualitative
                   + self.recognition_quantitative + self.recognition_false)
        if len(set(catalog)) != len(catalog):
            raise ConfigError("recognition catalog items must be unique")
        if len(self.collection_targets) != 6:
            raise ConfigError("collection_targets must list 6 items")
        if set(self.collection_targets) & set(self.collection_distractors):
            raise ConfigError("collection targets and distractors overlap")
        if self.normative_route_sd_s <= 0:
            raise ConfigError("normative_route_sd_s must be positive")
        if set(self.band_points) != set(BAND_NAMES):
            raise ConfigError(f"band_points must cover exactly {BAND_NAMES}")
        if set(self.npc_positive_matrix) != {"1", "2", "3"}:
            raise ConfigError("npc_positive_matrix needs rows '1', '2', '3'")
        for row in self.npc_positive_matrix.values():
            if set(row) != {"correct", "semantic_relative", "other_pm_task", "unrelated"}:
                raise ConfigError("npc_positive_matrix rows need all four item categories")
        if set(self.npc_negative_deductions) != {"0", "1", "2", "3"}:
            raise ConfigError("npc_negative_deductions needs keys '0'..'3'")
        for key, value in self.npc_negative_deductions.items():
            if value > 0:
                raise ConfigError("negative deductions cannot be positive")
            if value < -3:
                raise ConfigError("a single deduction cannot exceed 3 points")
        for name in ("visual_targets_per_side", "visual_shape_distractors_per_side",
                     "visual_color_distractors_per_side", "auditory_targets_per_side",
                     "auditory_high_distractors_per_side", "auditory_low_distractors_per_side"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.session_target_s <= 0:
            raise ConfigError("session_target_s must be positive")
        validate_domain_mapping(self.domain_mapping)


def validate_domain_mapping(mapping: Mapping[str, Any]) -> None:
    """Require a partition of items 1..20 into the four named 5-item domains."""
    expected_domains = set(DEFAULT_DOMAIN_MAPPING)
    if set(mapping) != expected_domains:
        raise ConfigError(
            f"domain_mapping must name exactly {sorted(expected_domains)}")
    seen: list[int] = []
    for domain, items in mapping.items():
        if len(items) != 5:
            raise ConfigError(f"domain {domain} must map exactly 5 items")
        for item in items:
            if not isinstance(item, int) or isinstance(item, bool) or not 1 <= item <= 20:
                raise ConfigError(f"domain {domain} has invalid item {item!r}")
        seen.extend(items)
    if sorted(seen) != list(range(1, 21)):
        raise ConfigError("domain_mapping must partition items 1..20")


def config_to_dict(config: ScoringConfig) -> dict[str, Any]:
    """JSON-native dict, tuples rendered as lists."""
    raw = dataclasses.asdict(config)
    return json.loads(json.dumps(raw, sort_keys=True))


def _canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(config: ScoringConfig) -> str:
    """sha256 over the canonical JSON of the full effective config."""
    return hashlib.sha256(_canonical_json(config_to_dict(config)).encode("utf-8")).hexdigest()


def default_config() -> ScoringConfig:
    config = ScoringConfig()
    config.validate()
    return config


_TUPLE_FIELDS = {
    "recognition_targets", "recognition_qualitative", "recognition_quantitative",
    "recognition_false", "collection_targets", "collection_distractors",
}


def config_from_dict(data: Mapping[str, Any]) -> ScoringConfig:
    """Build a config from a (possibly partial) JSON mapping over defaults."""
    if not isinstance(data, Mapping):
        raise ConfigError("config document must be a JSON object")
    known = {f.name for f in dataclasses.fields(ScoringConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key in _TUPLE_FIELDS:
            if not isinstance(value, (list, tuple)) or not all(
                    isinstance(v, str) for v in value):
                raise ConfigError(f"{key} must be a list of strings")
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        config = ScoringConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    config.validate()
    return config


def load_config(path: str | Path) -> ScoringConfig:
    """Read a JSON config file, merging the given keys over the defaults."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data)


def save_config(config: ScoringConfig, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
