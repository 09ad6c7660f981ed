"""Command-line entry point: simulate, score, and VRNQ analysis.

Every run emits a deterministic manifest (command, parameters, input and
output paths, seeds, config hash, tool version) so the run can be reproduced
from the manifest alone.  Manifests carry no timestamps: identical
invocations produce identical manifests.

Exit codes: 0 success, 2 configuration problem, 3 I/O problem (message names
the path), 4 rejected or incomplete session log, 5 malformed response CSV.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Optional, Sequence

from . import __version__
from .bayes import (
    DegenerateSample,
    Direction,
    IntegrationFailure,
    compare_paired,
)
from .config import (
    ConfigError,
    ScoringConfig,
    config_hash,
    default_config,
    load_config,
    validate_domain_mapping,
)
from .scenario import EngineError
from .scoring import aggregate_scorecard, scorecard_to_dict
from .sessionlog import (
    IncompleteSession,
    LogError,
    MalformedLog,
    derive_telemetry,
    deserialize_log,
    export_report,
    serialize_log,
)
from .simulate import (
    PROFILE_PRESETS,
    ParticipantProfile,
    load_profile,
    profile_to_dict,
    simulate_session,
)
from .vrnq import (
    CUTOFFS,
    DOMAINS,
    VrnqError,
    aggregate_cohort,
    check_cutoffs,
    read_cohort_csv,
    score_vrnq,
)

_EXIT_CONFIG = 2
_EXIT_IO = 3
_EXIT_LOG = 4
_EXIT_CSV = 5

_DIRECTIONS = {
    "less": Direction.A_LESS,
    "greater": Direction.A_GREATER,
    "two-sided": Direction.TWO_SIDED,
}


class _CliIOError(Exception):
    pass


def _read_bytes(path: str) -> bytes:
    try:
        with open(path, "rb") as handle:
            return handle.read()
    except OSError as exc:
        raise _CliIOError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _write_bytes(path: str, data: bytes) -> None:
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "wb") as handle:
            handle.write(data)
    except OSError as exc:
        raise _CliIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _load_config_arg(path: Optional[str]) -> ScoringConfig:
    if path is None:
        return default_config()
    try:
        return load_config(path)
    except OSError as exc:
        raise _CliIOError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _load_profile_arg(spec: Optional[str]) -> ParticipantProfile:
    if spec is None:
        return PROFILE_PRESETS["default"]()
    if spec in PROFILE_PRESETS:
        return PROFILE_PRESETS[spec]()
    try:
        return load_profile(spec)
    except OSError as exc:
        raise _CliIOError(f"cannot read {spec}: {exc.strerror or exc}") from exc


def _manifest(command: str, *, parameters: dict[str, Any],
              inputs: dict[str, str], outputs: dict[str, str],
              cfg_hash: Optional[str] = None,
              seeds: Optional[list[int]] = None) -> dict[str, Any]:
    manifest: dict[str, Any] = {
        "command": command,
        "tool": "errandlab",
        "version": __version__,
        "parameters": parameters,
        "inputs": inputs,
        "outputs": outputs,
    }
    if cfg_hash is not None:
        manifest["config_hash"] = cfg_hash
    if seeds is not None:
        manifest["seeds"] = seeds
    return manifest


def _manifest_bytes(manifest: dict[str, Any]) -> bytes:
    return (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _emit(payload: dict[str, Any], text_lines: Sequence[str], fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


# ---------------------------------------------------------------------------
# simulate


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config_arg(args.config)
    profile = _load_profile_arg(args.profile)
    cfg_hash = config_hash(cfg)
    count = args.cohort
    seeds = [args.seed + i for i in range(count)]

    outputs: dict[str, str] = {}
    summaries: list[dict[str, Any]] = []
    for index, seed in enumerate(seeds):
        log = simulate_session(profile, seed, cfg)
        card = aggregate_scorecard(log, cfg)
        telemetry = derive_telemetry(log)
        report = export_report(card, telemetry, seed, cfg_hash)
        suffix = "" if count == 1 else f"_{index:03d}"
        log_path = os.path.join(args.out, f"session{suffix}.ndjson")
        report_path = os.path.join(args.out, f"report{suffix}.txt")
        _write_bytes(log_path, serialize_log(log))
        _write_bytes(report_path, report.encode("utf-8"))
        outputs[f"log_{index:03d}"] = log_path
        outputs[f"report_{index:03d}"] = report_path
        summaries.append({
            "seed": seed,
            "events": len(log.events),
            "log": log_path,
            "report": report_path,
            "scorecard": scorecard_to_dict(card),
        })

    manifest = _manifest(
        "simulate",
        parameters={
            "seed": args.seed, "cohort": count,
            "profile": args.profile or "default",
            "config": args.config or "default",
        },
        inputs={k: v for k, v in {
            "profile": args.profile if args.profile and args.profile not in PROFILE_PRESETS else None,
            "config": args.config}.items() if v},
        outputs=outputs, cfg_hash=cfg_hash, seeds=seeds)
    manifest_path = os.path.join(args.out, "manifest.json")
    _write_bytes(manifest_path, _manifest_bytes(manifest))

    lines = [f"wrote {s['log']} ({s['events']} events) and {s['report']}"
             for s in summaries]
    lines.append(f"wrote {manifest_path}")
    _emit({"sessions": summaries, "manifest": manifest}, lines, args.format)
    return 0


# ---------------------------------------------------------------------------
# score


def _cmd_score(args: argparse.Namespace) -> int:
    cfg = _load_config_arg(args.config)
    cfg_hash = config_hash(cfg)
    log = deserialize_log(_read_bytes(args.log))
    card = aggregate_scorecard(log, cfg)
    telemetry = derive_telemetry(log)
    report = export_report(card, telemetry, log.seed, cfg_hash)

    outputs: dict[str, str] = {}
    if args.out:
        report_path = os.path.join(args.out, "report.txt")
        _write_bytes(report_path, report.encode("utf-8"))
        outputs["report"] = report_path

    manifest = _manifest(
        "score",
        parameters={"config": args.config or "default"},
        inputs={"log": args.log, **({"config": args.config} if args.config else {})},
        outputs=outputs, cfg_hash=cfg_hash)
    if args.out:
        _write_bytes(os.path.join(args.out, "manifest.json"),
                     _manifest_bytes(manifest))

    payload = {"scorecard": scorecard_to_dict(card), "manifest": manifest}
    _emit(payload, report.splitlines(), args.format)
    return 0


# ---------------------------------------------------------------------------
# vrnq


def _load_domains_arg(args: argparse.Namespace) -> Optional[dict]:
    if not getattr(args, "domains", None):
        return None
    raw = _read_bytes(args.domains)
    try:
        mapping = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"domain mapping {args.domains} is not valid JSON: {exc}")
    validate_domain_mapping(mapping)
    return mapping


def _read_cohort_arg(path: str):
    try:
        return read_cohort_csv(path)
    except OSError as exc:
        raise _CliIOError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _cmd_vrnq_score(args: argparse.Namespace) -> int:
    mapping = _load_domains_arg(args)
    responses = _read_cohort_arg(args.responses)
    scored = [score_vrnq(r, mapping) for r in responses]
    aggregate = aggregate_cohort(scored)
    verdict = check_cutoffs(aggregate, args.tier)

    participant_rows = [{
        "participant_id": r.participant_id,
        "sub_scores": dict(s.sub_scores),
        "total": s.total,
    } for r, s in zip(responses, scored)]
    aggregate_row = {
        "n": aggregate.total_stats.n,
        "sub_scores": {d: {"median": st.median, "mad": st.mad}
                       for d, st in aggregate.sub_stats.items()},
        "total": {"median": aggregate.total_stats.median,
                  "mad": aggregate.total_stats.mad},
    }
    verdict_row = {
        "tier": verdict.tier,
        "passes": dict(verdict.passes),
        "overall": verdict.overall,
    }

    lines = [f"participants: {aggregate.total_stats.n}"]
    for row in participant_rows:
        subs = "  ".join(f"{d}={row['sub_scores'][d]}" for d in DOMAINS)
        lines.append(f"  {row['participant_id']}: {subs}  total={row['total']}")
    lines.append("cohort medians (MAD):")
    for domain in DOMAINS:
        st = aggregate.sub_stats[domain]
        lines.append(f"  {domain}: {st.median:g} ({st.mad:g})")
    lines.append(f"  Total: {aggregate.total_stats.median:g} "
                 f"({aggregate.total_stats.mad:g})")
    thresholds = CUTOFFS[args.tier]
    lines.append(f"cut-off tier {args.tier} "
                 f"(sub>={thresholds['sub']}, total>={thresholds['total']}):")
    for name, passed in verdict.passes.items():
        lines.append(f"  {name}: {'pass' if passed else 'FAIL'}")
    lines.append(f"overall: {'pass' if verdict.overall else 'FAIL'}")

    manifest = _manifest(
        "vrnq score",
        parameters={"tier": args.tier,
                    "domains": args.domains or "default"},
        inputs={"responses": args.responses,
                **({"domains": args.domains} if args.domains else {})},
        outputs={})
    if args.out:
        _write_bytes(os.path.join(args.out, "manifest.json"),
                     _manifest_bytes(manifest))

    payload = {
        "participants": participant_rows,
        "aggregate": aggregate_row,
        "verdict": verdict_row,
        "manifest": manifest,
    }
    _emit(payload, lines, args.format)
    return 0


def _paired_columns(baseline, revised, mapping) -> dict[str, tuple[list, list]]:
    ids_a = {r.participant_id for r in baseline}
    ids_b = {r.participant_id for r in revised}
    if ids_a != ids_b:
        missing = sorted(ids_a ^ ids_b)
        raise VrnqError(f"cohorts do not pair up; unmatched ids: {missing}")
    by_id_b = {r.participant_id: r for r in revised}
    columns: dict[str, tuple[list, list]] = {
        "Total": ([], []), **{d: ([], []) for d in DOMAINS}}
    for resp_a in sorted(baseline, key=lambda r: r.participant_id):
        resp_b = by_id_b[resp_a.participant_id]
        score_a = score_vrnq(resp_a, mapping)
        score_b = score_vrnq(resp_b, mapping)
        columns["Total"][0].append(score_a.total)
        columns["Total"][1].append(score_b.total)
        for domain in DOMAINS:
            columns[domain][0].append(score_a.sub_scores[domain])
            columns[domain][1].append(score_b.sub_scores[domain])
    return columns


def _cmd_vrnq_compare(args: argparse.Namespace) -> int:
    mapping = _load_domains_arg(args)
    baseline = _read_cohort_arg(args.baseline)
    revised = _read_cohort_arg(args.revised)
    direction = _DIRECTIONS[args.direction]
    columns = _paired_columns(baseline, revised, mapping)

    rows: list[dict[str, Any]] = []
    for name, (col_a, col_b) in columns.items():
        try:
            cmp_result = compare_paired(
                col_a, col_b, direction=direction,
                prior_scale=args.prior_scale, label=name)
            rows.append({
                "score": name, "n": cmp_result.n, "t": cmp_result.t,
                "df": cmp_result.df, "p": cmp_result.p,
                "bf10": cmp_result.bf10, "band": cmp_result.band.value,
                "stars": cmp_result.stars, "degenerate": False,
            })
        except DegenerateSample:
            rows.append({
                "score": name, "n": len(col_a), "t": None, "df": len(col_a) - 1,
                "p": None, "bf10": None, "band": None, "stars": "",
                "degenerate": True,
            })

    hypothesis = {
        "less": "baseline < revised",
        "greater": "baseline > revised",
        "two-sided": "baseline != revised",
    }[args.direction]
    lines = [
        f"paired comparison, alternative: {hypothesis} "
        f"(direction {args.direction}, prior scale {args.prior_scale:g})",
        f"{'score':<18} {'n':>3}  {'t':>8}  {'p':>9}  {'BF10':>12}  evidence",
    ]
    for row in rows:
        if row["degenerate"]:
            lines.append(f"{row['score']:<18} {row['n']:>3}  "
                         f"{'identical samples; t undefined':>46}")
        else:
            evidence = row["band"] + (f" {row['stars']}" if row["stars"] else "")
            lines.append(
                f"{row['score']:<18} {row['n']:>3}  {row['t']:>8.3f}  "
                f"{row['p']:>9.4g}  {row['bf10']:>12.3f}  {evidence}")

    outputs: dict[str, str] = {}
    if args.out:
        csv_lines = ["score,n,t,df,p,bf10,band,stars"]
        for row in rows:
            if row["degenerate"]:
                csv_lines.append(f"{row['score']},{row['n']},,,,,,")
            else:
                csv_lines.append(
                    f"{row['score']},{row['n']},{row['t']!r},{row['df']},"
                    f"{row['p']!r},{row['bf10']!r},{row['band']},{row['stars']}")
        csv_path = os.path.join(args.out, "comparison.csv")
        _write_bytes(csv_path, ("\n".join(csv_lines) + "\n").encode("utf-8"))
        outputs["comparison"] = csv_path

    manifest = _manifest(
        "vrnq compare",
        parameters={"direction": args.direction,
                    "prior_scale": args.prior_scale,
                    "domains": args.domains or "default"},
        inputs={"baseline": args.baseline, "revised": args.revised,
                **({"domains": args.domains} if args.domains else {})},
        outputs=outputs)
    if args.out:
        _write_bytes(os.path.join(args.out, "manifest.json"),
                     _manifest_bytes(manifest))

    payload = {"hypothesis": hypothesis, "rows": rows, "manifest": manifest}
    _emit(payload, lines, args.format)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="errandlab",
        description="Simulate, score, and evaluate errand-scenario sessions.")
    parser.add_argument("--version", action="version",
                        version=f"errandlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate seeded session logs")
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--profile", default=None,
                       help="preset name (default/perfect/null) or JSON path")
    p_sim.add_argument("--config", default=None, help="scoring config JSON path")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--cohort", type=int, default=1,
                       help="number of sessions (seeds seed..seed+n-1)")
    p_sim.add_argument("--format", choices=("text", "json"), default="text")
    p_sim.set_defaults(func=_cmd_simulate)

    p_score = sub.add_parser("score", help="replay and score a session log")
    p_score.add_argument("--log", required=True, help="session NDJSON path")
    p_score.add_argument("--config", default=None)
    p_score.add_argument("--out", default=None, help="directory for report.txt")
    p_score.add_argument("--format", choices=("text", "json"), default="text")
    p_score.set_defaults(func=_cmd_score)

    p_vrnq = sub.add_parser("vrnq", help="questionnaire scoring and comparison")
    vrnq_sub = p_vrnq.add_subparsers(dest="vrnq_command", required=True)

    p_vscore = vrnq_sub.add_parser("score", help="score a response CSV")
    p_vscore.add_argument("--responses", required=True, help="response CSV path")
    p_vscore.add_argument("--tier", choices=("minimum", "parsimonious"),
                          default="parsimonious")
    p_vscore.add_argument("--domains", default=None,
                          help="JSON file mapping domains to item numbers")
    p_vscore.add_argument("--out", default=None)
    p_vscore.add_argument("--format", choices=("text", "json"), default="text")
    p_vscore.set_defaults(func=_cmd_vrnq_score)

    p_vcmp = vrnq_sub.add_parser("compare", help="paired Bayesian comparison")
    p_vcmp.add_argument("--baseline", required=True, help="baseline cohort CSV")
    p_vcmp.add_argument("--revised", required=True, help="revised cohort CSV")
    p_vcmp.add_argument("--direction", choices=tuple(_DIRECTIONS),
                        default="less")
    p_vcmp.add_argument("--prior-scale", type=float, default=0.707,
                        dest="prior_scale")
    p_vcmp.add_argument("--domains", default=None)
    p_vcmp.add_argument("--out", default=None)
    p_vcmp.add_argument("--format", choices=("text", "json"), default="text")
    p_vcmp.set_defaults(func=_cmd_vrnq_compare)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except _CliIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_IO
    except (MalformedLog, IncompleteSession, EngineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_LOG
    except (LogError) as exc:
        # parse and schema problems in a log file
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_LOG
    except VrnqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CSV
    except IntegrationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
