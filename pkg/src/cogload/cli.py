"""Command-line surface: calibrate, weights, replay, simulate, serve,
validate."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from . import engine as eng
from . import scoring
from .core import (
    CogloadError,
    SessionConfig,
    WorkstationLayout,
    default_layout,
    load_config_file,
    validate_config,
)
from .kinematics import ActivityBaseline, calibrate_baseline
from .sessionlog import LogParseError, SkeletonRecord, load_log, save_log
from .simulator import load_scenario_file, synthesize


def _load_config(path: str | None) -> tuple[SessionConfig, WorkstationLayout | None]:
    if path is None or path == "default":
        return SessionConfig(), None
    return load_config_file(path)


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def cmd_validate(args) -> int:
    path = Path(args.path)
    if not path.exists():
        return _fail(f"no such file: {path}")
    if path.suffix in (".yaml", ".yml"):
        try:
            config, layout = load_config_file(path)
        except CogloadError as exc:
            print(f"{path}: {exc}")
            return 1
        problems = validate_config(config)
        if layout is not None:
            problems += layout.validate()
        for p in problems:
            print(f"{path}: {p}")
        if not problems:
            print(f"{path}: ok")
        return 1 if problems else 0
    try:
        log = load_log(path)
    except LogParseError as exc:
        print(f"{path}: {exc}")
        return 1
    print(f"{path}: ok ({len(log.records)} records"
          + (f", skipped kinds {log.skipped_kinds}" if log.skipped_kinds else "") + ")")
    return 0


def _load_baseline(path: str | None) -> ActivityBaseline | None:
    if path is None:
        return None
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    b = doc["baseline"]
    joints = tuple(b["joints"])
    return ActivityBaseline(
        joints=joints,
        mu={j: float(b["mu"][j]) for j in joints},
        sigma={j: float(b["sigma"][j]) for j in joints},
        tau=float(b["tau"]),
    )


def cmd_replay(args) -> int:
    path = Path(args.log)
    if not path.exists():
        return _fail(f"no such log file: {path}")
    try:
        log = load_log(path)
    except LogParseError as exc:
        return _fail(str(exc))
    config, _ = _load_config(args.config)
    if args.config is None:
        config = None  # use the log's own config snapshot
    baseline = _load_baseline(args.baseline)
    statics = None
    if args.catalogue:
        from .factors import load_catalogue, workstation_statics

        task = [t for t in (args.task or "").split(",") if t]
        statics = workstation_statics(task, load_catalogue(args.catalogue),
                                      config or log.header.config)
    result = eng.replay(log, config=config, baseline=baseline, statics=statics)
    out = Path(args.out) if args.out else path.with_suffix(".trace.csv")
    eng.write_trace(out, result.frames)
    print(yaml.safe_dump({"trace": str(out), "report": result.report}, sort_keys=False))
    return 0


def cmd_simulate(args) -> int:
    path = Path(args.scenario)
    if not path.exists():
        return _fail(f"no such scenario file: {path}")
    scenario, layout = load_scenario_file(path)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    config, config_layout = _load_config(args.config)
    layout = layout or config_layout or default_layout()
    log = synthesize(scenario, layout, config)
    out = Path(args.out) if args.out else path.with_suffix(".log")
    save_log(out, log)
    print(f"wrote {out} ({len(log.records)} records, seed {scenario.seed})")
    return 0


def cmd_calibrate(args) -> int:
    config, _ = _load_config(args.config)
    doc: dict = {}
    if args.resting:
        log = load_log(args.resting)
        frames = [r.to_frame() for r in log.records if isinstance(r, SkeletonRecord)]
        baseline = calibrate_baseline(frames, config.activity_window_tau)
        doc["baseline"] = {
            "tau": baseline.tau,
            "joints": list(baseline.joints),
            "mu": {j: baseline.mu[j] for j in baseline.joints},
            "sigma": {j: baseline.sigma[j] for j in baseline.joints},
        }
    if args.sessions:
        traces = []
        for session_path in args.sessions:
            log = load_log(session_path)
            result = eng.replay(log, capture_factors=True)
            traces.append([fv for _, _, fv in result.engine.factor_trace])
        thresholds = scoring.thresholds_from_calibration(traces)
        doc["factors"] = {
            "thresholds": {
                name: {"instantaneous": th.instantaneous, "overall": th.overall}
                for name, th in sorted(thresholds.items())
            }
        }
    if not doc:
        return _fail("calibrate needs --resting and/or --sessions")
    text = yaml.safe_dump(doc, sort_keys=False)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_weights(args) -> int:
    with open(args.choices, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    subjects = []
    for entry in doc["subjects"]:
        record = {}
        for key, chosen in entry["choices"].items():
            a, _, b = key.partition("|")
            record[tuple(sorted((a.strip(), b.strip())))] = str(chosen)
        subjects.append(record)
    weights = scoring.weights_from_pairwise(subjects)
    text = yaml.safe_dump({"factors": {"weights": weights}}, sort_keys=False)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    config, layout = _load_config(args.config)
    serve(config, layout or default_layout(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cogload", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="lint a config document or session log")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("replay", help="replay a session log into a score trace + report")
    p.add_argument("log")
    p.add_argument("--config", default=None, help="config file ('default' for built-ins; defaults to the log header)")
    p.add_argument("--baseline", default=None, help="activity baseline file from `calibrate`")
    p.add_argument("--catalogue", default=None, help="object catalogue CSV for workstation statics")
    p.add_argument("--task", default=None, help="comma-separated object ids assembled in this session")
    p.add_argument("--out", default=None, help="score trace output path")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("simulate", help="synthesize a session log from a scenario script")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="baseline from a resting log, thresholds from session logs")
    p.add_argument("--resting", default=None)
    p.add_argument("--sessions", nargs="*", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("weights", help="factor weights from a pairwise-choice file")
    p.add_argument("choices")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("serve", help="run the live assessment service")
    p.add_argument("--config", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CogloadError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
