"""Session log format: one JSON object per line, tagged with ``kind``.

The first line is the header (session metadata, layout, config
snapshot); every following line is a body record. The same line grammar
is used for live ingest over the wire, so a captured session replays
bit-identically. Sampled streams (skeleton, face, pose, noise) must be
strictly increasing in time; event streams (instruction, marker) may
share timestamps; the file as a whole must be non-decreasing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CogloadError,
    FaceFrame,
    Keypoint,
    SessionConfig,
    SkeletonFrame,
    Timestamp,
    WorkstationLayout,
    config_from_dict,
    config_to_dict,
    layout_from_dict,
    layout_to_dict,
    validate_config,
)
from .instructions import EVENT_KINDS

FORMAT_VERSION = 1

# kinds whose timestamps must strictly increase (physical sample streams)
SAMPLED_KINDS = ("skeleton", "face", "pose", "noise")
EVENT_STREAM_KINDS = ("instruction", "marker")
KNOWN_KINDS = SAMPLED_KINDS + EVENT_STREAM_KINDS


class LogParseError(CogloadError):
    def __init__(self, problems: list[tuple[int, str]]):
        self.problems = problems
        lines = "; ".join(f"line {n}: {msg}" for n, msg in problems[:20])
        more = f" (+{len(problems) - 20} more)" if len(problems) > 20 else ""
        super().__init__(f"log parse failed: {lines}{more}")


@dataclass(frozen=True)
class LogHeader:
    session_id: str
    start_wallclock: str        # ISO-8601, informational only
    frame_rate: float
    layout: WorkstationLayout
    config: SessionConfig


@dataclass(frozen=True)
class SkeletonRecord:
    t: Timestamp
    joints: dict[str, tuple[float, float, float, float]]  # x, y, z, confidence
    kind: str = "skeleton"

    def to_frame(self) -> SkeletonFrame:
        return SkeletonFrame(
            self.t,
            {name: Keypoint((v[0], v[1], v[2]), v[3]) for name, v in self.joints.items()},
        )


@dataclass(frozen=True)
class FaceRecord:
    t: Timestamp
    landmarks: tuple[tuple[float, float], ...]  # 68 pixel pairs
    kind: str = "face"

    def to_frame(self) -> FaceFrame:
        return FaceFrame(self.t, np.asarray(self.landmarks, dtype=float))


@dataclass(frozen=True)
class PoseRecord:
    t: Timestamp
    rvec: tuple[float, float, float]
    tvec: tuple[float, float, float]
    kind: str = "pose"


@dataclass(frozen=True)
class InstructionRecord:
    t: Timestamp
    event: str
    steps: int = 1
    kind: str = "instruction"


@dataclass(frozen=True)
class NoiseRecord:
    t: Timestamp
    dBA: float
    kind: str = "noise"


@dataclass(frozen=True)
class MarkerRecord:
    t: Timestamp
    label: str
    data: dict = field(default_factory=dict)
    kind: str = "marker"


Record = SkeletonRecord | FaceRecord | PoseRecord | InstructionRecord | NoiseRecord | MarkerRecord


@dataclass(frozen=True)
class SessionLog:
    header: LogHeader
    records: tuple[Record, ...]
    skipped_kinds: dict[str, int] = field(default_factory=dict)


def _dump(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def record_to_obj(rec: Record) -> dict:
    if isinstance(rec, SkeletonRecord):
        return {"kind": "skeleton", "t": rec.t, "joints": {k: list(v) for k, v in sorted(rec.joints.items())}}
    if isinstance(rec, FaceRecord):
        return {"kind": "face", "t": rec.t, "landmarks": [list(p) for p in rec.landmarks]}
    if isinstance(rec, PoseRecord):
        return {"kind": "pose", "t": rec.t, "rvec": list(rec.rvec), "tvec": list(rec.tvec)}
    if isinstance(rec, InstructionRecord):
        obj = {"kind": "instruction", "t": rec.t, "event": rec.event}
        if rec.event == "back":
            obj["steps"] = rec.steps
        return obj
    if isinstance(rec, NoiseRecord):
        return {"kind": "noise", "t": rec.t, "dBA": rec.dBA}
    if isinstance(rec, MarkerRecord):
        return {"kind": "marker", "t": rec.t, "label": rec.label, "data": rec.data}
    raise TypeError(f"unknown record type {type(rec)!r}")


def record_from_obj(obj: dict) -> Record | None:
    """Build a record from a parsed line object; None for unknown kinds.

    Raises ValueError/KeyError/TypeError on malformed known kinds.
    """
    kind = obj.get("kind")
    t = float(obj["t"])
    if t < 0.0:
        raise ValueError("timestamp must be non-negative")
    if kind == "skeleton":
        joints = {}
        for name, v in obj["joints"].items():
            x, y, z, conf = (float(c) for c in v)
            joints[str(name)] = (x, y, z, conf)
        return SkeletonRecord(t, joints)
    if kind == "face":
        lm = [(float(p[0]), float(p[1])) for p in obj["landmarks"]]
        if len(lm) != 68:
            raise ValueError(f"face record needs 68 landmarks, got {len(lm)}")
        return FaceRecord(t, tuple(lm))
    if kind == "pose":
        rvec = tuple(float(c) for c in obj["rvec"])
        tvec = tuple(float(c) for c in obj["tvec"])
        if len(rvec) != 3 or len(tvec) != 3:
            raise ValueError("pose record needs 3-vector rvec and tvec")
        return PoseRecord(t, rvec, tvec)
    if kind == "instruction":
        event = str(obj["event"])
        if event not in EVENT_KINDS:
            raise ValueError(f"unknown instruction event {event!r}")
        steps = int(obj.get("steps", 1))
        if steps < 1:
            raise ValueError("instruction steps must be >= 1")
        return InstructionRecord(t, event, steps)
    if kind == "noise":
        return NoiseRecord(t, float(obj["dBA"]))
    if kind == "marker":
        data = obj.get("data", {})
        if not isinstance(data, dict):
            raise ValueError("marker data must be a mapping")
        return MarkerRecord(t, str(obj["label"]), data)
    return None


def serialize_log(log: SessionLog) -> str:
    head = {
        "kind": "header",
        "v": FORMAT_VERSION,
        "session_id": log.header.session_id,
        "start_wallclock": log.header.start_wallclock,
        "frame_rate": log.header.frame_rate,
        "layout": layout_to_dict(log.header.layout),
        "config": config_to_dict(log.header.config),
    }
    lines = [_dump(head)]
    lines.extend(_dump(record_to_obj(r)) for r in log.records)
    return "\n".join(lines) + "\n"


def parse_log(data: str | bytes) -> SessionLog:
    """Total parse of a session log; collects per-line problems and
    raises one LogParseError naming them all. Unknown record kinds are
    skipped and tallied."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = text.splitlines()
    problems: list[tuple[int, str]] = []

    header = None
    body_start = 0
    for i, line in enumerate(lines):
        if line.strip():
            body_start = i + 1
            try:
                obj = json.loads(line)
                if obj.get("kind") != "header":
                    raise ValueError("first record must be the header")
                if int(obj.get("v", 0)) != FORMAT_VERSION:
                    raise ValueError(f"unsupported log version {obj.get('v')!r}")
                header = LogHeader(
                    session_id=str(obj["session_id"]),
                    start_wallclock=str(obj.get("start_wallclock", "")),
                    frame_rate=float(obj["frame_rate"]),
                    layout=layout_from_dict(obj["layout"]),
                    config=config_from_dict(obj["config"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, CogloadError) as exc:
                raise LogParseError([(i + 1, f"malformed header: {exc}")]) from exc
            break
    if header is None:
        raise LogParseError([(1, "empty log: missing header")])
    config_problems = validate_config(header.config) + header.layout.validate()
    if config_problems:
        raise LogParseError([(body_start, f"header config invalid: {p}") for p in config_problems])

    records: list[Record] = []
    skipped: dict[str, int] = {}
    last_t_by_kind: dict[str, float] = {}
    last_t_global = -1.0
    for lineno0, line in enumerate(lines[body_start:], start=body_start + 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            problems.append((lineno0, f"invalid JSON: {exc}"))
            continue
        kind = obj.get("kind")
        try:
            rec = record_from_obj(obj)
        except (KeyError, TypeError, ValueError) as exc:
            problems.append((lineno0, f"malformed {kind!r} record: {exc}"))
            continue
        if rec is None:
            skipped[kind] = skipped.get(kind, 0) + 1
            continue
        if rec.t < last_t_global:
            problems.append((lineno0, f"timestamp {rec.t} precedes {last_t_global} earlier in the log"))
            continue
        prev = last_t_by_kind.get(rec.kind)
        if prev is not None:
            if rec.kind in SAMPLED_KINDS and rec.t <= prev:
                problems.append((lineno0, f"{rec.kind} stream must be strictly increasing: {rec.t} after {prev}"))
                continue
            if rec.kind in EVENT_STREAM_KINDS and rec.t < prev:
                problems.append((lineno0, f"{rec.kind} stream out of order: {rec.t} after {prev}"))
                continue
        last_t_by_kind[rec.kind] = rec.t
        last_t_global = rec.t
        records.append(rec)
    if problems:
        raise LogParseError(problems)
    return SessionLog(header, tuple(records), skipped)


def load_log(path) -> SessionLog:
    with open(path, "rb") as fh:
        return parse_log(fh.read())


def save_log(path, log: SessionLog) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_log(log))
