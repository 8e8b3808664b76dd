import json

import pytest

from cogload.core import SessionConfig, default_layout
from cogload.sessionlog import (
    FaceRecord,
    InstructionRecord,
    LogHeader,
    LogParseError,
    MarkerRecord,
    NoiseRecord,
    SessionLog,
    SkeletonRecord,
    parse_log,
    record_from_obj,
    record_to_obj,
    serialize_log,
)


def make_header():
    return LogHeader("s1", "2026-01-01T08:00:00Z", 15.0, default_layout(), SessionConfig())


def header_line():
    return serialize_log(SessionLog(make_header(), ())).splitlines()[0]


class TestRoundTrip:
    def test_fixture_roundtrip(self):
        records = (
            MarkerRecord(0.0, "segment", {"index": 0}),
            NoiseRecord(0.0, 45.0),
            SkeletonRecord(0.1, {"neck": (0.0, 0.1, 1.0, 1.0), "head": (0.0, -0.2, 1.0, 0.9)}),
            InstructionRecord(0.5, "next"),
            InstructionRecord(1.5, "back", steps=2),
            FaceRecord(2.0, tuple((float(i), float(i + 1)) for i in range(68))),
        )
        log = SessionLog(make_header(), records)
        text = serialize_log(log)
        again = parse_log(text)
        assert serialize_log(again) == text
        assert len(again.records) == len(records)
        kinds = [r.kind for r in again.records]
        assert kinds == ["marker", "noise", "skeleton", "instruction", "instruction", "face"]

    def test_record_obj_roundtrip(self):
        rec = InstructionRecord(3.25, "back", steps=3)
        assert record_from_obj(record_to_obj(rec)) == rec

    def test_empty_body_is_valid(self):
        log = parse_log(header_line() + "\n")
        assert log.records == ()


class TestParseErrors:
    def test_empty_log(self):
        with pytest.raises(LogParseError, match="missing header"):
            parse_log("")

    def test_malformed_header_fatal(self):
        with pytest.raises(LogParseError, match="malformed header"):
            parse_log('{"kind":"skeleton","t":0}\n')

    def test_invalid_header_config(self):
        obj = json.loads(header_line())
        obj["config"]["attention"]["threshold"] = 2.0
        with pytest.raises(LogParseError, match="attention_threshold"):
            parse_log(json.dumps(obj) + "\n")

    def test_out_of_order_names_line(self):
        text = header_line() + "\n" + "\n".join([
            json.dumps({"kind": "noise", "t": 1.0, "dBA": 50.0}),
            json.dumps({"kind": "noise", "t": 0.5, "dBA": 50.0}),
        ]) + "\n"
        with pytest.raises(LogParseError, match="line 3"):
            parse_log(text)

    def test_sampled_stream_must_strictly_increase(self):
        text = header_line() + "\n" + "\n".join([
            json.dumps({"kind": "noise", "t": 1.0, "dBA": 50.0}),
            json.dumps({"kind": "noise", "t": 1.0, "dBA": 51.0}),
        ]) + "\n"
        with pytest.raises(LogParseError, match="strictly increasing"):
            parse_log(text)

    def test_markers_may_share_timestamps(self):
        text = header_line() + "\n" + "\n".join([
            json.dumps({"kind": "marker", "t": 1.0, "label": "a", "data": {}}),
            json.dumps({"kind": "marker", "t": 1.0, "label": "b", "data": {}}),
        ]) + "\n"
        assert len(parse_log(text).records) == 2

    def test_malformed_body_line_reported(self):
        text = header_line() + "\n" + "not json at all\n"
        with pytest.raises(LogParseError, match="line 2"):
            parse_log(text)

    def test_face_needs_68_points(self):
        text = header_line() + "\n" + json.dumps(
            {"kind": "face", "t": 0.0, "landmarks": [[0.0, 0.0]] * 10}
        ) + "\n"
        with pytest.raises(LogParseError, match="68"):
            parse_log(text)

    def test_all_problems_collected(self):
        text = header_line() + "\n" + "\n".join([
            "garbage",
            json.dumps({"kind": "noise", "t": 1.0, "dBA": 50.0}),
            json.dumps({"kind": "noise", "t": 0.1, "dBA": 50.0}),
        ]) + "\n"
        with pytest.raises(LogParseError) as err:
            parse_log(text)
        assert len(err.value.problems) == 2


class TestForwardCompatibility:
    def test_unknown_kinds_skipped_with_tally(self):
        text = header_line() + "\n" + "\n".join([
            json.dumps({"kind": "eyeblink", "t": 0.0, "rate": 3}),
            json.dumps({"kind": "noise", "t": 1.0, "dBA": 50.0}),
            json.dumps({"kind": "eyeblink", "t": 2.0, "rate": 4}),
        ]) + "\n"
        log = parse_log(text)
        assert len(log.records) == 1
        assert log.skipped_kinds == {"eyeblink": 2}
