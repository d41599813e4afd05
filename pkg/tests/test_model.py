import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brakemine import model
from brakemine.model import (
    ABSENT,
    Annotation,
    LogParseError,
    Pose2D,
    ScenarioCategory,
    ScenarioRecord,
    TAG_ENUMS,
    TagMatrices,
    TrajectoryLog,
    ValidationError,
    load_annotations,
    load_log,
    load_records,
    load_tags,
    parse_tag,
    save_annotations,
    save_log,
    save_records,
    save_tags,
    serialize_tag,
    wrap_angle,
    wrap_angle_array,
)

from helpers import make_track, random_log, straight_log


# ---------------------------------------------------------------------------
# Angles
# ---------------------------------------------------------------------------

@given(st.floats(-50.0, 50.0))
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    # same point on the circle
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-12)
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-12)


@given(st.floats(-math.pi + 1e-12, math.pi))
def test_wrap_angle_passthrough_is_bit_exact(a):
    assert wrap_angle(a) == a


def test_wrap_angle_array_matches_scalar(rng):
    a = rng.uniform(-20, 20, 500)
    out = wrap_angle_array(a)
    assert out.tolist() == [wrap_angle(v) for v in a]


def test_pose_wraps_yaw_and_validates():
    assert Pose2D(0.0, 0.0, 3 * math.pi).yaw == pytest.approx(math.pi)
    with pytest.raises(ValidationError):
        Pose2D(math.nan, 0.0, 0.0)


# ---------------------------------------------------------------------------
# Enumerations
# ---------------------------------------------------------------------------

def test_tag_taxonomy_is_exact():
    names = {e.__name__: [m.value for m in e] for e in TAG_ENUMS}
    assert names["LongitudeTag"] == ["CRUISING", "STANDING_STILL", "ACCELERATING", "DECELERATING", "REVERSING"]
    assert names["LatitudeTag"] == ["FACING_FORWARD", "VEERING_LEFT", "VEERING_RIGHT", "TURNING_LEFT", "TURNING_RIGHT"]
    assert names["CollisionTag"] == ["NO", "LOW", "HIGH"]
    assert names["HeadingTag"] == ["SAME", "LEFT", "RIGHT", "OPPOSITE"]
    assert names["PositionTag"] == ["FRONT", "FRONT_LEFT", "LEFT", "BACK_LEFT", "BACK", "BACK_RIGHT", "RIGHT", "FRONT_RIGHT"]
    assert names["DistanceTag"] == ["VERY_CLOSE", "CLOSE", "MEDIUM", "FAR"]
    assert names["TrajOverlapTag"] == ["NO", "LOW", "HIGH"]


def test_scenario_categories_are_exact():
    assert [c.value for c in ScenarioCategory] == [
        "cut_in", "left_oppo", "right_ped", "obj_cross", "ped_cross",
        "lead_brake", "approach_stop", "not_relevant", "unknown_but_relevant",
    ]
    assert [c.value for c in model.PROMPT_CATEGORIES] == ["cut_in", "left_oppo", "right_ped", "obj_cross"]


def test_tag_serialization_bijective():
    for enum_cls in TAG_ENUMS:
        for member in enum_cls:
            assert parse_tag(enum_cls, serialize_tag(member)) is member
        assert parse_tag(enum_cls, ABSENT) is None
    assert serialize_tag(None) == ABSENT
    with pytest.raises(ValidationError):
        parse_tag(TAG_ENUMS[0], "NOT_A_TAG")


# ---------------------------------------------------------------------------
# Log IO
# ---------------------------------------------------------------------------

def test_log_roundtrip_simple(tmp_path):
    log = straight_log()
    log.objects["a"] = make_track("a", [3, 4, 5], [1.0, 2.0, 3.0], [0.5, 0.5, 0.5])
    save_log(log, tmp_path / "log.jsonl")
    assert load_log(tmp_path / "log.jsonl") == log


def test_log_roundtrip_empty_objects(tmp_path):
    log = straight_log()
    save_log(log, tmp_path / "log.jsonl")
    assert load_log(tmp_path / "log.jsonl") == log


def test_log_roundtrip_sparse_object(tmp_path):
    log = straight_log(n=20)
    log.objects["s"] = make_track("s", [2, 7, 15], [0.1, 0.2, 0.3], [1.0, 2.0, 3.0])
    save_log(log, tmp_path / "log.jsonl")
    assert load_log(tmp_path / "log.jsonl") == log


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_log_roundtrip_random(tmp_path_factory, seed):
    log = random_log(np.random.default_rng(seed))
    path = tmp_path_factory.mktemp("logs") / "log.jsonl"
    save_log(log, path)
    assert load_log(path) == log


def test_load_log_hundred_frames(tmp_path):
    log = straight_log(n=100)
    save_log(log, tmp_path / "log.jsonl")
    assert load_log(tmp_path / "log.jsonl").n_frames == 100


def test_load_log_decreasing_timestamps(tmp_path):
    log = straight_log(n=10)
    path = tmp_path / "log.jsonl"
    save_log(log, path)
    lines = path.read_text().splitlines()
    f1, f2 = json.loads(lines[1]), json.loads(lines[2])
    f1["t"], f2["t"] = f2["t"], f1["t"]
    lines[1], lines[2] = json.dumps(f1), json.dumps(f2)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValidationError, match="timestamps"):
        load_log(path)


def test_object_index_out_of_range_names_field():
    log = straight_log(n=10)
    log.objects["bad"] = make_track("bad", [8, 12], [0.0, 1.0], [0.0, 1.0])
    with pytest.raises(ValidationError, match=r"objects\[bad\]\.index"):
        log.validate()


def test_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "log.jsonl"
    good = straight_log(n=3)
    save_log(good, path)
    text = path.read_text().splitlines()
    text[2] = "{not json"
    path.write_text("\n".join(text) + "\n")
    with pytest.raises(LogParseError, match="line 3"):
        load_log(path)


def test_bad_spacing_rejected():
    log = straight_log(n=5)
    log.timestamps = np.array([0.0, 0.1, 0.2, 0.31, 0.4])
    with pytest.raises(ValidationError, match="timestamps"):
        log.validate()


def test_duplicate_object_id_in_frame(tmp_path):
    path = tmp_path / "log.jsonl"
    header = {"log_id": "x", "rate_hz": 10.0}
    entry = {"id": "a", "x": 0.0, "y": 0.0, "yaw": 0.0, "length": 2.0, "width": 1.0, "category": "vehicle"}
    frame = {"t": 0.0, "ego": {"x": 0.0, "y": 0.0, "yaw": 0.0}, "objects": [entry, dict(entry)]}
    path.write_text(json.dumps(header) + "\n" + json.dumps(frame) + "\n")
    with pytest.raises(LogParseError, match="duplicate object id"):
        load_log(path)


# ---------------------------------------------------------------------------
# Tag matrices IO
# ---------------------------------------------------------------------------

def _small_tags():
    from brakemine.model import (CollisionTag, DistanceTag, HeadingTag, LatitudeTag,
                                 LongitudeTag, PositionTag, TrajOverlapTag)

    t = 4
    obs = [None, "vehicle", "vehicle", None]

    def row(values):
        return [None if o is None else v for o, v in zip(obs, values)]

    return TagMatrices(
        log_id="tags-test",
        rate_hz=10.0,
        track_ids=["g1"],
        object_category=[obs],
        longitude=[[LongitudeTag.CRUISING] * t, row([LongitudeTag.CRUISING] * t)],
        latitude=[[LatitudeTag.FACING_FORWARD] * t, row([LatitudeTag.FACING_FORWARD] * t)],
        heading=[row([HeadingTag.SAME] * t)],
        position=[row([PositionTag.FRONT] * t)],
        collision=[row([CollisionTag.NO, CollisionTag.LOW, CollisionTag.HIGH, CollisionTag.NO])],
        distance=[row([DistanceTag.CLOSE] * t)],
        traj_overlap=[row([TrajOverlapTag.NO, TrajOverlapTag.LOW, TrajOverlapTag.HIGH, TrajOverlapTag.NO])],
    )


def test_tags_roundtrip(tmp_path):
    tags = _small_tags()
    save_tags(tags, tmp_path / "tags.jsonl")
    loaded = load_tags(tmp_path / "tags.jsonl")
    assert loaded == tags


def test_tags_absent_serialized_explicitly(tmp_path):
    tags = _small_tags()
    save_tags(tags, tmp_path / "tags.jsonl")
    text = (tmp_path / "tags.jsonl").read_text()
    assert '"ABSENT"' in text


def test_tags_absent_mask_consistency_enforced():
    tags = _small_tags()
    tags.heading[0][0] = model.HeadingTag.SAME  # observed where category says ABSENT
    with pytest.raises(ValidationError, match="mask"):
        tags.validate()


def test_tagged_log_roundtrip(tagged_corpus, tmp_path):
    log_id, (_, tags) = next(iter(tagged_corpus.items()))
    save_tags(tags, tmp_path / "tags.jsonl")
    assert load_tags(tmp_path / "tags.jsonl") == tags


# ---------------------------------------------------------------------------
# Records and annotations
# ---------------------------------------------------------------------------

def _record(i=0, category=ScenarioCategory.CUT_IN, dim=8):
    vec = np.zeros(dim)
    vec[i % dim] = 1.0
    return ScenarioRecord(
        log_id=f"log-{i}",
        guest_id=f"guest-{i}",
        raw_description="raw text",
        rephrased_description="rephrased text",
        category=category,
        explanation="because",
        embedding=vec,
        provenance={"llm_model": "m", "embed_model": "e"},
    )


def test_record_roundtrip(tmp_path):
    records = [_record(i) for i in range(5)]
    save_records(records, tmp_path / "db.jsonl")
    assert load_records(tmp_path / "db.jsonl") == records


def test_record_validates_embedding():
    with pytest.raises(ValidationError, match="embedding"):
        _replace_embedding = ScenarioRecord(
            log_id="l", guest_id="g", raw_description="r", rephrased_description="p",
            category=ScenarioCategory.CUT_IN, explanation="e",
            embedding=np.array([1.0, math.inf]),
        )


def test_annotations_roundtrip(tmp_path):
    annotations = [
        Annotation("log-1", "g-1", ScenarioCategory.CUT_IN),
        Annotation("log-1", "g-2", ScenarioCategory.NOT_RELEVANT),
        Annotation("log-2", "g-1", ScenarioCategory.PED_CROSS),
    ]
    save_annotations(annotations, tmp_path / "ann.csv")
    assert load_annotations(tmp_path / "ann.csv") == annotations


def test_annotations_duplicate_key_rejected(tmp_path):
    path = tmp_path / "ann.csv"
    path.write_text("log_id,guest_id,scenario_category\na,b,cut_in\na,b,ped_cross\n")
    with pytest.raises(ValidationError, match="duplicate"):
        load_annotations(path)
