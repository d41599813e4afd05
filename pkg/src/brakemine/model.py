"""Shared domain types and the line-oriented file formats of the pipeline.

All types are immutable value objects once constructed.  Every file format
(log JSONL, tag JSONL, scenario-record JSONL, annotation CSV) round-trips
numeric fields exactly: floats are written at repr precision and read back
bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

DEFAULT_EGO_LENGTH_M = 4.8
DEFAULT_EGO_WIDTH_M = 2.0

# Serialized stand-in for "object not observed at this frame".
ABSENT = "ABSENT"


class LogParseError(ValueError):
    """A serialized file could not be parsed; message carries the line number."""


class ValidationError(ValueError):
    """A value violates a type invariant; message names the offending field."""


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]; in-range values pass through bit-exact."""
    if -math.pi < angle <= math.pi:
        return angle
    if not math.isfinite(angle):
        raise ValidationError("yaw: angle must be finite")
    return math.pi - (math.pi - angle) % (2.0 * math.pi)


def wrap_angle_array(angles: np.ndarray) -> np.ndarray:
    """Vectorized :func:`wrap_angle`; in-range entries are passed through."""
    a = np.asarray(angles, dtype=float)
    wrapped = np.pi - np.remainder(np.pi - a, 2.0 * np.pi)
    return np.where((a > -np.pi) & (a <= np.pi), a, wrapped)


# ---------------------------------------------------------------------------
# Tag taxonomies
# ---------------------------------------------------------------------------

class LongitudeTag(str, Enum):
    CRUISING = "CRUISING"
    STANDING_STILL = "STANDING_STILL"
    ACCELERATING = "ACCELERATING"
    DECELERATING = "DECELERATING"
    REVERSING = "REVERSING"


class LatitudeTag(str, Enum):
    FACING_FORWARD = "FACING_FORWARD"
    VEERING_LEFT = "VEERING_LEFT"
    VEERING_RIGHT = "VEERING_RIGHT"
    TURNING_LEFT = "TURNING_LEFT"
    TURNING_RIGHT = "TURNING_RIGHT"


class CollisionTag(str, Enum):
    NO = "NO"
    LOW = "LOW"
    HIGH = "HIGH"


class HeadingTag(str, Enum):
    SAME = "SAME"
    LEFT = "LEFT"
    RIGHT = "RIGHT"
    OPPOSITE = "OPPOSITE"


class PositionTag(str, Enum):
    FRONT = "FRONT"
    FRONT_LEFT = "FRONT_LEFT"
    LEFT = "LEFT"
    BACK_LEFT = "BACK_LEFT"
    BACK = "BACK"
    BACK_RIGHT = "BACK_RIGHT"
    RIGHT = "RIGHT"
    FRONT_RIGHT = "FRONT_RIGHT"


class DistanceTag(str, Enum):
    VERY_CLOSE = "VERY_CLOSE"
    CLOSE = "CLOSE"
    MEDIUM = "MEDIUM"
    FAR = "FAR"


class TrajOverlapTag(str, Enum):
    NO = "NO"
    LOW = "LOW"
    HIGH = "HIGH"


TAG_ENUMS = (
    LongitudeTag,
    LatitudeTag,
    CollisionTag,
    HeadingTag,
    PositionTag,
    DistanceTag,
    TrajOverlapTag,
)


def serialize_tag(tag: Enum | None) -> str:
    return ABSENT if tag is None else tag.value


def parse_tag(enum_cls, text: str):
    """Inverse of :func:`serialize_tag`; ABSENT maps back to None."""
    if text == ABSENT:
        return None
    try:
        return enum_cls(text)
    except ValueError as exc:
        raise ValidationError(f"{enum_cls.__name__}: unknown value {text!r}") from exc


class ScenarioCategory(str, Enum):
    CUT_IN = "cut_in"
    LEFT_OPPO = "left_oppo"
    RIGHT_PED = "right_ped"
    OBJ_CROSS = "obj_cross"
    PED_CROSS = "ped_cross"
    LEAD_BRAKE = "lead_brake"
    APPROACH_STOP = "approach_stop"
    NOT_RELEVANT = "not_relevant"
    UNKNOWN_BUT_RELEVANT = "unknown_but_relevant"


# Categories listed explicitly in the classification prompt; everything else
# must be mapped by the model onto not_relevant / unknown_but_relevant.
PROMPT_CATEGORIES = (
    ScenarioCategory.CUT_IN,
    ScenarioCategory.LEFT_OPPO,
    ScenarioCategory.RIGHT_PED,
    ScenarioCategory.OBJ_CROSS,
)

PROMPT_CATEGORY_DEFINITIONS = {
    ScenarioCategory.CUT_IN: "another agent merges into the ego vehicle's lane directly ahead",
    ScenarioCategory.LEFT_OPPO: "the ego vehicle turns left while an oncoming agent approaches",
    ScenarioCategory.RIGHT_PED: "the ego vehicle turns right while a pedestrian is crossing",
    ScenarioCategory.OBJ_CROSS: "an agent crosses the ego vehicle's path ahead",
}


# ---------------------------------------------------------------------------
# Trajectory log
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pose2D:
    """Planar pose; yaw is wrapped to (-pi, pi] on construction."""

    x: float
    y: float
    yaw: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.yaw)):
            raise ValidationError("pose: x, y and yaw must be finite")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))


@dataclass(frozen=True)
class ObjectState:
    """One observation of a tracked agent: an oriented box with identity."""

    pose: Pose2D
    length: float
    width: float
    category: str
    track_id: str

    def __post_init__(self):
        if not self.track_id:
            raise ValidationError("track_id: must be non-empty")
        if not (self.length >= self.width > 0):
            raise ValidationError("length/width: need length >= width > 0")


@dataclass
class ObjectTrack:
    """Sparse per-frame series of one tracked agent within a log."""

    track_id: str
    indices: np.ndarray       # [K] frame indices, strictly increasing
    x: np.ndarray             # [K]
    y: np.ndarray             # [K]
    yaw: np.ndarray           # [K], wrapped to (-pi, pi]
    length: np.ndarray        # [K]
    width: np.ndarray         # [K]
    categories: list[str]     # [K]

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        for name in ("x", "y", "yaw", "length", "width"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.categories = list(self.categories)

    @property
    def n_obs(self) -> int:
        return len(self.indices)

    def state_at(self, k: int) -> ObjectState:
        return ObjectState(
            pose=Pose2D(self.x[k], self.y[k], self.yaw[k]),
            length=self.length[k],
            width=self.width[k],
            category=self.categories[k],
            track_id=self.track_id,
        )

    def validate(self, n_frames: int) -> None:
        name = f"objects[{self.track_id}]"
        if not self.track_id:
            raise ValidationError("objects: track_id must be non-empty")
        k = self.n_obs
        if k == 0:
            raise ValidationError(f"{name}.indices: track has no observations")
        for arr_name in ("x", "y", "yaw", "length", "width"):
            arr = getattr(self, arr_name)
            if len(arr) != k:
                raise ValidationError(f"{name}.{arr_name}: length {len(arr)} != {k}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name}.{arr_name}: non-finite value")
        if len(self.categories) != k:
            raise ValidationError(f"{name}.categories: length {len(self.categories)} != {k}")
        if np.any(self.indices < 0) or np.any(self.indices >= n_frames):
            raise ValidationError(f"{name}.index: observation index outside [0, {n_frames})")
        if k > 1 and not np.all(np.diff(self.indices) > 0):
            raise ValidationError(f"{name}.index: indices not strictly increasing")
        if not np.all(self.length >= self.width):
            raise ValidationError(f"{name}.length: need length >= width")
        if not np.all(self.width > 0):
            raise ValidationError(f"{name}.width: need width > 0")
        if np.any(self.yaw <= -math.pi) or np.any(self.yaw > math.pi):
            raise ValidationError(f"{name}.yaw: outside (-pi, pi]")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ObjectTrack):
            return NotImplemented
        return (
            self.track_id == other.track_id
            and np.array_equal(self.indices, other.indices)
            and all(
                np.array_equal(getattr(self, n), getattr(other, n))
                for n in ("x", "y", "yaw", "length", "width")
            )
            and self.categories == other.categories
        )


@dataclass
class TrajectoryLog:
    """One recording: dense ego pose series plus sparse object tracks."""

    log_id: str
    rate_hz: float
    timestamps: np.ndarray    # [T] seconds, equally spaced at 1/rate_hz
    ego_x: np.ndarray         # [T]
    ego_y: np.ndarray         # [T]
    ego_yaw: np.ndarray       # [T], wrapped to (-pi, pi]
    objects: dict[str, ObjectTrack]
    ego_length: float = DEFAULT_EGO_LENGTH_M
    ego_width: float = DEFAULT_EGO_WIDTH_M

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        for name in ("ego_x", "ego_y", "ego_yaw"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    @property
    def n_frames(self) -> int:
        return len(self.timestamps)

    def ego_pose(self, t: int) -> Pose2D:
        return Pose2D(self.ego_x[t], self.ego_y[t], self.ego_yaw[t])

    def validate(self) -> None:
        if not self.log_id:
            raise ValidationError("log_id: must be non-empty")
        if not (math.isfinite(self.rate_hz) and self.rate_hz > 0):
            raise ValidationError("rate_hz: must be a positive number")
        if not (self.ego_length > 0 and self.ego_width > 0):
            raise ValidationError("ego_length/ego_width: must be positive")
        t = self.n_frames
        if t == 0:
            raise ValidationError("timestamps: log has no frames")
        if not np.all(np.isfinite(self.timestamps)):
            raise ValidationError("timestamps: non-finite value")
        if t > 1:
            dt = np.diff(self.timestamps)
            if np.any(dt <= 0):
                raise ValidationError("timestamps: not strictly increasing")
            if np.any(np.abs(dt - 1.0 / self.rate_hz) > 1e-6):
                raise ValidationError("timestamps: spacing deviates from 1/rate_hz by more than 1e-6 s")
        for name in ("ego_x", "ego_y", "ego_yaw"):
            arr = getattr(self, name)
            if len(arr) != t:
                raise ValidationError(f"{name}: length {len(arr)} != {t}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name}: non-finite value")
        if np.any(self.ego_yaw <= -math.pi) or np.any(self.ego_yaw > math.pi):
            raise ValidationError("ego_yaw: outside (-pi, pi]")
        for track_id, track in self.objects.items():
            if track.track_id != track_id:
                raise ValidationError(f"objects[{track_id}]: key does not match track_id")
            track.validate(t)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrajectoryLog):
            return NotImplemented
        return (
            self.log_id == other.log_id
            and self.rate_hz == other.rate_hz
            and self.ego_length == other.ego_length
            and self.ego_width == other.ego_width
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.ego_x, other.ego_x)
            and np.array_equal(self.ego_y, other.ego_y)
            and np.array_equal(self.ego_yaw, other.ego_yaw)
            and self.objects == other.objects
        )


def load_log(path: str | Path) -> TrajectoryLog:
    """Read a JSONL trajectory log and validate every invariant."""
    path = Path(path)
    header = None
    times: list[float] = []
    ego: list[tuple[float, float, float]] = []
    per_track: dict[str, dict[str, list]] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LogParseError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
            if header is None:
                try:
                    header = {
                        "log_id": obj["log_id"],
                        "rate_hz": float(obj["rate_hz"]),
                        "ego_length_m": float(obj.get("ego_length_m", DEFAULT_EGO_LENGTH_M)),
                        "ego_width_m": float(obj.get("ego_width_m", DEFAULT_EGO_WIDTH_M)),
                    }
                except KeyError as exc:
                    raise LogParseError(f"{path}: line {lineno}: header missing key {exc}") from exc
                continue
            frame_idx = len(times)
            try:
                times.append(float(obj["t"]))
                e = obj["ego"]
                ego.append((float(e["x"]), float(e["y"]), wrap_angle(float(e["yaw"]))))
                seen_ids = set()
                for entry in obj.get("objects", []):
                    tid = entry["id"]
                    if tid in seen_ids:
                        raise LogParseError(f"{path}: line {lineno}: duplicate object id {tid!r}")
                    seen_ids.add(tid)
                    rec = per_track.setdefault(
                        tid,
                        {"idx": [], "x": [], "y": [], "yaw": [], "length": [], "width": [], "cat": []},
                    )
                    rec["idx"].append(frame_idx)
                    rec["x"].append(float(entry["x"]))
                    rec["y"].append(float(entry["y"]))
                    rec["yaw"].append(wrap_angle(float(entry["yaw"])))
                    rec["length"].append(float(entry["length"]))
                    rec["width"].append(float(entry["width"]))
                    rec["cat"].append(str(entry["category"]))
            except (KeyError, TypeError) as exc:
                raise LogParseError(f"{path}: line {lineno}: malformed frame: {exc}") from exc
    if header is None:
        raise LogParseError(f"{path}: empty file, expected header line")
    tracks = {
        tid: ObjectTrack(
            track_id=tid,
            indices=rec["idx"],
            x=rec["x"],
            y=rec["y"],
            yaw=rec["yaw"],
            length=rec["length"],
            width=rec["width"],
            categories=rec["cat"],
        )
        for tid, rec in per_track.items()
    }
    log = TrajectoryLog(
        log_id=header["log_id"],
        rate_hz=header["rate_hz"],
        timestamps=times,
        ego_x=[p[0] for p in ego],
        ego_y=[p[1] for p in ego],
        ego_yaw=[p[2] for p in ego],
        objects=tracks,
        ego_length=header["ego_length_m"],
        ego_width=header["ego_width_m"],
    )
    log.validate()
    return log


def save_log(log: TrajectoryLog, path: str | Path) -> None:
    """Write a JSONL trajectory log; load_log(save_log(x)) == x exactly."""
    log.validate()
    path = Path(path)
    by_frame: dict[int, list[tuple[str, ObjectTrack, int]]] = {}
    for tid in sorted(log.objects):
        track = log.objects[tid]
        for k, idx in enumerate(track.indices):
            by_frame.setdefault(int(idx), []).append((tid, track, k))
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "log_id": log.log_id,
            "rate_hz": log.rate_hz,
            "ego_length_m": log.ego_length,
            "ego_width_m": log.ego_width,
        }
        fh.write(json.dumps(header) + "\n")
        for t in range(log.n_frames):
            entries = [
                {
                    "id": tid,
                    "x": track.x[k],
                    "y": track.y[k],
                    "yaw": track.yaw[k],
                    "length": track.length[k],
                    "width": track.width[k],
                    "category": track.categories[k],
                }
                for tid, track, k in by_frame.get(t, [])
            ]
            frame = {
                "t": log.timestamps[t],
                "ego": {"x": log.ego_x[t], "y": log.ego_y[t], "yaw": log.ego_yaw[t]},
                "objects": entries,
            }
            fh.write(json.dumps(frame) + "\n")


# ---------------------------------------------------------------------------
# Tag matrices
# ---------------------------------------------------------------------------

# Per-object matrices in fixed serialization order.
OBJECT_MATRICES = (
    "object_category",
    "longitude",
    "latitude",
    "heading",
    "position",
    "collision",
    "distance",
    "traj_overlap",
)

_MATRIX_ENUMS = {
    "longitude": LongitudeTag,
    "latitude": LatitudeTag,
    "heading": HeadingTag,
    "position": PositionTag,
    "collision": CollisionTag,
    "distance": DistanceTag,
    "traj_overlap": TrajOverlapTag,
}


@dataclass
class TagMatrices:
    """Per-log rule-tag output.

    Motion matrices (longitude, latitude) have N+1 rows with the ego vehicle
    in row 0; interaction matrices are [N, T].  Cells are None exactly where
    the object has no observed state at that frame.
    """

    log_id: str
    rate_hz: float
    track_ids: list[str]
    object_category: list[list[str | None]]
    longitude: list[list[LongitudeTag | None]]
    latitude: list[list[LatitudeTag | None]]
    heading: list[list[HeadingTag | None]]
    position: list[list[PositionTag | None]]
    collision: list[list[CollisionTag | None]]
    distance: list[list[DistanceTag | None]]
    traj_overlap: list[list[TrajOverlapTag | None]]

    @property
    def n_objects(self) -> int:
        return len(self.track_ids)

    @property
    def n_frames(self) -> int:
        return len(self.longitude[0])

    def object_row(self, matrix: str, n: int) -> list:
        """Row of `matrix` for object n (skipping the ego row where present)."""
        rows = getattr(self, matrix)
        return rows[n + 1] if matrix in ("longitude", "latitude") else rows[n]

    def observed_mask(self, n: int) -> list[bool]:
        return [c is not None for c in self.object_category[n]]

    def validate(self) -> None:
        n, t = self.n_objects, self.n_frames
        for name in ("longitude", "latitude"):
            rows = getattr(self, name)
            if len(rows) != n + 1:
                raise ValidationError(f"{name}: expected {n + 1} rows, got {len(rows)}")
            if any(c is None for c in rows[0]):
                raise ValidationError(f"{name}: ego row contains ABSENT cells")
        for name in OBJECT_MATRICES:
            rows = getattr(self, name)
            expected = n + 1 if name in ("longitude", "latitude") else n
            if len(rows) != expected:
                raise ValidationError(f"{name}: expected {expected} rows, got {len(rows)}")
            for row in rows:
                if len(row) != t:
                    raise ValidationError(f"{name}: row length {len(row)} != {t}")
        for i in range(n):
            mask = self.observed_mask(i)
            for name in OBJECT_MATRICES:
                row = self.object_row(name, i)
                if [c is not None for c in row] != mask:
                    raise ValidationError(f"{name}: ABSENT mask mismatch for object {self.track_ids[i]}")


def save_tags(tags: TagMatrices, path: str | Path) -> None:
    """Write tag matrices as JSONL: one header line, then one line per row."""
    tags.validate()
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "log_id": tags.log_id,
            "rate_hz": tags.rate_hz,
            "n_frames": tags.n_frames,
            "track_ids": tags.track_ids,
        }
        fh.write(json.dumps(header) + "\n")
        for matrix in ("longitude", "latitude"):
            row = getattr(tags, matrix)[0]
            fh.write(json.dumps({"matrix": matrix, "actor": "ego", "values": [serialize_tag(c) for c in row]}) + "\n")
        for i, tid in enumerate(tags.track_ids):
            for matrix in OBJECT_MATRICES:
                row = tags.object_row(matrix, i)
                if matrix == "object_category":
                    values = [ABSENT if c is None else c for c in row]
                else:
                    values = [serialize_tag(c) for c in row]
                fh.write(json.dumps({"matrix": matrix, "actor": tid, "values": values}) + "\n")


def load_tags(path: str | Path) -> TagMatrices:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = [line for line in (raw.strip() for raw in fh) if line]
    if not lines:
        raise LogParseError(f"{path}: empty file, expected header line")
    try:
        header = json.loads(lines[0])
        track_ids = list(header["track_ids"])
        t = int(header["n_frames"])
        rows: dict[tuple[str, str], list] = {}
        for lineno, line in enumerate(lines[1:], start=2):
            obj = json.loads(line)
            rows[(obj["matrix"], obj["actor"])] = obj["values"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise LogParseError(f"{path}: malformed tag file: {exc}") from exc

    def tag_row(matrix: str, actor: str) -> list:
        values = rows[(matrix, actor)]
        if len(values) != t:
            raise ValidationError(f"{matrix}: row length {len(values)} != {t}")
        if matrix == "object_category":
            return [None if v == ABSENT else v for v in values]
        return [parse_tag(_MATRIX_ENUMS[matrix], v) for v in values]

    try:
        data = {
            "longitude": [tag_row("longitude", "ego")] + [tag_row("longitude", tid) for tid in track_ids],
            "latitude": [tag_row("latitude", "ego")] + [tag_row("latitude", tid) for tid in track_ids],
        }
        for matrix in OBJECT_MATRICES:
            if matrix in ("longitude", "latitude"):
                continue
            data[matrix] = [tag_row(matrix, tid) for tid in track_ids]
    except KeyError as exc:
        raise LogParseError(f"{path}: missing row {exc}") from exc
    tags = TagMatrices(
        log_id=header["log_id"],
        rate_hz=float(header["rate_hz"]),
        track_ids=track_ids,
        **data,
    )
    tags.validate()
    return tags


# ---------------------------------------------------------------------------
# Scenario records and annotations
# ---------------------------------------------------------------------------

@dataclass
class ScenarioRecord:
    """One ego-guest pair enriched with model output and an embedding."""

    log_id: str
    guest_id: str
    raw_description: str
    rephrased_description: str
    category: ScenarioCategory
    explanation: str
    embedding: np.ndarray
    provenance: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.embedding = np.asarray(self.embedding, dtype=float)
        if self.embedding.ndim != 1 or len(self.embedding) == 0:
            raise ValidationError("embedding: expected a non-empty 1-d vector")
        if not np.all(np.isfinite(self.embedding)):
            raise ValidationError("embedding: non-finite entries")
        if not isinstance(self.category, ScenarioCategory):
            self.category = ScenarioCategory(self.category)

    @property
    def key(self) -> tuple[str, str]:
        return (self.log_id, self.guest_id)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScenarioRecord):
            return NotImplemented
        return (
            self.log_id == other.log_id
            and self.guest_id == other.guest_id
            and self.raw_description == other.raw_description
            and self.rephrased_description == other.rephrased_description
            and self.category == other.category
            and self.explanation == other.explanation
            and np.array_equal(self.embedding, other.embedding)
            and self.provenance == other.provenance
        )


def record_to_json(record: ScenarioRecord) -> str:
    return json.dumps(
        {
            "log_id": record.log_id,
            "guest_id": record.guest_id,
            "raw_description": record.raw_description,
            "rephrased_description": record.rephrased_description,
            "category": record.category.value,
            "explanation": record.explanation,
            "embedding": list(record.embedding),
            "provenance": record.provenance,
        }
    )


def record_from_json(line: str) -> ScenarioRecord:
    try:
        obj = json.loads(line)
        return ScenarioRecord(
            log_id=obj["log_id"],
            guest_id=obj["guest_id"],
            raw_description=obj["raw_description"],
            rephrased_description=obj["rephrased_description"],
            category=ScenarioCategory(obj["category"]),
            explanation=obj["explanation"],
            embedding=obj["embedding"],
            provenance=dict(obj.get("provenance", {})),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise LogParseError(f"malformed scenario record: {exc}") from exc


def save_records(records: list[ScenarioRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record_to_json(record) + "\n")


def load_records(path: str | Path) -> list[ScenarioRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(record_from_json(line))
            except LogParseError as exc:
                raise LogParseError(f"{path}: line {lineno}: {exc}") from exc
    return records


@dataclass(frozen=True)
class Annotation:
    """Ground-truth label for one ego-guest pair."""

    log_id: str
    guest_id: str
    scenario_category: ScenarioCategory

    @property
    def key(self) -> tuple[str, str]:
        return (self.log_id, self.guest_id)


def save_annotations(annotations: list[Annotation], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["log_id", "guest_id", "scenario_category"])
        for ann in annotations:
            writer.writerow([ann.log_id, ann.guest_id, ann.scenario_category.value])


def load_annotations(path: str | Path) -> list[Annotation]:
    path = Path(path)
    annotations: list[Annotation] = []
    seen: set[tuple[str, str]] = set()
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["log_id", "guest_id", "scenario_category"]:
            raise LogParseError(f"{path}: expected header log_id,guest_id,scenario_category")
        for row in reader:
            try:
                ann = Annotation(row["log_id"], row["guest_id"], ScenarioCategory(row["scenario_category"]))
            except ValueError as exc:
                raise LogParseError(f"{path}: bad annotation row {row}: {exc}") from exc
            if ann.key in seen:
                raise ValidationError(f"annotations: duplicate key {ann.key}")
            seen.add(ann.key)
            annotations.append(ann)
    return annotations
