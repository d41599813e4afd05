"""Duration-based structured text description of one ego-guest pair.

Per-frame tag tuples are run-length merged into segments; the description
opens with an overview line, spells out every tag once for the first segment,
and afterwards only mentions tags that changed, each with the segment's
duration.  Output is deterministic byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .model import LogParseError, TagMatrices, ValidationError

# Fixed field order of a pair's tag snapshot; rendering follows this order.
TAG_FIELDS = (
    "ego_longitude",
    "ego_latitude",
    "guest_longitude",
    "guest_latitude",
    "heading",
    "position",
    "collision",
    "distance",
    "traj_overlap",
)

TEMPLATE_VERSION = "1"

_FIELD_LABELS = {
    "ego_longitude": "ego longitude",
    "ego_latitude": "ego latitude",
    "guest_longitude": "guest longitude",
    "guest_latitude": "guest latitude",
    "heading": "relative heading",
    "position": "relative position",
    "collision": "collision risk",
    "distance": "distance",
    "traj_overlap": "trajectory overlap",
}

_OVERVIEW = "Scenario overview: total duration {total:.1f} s; actors: ego vehicle and {guest}."
_FIRST_HEADER = "For the first {dur:.1f} s:"
_NEXT_HEADER = "For the next {dur:.1f} s:"
_INIT_LINE = "- {label} is {value}"
_CHANGE_LINE = "- {label} changes to {value}"


@dataclass(frozen=True)
class Segment:
    """A maximal run of frames sharing one full tag tuple."""

    start_s: float
    duration_s: float
    tags: tuple[str, ...]   # values aligned with TAG_FIELDS

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValidationError("duration_s: must be positive")
        if len(self.tags) != len(TAG_FIELDS):
            raise ValidationError(f"tags: expected {len(TAG_FIELDS)} values")


def run_length_encode(
    frames: list[tuple[str, ...]], rate_hz: float, first_frame: int = 0
) -> list[Segment]:
    """Merge consecutive identical tag tuples into duration-carrying segments."""
    if not frames:
        raise ValidationError("empty_pair: no frames with an observed guest")
    segments: list[Segment] = []
    run_start = 0
    for i in range(1, len(frames) + 1):
        if i < len(frames) and frames[i] == frames[run_start]:
            continue
        segments.append(
            Segment(
                start_s=(first_frame + run_start) / rate_hz,
                duration_s=(i - run_start) / rate_hz,
                tags=tuple(frames[run_start]),
            )
        )
        run_start = i
    return segments


def run_length_decode(segments: list[Segment], rate_hz: float) -> list[tuple[str, ...]]:
    """Inverse of run_length_encode (frame tuples, without the frame offset)."""
    frames: list[tuple[str, ...]] = []
    for seg in segments:
        frames.extend([seg.tags] * int(round(seg.duration_s * rate_hz)))
    return frames


def guest_label(category: str, guest_id: str) -> str:
    return f"{category} {guest_id[:8]}"


def compose_description(segments: list[Segment], guest: str) -> str:
    """Render segments into the fixed structured text (template v1)."""
    if not segments:
        raise ValidationError("empty_pair: no segments to describe")
    total = sum(seg.duration_s for seg in segments)
    lines = [_OVERVIEW.format(total=total, guest=guest)]
    lines.append(_FIRST_HEADER.format(dur=segments[0].duration_s))
    for field, value in zip(TAG_FIELDS, segments[0].tags):
        lines.append(_INIT_LINE.format(label=_FIELD_LABELS[field], value=value))
    for prev, seg in zip(segments, segments[1:]):
        lines.append(_NEXT_HEADER.format(dur=seg.duration_s))
        for field, old, new in zip(TAG_FIELDS, prev.tags, seg.tags):
            if old != new:
                lines.append(_CHANGE_LINE.format(label=_FIELD_LABELS[field], value=new))
    return "\n".join(lines)


def pair_frames(tags: TagMatrices, guest_id: str) -> tuple[list[tuple[str, ...]], int, str]:
    """Per-frame tag tuples for one guest, over its observed frames.

    Returns (frames, first_frame_index, guest_category).
    """
    try:
        n = tags.track_ids.index(guest_id)
    except ValueError as exc:
        raise ValidationError(f"guest_id: {guest_id!r} not in tag matrices") from exc
    rows = {
        "ego_longitude": tags.longitude[0],
        "ego_latitude": tags.latitude[0],
        "guest_longitude": tags.longitude[n + 1],
        "guest_latitude": tags.latitude[n + 1],
        "heading": tags.heading[n],
        "position": tags.position[n],
        "collision": tags.collision[n],
        "distance": tags.distance[n],
        "traj_overlap": tags.traj_overlap[n],
    }
    observed = [t for t in range(tags.n_frames) if tags.object_category[n][t] is not None]
    if not observed:
        raise ValidationError("empty_pair: guest never observed")
    frames = [tuple(rows[field][t].value for field in TAG_FIELDS) for t in observed]
    categories = [c for c in tags.object_category[n] if c is not None]
    return frames, observed[0], categories[0]


def describe_pair(tags: TagMatrices, guest_id: str) -> tuple[str, str]:
    """Full description for one ego-guest pair; returns (text, guest_category)."""
    frames, first, category = pair_frames(tags, guest_id)
    segments = run_length_encode(frames, tags.rate_hz, first_frame=first)
    return compose_description(segments, guest_label(category, guest_id)), category


def save_descriptions(rows: list[dict], path: str | Path, append: bool = False) -> None:
    """Rows: {"log_id", "guest_id", "guest_category", "description"}."""
    mode = "a" if append else "w"
    with Path(path).open(mode, encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def load_descriptions(path: str | Path) -> list[dict]:
    rows: list[dict] = []
    required = {"log_id", "guest_id", "guest_category", "description"}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LogParseError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
            missing = required - set(obj)
            if missing:
                raise LogParseError(f"{path}: line {lineno}: missing keys {sorted(missing)}")
            rows.append(obj)
    return rows
