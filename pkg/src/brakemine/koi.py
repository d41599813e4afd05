"""Key object identification: which guests plausibly caused the ego to brake.

A guest becomes a candidate if, at some frame, the ego is decelerating or
standing still while that guest simultaneously carries a non-NO collision or
trajectory-overlap risk.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .model import CollisionTag, LogParseError, LongitudeTag, TagMatrices, TrajOverlapTag, ValidationError

_BRAKING = (LongitudeTag.DECELERATING, LongitudeTag.STANDING_STILL)
_RISKY_COLLISION = (CollisionTag.LOW, CollisionTag.HIGH)
_RISKY_OVERLAP = (TrajOverlapTag.LOW, TrajOverlapTag.HIGH)


@dataclass(frozen=True)
class KeyPair:
    """One ego-guest candidate with the frames at which the rule fired."""

    log_id: str
    guest_id: str
    trigger_frames: tuple[int, ...]

    def __post_init__(self):
        if len(self.trigger_frames) == 0:
            raise ValidationError("trigger_frames: must be non-empty")
        if any(b <= a for a, b in zip(self.trigger_frames, self.trigger_frames[1:])):
            raise ValidationError("trigger_frames: must be strictly increasing")

    @property
    def key(self) -> tuple[str, str]:
        return (self.log_id, self.guest_id)


def identify_key_objects(tags: TagMatrices) -> list[KeyPair]:
    ego_braking = [tag in _BRAKING for tag in tags.longitude[0]]
    pairs: list[KeyPair] = []
    for n, guest_id in enumerate(tags.track_ids):
        collision = tags.collision[n]
        overlap = tags.traj_overlap[n]
        triggers = [
            t
            for t in range(tags.n_frames)
            if ego_braking[t] and (collision[t] in _RISKY_COLLISION or overlap[t] in _RISKY_OVERLAP)
        ]
        if triggers:
            pairs.append(KeyPair(tags.log_id, guest_id, tuple(triggers)))
    return pairs


def save_pairs(pairs: list[KeyPair], path: str | Path, append: bool = False) -> None:
    mode = "a" if append else "w"
    with Path(path).open(mode, encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(
                json.dumps(
                    {"log_id": pair.log_id, "guest_id": pair.guest_id,
                     "trigger_frames": list(pair.trigger_frames)}
                )
                + "\n"
            )


def load_pairs(path: str | Path) -> list[KeyPair]:
    pairs: list[KeyPair] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                pairs.append(KeyPair(obj["log_id"], obj["guest_id"], tuple(obj["trigger_frames"])))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise LogParseError(f"{path}: line {lineno}: malformed key pair: {exc}") from exc
    return pairs
