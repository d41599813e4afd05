"""Deterministic synthetic driving logs with known ground-truth labels.

Each generator realizes one behavior category with piecewise primitives
(constant acceleration, constant curvature) integrated at fine substeps, so
trajectories stay kinematically consistent.  Every log also carries one
never-relevant distractor vehicle in a far parallel lane.  Identical specs
produce byte-identical logs.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field

import numpy as np

from .model import (
    Annotation,
    ObjectTrack,
    ScenarioCategory,
    TrajectoryLog,
    ValidationError,
    wrap_angle_array,
)

EGO_LENGTH = 4.8
EGO_WIDTH = 2.0

VEHICLE = ("vehicle", 4.6, 1.9)
PEDESTRIAN = ("pedestrian", 0.7, 0.7)
CYCLIST = ("cyclist", 1.8, 0.7)

# Categories with a generator (everything except the bookkeeping labels).
BEHAVIOR_CATEGORIES = (
    ScenarioCategory.CUT_IN,
    ScenarioCategory.LEFT_OPPO,
    ScenarioCategory.RIGHT_PED,
    ScenarioCategory.OBJ_CROSS,
    ScenarioCategory.PED_CROSS,
    ScenarioCategory.LEAD_BRAKE,
    ScenarioCategory.APPROACH_STOP,
)

VEER_BEHIND = "veer_behind"


@dataclass(frozen=True)
class ScenarioSpec:
    category: ScenarioCategory
    seed: int
    duration_s: float = 12.0
    rate_hz: float = 10.0
    noise_sigma_pos: float = 0.0
    lane_width: float = 3.5
    trigger_time_s: float | None = None   # ego brake onset; per-category default
    variant: str = ""                     # "" or "veer_behind" (cut_in only)

    def __post_init__(self):
        if self.duration_s <= 0 or self.rate_hz <= 0:
            raise ValidationError("duration_s/rate_hz: must be positive")
        if self.noise_sigma_pos < 0:
            raise ValidationError("noise_sigma_pos: must be >= 0")
        if self.trigger_time_s is not None and not (0 < self.trigger_time_s < self.duration_s):
            raise ValidationError("trigger_time_s: must lie inside the log duration")
        if self.variant and self.variant != VEER_BEHIND:
            raise ValidationError(f"variant: unknown variant {self.variant!r}")
        if self.variant == VEER_BEHIND and self.category != ScenarioCategory.OBJ_CROSS:
            raise ValidationError("variant: veer_behind applies to obj_cross only")


@dataclass
class LabeledLog:
    log: TrajectoryLog
    annotations: list[Annotation]
    checks: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Prim:
    """Piecewise motion primitive: hold accel and path curvature for a while."""

    duration_s: float
    accel: float = 0.0
    curvature: float = 0.0   # 1/m, + turns left; yaw rate is curvature * speed


@dataclass(frozen=True)
class ActorDef:
    category: str
    length: float
    width: float
    start: tuple[float, float, float]   # x, y, yaw
    speed: float
    prims: tuple[Prim, ...]
    label: ScenarioCategory


def _integrate(start, speed, prims, n_frames: int, rate_hz: float, substeps: int = 10):
    """Roll primitives into per-frame pose arrays; speed clamps at zero."""
    x, y, yaw = (float(v) for v in start)
    v = float(speed)
    dt = 1.0 / (rate_hz * substeps)
    schedule: list[Prim] = list(prims)
    xs, ys, yaws = np.empty(n_frames), np.empty(n_frames), np.empty(n_frames)
    prim_idx, prim_left = 0, schedule[0].duration_s if schedule else 0.0
    for i in range(n_frames):
        xs[i], ys[i], yaws[i] = x, y, yaw
        for _ in range(substeps):
            while prim_idx < len(schedule) and prim_left <= 0.0:
                prim_idx += 1
                prim_left = schedule[prim_idx].duration_s if prim_idx < len(schedule) else 0.0
            if prim_idx < len(schedule):
                a, kappa = schedule[prim_idx].accel, schedule[prim_idx].curvature
                prim_left -= dt
            else:
                a, kappa = 0.0, 0.0
            v = max(0.0, v + a * dt)
            yaw += kappa * v * dt
            x += v * np.cos(yaw) * dt
            y += v * np.sin(yaw) * dt
    return xs, ys, yaws


def _distractor(speed: float = 8.0) -> ActorDef:
    # far parallel lane, steady speed: never collides, never overlaps
    return ActorDef(*VEHICLE, start=(-5.0, -10.5, 0.0), speed=speed, prims=(),
                    label=ScenarioCategory.NOT_RELEVANT)


def _cut_in(spec: ScenarioSpec) -> tuple[ActorDef, list[ActorDef], dict[str, float]]:
    trigger = spec.trigger_time_s if spec.trigger_time_s is not None else 3.5
    ego = ActorDef("ego", EGO_LENGTH, EGO_WIDTH, (0.0, 0.0, 0.0), 9.0,
                   (Prim(trigger), Prim(4.0 / 3.0, accel=-3.0)), ScenarioCategory.NOT_RELEVANT)
    v_g = 7.8
    kappa = 0.45 / v_g
    guest = ActorDef(*VEHICLE, start=(11.5, spec.lane_width, 0.0), speed=v_g,
                     prims=(Prim(trigger - 0.5),
                            Prim(1.0, curvature=-kappa),
                            Prim(1.0, curvature=kappa),
                            Prim(2.0, accel=1.0)),
                     label=ScenarioCategory.CUT_IN)
    return ego, [guest], {"trigger": trigger}


def _veer_behind(spec: ScenarioSpec) -> tuple[ActorDef, list[ActorDef], dict[str, float]]:
    # Contrast case: an oncoming guest turns left across the ego lane well
    # ahead.  At the check frame the guest still drives straight, so the
    # synchronized rollout predicts it passing by in its own lane (no
    # collision risk at any frame), while the recorded future envelope
    # sweeps across the ego corridor (overlap HIGH).  The check frame
    # precedes the guest's steering onset by more than the smoothing
    # half-window, keeping its smoothed yaw rate clean.
    trigger = spec.trigger_time_s if spec.trigger_time_s is not None else 2.9
    check_t = 2.0
    ego = ActorDef("ego", EGO_LENGTH, EGO_WIDTH, (0.0, 0.0, 0.0), 9.0,
                   (Prim(trigger), Prim(8.5 / 4.0, accel=-4.0)), ScenarioCategory.NOT_RELEVANT)
    v_g, radius = 7.0, 8.0
    turn_time = (radius * np.pi / 2) / v_g
    guest = ActorDef(*VEHICLE, start=(52.0, spec.lane_width, np.pi), speed=v_g,
                     prims=(Prim(3.0), Prim(turn_time, curvature=1.0 / radius)),
                     label=ScenarioCategory.OBJ_CROSS)
    return ego, [guest], {"trigger": trigger, "check_t": check_t}


def _left_oppo(spec: ScenarioSpec) -> tuple[ActorDef, list[ActorDef], dict[str, float]]:
    trigger = spec.trigger_time_s if spec.trigger_time_s is not None else 2.0
    ego = ActorDef("ego", EGO_LENGTH, EGO_WIDTH, (0.0, 0.0, 0.0), 8.0,
                   (Prim(trigger),
                    Prim(6.5 / 2.2, accel=-2.2),      # 8 -> 1.5 m/s
                    Prim(0.35),                        # creep toward the gap
                    Prim(3.1, accel=1.3, curvature=1.0 / 7.0)),
                   ScenarioCategory.NOT_RELEVANT)
    guest = ActorDef(*VEHICLE, start=(71.1, spec.lane_width, np.pi), speed=7.0, prims=(),
                     label=ScenarioCategory.LEFT_OPPO)
    return ego, [guest], {"trigger": trigger}


def _right_ped(spec: ScenarioSpec) -> tuple[ActorDef, list[ActorDef], dict[str, float]]:
    trigger = spec.trigger_time_s if spec.trigger_time_s is not None else 2.0
    ego = ActorDef("ego", EGO_LENGTH, EGO_WIDTH, (0.0, 0.0, 0.0), 7.0,
                   (Prim(trigger),
                    Prim(5.0 / 1.8, accel=-1.8),       # 7 -> 2 m/s
                    Prim(3.42),                         # creep to the corner
                    Prim(2.44, accel=1.2, curvature=-1.0 / 5.5)),
                   ScenarioCategory.NOT_RELEVANT)
    guest = ActorDef(*PEDESTRIAN, start=(32.0, -4.5, np.pi / 2), speed=1.2, prims=(),
                     label=ScenarioCategory.RIGHT_PED)
    return ego, [guest], {"trigger": trigger}


def _obj_cross(spec: ScenarioSpec) -> tuple[ActorDef, list[ActorDef], dict[str, float]]:
    trigger = spec.trigger_time_s if spec.trigger_time_s is not None else 2.8
    ego = ActorDef("ego", EGO_LENGTH, EGO_WIDTH, (0.0, 0.0, 0.0), 9.0,
                   (Prim(trigger), Prim(9.0 / 3.1, accel=-3.1)), ScenarioCategory.NOT_RELEVANT)
    guest = ActorDef(*CYCLIST, start=(40.0, -12.0, np.pi / 2), speed=3.5, prims=(),
                     label=ScenarioCategory.OBJ_CROSS)
    return ego, [guest], {"trigger": trigger}


def _ped_cross(spec: ScenarioSpec) -> tuple[ActorDef, list[ActorDef], dict[str, float]]:
    trigger = spec.trigger_time_s if spec.trigger_time_s is not None else 2.8
    ego = ActorDef("ego", EGO_LENGTH, EGO_WIDTH, (0.0, 0.0, 0.0), 9.0,
                   (Prim(trigger), Prim(7.0 / 3.0, accel=-3.0)), ScenarioCategory.NOT_RELEVANT)
    guest = ActorDef(*PEDESTRIAN, start=(40.0, -4.0, np.pi / 2), speed=1.3, prims=(),
                     label=ScenarioCategory.PED_CROSS)
    return ego, [guest], {"trigger": trigger}


def _lead_brake(spec: ScenarioSpec) -> tuple[ActorDef, list[ActorDef], dict[str, float]]:
    lead_brake_t = spec.trigger_time_s if spec.trigger_time_s is not None else 3.0
    reaction = 0.7
    ego = ActorDef("ego", EGO_LENGTH, EGO_WIDTH, (0.0, 0.0, 0.0), 10.0,
                   (Prim(lead_brake_t + reaction), Prim(9.0 / 3.3, accel=-3.3)),
                   ScenarioCategory.NOT_RELEVANT)
    guest = ActorDef(*VEHICLE, start=(17.0, 0.0, 0.0), speed=10.0,
                     prims=(Prim(lead_brake_t), Prim(9.0 / 4.0, accel=-4.0)),
                     label=ScenarioCategory.LEAD_BRAKE)
    return ego, [guest], {"trigger": lead_brake_t + reaction}


def _approach_stop(spec: ScenarioSpec) -> tuple[ActorDef, list[ActorDef], dict[str, float]]:
    trigger = spec.trigger_time_s if spec.trigger_time_s is not None else 2.2
    ego = ActorDef("ego", EGO_LENGTH, EGO_WIDTH, (0.0, 0.0, 0.0), 10.0,
                   (Prim(trigger), Prim(10.0 / 3.0, accel=-3.0)), ScenarioCategory.NOT_RELEVANT)
    guest = ActorDef(*VEHICLE, start=(45.0, 0.0, 0.0), speed=0.0, prims=(),
                     label=ScenarioCategory.APPROACH_STOP)
    return ego, [guest], {"trigger": trigger}


_BUILDERS = {
    ScenarioCategory.CUT_IN: _cut_in,
    ScenarioCategory.LEFT_OPPO: _left_oppo,
    ScenarioCategory.RIGHT_PED: _right_ped,
    ScenarioCategory.OBJ_CROSS: _obj_cross,
    ScenarioCategory.PED_CROSS: _ped_cross,
    ScenarioCategory.LEAD_BRAKE: _lead_brake,
    ScenarioCategory.APPROACH_STOP: _approach_stop,
}


def generate(spec: ScenarioSpec) -> LabeledLog:
    """Build one labeled log (main guest + distractor) from a scenario spec."""
    if spec.category not in _BUILDERS:
        raise ValidationError(f"category: no generator for {spec.category.value}")
    builder = _veer_behind if spec.variant == VEER_BEHIND else _BUILDERS[spec.category]
    ego, guests, marks = builder(spec)
    if marks["trigger"] >= spec.duration_s:
        raise ValidationError("trigger_time_s: braking would start after the log ends")

    n_frames = int(round(spec.duration_s * spec.rate_hz))
    rng = np.random.default_rng(spec.seed)
    guests = guests + [_distractor()]
    guest_ids = [str(uuid.UUID(bytes=rng.bytes(16), version=4)) for _ in guests]

    variant_tag = f"-{spec.variant}" if spec.variant else ""
    log_id = f"synth-{spec.category.value}{variant_tag}-{spec.seed:06d}"

    ego_x, ego_y, ego_yaw = _integrate(ego.start, ego.speed, ego.prims, n_frames, spec.rate_hz)
    tracks: dict[str, ObjectTrack] = {}
    annotations: list[Annotation] = []
    for actor, tid in zip(guests, guest_ids):
        gx, gy, gyaw = _integrate(actor.start, actor.speed, actor.prims, n_frames, spec.rate_hz)
        if spec.noise_sigma_pos > 0:
            gx = gx + rng.normal(0.0, spec.noise_sigma_pos, n_frames)
            gy = gy + rng.normal(0.0, spec.noise_sigma_pos, n_frames)
        tracks[tid] = ObjectTrack(
            track_id=tid,
            indices=np.arange(n_frames),
            x=gx,
            y=gy,
            yaw=wrap_angle_array(gyaw),
            length=np.full(n_frames, actor.length),
            width=np.full(n_frames, actor.width),
            categories=[actor.category] * n_frames,
        )
        annotations.append(Annotation(log_id, tid, actor.label))
    if spec.noise_sigma_pos > 0:
        ego_x = ego_x + rng.normal(0.0, spec.noise_sigma_pos, n_frames)
        ego_y = ego_y + rng.normal(0.0, spec.noise_sigma_pos, n_frames)

    log = TrajectoryLog(
        log_id=log_id,
        rate_hz=spec.rate_hz,
        timestamps=np.arange(n_frames) / spec.rate_hz,
        ego_x=ego_x,
        ego_y=ego_y,
        ego_yaw=wrap_angle_array(ego_yaw),
        objects=tracks,
        ego_length=EGO_LENGTH,
        ego_width=EGO_WIDTH,
    )
    log.validate()
    checks = {"trigger_frame": int(round(marks["trigger"] * spec.rate_hz))}
    if "check_t" in marks:
        checks["check_frame"] = int(round(marks["check_t"] * spec.rate_hz))
    return LabeledLog(log=log, annotations=annotations, checks=checks)


def veer_behind_spec(seed: int = 0, noise_sigma_pos: float = 0.0) -> ScenarioSpec:
    return ScenarioSpec(
        category=ScenarioCategory.OBJ_CROSS, seed=seed, noise_sigma_pos=noise_sigma_pos,
        variant=VEER_BEHIND,
    )


def generate_corpus(
    n_per_category: int, seed: int, noise_sigma_pos: float = 0.0
) -> list[LabeledLog]:
    """n labeled logs for each behavior category, distractors included."""
    if n_per_category < 1:
        raise ValidationError("n_per_category: must be >= 1")
    out: list[LabeledLog] = []
    for c_idx, category in enumerate(BEHAVIOR_CATEGORIES):
        for i in range(n_per_category):
            child_seed = seed * 100_000 + c_idx * 1_000 + i
            out.append(
                generate(
                    ScenarioSpec(
                        category=category, seed=child_seed, noise_sigma_pos=noise_sigma_pos
                    )
                )
            )
    return out
