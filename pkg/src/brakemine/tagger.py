"""Rule-based activity tagging.

Produces the per-agent motion tags (longitude, latitude) and the ego-guest
interaction tags (heading, position, distance, collision, trajectory overlap)
for every frame of a preprocessed log.  Collision risk uses a constant turn
rate and velocity rollout with time-to-collision banding; trajectory overlap
risk intersects the recorded future bounding-box envelopes of the two agents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    CollisionTag,
    DistanceTag,
    HeadingTag,
    LatitudeTag,
    LongitudeTag,
    ObjectTrack,
    PositionTag,
    TagMatrices,
    TrajOverlapTag,
    TrajectoryLog,
    ValidationError,
)


@dataclass(frozen=True)
class TaggerConfig:
    stand_speed: float = 0.5       # m/s, |v| below this is standing still
    accel_thresh: float = 0.5      # m/s^2
    decel_thresh: float = -0.5     # m/s^2
    turn_rad: float = 0.17         # rad accumulated within turn_window
    veer_rad: float = 0.05         # rad
    turn_window: float = 1.0       # s
    ttc_low: float = 3.0           # s, TTC above this is NO risk
    ttc_high: float = 1.5          # s, TTC below this is HIGH risk
    dist_close: float = 10.0       # m
    dist_far: float = 50.0         # m
    dist_expand: float = 0.5       # m, per-side box expansion for VERY_CLOSE
    overlap_high_dt: float = 1.5   # s
    overlap_low_dt: float = 3.0    # s
    ctrv_horizon: float = 3.0      # s
    ctrv_step: float = 0.1         # s

    def __post_init__(self):
        if not (0 < self.ttc_high < self.ttc_low):
            raise ValidationError("ttc: need 0 < ttc_high < ttc_low")
        if not (0 < self.overlap_high_dt < self.overlap_low_dt):
            raise ValidationError("overlap: need 0 < overlap_high_dt < overlap_low_dt")
        for name in ("stand_speed", "accel_thresh", "turn_rad", "veer_rad", "turn_window",
                     "dist_close", "dist_far", "dist_expand", "ctrv_horizon", "ctrv_step"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name}: must be positive")


# ---------------------------------------------------------------------------
# Oriented-box geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrientedBox:
    cx: float
    cy: float
    yaw: float
    length: float
    width: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValidationError("box: extents must be positive")

    def expanded(self, margin: float) -> "OrientedBox":
        return OrientedBox(self.cx, self.cy, self.yaw, self.length + 2 * margin, self.width + 2 * margin)

    def corners(self) -> np.ndarray:
        return box_corners(self.cx, self.cy, self.yaw, self.length, self.width)

    def axes(self) -> np.ndarray:
        return box_axes(self.yaw)


def box_corners(cx, cy, yaw, length, width) -> np.ndarray:
    """Corner coordinates [..., 4, 2] in counter-clockwise order."""
    cx, cy, yaw, length, width = np.broadcast_arrays(
        np.asarray(cx, dtype=float), cy, yaw, length, width
    )
    c, s = np.cos(yaw), np.sin(yaw)
    hl, hw = 0.5 * np.asarray(length, dtype=float), 0.5 * np.asarray(width, dtype=float)
    dx = np.stack([hl, -hl, -hl, hl], axis=-1)
    dy = np.stack([hw, hw, -hw, -hw], axis=-1)
    x = cx[..., None] + c[..., None] * dx - s[..., None] * dy
    y = cy[..., None] + s[..., None] * dx + c[..., None] * dy
    return np.stack([x, y], axis=-1)


def box_axes(yaw) -> np.ndarray:
    """The two unit edge normals [..., 2, 2] of a box with this yaw."""
    yaw = np.asarray(yaw, dtype=float)
    c, s = np.cos(yaw), np.sin(yaw)
    return np.stack([np.stack([c, s], axis=-1), np.stack([-s, c], axis=-1)], axis=-2)


def _any_pair_intersects(ca, aa, cb, ab) -> bool:
    """True iff any box of set A touches or overlaps any box of set B.

    ca/cb are corner arrays [A,4,2] / [B,4,2]; aa/ab the axis arrays
    [A,2,2] / [B,2,2].  Separating-axis test on the 4 unique rectangle
    normals per pair; closed sets, so touching boxes intersect.
    """
    if len(ca) == 0 or len(cb) == 0:
        return False
    pa = np.einsum("acd,axd->axc", ca, aa)
    pa_lo, pa_hi = pa.min(-1), pa.max(-1)
    pb = np.einsum("bcd,axd->abxc", cb, aa)
    sep = ((pa_hi[:, None, :] < pb.min(-1)) | (pb.max(-1) < pa_lo[:, None, :])).any(-1)
    if sep.all():
        return False
    qb = np.einsum("bcd,bxd->bxc", cb, ab)
    qb_lo, qb_hi = qb.min(-1), qb.max(-1)
    qa = np.einsum("acd,bxd->abxc", ca, ab)
    sep |= ((qb_hi[None, :, :] < qa.min(-1)) | (qa.max(-1) < qb_lo[None, :, :])).any(-1)
    return bool((~sep).any())


def _paired_intersects(ca, aa, cb, ab) -> np.ndarray:
    """Elementwise SAT for aligned box series: returns [K] booleans."""
    pa = np.einsum("kcd,kxd->kxc", ca, aa)
    pb = np.einsum("kcd,kxd->kxc", cb, aa)
    sep = ((pa.max(-1) < pb.min(-1)) | (pb.max(-1) < pa.min(-1))).any(-1)
    qa = np.einsum("kcd,kxd->kxc", ca, ab)
    qb = np.einsum("kcd,kxd->kxc", cb, ab)
    sep |= ((qb.max(-1) < qa.min(-1)) | (qa.max(-1) < qb.min(-1))).any(-1)
    return ~sep


def obb_intersects(a: OrientedBox, b: OrientedBox) -> bool:
    """Closed-set overlap test for two oriented boxes (touching counts)."""
    return _any_pair_intersects(
        a.corners()[None], a.axes()[None], b.corners()[None], b.axes()[None]
    )


def _point_segment_distance(p, a, b) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(math.hypot(*(p - a)))
    t = min(1.0, max(0.0, float((p - a) @ ab) / denom))
    return float(math.hypot(*(p - (a + t * ab))))


def box_distance(a: OrientedBox, b: OrientedBox) -> float:
    """Minimum Euclidean distance between the two box polygons (0 if they meet)."""
    if obb_intersects(a, b):
        return 0.0
    ca, cb = a.corners(), b.corners()
    best = math.inf
    for pts, quad in ((ca, cb), (cb, ca)):
        for i in range(4):
            q1, q2 = quad[i], quad[(i + 1) % 4]
            for p in pts:
                d = _point_segment_distance(p, q1, q2)
                if d < best:
                    best = d
    return best


# ---------------------------------------------------------------------------
# Kinematics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KinematicsFrame:
    speed: float      # m/s, + forward along the body axis
    accel: float      # m/s^2 longitudinal
    yaw_rate: float   # rad/s


@dataclass
class Kinematics:
    speed: np.ndarray
    accel: np.ndarray
    yaw_rate: np.ndarray

    def at(self, t: int) -> KinematicsFrame:
        return KinematicsFrame(float(self.speed[t]), float(self.accel[t]), float(self.yaw_rate[t]))


def _central_diff(values: np.ndarray, rate_hz: float) -> np.ndarray:
    d = np.empty_like(values)
    d[1:-1] = (values[2:] - values[:-2]) * (0.5 * rate_hz)
    d[0] = (values[1] - values[0]) * rate_hz
    d[-1] = (values[-1] - values[-2]) * rate_hz
    return d


def derive_kinematics(x: np.ndarray, y: np.ndarray, yaw: np.ndarray, rate_hz: float) -> Kinematics:
    """Speed, longitudinal acceleration and yaw rate from a dense pose series.

    Central differences at interior frames, one-sided at the ends.  Speed is
    the velocity projected onto the body heading, so reversing is negative.
    """
    x, y, yaw = (np.asarray(v, dtype=float) for v in (x, y, yaw))
    if len(x) < 3:
        raise ValidationError("kinematics: need at least 3 frames")
    vx = _central_diff(x, rate_hz)
    vy = _central_diff(y, rate_hz)
    speed = vx * np.cos(yaw) + vy * np.sin(yaw)
    accel = _central_diff(speed, rate_hz)
    yaw_rate = _central_diff(np.unwrap(yaw), rate_hz)
    return Kinematics(speed=speed, accel=accel, yaw_rate=yaw_rate)


def _short_track_kinematics(x, y, yaw, rate_hz: float) -> Kinematics:
    # 1- and 2-frame tracks: too short for central differences
    k = len(x)
    if k == 1:
        zero = np.zeros(1)
        return Kinematics(zero, zero.copy(), zero.copy())
    vx, vy = (x[1] - x[0]) * rate_hz, (y[1] - y[0]) * rate_hz
    speed = vx * np.cos(yaw) + vy * np.sin(yaw)
    accel = np.full(k, (speed[1] - speed[0]) * rate_hz)
    yaw_u = np.unwrap(yaw)
    yaw_rate = np.full(k, (yaw_u[1] - yaw_u[0]) * rate_hz)
    return Kinematics(speed, accel, yaw_rate)


# ---------------------------------------------------------------------------
# Per-frame tag rules
# ---------------------------------------------------------------------------

def tag_longitude(frame: KinematicsFrame, cfg: TaggerConfig) -> LongitudeTag:
    if abs(frame.speed) < cfg.stand_speed:
        return LongitudeTag.STANDING_STILL
    if frame.speed < -cfg.stand_speed:
        return LongitudeTag.REVERSING
    if frame.accel > cfg.accel_thresh:
        return LongitudeTag.ACCELERATING
    if frame.accel < cfg.decel_thresh:
        return LongitudeTag.DECELERATING
    return LongitudeTag.CRUISING


def tag_latitude(yaw_unwrapped: np.ndarray, t: int, rate_hz: float, cfg: TaggerConfig) -> LatitudeTag:
    """Accumulated turn over the lookahead window; left is positive yaw."""
    w = int(round(cfg.turn_window * rate_hz))
    t2 = min(t + w, len(yaw_unwrapped) - 1)
    delta = float(yaw_unwrapped[t2] - yaw_unwrapped[t])
    if delta > cfg.turn_rad:
        return LatitudeTag.TURNING_LEFT
    if delta > cfg.veer_rad:
        return LatitudeTag.VEERING_LEFT
    if delta < -cfg.turn_rad:
        return LatitudeTag.TURNING_RIGHT
    if delta < -cfg.veer_rad:
        return LatitudeTag.VEERING_RIGHT
    return LatitudeTag.FACING_FORWARD


_HEADING_SECTOR = math.pi / 4


def tag_heading(ego_yaw: float, obj_yaw: float) -> HeadingTag:
    delta = math.remainder(obj_yaw - ego_yaw, 2.0 * math.pi)
    if abs(delta) <= _HEADING_SECTOR:
        return HeadingTag.SAME
    if abs(delta) >= 3.0 * _HEADING_SECTOR:
        return HeadingTag.OPPOSITE
    return HeadingTag.LEFT if delta > 0 else HeadingTag.RIGHT


_POSITION_ORDER = (
    PositionTag.FRONT,
    PositionTag.FRONT_LEFT,
    PositionTag.LEFT,
    PositionTag.BACK_LEFT,
    PositionTag.BACK,
    PositionTag.BACK_RIGHT,
    PositionTag.RIGHT,
    PositionTag.FRONT_RIGHT,
)


def tag_position(ego_x: float, ego_y: float, ego_yaw: float, obj_x: float, obj_y: float) -> PositionTag:
    """Eight 45-degree sectors in the ego body frame, FRONT centered on +x."""
    dx, dy = obj_x - ego_x, obj_y - ego_y
    if dx == 0.0 and dy == 0.0:
        return PositionTag.FRONT
    c, s = math.cos(ego_yaw), math.sin(ego_yaw)
    bearing = math.atan2(-s * dx + c * dy, c * dx + s * dy)
    sector = int(math.floor((bearing + _HEADING_SECTOR / 2) / _HEADING_SECTOR)) % 8
    return _POSITION_ORDER[sector]


def tag_distance(ego_box: OrientedBox, obj_box: OrientedBox, cfg: TaggerConfig) -> DistanceTag:
    if obb_intersects(ego_box.expanded(cfg.dist_expand), obj_box.expanded(cfg.dist_expand)):
        return DistanceTag.VERY_CLOSE
    d = box_distance(ego_box, obj_box)
    if d < cfg.dist_close:
        return DistanceTag.CLOSE
    if d <= cfg.dist_far:
        return DistanceTag.MEDIUM
    return DistanceTag.FAR


# ---------------------------------------------------------------------------
# Prediction and interaction risk
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AgentState:
    """Snapshot used for collision prediction."""

    x: float
    y: float
    yaw: float
    speed: float
    yaw_rate: float
    length: float
    width: float


def ctrv_predict(
    x: float, y: float, yaw: float, speed: float, yaw_rate: float, horizon: float, step: float
) -> np.ndarray:
    """Constant turn rate and velocity rollout, closed form.

    Returns poses [K, 3] at times 0, step, ..., horizon.  Uses the chord form
    x(t) = x0 + v t sinc(w t / 2) cos(yaw + w t / 2), which equals the usual
    v/w expression for any w but stays exact through w -> 0, where it reduces
    to the straight constant-velocity limit.
    """
    n = int(round(horizon / step))
    t = np.arange(n + 1) * step
    half = 0.5 * yaw_rate * t
    chord = speed * t * np.sinc(half / np.pi)
    return np.stack(
        [x + chord * np.cos(yaw + half), y + chord * np.sin(yaw + half), yaw + yaw_rate * t],
        axis=1,
    )


def tag_collision(ego: AgentState, obj: AgentState, cfg: TaggerConfig) -> CollisionTag:
    """TTC from synchronized CTRV rollouts of both agents, banded into risk."""
    pe = ctrv_predict(ego.x, ego.y, ego.yaw, ego.speed, ego.yaw_rate, cfg.ctrv_horizon, cfg.ctrv_step)
    po = ctrv_predict(obj.x, obj.y, obj.yaw, obj.speed, obj.yaw_rate, cfg.ctrv_horizon, cfg.ctrv_step)
    hits = _paired_intersects(
        box_corners(pe[:, 0], pe[:, 1], pe[:, 2], ego.length, ego.width),
        box_axes(pe[:, 2]),
        box_corners(po[:, 0], po[:, 1], po[:, 2], obj.length, obj.width),
        box_axes(po[:, 2]),
    )
    if not hits.any():
        return CollisionTag.NO
    ttc = float(np.argmax(hits)) * cfg.ctrv_step
    if ttc < cfg.ttc_high:
        return CollisionTag.HIGH
    if ttc <= cfg.ttc_low:
        return CollisionTag.LOW
    return CollisionTag.NO


def tag_traj_overlap(
    ego_boxes: list[OrientedBox],
    obj_boxes: list[OrientedBox | None],
    rate_hz: float,
    cfg: TaggerConfig,
) -> TrajOverlapTag:
    """Overlap risk of the aggregated future box envelopes of two agents.

    Both series start at the current frame and run at the log rate over the
    low-risk window (truncated at log end); None marks frames where the
    object is unobserved and contributes no box.  The envelopes of a window
    intersect iff some ego box intersects some object box in that window.
    """
    ne = len(ego_boxes)
    obs = [(i, b) for i, b in enumerate(obj_boxes) if b is not None]
    if ne == 0 or not obs:
        return TrajOverlapTag.NO
    ce, ae = _corner_axis_arrays(ego_boxes)
    co, ao = _corner_axis_arrays([b for _, b in obs])
    offsets = np.array([i for i, _ in obs])
    n_high = int(round(cfg.overlap_high_dt * rate_hz)) + 1
    ko = int(np.searchsorted(offsets, n_high))
    ke = min(n_high, ne)
    if _any_pair_intersects(ce[:ke], ae[:ke], co[:ko], ao[:ko]):
        return TrajOverlapTag.HIGH
    if _any_pair_intersects(ce, ae, co, ao):
        return TrajOverlapTag.LOW
    return TrajOverlapTag.NO


def _corner_axis_arrays(boxes: list[OrientedBox]) -> tuple[np.ndarray, np.ndarray]:
    cx = np.array([b.cx for b in boxes])
    cy = np.array([b.cy for b in boxes])
    yaw = np.array([b.yaw for b in boxes])
    length = np.array([b.length for b in boxes])
    width = np.array([b.width for b in boxes])
    return box_corners(cx, cy, yaw, length, width), box_axes(yaw)


# ---------------------------------------------------------------------------
# Whole-log tagging
# ---------------------------------------------------------------------------

def _track_kinematics(track: ObjectTrack, rate_hz: float) -> Kinematics:
    if track.n_obs >= 3:
        return derive_kinematics(track.x, track.y, track.yaw, rate_hz)
    return _short_track_kinematics(track.x, track.y, track.yaw, rate_hz)


def tag_log(log: TrajectoryLog, cfg: TaggerConfig | None = None) -> TagMatrices:
    """Compute all tag matrices for a preprocessed log.

    Motion matrices carry the ego vehicle in row 0.  Interaction tags are
    computed per observed (object, frame) cell; trajectory overlap uses the
    recorded future states, truncated at log end, with unobserved future
    frames contributing no boxes.
    """
    cfg = cfg or TaggerConfig()
    t_total = log.n_frames
    rate = log.rate_hz
    track_ids = sorted(log.objects)

    ego_kin = derive_kinematics(log.ego_x, log.ego_y, log.ego_yaw, rate)
    ego_yaw_u = np.unwrap(log.ego_yaw)
    ego_corners = box_corners(log.ego_x, log.ego_y, log.ego_yaw, log.ego_length, log.ego_width)
    ego_axes = box_axes(log.ego_yaw)

    longitude = [[tag_longitude(ego_kin.at(t), cfg) for t in range(t_total)]]
    latitude = [[tag_latitude(ego_yaw_u, t, rate, cfg) for t in range(t_total)]]
    category_m, heading_m, position_m = [], [], []
    collision_m, distance_m, overlap_m = [], [], []

    n_high = int(round(cfg.overlap_high_dt * rate)) + 1
    n_low = int(round(cfg.overlap_low_dt * rate)) + 1

    for tid in track_ids:
        track = log.objects[tid]
        kin = _track_kinematics(track, rate)
        yaw_u = np.unwrap(track.yaw)
        obj_corners = box_corners(track.x, track.y, track.yaw, track.length, track.width)
        obj_axes = box_axes(track.yaw)

        cat_row: list = [None] * t_total
        lon_row: list = [None] * t_total
        lat_row: list = [None] * t_total
        head_row: list = [None] * t_total
        pos_row: list = [None] * t_total
        coll_row: list = [None] * t_total
        dist_row: list = [None] * t_total
        over_row: list = [None] * t_total

        for k in range(track.n_obs):
            t = int(track.indices[k])
            cat_row[t] = track.categories[k]
            lon_row[t] = tag_longitude(kin.at(k), cfg)
            lat_row[t] = tag_latitude(yaw_u, k, rate, cfg)
            head_row[t] = tag_heading(log.ego_yaw[t], track.yaw[k])
            pos_row[t] = tag_position(log.ego_x[t], log.ego_y[t], log.ego_yaw[t], track.x[k], track.y[k])

            ego_box = OrientedBox(log.ego_x[t], log.ego_y[t], log.ego_yaw[t], log.ego_length, log.ego_width)
            obj_box = OrientedBox(track.x[k], track.y[k], track.yaw[k], track.length[k], track.width[k])
            dist_row[t] = tag_distance(ego_box, obj_box, cfg)

            coll_row[t] = tag_collision(
                AgentState(log.ego_x[t], log.ego_y[t], log.ego_yaw[t],
                           ego_kin.speed[t], ego_kin.yaw_rate[t], log.ego_length, log.ego_width),
                AgentState(track.x[k], track.y[k], track.yaw[k],
                           kin.speed[k], kin.yaw_rate[k], track.length[k], track.width[k]),
                cfg,
            )

            # windows in frame space, truncated at log end
            lo_end = min(t + n_low, t_total)
            hi_end = min(t + n_high, t_total)
            a = int(np.searchsorted(track.indices, t))
            b = int(np.searchsorted(track.indices, lo_end))
            b_hi = int(np.searchsorted(track.indices, hi_end))
            if _any_pair_intersects(
                ego_corners[t:hi_end], ego_axes[t:hi_end], obj_corners[a:b_hi], obj_axes[a:b_hi]
            ):
                over_row[t] = TrajOverlapTag.HIGH
            elif _any_pair_intersects(
                ego_corners[t:lo_end], ego_axes[t:lo_end], obj_corners[a:b], obj_axes[a:b]
            ):
                over_row[t] = TrajOverlapTag.LOW
            else:
                over_row[t] = TrajOverlapTag.NO

        category_m.append(cat_row)
        longitude.append(lon_row)
        latitude.append(lat_row)
        heading_m.append(head_row)
        position_m.append(pos_row)
        collision_m.append(coll_row)
        distance_m.append(dist_row)
        overlap_m.append(over_row)

    tags = TagMatrices(
        log_id=log.log_id,
        rate_hz=rate,
        track_ids=track_ids,
        object_category=category_m,
        longitude=longitude,
        latitude=latitude,
        heading=heading_m,
        position=position_m,
        collision=collision_m,
        distance=distance_m,
        traj_overlap=overlap_m,
    )
    tags.validate()
    return tags
