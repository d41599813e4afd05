"""Gap filling and denoising of pose series.

Object tracks are made dense by linear interpolation inside their observed
lifespan (never extrapolated outside it), then all x/y/yaw series are smoothed
with a Savitzky-Golay filter.  Series shorter than the filter window are
passed through untouched and reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import savgol_filter

from .model import ObjectTrack, TrajectoryLog, ValidationError, wrap_angle_array


@dataclass(frozen=True)
class SmoothingConfig:
    window: int = 11     # samples, odd; ~1.1 s at 10 Hz
    polyorder: int = 3

    def __post_init__(self):
        if self.window < 5 or self.window % 2 == 0:
            raise ValidationError("window: must be an odd integer >= 5")
        if not (2 <= self.polyorder < self.window):
            raise ValidationError("polyorder: must satisfy 2 <= polyorder < window")


@dataclass
class PreprocessReport:
    """Which series were too short to smooth ('ego' or a track id)."""

    unsmoothed: list[str] = field(default_factory=list)


def interpolate_track(track: ObjectTrack) -> ObjectTrack:
    """Fill frame gaps inside [first_obs, last_obs] by linear interpolation.

    x, y, length and width interpolate linearly; yaw interpolates along the
    shortest angular arc (stable across the +-pi seam).  The category of an
    interpolated frame is copied from the nearest observation.
    """
    if track.n_obs == 0:
        raise ValidationError(f"objects[{track.track_id}]: empty series")
    first, last = int(track.indices[0]), int(track.indices[-1])
    dense = np.arange(first, last + 1)
    if len(dense) == track.n_obs:
        return track
    obs = track.indices.astype(float)
    yaw_unwrapped = np.unwrap(track.yaw)
    nearest = np.clip(np.searchsorted(track.indices, dense), 0, track.n_obs - 1)
    prev = np.clip(nearest - 1, 0, track.n_obs - 1)
    # nearest observation, ties broken toward the earlier one
    take_prev = (track.indices[nearest] - dense) >= (dense - track.indices[prev])
    nearest_obs = np.where(take_prev, prev, nearest)
    return ObjectTrack(
        track_id=track.track_id,
        indices=dense,
        x=np.interp(dense, obs, track.x),
        y=np.interp(dense, obs, track.y),
        yaw=wrap_angle_array(np.interp(dense, obs, yaw_unwrapped)),
        length=np.interp(dense, obs, track.length),
        width=np.interp(dense, obs, track.width),
        categories=[track.categories[k] for k in nearest_obs],
    )


def savgol_smooth(series: np.ndarray, cfg: SmoothingConfig) -> np.ndarray:
    """Savitzky-Golay smoothing preserving series length.

    Interior samples take the value of the least-squares polynomial fit over
    the centered window; near each edge the polynomial is fitted on the
    one-sided window anchored at the series boundary and evaluated at the
    sample position, so nothing is mirrored or shortened.
    """
    series = np.asarray(series, dtype=float)
    if len(series) < cfg.window:
        raise ValidationError(f"series_too_short: length {len(series)} < window {cfg.window}")
    return savgol_filter(series, cfg.window, cfg.polyorder, mode="interp")


def smooth_angles(yaw: np.ndarray, cfg: SmoothingConfig) -> np.ndarray:
    """Smooth a wrapped angle series: unwrap, filter, re-wrap."""
    return wrap_angle_array(savgol_smooth(np.unwrap(np.asarray(yaw, dtype=float)), cfg))


def preprocess_log(
    log: TrajectoryLog, cfg: SmoothingConfig | None = None
) -> tuple[TrajectoryLog, PreprocessReport]:
    """Interpolate every object track, then smooth all x/y/yaw series."""
    cfg = cfg or SmoothingConfig()
    report = PreprocessReport()

    if log.n_frames >= cfg.window:
        ego_x = savgol_smooth(log.ego_x, cfg)
        ego_y = savgol_smooth(log.ego_y, cfg)
        ego_yaw = smooth_angles(log.ego_yaw, cfg)
    else:
        report.unsmoothed.append("ego")
        ego_x, ego_y, ego_yaw = log.ego_x, log.ego_y, log.ego_yaw

    objects: dict[str, ObjectTrack] = {}
    for tid in sorted(log.objects):
        track = interpolate_track(log.objects[tid])
        if track.n_obs >= cfg.window:
            track = ObjectTrack(
                track_id=track.track_id,
                indices=track.indices,
                x=savgol_smooth(track.x, cfg),
                y=savgol_smooth(track.y, cfg),
                yaw=smooth_angles(track.yaw, cfg),
                length=track.length,
                width=track.width,
                categories=track.categories,
            )
        else:
            report.unsmoothed.append(tid)
        objects[tid] = track

    out = TrajectoryLog(
        log_id=log.log_id,
        rate_hz=log.rate_hz,
        timestamps=log.timestamps,
        ego_x=ego_x,
        ego_y=ego_y,
        ego_yaw=ego_yaw,
        objects=objects,
        ego_length=log.ego_length,
        ego_width=log.ego_width,
    )
    return out, report
