"""Independent oracles and builders shared by the test suite.

Everything here deliberately reimplements behavior from first principles
(brute force, dense rasterization, fine-step integration, normal equations)
so the package code is checked against a second, unrelated path.
"""

from __future__ import annotations

import math

import numpy as np

from brakemine.model import ObjectTrack, TrajectoryLog
from brakemine.tagger import OrientedBox

# ---------------------------------------------------------------------------
# Savitzky-Golay oracle: per-window least-squares fit via normal equations
# ---------------------------------------------------------------------------

def savgol_oracle(series: np.ndarray, window: int, polyorder: int) -> np.ndarray:
    """Fit a polynomial per window and evaluate it at the sample position.

    Interior samples use the centered window; samples within half a window of
    an edge all use the one-sided window anchored at that edge.
    """
    y = np.asarray(series, dtype=float)
    n = len(y)
    half = window // 2
    out = np.empty(n)
    for i in range(n):
        if i < half:
            lo, pos = 0, i
        elif i >= n - half:
            lo, pos = n - window, i - (n - window)
        else:
            lo, pos = i - half, half
        xs = np.arange(window) - pos
        design = np.vander(xs, polyorder + 1, increasing=True)
        coef, *_ = np.linalg.lstsq(design, y[lo:lo + window], rcond=None)
        out[i] = coef[0]
    return out


# ---------------------------------------------------------------------------
# Angle interpolation oracle
# ---------------------------------------------------------------------------

def angle_midpoint_oracle(a: float, b: float) -> float:
    """Shortest-arc midpoint on the unit circle."""
    return math.atan2((math.sin(a) + math.sin(b)) / 2.0, (math.cos(a) + math.cos(b)) / 2.0)


# ---------------------------------------------------------------------------
# CTRV oracle: fine-step RK4 on the planar unicycle dynamics
# ---------------------------------------------------------------------------

def ctrv_rk4(x, y, yaw, speed, yaw_rate, horizon: float, step: float, dt: float = 1e-4):
    """Integrate x' = v cos(theta), y' = v sin(theta), theta' = w with RK4.

    Returns poses [K, 3] at times 0, step, ..., horizon.  All state arguments
    may be arrays (vectorized over states), in which case the result is
    [S, K, 3].
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float)).copy()
    yaw = np.atleast_1d(np.asarray(yaw, dtype=float)).copy()
    speed = np.atleast_1d(np.asarray(speed, dtype=float))
    yaw_rate = np.atleast_1d(np.asarray(yaw_rate, dtype=float))
    n_out = int(round(horizon / step))
    sub = int(round(step / dt))
    xs, ys = x.copy(), y.copy()
    th = yaw.copy()
    out = np.empty((len(x), n_out + 1, 3))
    out[:, 0] = np.stack([xs, ys, th], axis=1)
    for k in range(1, n_out + 1):
        for _ in range(sub):
            # theta evolves independently; RK4 on position given theta(t)
            k1x, k1y = speed * np.cos(th), speed * np.sin(th)
            th2 = th + 0.5 * dt * yaw_rate
            k2x, k2y = speed * np.cos(th2), speed * np.sin(th2)
            k3x, k3y = k2x, k2y
            th4 = th + dt * yaw_rate
            k4x, k4y = speed * np.cos(th4), speed * np.sin(th4)
            xs = xs + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
            ys = ys + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
            th = th4
        out[:, k] = np.stack([xs, ys, th], axis=1)
    return out


# ---------------------------------------------------------------------------
# Envelope rasterization oracle
# ---------------------------------------------------------------------------

GRID_STEP = 0.05


def rasterize_boxes(boxes: list[OrientedBox], x0: float, y0: float, nx: int, ny: int) -> np.ndarray:
    """Occupancy of grid points (cell centers) covered by any box."""
    mask = np.zeros((nx, ny), dtype=bool)
    for box in boxes:
        corners = box.corners()
        lo_x = max(0, int(math.floor((corners[:, 0].min() - x0) / GRID_STEP)) - 1)
        hi_x = min(nx, int(math.ceil((corners[:, 0].max() - x0) / GRID_STEP)) + 2)
        lo_y = max(0, int(math.floor((corners[:, 1].min() - y0) / GRID_STEP)) - 1)
        hi_y = min(ny, int(math.ceil((corners[:, 1].max() - y0) / GRID_STEP)) + 2)
        if lo_x >= hi_x or lo_y >= hi_y:
            continue
        gx = x0 + np.arange(lo_x, hi_x) * GRID_STEP
        gy = y0 + np.arange(lo_y, hi_y) * GRID_STEP
        px, py = np.meshgrid(gx, gy, indexing="ij")
        dx, dy = px - box.cx, py - box.cy
        c, s = math.cos(box.yaw), math.sin(box.yaw)
        u = c * dx + s * dy
        v = -s * dx + c * dy
        inside = (np.abs(u) <= box.length / 2.0) & (np.abs(v) <= box.width / 2.0)
        mask[lo_x:hi_x, lo_y:hi_y] |= inside
    return mask


def envelopes_overlap_raster(boxes_a: list[OrientedBox], boxes_b: list[OrientedBox]) -> bool:
    """Dense-grid ground truth for aggregated-envelope intersection."""
    all_corners = np.concatenate([b.corners() for b in boxes_a + boxes_b])
    x0 = float(all_corners[:, 0].min()) - 2 * GRID_STEP
    y0 = float(all_corners[:, 1].min()) - 2 * GRID_STEP
    nx = int(math.ceil((all_corners[:, 0].max() - x0) / GRID_STEP)) + 3
    ny = int(math.ceil((all_corners[:, 1].max() - y0) / GRID_STEP)) + 3
    mask_a = rasterize_boxes(boxes_a, x0, y0, nx, ny)
    mask_b = rasterize_boxes(boxes_b, x0, y0, nx, ny)
    return bool((mask_a & mask_b).any())


def _interval(corners: np.ndarray, axis: np.ndarray) -> tuple[float, float]:
    dots = corners @ axis
    return float(dots.min()), float(dots.max())


def box_pair_penetration(a: OrientedBox, b: OrientedBox) -> float:
    """Penetration depth (minimum translation distance) of two boxes; <= 0
    if separated.  For convex polygons the MTD lies along an edge normal."""
    ca, cb = a.corners(), b.corners()
    depth = math.inf
    for axes in (a.axes(), b.axes()):
        for axis in axes:
            lo_a, hi_a = _interval(ca, axis)
            lo_b, hi_b = _interval(cb, axis)
            overlap = min(hi_a, hi_b) - max(lo_a, lo_b)
            depth = min(depth, overlap)
    return depth


def envelope_overlap_margin(boxes_a: list[OrientedBox], boxes_b: list[OrientedBox]) -> float:
    """Signed robustness of the envelope-intersection decision.

    Positive: the deepest-overlapping box pair's penetration depth.
    Negative: minus the smallest polygon distance over all pairs.
    """
    from brakemine.tagger import box_distance, obb_intersects

    best_pen = -math.inf
    min_dist = math.inf
    for a in boxes_a:
        for b in boxes_b:
            if obb_intersects(a, b):
                best_pen = max(best_pen, box_pair_penetration(a, b))
            elif best_pen == -math.inf:
                # circle prefilter keeps the exact distance calls rare
                r = 0.5 * math.hypot(a.length, a.width) + 0.5 * math.hypot(b.length, b.width)
                centre_gap = math.hypot(a.cx - b.cx, a.cy - b.cy) - r
                if centre_gap < min_dist:
                    min_dist = min(min_dist, box_distance(a, b))
    return best_pen if best_pen > -math.inf else -min_dist


# ---------------------------------------------------------------------------
# Random trajectory pairs for overlap testing
# ---------------------------------------------------------------------------

def random_box_series(rng: np.random.Generator, n_boxes: int = 31) -> list[OrientedBox]:
    """A kinematically plausible box series: random start, speed and curvature."""
    x = rng.uniform(-10.0, 10.0)
    y = rng.uniform(-10.0, 10.0)
    yaw = rng.uniform(-math.pi, math.pi)
    speed = rng.uniform(0.0, 15.0)
    curvature = rng.uniform(-0.1, 0.1)
    length = rng.uniform(1.0, 5.5)
    width = rng.uniform(0.5, min(2.2, length))
    boxes = []
    dt = 0.1
    for _ in range(n_boxes):
        boxes.append(OrientedBox(x, y, math.remainder(yaw, math.tau), length, width))
        yaw += curvature * speed * dt
        x += speed * math.cos(yaw) * dt
        y += speed * math.sin(yaw) * dt
    return boxes


# ---------------------------------------------------------------------------
# Log builders
# ---------------------------------------------------------------------------

def straight_log(log_id: str = "straight", n: int = 60, speed: float = 10.0,
                 rate: float = 10.0) -> TrajectoryLog:
    t = np.arange(n) / rate
    return TrajectoryLog(
        log_id=log_id,
        rate_hz=rate,
        timestamps=t,
        ego_x=speed * t,
        ego_y=np.zeros(n),
        ego_yaw=np.zeros(n),
        objects={},
    )


def make_track(track_id: str, indices, x, y, yaw=None, length=4.0, width=1.8,
               category: str = "vehicle") -> ObjectTrack:
    indices = np.asarray(indices)
    k = len(indices)
    return ObjectTrack(
        track_id=track_id,
        indices=indices,
        x=np.asarray(x, dtype=float),
        y=np.asarray(y, dtype=float),
        yaw=np.zeros(k) if yaw is None else np.asarray(yaw, dtype=float),
        length=np.full(k, float(length)),
        width=np.full(k, float(width)),
        categories=[category] * k,
    )


def random_log(rng: np.random.Generator, log_id: str = "rand", n_objects: int = 3,
               n_frames: int = 40, sparse: bool = True) -> TrajectoryLog:
    rate = 10.0
    t = np.arange(n_frames) / rate
    objects = {}
    for i in range(n_objects):
        first = int(rng.integers(0, max(1, n_frames - 4)))
        last = int(rng.integers(first, n_frames - 1))
        idx = np.arange(first, last + 1)
        if sparse and len(idx) > 3 and rng.random() < 0.7:
            keep = np.sort(rng.choice(len(idx), size=max(2, len(idx) // 2), replace=False))
            keep[0], keep[-1] = 0, len(idx) - 1
            idx = idx[np.unique(keep)]
        k = len(idx)
        length = float(rng.uniform(1.0, 5.0))
        objects[f"obj-{i}"] = ObjectTrack(
            track_id=f"obj-{i}",
            indices=idx,
            x=rng.normal(0.0, 20.0) + rng.normal(0.0, 0.5, k).cumsum(),
            y=rng.normal(0.0, 20.0) + rng.normal(0.0, 0.5, k).cumsum(),
            yaw=np.clip(rng.normal(0.0, 1.0, k), -math.pi + 1e-9, math.pi),
            length=np.full(k, length),
            width=np.full(k, float(rng.uniform(0.5, length))),
            categories=[str(rng.choice(["vehicle", "pedestrian", "cyclist"]))] * k,
        )
    return TrajectoryLog(
        log_id=log_id,
        rate_hz=rate,
        timestamps=t,
        ego_x=rng.normal(0.0, 1.0, n_frames).cumsum(),
        ego_y=rng.normal(0.0, 1.0, n_frames).cumsum(),
        ego_yaw=np.clip(rng.normal(0.0, 0.8, n_frames), -math.pi + 1e-9, math.pi),
        objects=objects,
    )
