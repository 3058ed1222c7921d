"""Random-waypoint mobility generator.

Each node starts at a uniform point, repeatedly picks a uniform waypoint and
a uniform speed, and walks there in a straight line. A node may be given a
rendezvous ``(t, (x, y))``: it is steered so that it is parked at the point
from ``t - lead`` (or earlier) until ``t + hold_after``, then resumes.
"""

from __future__ import annotations

import math
from typing import Mapping, Optional

import numpy as np

from ..errors import InvalidParams
from .trace import MobilityTrace

# leg: (t_start, x0, y0, t_end, x1, y1, speed)
Leg = tuple


def _check(n_nodes, area, speed_range, duration, snapshot_interval):
    if n_nodes <= 0:
        raise InvalidParams("n_nodes must be positive")
    vmin, vmax = speed_range
    if not 0 < vmin <= vmax:
        raise InvalidParams(f"need 0 < speed_min <= speed_max, got {speed_range}")
    if area[0] <= 0 or area[1] <= 0:
        raise InvalidParams(f"area must be positive, got {area}")
    if duration <= 0 or snapshot_interval <= 0:
        raise InvalidParams("duration and snapshot_interval must be positive")


def _waypoint(rng, area):
    return rng.uniform(0.0, area[0]), rng.uniform(0.0, area[1])


def random_waypoint_legs(
    rng: np.random.Generator,
    area,
    speed_range,
    duration: float,
    rendezvous: Optional[tuple] = None,
    lead: float = 10.0,
    hold_after: float = 2.0,
) -> list[Leg]:
    vmin, vmax = speed_range
    x, y = _waypoint(rng, area)
    if rendezvous is not None:
        t_r, (rx, ry) = rendezvous
        reach = vmax * max(t_r - lead, 0.0)
        d = math.hypot(rx - x, ry - y)
        if d > reach:
            # start close enough to make the rendezvous
            f = reach / d if d > 0 else 0.0
            x, y = rx + (x - rx) * f, ry + (y - ry) * f
    t = 0.0
    legs: list[Leg] = []
    pending = rendezvous
    while t < duration:
        wx, wy = _waypoint(rng, area)
        v = rng.uniform(vmin, vmax)
        dist = math.hypot(wx - x, wy - y)
        t_w = t + dist / v
        if pending is not None:
            t_r, (rx, ry) = pending
            arrive_by = t_r - lead
            if t_w + math.hypot(rx - wx, ry - wy) / vmax > arrive_by:
                d = math.hypot(rx - x, ry - y)
                slack = arrive_by - t
                v = vmin if d == 0 else max(vmin, d / slack if slack > 0 else math.inf)
                if v > vmax * (1 + 1e-9):
                    raise InvalidParams(f"rendezvous at t={t_r} unreachable")
                v = min(v, vmax)
                t_arr = t + d / v
                legs.append((t, x, y, t_arr, rx, ry, v))
                t_leave = max(t_arr, t_r + hold_after)
                legs.append((t_arr, rx, ry, t_leave, rx, ry, 0.0))
                t, x, y = t_leave, rx, ry
                pending = None
                continue
        legs.append((t, x, y, t_w, wx, wy, v))
        t, x, y = t_w, wx, wy
    return legs


def _sample_legs(legs: list[Leg], times: np.ndarray) -> np.ndarray:
    starts = np.array([leg[0] for leg in legs])
    idx = np.clip(np.searchsorted(starts, times, side="right") - 1, 0, len(legs) - 1)
    arr = np.array(legs)
    t0, x0, y0, t1, x1, y1 = (arr[idx, c] for c in range(6))
    span = t1 - t0
    frac = np.where(span > 0, (times - t0) / np.where(span > 0, span, 1.0), 1.0)
    frac = np.clip(frac, 0.0, 1.0)
    return np.stack([x0 + (x1 - x0) * frac, y0 + (y1 - y0) * frac], axis=-1)


def generate_synthetic(
    n_nodes: int,
    area=(400.0, 430.0),
    speed_range=(0.5, 2.0),
    duration: float = 900.0,
    snapshot_interval: float = 0.6,
    seed: int = 0,
    rendezvous: Optional[Mapping[int, tuple]] = None,
    lead: float = 10.0,
) -> MobilityTrace:
    """Seeded random-waypoint trace with node ids ``0..n_nodes-1``.

    Positions are rounded to centimetres and times to milliseconds, the
    precision of the CSV format, so a written-then-loaded trace is identical.
    """
    _check(n_nodes, area, speed_range, duration, snapshot_interval)
    rendezvous = dict(rendezvous or {})
    for nid, (t_r, (rx, ry)) in rendezvous.items():
        if not 0 <= nid < n_nodes:
            raise InvalidParams(f"rendezvous node {nid} out of range")
        if not (0 <= rx <= area[0] and 0 <= ry <= area[1]) or not 0 < t_r < duration:
            raise InvalidParams(f"rendezvous for node {nid} outside area or run")
    n_snap = int(math.ceil(duration / snapshot_interval - 1e-9))  # last snapshot is held to the end
    times = np.round(np.arange(n_snap) * snapshot_interval, 3)
    rng = np.random.default_rng(seed)
    pos = np.empty((n_snap, n_nodes, 2))
    for nid in range(n_nodes):
        legs = random_waypoint_legs(rng, area, speed_range, duration, rendezvous.get(nid), lead=lead)
        pos[:, nid, :] = _sample_legs(legs, times)
    pos = np.round(pos, 2)
    return MobilityTrace(times, pos, tuple(range(n_nodes)), (float(area[0]), float(area[1])),
                         float(snapshot_interval))
