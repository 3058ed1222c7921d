"""Mobility traces: snapshot storage, CSV ingestion and unit-disk adjacency.

CSV format (header required)::

    t,node,x,y
    0.000,0,12.50,310.04
    0.000,1,99.10,4.72
    0.600,0,12.90,309.65

Rows for one snapshot are contiguous and snapshot times strictly increase.
A node missing from a snapshot is treated as absent (no radio) for it.
Between snapshots the last position is held.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import NonMonotonicTime, OutOfBounds, ParseError, TimeOutOfRange

HEADER = ["t", "node", "x", "y"]


@dataclass
class MobilityTrace:
    times: np.ndarray  # (T,) seconds
    positions: np.ndarray  # (T, N, 2) metres, NaN where absent
    node_ids: tuple
    area: tuple
    snapshot_interval: float
    _adj_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        self.node_ids = tuple(int(i) for i in self.node_ids)
        if self.positions.shape != (len(self.times), len(self.node_ids), 2):
            raise ValueError(f"positions shape {self.positions.shape} does not match "
                             f"{len(self.times)} snapshots x {len(self.node_ids)} nodes")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise NonMonotonicTime("snapshot times must strictly increase")
        self._index = {nid: i for i, nid in enumerate(self.node_ids)}

    @property
    def n_snapshots(self) -> int:
        return len(self.times)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def end_time(self) -> float:
        """Time up to which the last snapshot is held."""
        return float(self.times[-1]) + self.snapshot_interval

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_adj_cache"] = {}
        return state

    def snapshot_index(self, t: float) -> int:
        if t < self.times[0] - 1e-9 or t > self.end_time + 1e-9:
            raise TimeOutOfRange(f"t={t} outside trace span [{self.times[0]}, {self.end_time}]")
        return max(0, bisect_right(self.times, t + 1e-9) - 1)

    def position(self, node: int, t: float) -> tuple[float, float]:
        p = self.positions[self.snapshot_index(t), self._index[node]]
        return float(p[0]), float(p[1])

    def adjacency(self, radius: float) -> list:
        """Per snapshot, a tuple with each node's neighbour indices (ascending)."""
        key = float(radius)
        if key not in self._adj_cache:
            self._adj_cache[key] = _adjacency(self.positions, key)
        return self._adj_cache[key]


def _adjacency(positions: np.ndarray, radius: float) -> list:
    n_snap, n, _ = positions.shape
    empty = tuple(() for _ in range(n))
    if radius <= 0 or n < 2:
        return [empty] * n_snap
    r2 = radius * radius
    out = []
    for k in range(n_snap):
        x = positions[k, :, 0]
        y = positions[k, :, 1]
        dx = x[:, None] - x[None, :]
        dy = y[:, None] - y[None, :]
        with np.errstate(invalid="ignore"):
            mask = dx * dx + dy * dy <= r2
        np.fill_diagonal(mask, False)
        rows, cols = np.nonzero(mask)
        counts = np.bincount(rows, minlength=n)
        splits = np.split(cols, np.cumsum(counts)[:-1])
        out.append(tuple(tuple(c.tolist()) for c in splits))
    return out


def in_range(a, b, radius: float) -> bool:
    """Unit-disk test with the same arithmetic as the adjacency matrix."""
    if radius <= 0:
        return False
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    return dx * dx + dy * dy <= radius * radius


def neighbors_at(trace: MobilityTrace, t: float, radius: float) -> set:
    """Unordered adjacent pairs ``(a, b)`` with ``a < b`` at time ``t``."""
    k = trace.snapshot_index(t)
    adj = trace.adjacency(radius)[k]
    ids = trace.node_ids
    return {tuple(sorted((ids[i], ids[j]))) for i, nbrs in enumerate(adj) for j in nbrs if i < j}


def load_trace(path, area: Optional[tuple] = None) -> MobilityTrace:
    snaps: list[tuple[float, dict]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1) from None
        if [h.strip().lower() for h in header] != HEADER:
            raise ParseError(f"expected header {','.join(HEADER)!r}, got {','.join(header)!r}", 1)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", line)
            try:
                t = float(row[0])
                node = int(row[1])
                x = float(row[2])
                y = float(row[3])
            except ValueError as exc:
                raise ParseError(str(exc), line) from None
            if not all(map(math.isfinite, (t, x, y))):
                raise ParseError("non-finite value", line)
            if x < 0 or y < 0 or (area is not None and (x > area[0] or y > area[1])):
                raise OutOfBounds(f"line {line}: node {node} at ({x}, {y}) outside area {area}")
            if not snaps or t != snaps[-1][0]:
                if snaps and t < snaps[-1][0]:
                    raise NonMonotonicTime(f"line {line}: t={t} after t={snaps[-1][0]}")
                snaps.append((t, {}))
            cur = snaps[-1][1]
            if node in cur:
                raise ParseError(f"node {node} repeated in snapshot t={t}", line)
            cur[node] = (x, y)
    if len(snaps) < 2:
        raise ParseError("need at least two snapshots to infer the interval")
    ids = sorted({n for _, d in snaps for n in d})
    col = {n: i for i, n in enumerate(ids)}
    pos = np.full((len(snaps), len(ids), 2), np.nan)
    for k, (_, d) in enumerate(snaps):
        for n, xy in d.items():
            pos[k, col[n]] = xy
    if area is None:
        area = (float(np.ceil(np.nanmax(pos[:, :, 0]))), float(np.ceil(np.nanmax(pos[:, :, 1]))))
    times = np.array([s[0] for s in snaps])
    interval = round(float(times[1] - times[0]), 9)
    return MobilityTrace(times, pos, tuple(ids), tuple(area), interval)


def write_trace(trace: MobilityTrace, path) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(HEADER) + "\n")
        for k, t in enumerate(trace.times):
            for i, nid in enumerate(trace.node_ids):
                x, y = trace.positions[k, i]
                if np.isnan(x):
                    continue
                fh.write(f"{t:.3f},{nid},{x:.2f},{y:.2f}\n")
