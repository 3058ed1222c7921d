"""Evaluation metrics over per-repetition event logs.

All functions take a list of logs (one per repetition) and a focal node id.
Records before the log's ``warmup`` marker are ignored for the neighbourhood
and community metrics; emergencies are counted wherever they fall.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .errors import EmptyLogs, NoEmergencies, NoSuccesses
from .simkit.eventlog import EventLog

SKILL_CLASSES = ("doctor", "nurse", "caregiver", "other")


def _check(logs: Sequence[EventLog]) -> None:
    if not logs:
        raise EmptyLogs("no event logs given")


def warmup_us(log: EventLog) -> int:
    for r in log.records:
        if r.kind == "warmup":
            return r.t_us
    return 0


def _members(rec) -> tuple:
    raw = rec.detail.get("members", "")
    return tuple(int(x) for x in raw.split("|") if x)


def _community_ids(rec) -> tuple:
    raw = rec.detail.get("community", "")
    return tuple(int(part.split(":")[0]) for part in raw.split("|") if part)


# -- neighbourhood and community ---------------------------------------------


def avg_neighbors(logs: Sequence[EventLog], focal: int) -> float:
    """Mean radio-neighbourhood size over all post-warmup snapshots of all repetitions."""
    _check(logs)
    total = count = 0
    for log in logs:
        w = warmup_us(log)
        for r in log.records:
            if r.kind == "snap" and r.src == focal and r.t_us >= w:
                total += int(r.detail["nbrs"])
                count += 1
    return total / count if count else 0.0


class CommunityCount(NamedTuple):
    interval_avg: float  # fraction of post-warmup snapshot intervals with a non-empty community
    episode_count: float  # empty -> non-empty transitions per repetition


def _states(log: EventLog, focal: int) -> list:
    """(t_us, non-empty) community states of ``focal``: round closures plus the emergency view."""
    out = []
    for r in log.records:
        if r.src != focal:
            continue
        if r.kind == "round":
            out.append((r.t_us, 0, bool(_members(r))))
        elif r.kind == "emergency":
            out.append((r.t_us, 1, bool(_community_ids(r))))
    out.sort()
    return [(t, s) for t, _, s in out]


def avg_communities(logs: Sequence[EventLog], focal: int) -> CommunityCount:
    _check(logs)
    filled = intervals = 0
    episodes = 0
    for log in logs:
        w = warmup_us(log)
        states = _states(log, focal)
        snaps = sorted(r.t_us for r in log.records if r.kind == "snap" and r.src == focal and r.t_us >= w)
        i, cur = 0, False
        for t in snaps:
            while i < len(states) and states[i][0] <= t:
                cur = states[i][1]
                i += 1
            filled += cur
            intervals += 1
        prev = False  # the observation window opens with no community
        for t, s in states:
            if t < w:
                continue
            if s and not prev:
                episodes += 1
            prev = s
    return CommunityCount(filled / intervals if intervals else 0.0, episodes / len(logs))


# -- delivery --------------------------------------------------------------


def _successes(logs, focal) -> list:
    return [r for log in logs for r in log.records if r.kind == "success" and r.src == focal]


def _n_emergencies(logs, focal) -> int:
    return sum(1 for log in logs for r in log.records if r.kind == "emergency" and r.src == focal)


def rate(successes: int, dispatched: int) -> tuple[float, float]:
    """(HR, FR) in percent."""
    if dispatched <= 0:
        raise NoEmergencies("no emergencies dispatched")
    hr = 100.0 * successes / dispatched
    return hr, 100.0 - hr


def hit_rate(logs: Sequence[EventLog], focal: int) -> tuple[float, float]:
    _check(logs)
    n = _n_emergencies(logs, focal)
    if n == 0:
        raise NoEmergencies(f"node {focal} has no emergency in the given logs")
    return rate(len(_successes(logs, focal)), n)


def hit_rate_by_skill(logs: Sequence[EventLog], focal: int) -> dict:
    """Share of successes per receiver skill class, in percent."""
    _check(logs)
    succ = _successes(logs, focal)
    if not succ:
        raise NoSuccesses(f"node {focal} has no successful deliveries")
    counts = {k: 0 for k in SKILL_CLASSES}
    for r in succ:
        skill = r.detail["skill"]
        counts[skill] = counts.get(skill, 0) + 1
    return {k: 100.0 * c / len(succ) for k, c in counts.items()}


def access_times(logs: Sequence[EventLog], focal: int) -> list[float]:
    """Per-success ``t_r - t_d`` in ms (exact: both ends are integer microseconds)."""
    return [(int(r.detail["t_r_us"]) - int(r.detail["t_d_us"])) / 1000.0 for r in _successes(logs, focal)]


def avg_access_time(logs: Sequence[EventLog], focal: int) -> float:
    _check(logs)
    ts = access_times(logs, focal)
    if not ts:
        raise NoSuccesses(f"node {focal} has no successful deliveries")
    return math.fsum(ts) / len(ts)


# -- report ------------------------------------------------------------------


@dataclass
class NodeMetrics:
    node: int
    n_n: float
    n_c_interval_avg: float
    n_c_episode_count: float
    a_disp: int
    a_success: int
    hr: float
    fr: float
    hr_by_skill: dict = field(default_factory=dict)
    at_ms: Optional[float] = None
    at_std_ms: Optional[float] = None

    @classmethod
    def compute(cls, logs: Sequence[EventLog], focal: int) -> "NodeMetrics":
        nc = avg_communities(logs, focal)
        disp = _n_emergencies(logs, focal)
        succ = len(_successes(logs, focal))
        hr, fr = rate(succ, disp) if disp else (0.0, 100.0)
        by_skill = hit_rate_by_skill(logs, focal) if succ else {k: 0.0 for k in SKILL_CLASSES}
        ts = access_times(logs, focal)
        at = math.fsum(ts) / len(ts) if ts else None
        sd = statistics.stdev(ts) if len(ts) > 1 else (0.0 if ts else None)
        return cls(focal, avg_neighbors(logs, focal), nc.interval_avg, nc.episode_count,
                   disp, succ, hr, fr, by_skill, at, sd)

    def items(self) -> list[tuple[str, object]]:
        out = [
            ("n_n", self.n_n), ("n_c_interval_avg", self.n_c_interval_avg),
            ("n_c_episode_count", self.n_c_episode_count),
            ("a_disp", self.a_disp), ("a_success", self.a_success),
            ("hr", self.hr), ("fr", self.fr), ("at_ms", self.at_ms), ("at_std_ms", self.at_std_ms),
        ]
        out += [(f"hr_{k}", v) for k, v in self.hr_by_skill.items()]
        return out


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, int):
        return str(v)
    return f"{v:.4f}"


@dataclass
class MetricsReport:
    scenario: str
    n_r: int
    t_s: int
    nodes: dict  # focal id -> NodeMetrics

    @classmethod
    def from_logs(cls, logs: Sequence[EventLog], focal: Optional[Sequence[int]] = None) -> "MetricsReport":
        _check(logs)
        meta = logs[0].meta
        if focal is None:
            focal = [int(x) for x in str(meta.get("focal", "")).split("|") if x]
        duration = float(meta.get("duration", 0.0))
        warmup = float(meta.get("warmup", 0.0))
        dt = float(meta.get("snapshot_interval", 0.6))
        t_s = max(0, int(math.floor((duration - warmup) / dt + 1e-9)))
        nodes = {f: NodeMetrics.compute(logs, f) for f in focal}
        skills = list(SKILL_CLASSES)
        for m in nodes.values():
            skills += [k for k in m.hr_by_skill if k not in skills]
        for m in nodes.values():
            m.hr_by_skill = {k: m.hr_by_skill.get(k, 0.0) for k in skills}
        return cls(str(meta.get("scenario", "")), len(logs), t_s, nodes)

    def to_text(self) -> str:
        lines = [f"scenario={self.scenario}", f"n_r={self.n_r}", f"t_s={self.t_s}"]
        for nid, m in self.nodes.items():
            lines += [f"{nid}.{k}={_fmt(v)}" for k, v in m.items()]
        return "\n".join(lines) + "\n"

    def to_jsonl(self) -> str:
        lines = [json.dumps({"scenario": self.scenario, "n_r": self.n_r, "t_s": self.t_s})]
        for nid, m in self.nodes.items():
            lines.append(json.dumps({"node": nid, **{k: _fmt(v) for k, v in m.items()}}))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        if not self.nodes:
            return "node\n"
        keys = [k for k, _ in next(iter(self.nodes.values())).items()]
        lines = [",".join(["node", *keys])]
        for nid, m in self.nodes.items():
            vals = dict(m.items())
            lines.append(",".join([str(nid), *(_fmt(vals.get(k, 0.0)) for k in keys)]))
        return "\n".join(lines) + "\n"
