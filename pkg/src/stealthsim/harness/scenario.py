"""Scenario configuration (SENACK / SEACK / MEACK) and social-aspect assignment."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, fields, replace
from typing import Mapping, Optional

from ..errors import ConfigError, ConflictingFixedProfile, InvalidOverride, UnknownScenario
from ..protocol.node import NodeProfile, Scenario
from ..simkit.radio import RadioModel
from ..trust import DEFAULT_INTERESTS, HEALTH, MAX_INTERESTS

DEFAULT_SKILL_COUNTS = {"doctor": 10, "nurse": 15, "caregiver": 20, "other": 25}
DEFAULT_INTEREST_COUNTS = {"health": 20, "music": 30, "tourism": 45, "movies": 60, "books": 15}
DEFAULT_N_NODES = 100

SKILL_MODES = ("exact", "weights")
LOG_LEVELS = ("compact", "full")


@dataclass(frozen=True)
class SocialDistribution:
    skill_counts: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_SKILL_COUNTS))
    interest_counts: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_INTEREST_COUNTS))
    reference_n: int = DEFAULT_N_NODES

    def __post_init__(self):
        for label, c in {**self.skill_counts, **self.interest_counts}.items():
            if c < 0:
                raise ConfigError(f"negative count for {label!r}")

    def scaled(self, n: int) -> "SocialDistribution":
        """Counts rescaled to ``n`` nodes by largest remainder (identity at the reference size)."""
        if n == self.reference_n:
            return self
        return SocialDistribution(_scale(self.skill_counts, n / self.reference_n),
                                  _scale(self.interest_counts, n / self.reference_n), n)


def _scale(counts: Mapping[str, int], f: float) -> dict:
    raw = {k: v * f for k, v in counts.items()}
    out = {k: int(v) for k, v in raw.items()}
    short = round(sum(raw.values())) - sum(out.values())
    by_rem = sorted(counts, key=lambda k: (-(raw[k] - out[k]), list(counts).index(k)))
    for k in by_rem[:max(0, short)]:
        out[k] += 1
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "senack"
    n_nodes: int = 100
    duration: float = 900.0  # s
    emergency_time: float = 300.0  # s
    focal_nodes: tuple = (37, 52, 70)
    receiver: Optional[int] = None  # MEACK designated receiver
    ack_required: bool = False
    priorities: Optional[Mapping[int, int]] = None
    announce_interval: float = 1.0  # s
    ack_timeout: float = 500.0  # ms
    ack_batch_window: float = 20.0  # ms
    radio: RadioModel = field(default_factory=RadioModel)
    repetitions: int = 35
    seed: int = 0
    warmup: float = 25.0  # s
    snapshot_interval: float = 0.6  # s
    area: tuple = (400.0, 430.0)  # m
    speed_range: tuple = (0.5, 2.0)  # m/s
    skill_assignment: str = "exact"
    log_level: str = "compact"
    distribution: SocialDistribution = field(default_factory=SocialDistribution)

    def __post_init__(self):
        # canonical types, so equal configs render identically in logs and manifests
        for name in ("duration", "emergency_time", "announce_interval", "ack_timeout", "ack_batch_window",
                     "warmup", "snapshot_interval"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "area", tuple(float(x) for x in self.area))
        object.__setattr__(self, "speed_range", tuple(float(x) for x in self.speed_range))
        object.__setattr__(self, "focal_nodes", tuple(int(x) for x in self.focal_nodes))

    @property
    def scenario(self) -> Scenario:
        return Scenario(self.name)

    def validate(self) -> "ScenarioConfig":
        try:
            scen = Scenario(self.name)
        except ValueError:
            raise UnknownScenario(f"unknown scenario {self.name!r}") from None
        if self.n_nodes <= 0:
            raise ConfigError("n_nodes must be positive")
        if scen is Scenario.MEACK and not self.ack_required:
            raise ConfigError("meack requires ack_required")
        if scen is Scenario.SENACK and self.ack_required:
            raise ConfigError("senack has no acknowledgements")
        if (self.priorities is not None) != (scen is Scenario.MEACK):
            raise ConfigError("priorities are defined for meack only")
        ids = list(self.focal_nodes) + ([self.receiver] if self.receiver is not None else [])
        if len(set(ids)) != len(ids):
            raise ConfigError("focal nodes and receiver must be distinct")
        for nid in ids:
            if not 0 <= nid < self.n_nodes:
                raise ConfigError(f"node id {nid} not below n_nodes={self.n_nodes}")
        if self.priorities is not None:
            if set(self.priorities) != set(self.focal_nodes):
                raise ConfigError("priorities must cover exactly the focal nodes")
            if any(not 1 <= p <= 4 for p in self.priorities.values()):
                raise ConfigError("priorities must be in 1..4")
        if self.duration <= 0 or self.announce_interval <= 0 or self.snapshot_interval <= 0:
            raise ConfigError("duration, announce_interval and snapshot_interval must be positive")
        if self.ack_timeout <= 0 or self.ack_batch_window < 0:
            raise ConfigError("ack_timeout must be positive and ack_batch_window non-negative")
        if self.ack_batch_window >= self.ack_timeout:
            raise ConfigError("ack_batch_window must be shorter than ack_timeout")
        if self.repetitions <= 0:
            raise ConfigError("repetitions must be positive")
        if self.skill_assignment not in SKILL_MODES:
            raise ConfigError(f"skill_assignment must be one of {SKILL_MODES}")
        if self.log_level not in LOG_LEVELS:
            raise ConfigError(f"log_level must be one of {LOG_LEVELS}")
        lo, hi = self.speed_range
        if not 0 < lo <= hi:
            raise ConfigError("speed_range must satisfy 0 < min <= max")
        return self

    @property
    def tracked_nodes(self) -> tuple:
        extra = (self.receiver,) if self.receiver is not None else ()
        return tuple(self.focal_nodes) + extra

    def priority_of(self, node: int) -> int:
        return (self.priorities or {}).get(node, 1)

    def fixed_profiles(self) -> dict:
        """Focal nodes: skill ``other`` with every interest; the MEACK receiver is a doctor."""
        fixed = {nid: NodeProfile(nid, "other", frozenset(DEFAULT_INTERESTS)) for nid in self.focal_nodes}
        if self.receiver is not None:
            fixed[self.receiver] = NodeProfile(self.receiver, "doctor", frozenset(DEFAULT_INTERESTS))
        return fixed

    def social_distribution(self) -> SocialDistribution:
        return self.distribution.scaled(self.n_nodes)


_DEFAULTS = {
    "senack": dict(name="senack", emergency_time=300.0, focal_nodes=(37, 52, 70), ack_required=False),
    "seack": dict(name="seack", emergency_time=300.0, focal_nodes=(37, 52, 70), ack_required=True),
    "meack": dict(name="meack", emergency_time=485.0, focal_nodes=(52, 69, 70), receiver=63,
                  ack_required=True, priorities={52: 2, 69: 1, 70: 3}),
}

_FIELD_NAMES = {f.name for f in fields(ScenarioConfig)}
_RADIO_KEYS = {"radius", "base_latency", "bitrate", "jitter_bound"}


def build_scenario(name: str, overrides: Optional[Mapping] = None) -> ScenarioConfig:
    """Reference defaults for ``name`` with ``overrides`` applied on top.

    Radio parameters may be overridden directly (``radius=30``).
    """
    key = str(name).strip().lower()
    if key not in _DEFAULTS:
        raise UnknownScenario(f"unknown scenario {name!r}; expected one of {sorted(_DEFAULTS)}")
    cfg = ScenarioConfig(**_DEFAULTS[key])
    overrides = dict(overrides or {})
    radio_over = {k: overrides.pop(k) for k in list(overrides) if k in _RADIO_KEYS}
    unknown = set(overrides) - _FIELD_NAMES
    if unknown or "name" in overrides:
        raise InvalidOverride(f"unknown override(s): {sorted(unknown | ({'name'} & set(overrides)))}")
    try:
        if radio_over:
            overrides["radio"] = replace(overrides.get("radio", cfg.radio), **radio_over)
        if "focal_nodes" in overrides:
            overrides["focal_nodes"] = tuple(overrides["focal_nodes"])
        cfg = replace(cfg, **overrides)
        return cfg.validate()
    except (ConfigError, ValueError, TypeError) as exc:
        if isinstance(exc, InvalidOverride):
            raise
        raise InvalidOverride(str(exc)) from exc


# -- social aspects ------------------------------------------------------------


def _draw_skills(rng, free_ids, counts, mode):
    if mode == "weights":
        labels = [k for k, v in counts.items() if v > 0]
        weights = [counts[k] for k in labels]
        if not labels:
            return {nid: "other" for nid in free_ids}
        return {nid: rng.choices(labels, weights)[0] for nid in free_ids}
    pool = [lab for lab, c in counts.items() for _ in range(max(c, 0))]
    rng.shuffle(pool)
    pool = pool[:len(free_ids)]
    pool += ["other"] * (len(free_ids) - len(pool))
    rng.shuffle(pool)
    return dict(zip(free_ids, pool))


def _draw_interests(rng, free_ids, counts):
    sets = {nid: set() for nid in free_ids}
    for label in sorted(counts, key=lambda k: (-counts[k], k)):
        eligible = [nid for nid in free_ids if len(sets[nid]) < MAX_INTERESTS]
        k = min(max(counts[label], 0), len(eligible))
        for nid in rng.sample(eligible, k):
            sets[nid].add(label)
    # every node needs at least one interest: move a label from a node that has several
    for nid in free_ids:
        if sets[nid]:
            continue
        donors = [d for d in free_ids if len(sets[d]) > 1]
        if donors:
            d = rng.choice(donors)
            label = rng.choice(sorted(sets[d]))
            sets[d].discard(label)
            sets[nid].add(label)
        else:
            # infeasible targets: exceed them rather than leave a node without interests
            labels = sorted(counts) or list(DEFAULT_INTERESTS)
            sets[nid].add(rng.choice(labels))
    return sets


def assign_social_aspects(
    n: int,
    dist: Optional[SocialDistribution] = None,
    fixed: Optional[Mapping[int, NodeProfile]] = None,
    seed: int = 0,
    skill_assignment: str = "exact",
) -> list[NodeProfile]:
    """Profiles for nodes ``0..n-1``; fixed profiles are kept and count toward the targets."""
    dist = dist or SocialDistribution().scaled(n)
    fixed = dict(fixed or {})
    for nid, prof in fixed.items():
        if prof.id != nid or not 0 <= nid < n:
            raise ConflictingFixedProfile(f"fixed profile for {nid} is inconsistent (id {prof.id}, n={n})")
    if skill_assignment not in SKILL_MODES:
        raise ConfigError(f"skill_assignment must be one of {SKILL_MODES}")
    skill_left = dict(dist.skill_counts)
    interest_left = dict(dist.interest_counts)
    for prof in fixed.values():
        if skill_left.get(prof.skill, 0) > 0:
            skill_left[prof.skill] -= 1
        for i in prof.interests:
            if i in interest_left:
                interest_left[i] -= 1
    if interest_left.get(HEALTH, 0) < 0:
        raise ConflictingFixedProfile(
            f"fixed profiles hold health {dist.interest_counts.get(HEALTH)} times over the target")
    interest_left = {k: max(v, 0) for k, v in interest_left.items()}

    rng = random.Random(f"{seed}:social")
    free_ids = [nid for nid in range(n) if nid not in fixed]
    skills = _draw_skills(rng, free_ids, skill_left, skill_assignment)
    interests = _draw_interests(rng, free_ids, interest_left)
    out = []
    for nid in range(n):
        if nid in fixed:
            out.append(fixed[nid])
        else:
            out.append(NodeProfile(nid, skills[nid], frozenset(interests[nid])))
    return out
