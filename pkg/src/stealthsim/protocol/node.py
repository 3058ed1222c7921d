"""Per-node state machine for community management and critical-event handling.

Handlers never touch the network. Each returns a list of actions for the
caller (the simulation engine or a test) to carry out:

* :class:`Message` - transmit (``dst is None`` means broadcast)
* :class:`Timer`   - call back at an absolute time
* :class:`Note`    - a protocol outcome worth logging (receipt, success, fault)
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

from ..errors import NoReceiver
from ..taxonomy import SkillTaxonomy, build_default_taxonomy
from ..trust import HEALTH, MAX_INTERESTS, TrustScore, interest_set, total_trust
from .messages import Message, MsgKind, tailor_payload


class Scenario(str, Enum):
    SENACK = "senack"
    SEACK = "seack"
    MEACK = "meack"

    @property
    def ack_required(self) -> bool:
        return self is not Scenario.SENACK


class NodeStatus(Enum):
    ACTIVE = "active"
    AWAITING_ACK = "awaiting_ack"
    DONE = "done"


class Timer(NamedTuple):
    kind: str  # "announce" | "ack_timeout" | "ack_drain"
    at: float
    ref: int = 0


class Note(NamedTuple):
    kind: str
    detail: dict


@dataclass(frozen=True)
class NodeProfile:
    id: int
    skill: str
    interests: frozenset

    def __post_init__(self):
        object.__setattr__(self, "interests", interest_set(self.interests))
        if not 1 <= len(self.interests) <= MAX_INTERESTS:
            raise ValueError(
                f"node {self.id}: needs 1..{MAX_INTERESTS} interests, got {len(self.interests)}")

    @property
    def health_interested(self) -> bool:
        return HEALTH in self.interests


@dataclass
class NeighborRecord:
    id: int
    skill: str
    interests: frozenset
    trust: TrustScore
    registered_at: float
    common: int


class HealthCommunity:
    """Registry of health-interested neighbours plus their membership periods."""

    def __init__(self):
        self.members: dict[int, NeighborRecord] = {}
        self.periods: dict[int, list[list]] = defaultdict(list)

    def __len__(self):
        return len(self.members)

    def __contains__(self, node_id):
        return node_id in self.members

    def register(self, rec: NeighborRecord, now: float) -> None:
        if rec.id not in self.members:
            self.periods[rec.id].append([now, None])
        self.members[rec.id] = rec

    def remove(self, node_id: int, now: float) -> bool:
        if self.members.pop(node_id, None) is None:
            return False
        self.periods[node_id][-1][1] = now
        return True

    def reset(self, now: float) -> None:
        for node_id in self.members:
            self.periods[node_id][-1][1] = now
        self.members.clear()

    def ids(self) -> list[int]:
        return sorted(self.members)

    def closed_periods(self, node_id: int) -> list[tuple[float, float]]:
        return [(a, b) for a, b in self.periods.get(node_id, []) if b is not None]


def _rank_key(rec: NeighborRecord):
    return (-rec.trust.total, -rec.common, rec.id)


def select_receiver(community: HealthCommunity) -> int:
    """Highest total trust; ties go to more common interests, then the lower id."""
    if not community.members:
        raise NoReceiver("health community is empty")
    return min(community.members.values(), key=_rank_key).id


def rank_members(community: HealthCommunity) -> list[NeighborRecord]:
    return sorted(community.members.values(), key=_rank_key)


class ProtocolNode:
    def __init__(
        self,
        profile: NodeProfile,
        tax: SkillTaxonomy | None = None,
        scenario: Scenario | str = Scenario.SENACK,
        announce_interval: float = 1.0,
        ack_timeout: float = 0.5,
        ack_batch_window: float = 0.02,
    ):
        self.tax = tax or build_default_taxonomy()
        self.profile = profile
        self.skill = self.tax.resolve(profile.skill)
        self.scenario = Scenario(scenario)
        self.announce_interval = announce_interval
        self.ack_timeout = ack_timeout
        self.ack_batch_window = ack_batch_window

        self.status = NodeStatus.ACTIVE
        self.round = 0
        self.community = HealthCommunity()
        self.priority = 1
        self.emergency_at: Optional[float] = None
        self.attempts = 0
        self.outstanding: Optional[tuple[int, int]] = None  # (alert ref, receiver)
        self.alert_refs: set[int] = set()
        self.received_alerts: list[tuple[float, int, int, int]] = []  # (t_r, sender, ref, priority)
        self._ack_queue: list[tuple[int, int, int, int]] = []  # (priority, arrival no, sender, ref)
        self._arrivals = 0

    @property
    def id(self) -> int:
        return self.profile.id

    @property
    def active(self) -> bool:
        return self.status is NodeStatus.ACTIVE

    # -- community management ------------------------------------------------

    def on_announce_timer(self, now: float) -> list:
        if not self.active:
            return []
        self.round += 1
        self.community.reset(now)
        return [
            Message(MsgKind.ANNOUNCE, self.id, None, now, ref=self.round),
            Timer("announce", now + self.announce_interval, self.round),
        ]

    def handle_announce(self, msg: Message, now: float) -> list:
        if not self.active or msg.src == self.id:
            return []
        return [Message(MsgKind.ANSWER, self.id, msg.src, now, ref=msg.ref,
                        skill=self.skill, interests=self.profile.interests)]

    def handle_answer(self, msg: Message, now: float) -> Optional[NeighborRecord]:
        """Register the answering neighbour if both sides are health-interested."""
        if not self.active or msg.ref != self.round or msg.src == self.id:
            return None
        own = self.profile.interests
        if HEALTH not in own or HEALTH not in msg.interests:
            return None
        common = len(own & msg.interests)
        if not common:
            return None
        trust = total_trust(own, msg.interests, msg.skill, self.tax)
        rec = NeighborRecord(msg.src, msg.skill, msg.interests, trust, now, common)
        self.community.register(rec, now)
        return rec

    def handle_stop_announce(self, msg: Message, now: float) -> bool:
        if not self.active:
            return False
        return self.community.remove(msg.src, now)

    # -- critical events -----------------------------------------------------

    def _alert(self, now: float, receiver: int) -> Message:
        self.attempts += 1
        ref = (self.id << 8) | (self.attempts & 0xFF)
        rec = self.community.members[receiver]
        self.outstanding = (ref, receiver)
        self.alert_refs.add(ref)
        return Message(MsgKind.ALERT, self.id, receiver, now, ref=ref,
                       payload=tailor_payload(rec.skill, self.tax, subject=self.id),
                       priority=self.priority)

    def trigger_emergency(self, now: float, priority: int = 1) -> list:
        if not self.active:
            return []
        if not 1 <= priority <= 4:
            raise ValueError(f"priority must be 1..4, got {priority}")
        self.priority = priority
        self.emergency_at = now
        actions: list = []
        try:
            receiver = select_receiver(self.community)
        except NoReceiver:
            self.status = NodeStatus.DONE
            actions.append(Note("fault", {"reason": "no_receiver"}))
        else:
            alert = self._alert(now, receiver)
            actions.append(alert)
            if self.scenario.ack_required:
                self.status = NodeStatus.AWAITING_ACK
                actions.append(Timer("ack_timeout", now + self.ack_timeout, alert.ref))
            else:
                self.status = NodeStatus.DONE
        actions.append(Message(MsgKind.STOP, self.id, None, now))
        return actions

    def handle_alert(self, msg: Message, now: float) -> list:
        if not self.active:
            return [Note("alert_ignored", {"ref": msg.ref})]
        self.received_alerts.append((now, msg.src, msg.ref, msg.priority))
        actions: list = [Note("alert_received", {"ref": msg.ref, "prio": msg.priority})]
        if self.scenario is Scenario.SEACK:
            actions.append(Message(MsgKind.ACK, self.id, msg.src, now, ref=msg.ref, priority=msg.priority))
        elif self.scenario is Scenario.MEACK:
            self._arrivals += 1
            if not self._ack_queue:
                actions.append(Timer("ack_drain", now + self.ack_batch_window))
            self._ack_queue.append((msg.priority, self._arrivals, msg.src, msg.ref))
        return actions

    def drain_acks(self, now: float) -> list:
        """Acknowledge queued alerts, most urgent (lowest number) first, FIFO within a priority."""
        queue, self._ack_queue = sorted(self._ack_queue), []
        return [Message(MsgKind.ACK, self.id, sender, now, ref=ref, priority=prio)
                for prio, _, sender, ref in queue]

    def handle_ack(self, msg: Message, now: float) -> list:
        if self.status is not NodeStatus.AWAITING_ACK or msg.ref not in self.alert_refs:
            return []
        self.status = NodeStatus.DONE
        self.outstanding = None
        return [Note("success", {"receiver": msg.src, "ref": msg.ref})]

    def handle_ack_timeout(self, now: float, ref: int) -> list:
        if self.status is not NodeStatus.AWAITING_ACK or self.outstanding is None:
            return []
        if ref != self.outstanding[0]:
            return []
        failed = self.outstanding[1]
        self.community.remove(failed, now)
        actions: list = [Note("timeout", {"ref": ref, "receiver": failed})]
        try:
            receiver = select_receiver(self.community)
        except NoReceiver:
            self.status = NodeStatus.DONE
            self.outstanding = None
            actions.append(Note("fault", {"reason": "exhausted"}))
            return actions
        alert = self._alert(now, receiver)
        actions.append(alert)
        actions.append(Timer("ack_timeout", now + self.ack_timeout, alert.ref))
        return actions
