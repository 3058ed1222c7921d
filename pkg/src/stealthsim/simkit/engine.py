"""Deterministic discrete-event engine.

Clock: integer microseconds. Events are ordered by the total key
``(time, kind rank, sender id, sequence number)`` with ranks::

    snapshot 0 < emergency 1 < delivery 2 < ack timeout 3 < ack drain 4 < announce timer 5

Announce/answer chatter is resolved without per-message heap entries. A
node's ability to answer depends only on whether its (pre-scheduled)
emergency has happened, so when X's announce timer fires the engine computes
every neighbour's answer immediately and files the answer deliveries in X's
inbox under the same total key they would have had in a global heap. Before
any event touches X, X's inbox is flushed up to that event's key. Jitter for
both legs of an exchange is drawn at announce time, neighbours in ascending
id order.
"""

from __future__ import annotations

import heapq
import math
import random
from bisect import bisect_right
from typing import Optional, Sequence

from ..errors import ConfigError
from ..harness.scenario import ScenarioConfig, assign_social_aspects
from ..protocol.messages import Message, MsgKind, WireCodec
from ..protocol.node import NodeProfile, NodeStatus, Note, ProtocolNode, Timer, rank_members
from ..taxonomy import SkillTaxonomy, build_default_taxonomy
from .eventlog import EventLog
from .trace import MobilityTrace

RANK_SNAPSHOT, RANK_EMERGENCY, RANK_DELIVERY, RANK_ACK_TIMEOUT, RANK_DRAIN, RANK_TIMER = range(6)

_SNAPSHOT, _EMERGENCY, _DELIVER, _ACK_TIMEOUT, _DRAIN, _TIMER = range(6)

_SEND_KIND = {MsgKind.ALERT: "alert", MsgKind.ACK: "ack", MsgKind.STOP: "stop"}


def to_us(seconds: float) -> int:
    return int(round(seconds * 1_000_000))


def ms_to_us(ms: float) -> int:
    return int(round(ms * 1000))


def _fmt_trust(x: float) -> str:
    return f"{x:.6f}"


class Simulation:
    def __init__(
        self,
        config: ScenarioConfig,
        trace: MobilityTrace,
        seed: int,
        profiles: Optional[Sequence[NodeProfile]] = None,
        tax: Optional[SkillTaxonomy] = None,
    ):
        config.validate()
        self.cfg = config
        self.trace = trace
        self.seed = seed
        self.tax = tax or build_default_taxonomy()
        n = config.n_nodes
        if tuple(trace.node_ids) != tuple(range(n)):
            raise ConfigError(f"trace must hold node ids 0..{n - 1}, got {len(trace.node_ids)} ids")
        if trace.end_time + 1e-9 < config.duration:
            raise ConfigError(f"trace ends at {trace.end_time} s, before duration {config.duration} s")
        if profiles is None:
            profiles = assign_social_aspects(n, config.social_distribution(), config.fixed_profiles(),
                                             seed, config.skill_assignment)
        if [p.id for p in profiles] != list(range(n)):
            raise ConfigError("profiles must cover node ids 0..n-1 in order")
        self.profiles = list(profiles)
        scen = config.scenario
        self.nodes = [
            ProtocolNode(p, self.tax, scen, config.announce_interval,
                         config.ack_timeout / 1000.0, config.ack_batch_window / 1000.0)
            for p in self.profiles
        ]
        self.health = [p.health_interested for p in self.profiles]

        self.radio = config.radio
        self.codec = WireCodec(self.tax)
        self.rng = random.Random(f"{seed}:radio")
        self.adj = trace.adjacency(self.radio.radius)
        self.adj_sets: dict[int, list] = {}
        self.snap_us = [to_us(t) for t in trace.times]
        self.duration_us = to_us(config.duration)
        self.interval_us = to_us(config.announce_interval)
        self.ack_timeout_us = to_us(config.ack_timeout / 1000.0)
        self.drain_us = to_us(config.ack_batch_window / 1000.0)

        emerg_us = to_us(config.emergency_time)
        self.emergency_us = {nid: emerg_us for nid in config.focal_nodes} if emerg_us < self.duration_us else {}
        # a node answers announces strictly before its emergency instant (emergencies rank first)
        self._emerg = [self.emergency_us.get(i, math.inf) for i in range(n)]
        self._fix_announce = self.radio.fixed_latency(self.codec.size(MsgKind.ANNOUNCE))
        self._fix_answer = self.radio.fixed_latency(self.codec.size(MsgKind.ANSWER))
        self.full = config.log_level == "full"
        self.tracked = set(config.tracked_nodes)

        self.heap: list = []
        self.seq = 0
        self.inbox: list[list] = [[] for _ in range(n)]
        self.alert_rx_us: dict[int, int] = {}
        self.log = EventLog(meta={
            "scenario": config.name, "seed": seed, "n_nodes": n, "duration": config.duration,
            "warmup": config.warmup, "snapshot_interval": trace.snapshot_interval,
            "emergency_time": config.emergency_time,
            "focal": "|".join(map(str, config.focal_nodes)),
            "receiver": "" if config.receiver is None else config.receiver,
            "log_level": config.log_level,
        })

    # -- helpers -------------------------------------------------------------

    def _push(self, t_us, rank, src, kind, payload=None):
        self.seq += 1
        heapq.heappush(self.heap, (t_us, rank, src, self.seq, kind, payload))

    def _snap(self, t_us: int) -> int:
        return bisect_right(self.snap_us, t_us) - 1

    def _nbrs(self, node: int, t_us: int) -> tuple:
        k = self._snap(t_us)
        return self.adj[k][node] if k >= 0 else ()

    def _linked(self, a: int, b: int, t_us: int) -> bool:
        k = self._snap(t_us)
        if k < 0:
            return False
        sets = self.adj_sets.get(k)
        if sets is None:
            sets = self.adj_sets[k] = [frozenset(x) for x in self.adj[k]]
        return b in sets[a]

    def _latency_us(self, kind: MsgKind, u: float) -> int:
        return ms_to_us(self.radio.latency(self.codec.size(kind), u))

    def _flush(self, node: int, key: tuple) -> None:
        box = self.inbox[node]
        if not box:
            return
        box.sort(key=lambda e: e[:4])
        x = self.nodes[node]
        done = 0
        for entry in box:
            if entry[:4] >= key:
                break
            done += 1
            t_us, msg = entry[0], entry[4]
            rec = x.handle_answer(msg, t_us / 1e6)
            if rec is not None and self.full:
                self.log.add(t_us, "reg", node, rec.id, trust=_fmt_trust(rec.trust.total), common=rec.common)
        del box[:done]

    def _members(self, node: int) -> str:
        return "|".join(map(str, self.nodes[node].community.ids()))

    # -- sending -------------------------------------------------------------

    def _announce(self, msg: Message, t_us: int) -> None:
        x = msg.src
        full = self.full
        if full:
            self.log.add(t_us, "announce_send", x, -1, round=msg.ref)
        nbrs = self._nbrs(x, t_us)
        if not nbrs:
            return
        rand = self.rng.random
        keep = self.health[x]
        if not (keep or full):
            # nothing observable; still consume the draws so the stream does not depend on log level
            for _ in range(2 * len(nbrs)):
                rand()
            return
        k0 = self._snap(t_us)
        fix_a, fix_b, jit = self._fix_announce, self._fix_answer, self.radio.jitter_bound
        emerg, health = self._emerg, self.health
        for y in nbrs:
            u1 = rand()
            u2 = rand()
            if not (full or health[y]):
                continue
            t1 = t_us + ms_to_us(fix_a + u1 * jit)
            if t1 >= emerg[y]:
                if full:
                    self.log.add(t1, "announce_ignored", x, y, round=msg.ref)
                continue
            if full:
                self.log.add(t1, "announce_recv", x, y, round=msg.ref)
            if self._snap(t1) != k0 and not self._linked(y, x, t1):
                if full:
                    self.log.add(t1, "answer_drop", y, x, round=msg.ref)
                continue
            t2 = t1 + ms_to_us(fix_b + u2 * jit)
            self.seq += 1
            if full:
                self.log.add(t1, "answer_send", y, x, round=msg.ref)
                self.log.add(t2, "answer_recv", y, x, round=msg.ref)
            if keep and health[y]:
                # answers from non-health nodes cannot change X's registry
                (answer,) = self.nodes[y].handle_announce(msg, t1 / 1e6)
                self.inbox[x].append((t2, RANK_DELIVERY, y, self.seq, answer))

    def _unicast(self, msg: Message, t_us: int, **detail) -> None:
        name = _SEND_KIND[msg.kind]
        if not self._linked(msg.src, msg.dst, t_us):
            self.log.add(t_us, f"{name}_drop", msg.src, msg.dst, ref=msg.ref, reason="out_of_range", **detail)
            return
        self.log.add(t_us, f"{name}_send", msg.src, msg.dst, ref=msg.ref, **detail)
        arrive = t_us + self._latency_us(msg.kind, self.rng.random())
        self._push(arrive, RANK_DELIVERY, msg.src, _DELIVER, msg)

    def _broadcast(self, msg: Message, t_us: int) -> None:
        name = _SEND_KIND[msg.kind]
        self.log.add(t_us, f"{name}_send", msg.src, -1)
        for y in self._nbrs(msg.src, t_us):
            arrive = t_us + self._latency_us(msg.kind, self.rng.random())
            self._push(arrive, RANK_DELIVERY, msg.src, _DELIVER, msg.__class__(
                msg.kind, msg.src, y, msg.sent_at, msg.ref))

    def _alert_detail(self, msg: Message) -> dict:
        return {
            "tier": msg.payload.tier.label, "prio": msg.priority,
            "skill": self.profiles[msg.dst].skill, "attempt": msg.ref & 0xFF,
        }

    def _apply(self, node: int, actions: list, t_us: int) -> None:
        for act in actions:
            if isinstance(act, Message):
                if act.kind == MsgKind.ANNOUNCE:
                    self._announce(act, t_us)
                elif act.kind == MsgKind.ALERT:
                    self._unicast(act, t_us, **self._alert_detail(act))
                elif act.kind == MsgKind.STOP:
                    self._broadcast(act, t_us)
                elif act.kind == MsgKind.ACK:
                    self._unicast(act, t_us, prio=act.priority)
            elif isinstance(act, Timer):
                if act.kind == "announce":
                    self._push(t_us + self.interval_us, RANK_TIMER, node, _TIMER)
                elif act.kind == "ack_timeout":
                    self._push(t_us + self.ack_timeout_us, RANK_ACK_TIMEOUT, node, _ACK_TIMEOUT, act.ref)
                elif act.kind == "ack_drain":
                    self._push(t_us + self.drain_us, RANK_DRAIN, node, _DRAIN)
            elif isinstance(act, Note):
                self._note(node, act, t_us)

    def _note(self, node: int, note: Note, t_us: int) -> None:
        d = note.detail
        if note.kind == "fault":
            self.log.add(t_us, "fault", node, -1, reason=d["reason"])
        elif note.kind == "timeout":
            self.log.add(t_us, "timeout", node, d["receiver"], ref=d["ref"])
        elif note.kind == "success":
            self._success(node, d["receiver"], d["ref"], t_us)

    def _success(self, sender: int, receiver: int, ref: int, t_us: int) -> None:
        t_d = to_us(self.nodes[sender].emergency_at)
        t_r = self.alert_rx_us[ref]
        self.log.add(t_us, "success", sender, receiver, ref=ref, skill=self.profiles[receiver].skill,
                     attempt=ref & 0xFF, t_d_us=t_d, t_r_us=t_r)

    # -- event handlers ------------------------------------------------------

    def _on_timer(self, node: int, t_us: int, key: tuple) -> None:
        x = self.nodes[node]
        if not x.active:
            return
        self._flush(node, key)
        if x.round > 0 and (self.full or node in self.tracked):
            self.log.add(t_us, "round", node, -1, round=x.round, members=self._members(node))
        self._apply(node, x.on_announce_timer(t_us / 1e6), t_us)

    def _on_emergency(self, node: int, t_us: int, key: tuple) -> None:
        x = self.nodes[node]
        if not x.active:
            return
        self._flush(node, key)
        ranked = rank_members(x.community)
        community = "|".join(f"{r.id}:{_fmt_trust(r.trust.total)}:{r.common}" for r in ranked)
        prio = self.cfg.priority_of(node)
        self.log.add(t_us, "emergency", node, -1, prio=prio, round=x.round, community=community)
        self._apply(node, x.trigger_emergency(t_us / 1e6, prio), t_us)

    def _on_delivery(self, msg: Message, t_us: int, key: tuple) -> None:
        dst = msg.dst
        y = self.nodes[dst]
        self._flush(dst, key)
        now = t_us / 1e6
        if msg.kind == MsgKind.STOP:
            removed = y.handle_stop_announce(msg, now)
            if self.full or dst in self.tracked or removed:
                self.log.add(t_us, "stop_recv", msg.src, dst, removed=int(removed))
        elif msg.kind == MsgKind.ALERT:
            actions = y.handle_alert(msg, now)
            for act in actions:
                if isinstance(act, Note) and act.kind == "alert_received":
                    self.alert_rx_us[msg.ref] = t_us
                    self.log.add(t_us, "alert_recv", msg.src, dst, ref=msg.ref, prio=msg.priority)
                    if not self.cfg.ack_required:
                        self._success(msg.src, dst, msg.ref, t_us)
                elif isinstance(act, Note) and act.kind == "alert_ignored":
                    self.log.add(t_us, "alert_lost", msg.src, dst, ref=msg.ref, reason="receiver_stopped")
            self._apply(dst, [a for a in actions if not isinstance(a, Note)], t_us)
        elif msg.kind == MsgKind.ACK:
            self.log.add(t_us, "ack_recv", msg.src, dst, ref=msg.ref)
            self._apply(dst, y.handle_ack(msg, now), t_us)

    def _on_snapshot(self, k: int, t_us: int) -> None:
        for node in sorted(self.tracked):
            if self.nodes[node].active:
                self.log.add(t_us, "snap", node, -1, nbrs=len(self.adj[k][node]))

    # -- main loop -----------------------------------------------------------

    def run(self) -> EventLog:
        log = self.log
        for p in self.profiles:
            log.add(0, "profile", p.id, -1, skill=p.skill, interests="|".join(sorted(p.interests)))
        log.add(to_us(self.cfg.warmup), "warmup")
        for k, t in enumerate(self.snap_us):
            if t < self.duration_us:
                self._push(t, RANK_SNAPSHOT, -1, _SNAPSHOT, k)
        for node, t in sorted(self.emergency_us.items()):
            self._push(t, RANK_EMERGENCY, node, _EMERGENCY)
        for node in range(self.cfg.n_nodes):
            self._push(0, RANK_TIMER, node, _TIMER)

        heap = self.heap
        while heap:
            t_us, rank, src, seq, kind, payload = heapq.heappop(heap)
            if t_us >= self.duration_us:
                break
            key = (t_us, rank, src, seq)
            if kind == _TIMER:
                self._on_timer(src, t_us, key)
            elif kind == _DELIVER:
                self._on_delivery(payload, t_us, key)
            elif kind == _SNAPSHOT:
                self._on_snapshot(payload, t_us)
            elif kind == _EMERGENCY:
                self._on_emergency(src, t_us, key)
            elif kind == _ACK_TIMEOUT:
                self._flush(src, key)
                self._apply(src, self.nodes[src].handle_ack_timeout(t_us / 1e6, payload), t_us)
            elif kind == _DRAIN:
                self._apply(src, self.nodes[src].drain_acks(t_us / 1e6), t_us)

        for node in sorted(self.emergency_us):
            if self.nodes[node].status is NodeStatus.AWAITING_ACK:
                log.add(self.duration_us, "fault", node, -1, reason="end_of_run")
        log.sort()
        return log


def run(config: ScenarioConfig, trace: MobilityTrace, seed: int,
        profiles: Optional[Sequence[NodeProfile]] = None, tax: Optional[SkillTaxonomy] = None) -> EventLog:
    """Simulate one repetition; the returned log is a pure function of the inputs."""
    return Simulation(config, trace, seed, profiles, tax).run()
