"""Protocol messages, payload tiers and the canonical wire encoding.

Wire layout (little-endian)::

    header   tag:u8  flags:u8  sender:u16  ref:u32            8 B
    Announce      header                                      8 B
    AnswerAnnounce header + skill index:u8 + interest bitmap  8 + 1 + ceil(V/8) B
    Alert         header + tier:u8 + priority:u8 + 64 B stub  74 B
    AckAlert      header (ref = acknowledged alert)           8 B
    StopAnnounce  header                                      8 B

``ref`` carries the announce round for Announce/AnswerAnnounce and the alert
reference for Alert/AckAlert. Destination and send time are link-layer facts
and are not part of the encoding.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple, Optional

from ..errors import StealthError
from ..taxonomy import NULL_SKILL, REFERENCE_SKILL, SkillTaxonomy, build_default_taxonomy
from ..trust import DEFAULT_INTERESTS

_HEADER = struct.Struct("<BBHI")
HEADER_SIZE = _HEADER.size
PAYLOAD_STUB_SIZE = 64


class MsgKind(IntEnum):
    ANNOUNCE = 1
    ANSWER = 2
    ALERT = 3
    ACK = 4
    STOP = 5


class Tier(IntEnum):
    FULL_RECORD = 1
    VITALS_AND_MEDICATION = 2
    VITALS_ONLY = 3

    @property
    def label(self) -> str:
        return self.name.lower()


class DataTier(NamedTuple):
    tier: Tier
    subject: int


@dataclass(frozen=True, slots=True)
class Message:
    kind: MsgKind
    src: int
    dst: Optional[int]  # None = broadcast
    sent_at: float
    ref: int = 0
    skill: Optional[str] = None
    interests: Optional[frozenset] = None
    payload: Optional[DataTier] = None
    priority: int = 1

    @property
    def is_broadcast(self) -> bool:
        return self.dst is None


def tailor_payload(receiver_skill: str, tax: SkillTaxonomy | None = None, subject: int = 0) -> DataTier:
    """Least-privilege payload for the receiver's skill class."""
    lab = (tax or build_default_taxonomy()).resolve(receiver_skill)
    if lab == REFERENCE_SKILL:
        tier = Tier.FULL_RECORD
    elif lab == "nurse":
        tier = Tier.VITALS_AND_MEDICATION
    else:
        tier = Tier.VITALS_ONLY
    return DataTier(tier, subject)


class WireError(StealthError, ValueError):
    pass


class WireCodec:
    """Encodes messages to bytes; skill and interest vocabularies are fixed per codec."""

    def __init__(self, tax: SkillTaxonomy | None = None, interests=DEFAULT_INTERESTS):
        self.tax = tax or build_default_taxonomy()
        self.skills = self.tax.labels()
        if len(self.skills) > 256:
            raise WireError("too many skills for a one-byte index")
        self.skill_index = {s: i for i, s in enumerate(self.skills)}
        self.interests = tuple(interests)
        self.interest_bit = {s: i for i, s in enumerate(self.interests)}
        self.bitmap_size = max(1, (len(self.interests) + 7) // 8)

    def size(self, kind: MsgKind) -> int:
        if kind == MsgKind.ANSWER:
            return HEADER_SIZE + 1 + self.bitmap_size
        if kind == MsgKind.ALERT:
            return HEADER_SIZE + 2 + PAYLOAD_STUB_SIZE
        return HEADER_SIZE

    def encode(self, msg: Message) -> bytes:
        if not 0 <= msg.src < 1 << 16:
            raise WireError(f"sender id {msg.src} does not fit in u16")
        head = _HEADER.pack(int(msg.kind), 0, msg.src, msg.ref & 0xFFFFFFFF)
        if msg.kind == MsgKind.ANSWER:
            try:
                bits = sum(1 << self.interest_bit[i] for i in msg.interests)
                skill = self.skill_index[msg.skill]
            except KeyError as exc:
                raise WireError(f"label outside codec vocabulary: {exc.args[0]!r}") from None
            return head + bytes([skill]) + bits.to_bytes(self.bitmap_size, "little")
        if msg.kind == MsgKind.ALERT:
            stub = struct.pack("<H", msg.payload.subject).ljust(PAYLOAD_STUB_SIZE, b"\0")
            return head + bytes([int(msg.payload.tier), msg.priority]) + stub
        return head

    def decode(self, data: bytes, dst=None, sent_at: float = 0.0) -> Message:
        if len(data) < HEADER_SIZE:
            raise WireError("truncated header")
        tag, _flags, src, ref = _HEADER.unpack_from(data)
        try:
            kind = MsgKind(tag)
        except ValueError:
            raise WireError(f"unknown tag {tag}") from None
        if len(data) != self.size(kind):
            raise WireError(f"{kind.name} expects {self.size(kind)} bytes, got {len(data)}")
        body = data[HEADER_SIZE:]
        if kind == MsgKind.ANSWER:
            skill = self.skills[body[0]]
            bits = int.from_bytes(body[1:], "little")
            interests = frozenset(s for s, i in self.interest_bit.items() if bits >> i & 1)
            return Message(kind, src, dst, sent_at, ref, skill=skill, interests=interests)
        if kind == MsgKind.ALERT:
            (subject,) = struct.unpack_from("<H", body, 2)
            return Message(kind, src, dst, sent_at, ref,
                           payload=DataTier(Tier(body[0]), subject), priority=body[1])
        return Message(kind, src, dst, sent_at, ref)


__all__ = [
    "DataTier", "HEADER_SIZE", "Message", "MsgKind", "NULL_SKILL", "Tier", "WireCodec",
    "WireError", "tailor_payload",
]
