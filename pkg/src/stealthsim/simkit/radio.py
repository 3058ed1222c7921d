"""Parametric single-hop radio: unit-disk range plus base/serialisation/jitter latency."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .trace import in_range


@dataclass(frozen=True)
class RadioModel:
    radius: float = 50.0  # m
    base_latency: float = 0.1  # ms
    bitrate: float = 6e6  # bit/s
    jitter_bound: float = 5.0  # ms

    def __post_init__(self):
        if self.radius < 0 or self.base_latency < 0 or self.jitter_bound < 0 or self.bitrate <= 0:
            raise ValueError(f"invalid radio parameters: {self}")

    def fixed_latency(self, size_bytes: int) -> float:
        return self.base_latency + size_bytes * 8 / self.bitrate * 1000.0

    def latency(self, size_bytes: int, u: float) -> float:
        """Latency in ms for a uniform draw ``u`` in [0, 1)."""
        return self.fixed_latency(size_bytes) + u * self.jitter_bound

    def max_latency(self, size_bytes: int) -> float:
        return self.fixed_latency(size_bytes) + self.jitter_bound


def message_size(msg) -> int:
    if isinstance(msg, int):
        return msg
    if isinstance(msg, (bytes, bytearray)):
        return len(msg)
    from ..protocol.messages import WireCodec
    return WireCodec().size(msg.kind)


def deliver(msg, sender_pos, receiver_pos, radio: RadioModel, rng: random.Random) -> Optional[float]:
    """Delivery offset in ms, or ``None`` when the receiver is out of range at send time.

    ``msg`` may be a :class:`~stealthsim.protocol.Message`, its encoded bytes,
    or a size in bytes.
    """
    if not in_range(sender_pos, receiver_pos, radio.radius):
        return None
    return radio.latency(message_size(msg), rng.random())
