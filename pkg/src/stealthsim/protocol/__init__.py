from .messages import DataTier, Message, MsgKind, Tier, WireCodec, WireError, tailor_payload
from .node import (
    HealthCommunity,
    NeighborRecord,
    NodeProfile,
    NodeStatus,
    Note,
    ProtocolNode,
    Scenario,
    Timer,
    rank_members,
    select_receiver,
)

__all__ = [
    "DataTier", "HealthCommunity", "Message", "MsgKind", "NeighborRecord", "NodeProfile",
    "NodeStatus", "Note", "ProtocolNode", "Scenario", "Tier", "Timer", "WireCodec", "WireError",
    "rank_members", "select_receiver", "tailor_payload",
]
