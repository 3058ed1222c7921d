from .eventlog import EventLog, Record
from .mobility import generate_synthetic
from .radio import RadioModel, deliver
from .trace import MobilityTrace, load_trace, neighbors_at, write_trace

__all__ = [
    "EventLog", "MobilityTrace", "RadioModel", "Record", "deliver", "generate_synthetic",
    "load_trace", "neighbors_at", "write_trace",
]
