"""Trust-based emergency alerting among mobile health communities, as a discrete-event simulator."""

__version__ = "0.1.0"
