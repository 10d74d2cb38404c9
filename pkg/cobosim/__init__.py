"""CoBoSim - collaborative learning via bilevel optimization, simulated on synthetic tasks."""

__version__ = "0.1.0"
