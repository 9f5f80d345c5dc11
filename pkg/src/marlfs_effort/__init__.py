"""Feature selection for software effort estimation with multi-agent DQN."""

__version__ = "0.1.0"
