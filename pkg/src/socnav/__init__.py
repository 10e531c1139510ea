"""Decentralized multi-robot navigation: priority ORCA fused with a curiosity-driven PPO policy."""

__version__ = "0.1.0"
