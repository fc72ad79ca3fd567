"""Occupant-aware lighting: posture and comfort recognition driving a
three-light automation loop."""
__version__ = "0.1.0"
