"""
Weather edge-case generator

Trains a PPO agent to steer the weather knobs of a longitudinal driving
microsimulator so that a perception-driven ego controller breaks rulebook
safety rules, and benchmarks it against clear-weather and random-weather
baselines.
"""

__version__ = "0.1.0"

from .config import HarnessConfig, Settings
from .errors import WxEdgeError

# Main harness for easy access
from .harness import EdgeCaseHarness

__all__ = [
    "Settings",
    "HarnessConfig",
    "WxEdgeError",
    "EdgeCaseHarness",
]
