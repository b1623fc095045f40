"""
Common models and numeric helpers for wxedge.
"""

import math
from typing import Any

from pydantic import BaseModel


class WxModel(BaseModel):
    """Base class for wxedge domain types."""

    class Config:
        """Pydantic configuration."""

        extra = "forbid"
        validate_assignment = True


def clamp(value: float, low: float, high: float) -> float:
    """Clamp value into [low, high]."""
    return low if value < low else high if value > high else value


def clamp01(value: float) -> float:
    """Clamp value into [0, 1]."""
    return clamp(value, 0.0, 1.0)


def wrap_degrees(angle: float) -> float:
    """Map an angle in degrees to (-180, 180]."""
    wrapped = math.fmod(angle, 360.0)
    if wrapped <= -180.0:
        wrapped += 360.0
    elif wrapped > 180.0:
        wrapped -= 360.0
    return wrapped


def all_finite(*values: Any) -> bool:
    """True when every numeric argument is a finite float."""
    return all(math.isfinite(float(v)) for v in values)
