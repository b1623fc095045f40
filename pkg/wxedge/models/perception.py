"""
Perception and controller models for the system under test.
"""

from typing import Optional

from pydantic import Field, model_validator

from .common import WxModel


class DetectionResult(WxModel):
    """Output of the surrogate lead-vehicle detector for one tick."""

    detected: bool = Field(False)
    est_distance: Optional[float] = Field(
        None, description="Estimated gap to the lead (m), present iff detected"
    )
    iou: float = Field(0.0, ge=0.0, le=1.0, description="Detection quality surrogate")

    class Config:
        extra = "forbid"
        frozen = True

    @model_validator(mode="after")
    def _consistent(self) -> "DetectionResult":
        if self.detected:
            if self.est_distance is None or not 0.0 < self.iou <= 1.0:
                raise ValueError("a detection needs est_distance and 0 < iou <= 1")
        elif self.est_distance is not None or self.iou != 0.0:
            raise ValueError("a miss carries iou = 0 and no est_distance")
        return self

    @classmethod
    def miss(cls) -> "DetectionResult":
        return cls()


class PerceptionConfig(WxModel):
    """Coefficients of the visibility and detection surrogate."""

    r_max: float = Field(120.0, gt=0.0, description="Clear-day detection range (m)")
    fog_coeff: float = Field(3.0, ge=0.0, description="k_f")
    rain_coeff: float = Field(1.5, ge=0.0, description="k_r")
    deposit_coeff: float = Field(0.8, ge=0.0, description="k_d")
    night_floor: float = Field(0.15, gt=0.0, le=1.0)
    glare_factor: float = Field(0.5, ge=0.0)
    glare_alt_max: float = Field(25.0, ge=0.0, description="Glare altitude ceiling (deg)")
    glare_az_halfwidth: float = Field(30.0, ge=0.0, description="Glare azimuth window (deg)")
    range_noise_coeff: float = Field(0.05, ge=0.0, description="sigma_0")
    ego_heading: float = Field(0.0, description="Ego heading used by the glare test (deg)")


class ControllerConfig(WxModel):
    """Gains of the detection-driven behaviour controller."""

    v_cruise: float = Field(15.0, ge=0.0, description="Cruise setpoint (m/s)")
    k_v: float = Field(0.3, ge=0.0, description="Cruise throttle gain per m/s")
    d_standoff: float = Field(5.0, ge=0.0, description="Desired stopping standoff (m)")
    a_comfort: float = Field(2.5, gt=0.0, description="Braking trigger deceleration (m/s²)")
    epsilon: float = Field(0.1, gt=0.0, description="Distance floor (m)")
