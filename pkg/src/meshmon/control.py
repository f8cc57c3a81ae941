"""Per-room bipositional heating/cooling and threshold lighting.

Heating switches on when the temperature drops more than the deadband
below the setpoint and off once the setpoint is reached again; cooling is
the mirror image. The asymmetric off conditions keep the actuators from
chattering inside the deadband. Lighting is stateless: below the lux
threshold and with movement present, the lamp is on.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Sequence

MODE_IDLE = "idle"
MODE_HEATING = "heating"
MODE_COOLING = "cooling"


@dataclass
class ControlConfig:
    setpoint_c: float = 22.0
    deadband_c: float = 1.0
    light_threshold_lux: float = 200.0
    movement_window: int = 10
    movement_sigma_g: float = 0.05

    def __post_init__(self) -> None:
        if self.deadband_c <= 0:
            raise ValueError("deadband must be positive")
        if self.light_threshold_lux < 0:
            raise ValueError("light threshold must be nonnegative")
        if self.movement_window < 1:
            raise ValueError("movement window must be at least 1 sample")


@dataclass
class ControlState:
    mode: str = MODE_IDLE
    light_on: bool = False


@dataclass
class ControlOutputs:
    heat_on: bool = False
    cool_on: bool = False
    light_on: bool = False


def evaluate_room(temp_c: float, lux: float, movement: bool,
                  config: ControlConfig, prev: ControlState) -> tuple[ControlState, ControlOutputs]:
    """One control evaluation; returns the next state and actuator outputs."""
    mode = prev.mode
    if mode == MODE_HEATING and temp_c >= config.setpoint_c:
        mode = MODE_IDLE
    elif mode == MODE_COOLING and temp_c <= config.setpoint_c:
        mode = MODE_IDLE
    if mode == MODE_IDLE:
        if temp_c < config.setpoint_c - config.deadband_c:
            mode = MODE_HEATING
        elif temp_c > config.setpoint_c + config.deadband_c:
            mode = MODE_COOLING
    light_on = lux < config.light_threshold_lux and movement
    state = ControlState(mode=mode, light_on=light_on)
    outputs = ControlOutputs(heat_on=mode == MODE_HEATING,
                             cool_on=mode == MODE_COOLING,
                             light_on=light_on)
    return state, outputs


def detect_movement(accel_samples: Sequence[float], window: int = 10,
                    sigma_g: float = 0.05) -> bool:
    """True when the spread of the recent accelerometer magnitudes exceeds
    the threshold; false during warm-up (fewer than `window` samples)."""
    if len(accel_samples) < window:
        return False
    recent = list(accel_samples)[-window:]
    return statistics.pstdev(recent) > sigma_g
