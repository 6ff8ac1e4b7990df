"""Level-triggered sampling at a single sensor.

Each sensor runs a repeated local SPRT on its own log-likelihood ratio. Whenever
the statistic accumulated since the previous transmission leaves
``(-delta_lo, delta_hi)`` the sensor sends one bit (1 = upper exit, 0 = lower
exit) and restarts from zero. The amount by which the statistic passed the
threshold is the overshoot; it is never transmitted, only recorded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError


@dataclass(frozen=True)
class LocalThresholds:
    delta_lo: float
    delta_hi: float

    def __post_init__(self):
        if not (self.delta_lo > 0 and self.delta_hi > 0):
            raise ConfigError(
                f"local thresholds must be positive, got ({self.delta_lo}, {self.delta_hi})")

    @classmethod
    def symmetric(cls, delta: float) -> "LocalThresholds":
        return cls(float(delta), float(delta))

    @property
    def span(self) -> float:
        return self.delta_lo + self.delta_hi


@dataclass(frozen=True)
class Message:
    """One transmission: ``bit`` sent by ``sensor`` after ``period`` steps."""

    sensor: int
    bit: int
    period: int
    emit_time: float


@dataclass
class SensorState:
    sensor: int = 0
    accum: float = 0.0
    steps_since_emit: int = 0
    emit_count: int = 0
    overshoot_abs_sum: float = 0.0
    clock: int = 0
    last_overshoot: float = 0.0


def overshoot_of(increment_total: float, thresholds: LocalThresholds) -> float:
    """Signed overshoot of an exiting excursion: negative below, positive above."""
    if increment_total >= thresholds.delta_hi:
        return increment_total - thresholds.delta_hi
    if increment_total <= -thresholds.delta_lo:
        return increment_total + thresholds.delta_lo
    raise ValueError(
        f"{increment_total} is still inside ({-thresholds.delta_lo}, {thresholds.delta_hi})")


def sensor_step(state: SensorState, llr_inc: float, thresholds: LocalThresholds,
                now: Optional[float] = None) -> Optional[Message]:
    """Feed one increment to the sensor; return the message it emits, if any.

    ``now`` stamps the message; it defaults to the sensor's own step count.
    Hitting a threshold exactly counts as an exit.
    """
    if not math.isfinite(llr_inc):
        raise ValueError(f"non-finite log-likelihood increment {llr_inc}")
    state.clock += 1
    state.steps_since_emit += 1
    total = state.accum + llr_inc
    if total >= thresholds.delta_hi:
        bit = 1
    elif total <= -thresholds.delta_lo:
        bit = 0
    else:
        state.accum = total
        return None
    eta = overshoot_of(total, thresholds)
    msg = Message(state.sensor, bit, state.steps_since_emit,
                  state.clock if now is None else now)
    state.last_overshoot = eta
    state.overshoot_abs_sum += abs(eta)
    state.emit_count += 1
    state.accum = 0.0
    state.steps_since_emit = 0
    return msg
