"""Fusion center of the decentralized SPRT.

The center keeps a piecewise-constant statistic. Every received bit moves it by
``+w_hi[i]`` (bit 1) or ``-w_lo[i]`` (bit 0) and the test stops as soon as the
statistic leaves ``(-a_tilde, b_tilde)``. In continuous mode the weights are the
local thresholds themselves; in discrete mode they are the log-likelihood ratios
of the received bits, estimated by :mod:`dsprt.calibration`.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ConfigError, KernelError
from .sensor import LocalThresholds, Message


class Status(enum.IntEnum):
    RUNNING = -1
    DECIDED0 = 0
    DECIDED1 = 1


@dataclass(frozen=True)
class FusionConfig:
    a_tilde: float
    b_tilde: float
    w_lo: tuple[float, ...]
    w_hi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "w_lo", tuple(float(w) for w in self.w_lo))
        object.__setattr__(self, "w_hi", tuple(float(w) for w in self.w_hi))
        if len(self.w_lo) != len(self.w_hi) or not self.w_lo:
            raise ConfigError("need one (w_lo, w_hi) pair per sensor")
        if min(self.w_lo + self.w_hi) <= 0:
            raise ConfigError("fusion weights must be positive")
        if not (self.a_tilde > 0 and self.b_tilde > 0):
            raise ConfigError("fusion thresholds must be positive")
        if self.c_prime >= min(self.a_tilde, self.b_tilde):
            warnings.warn(
                f"C' = {self.c_prime:.3g} is not below min(A~, B~) = "
                f"{min(self.a_tilde, self.b_tilde):.3g}; one batch of messages can "
                "jump across the whole continuation region", stacklevel=3)

    @classmethod
    def from_thresholds(cls, thresholds: Sequence[LocalThresholds],
                        a_tilde: float, b_tilde: float) -> "FusionConfig":
        """Continuous-mode weights: each bit is worth exactly its local threshold."""
        return cls(a_tilde, b_tilde, tuple(t.delta_lo for t in thresholds),
                   tuple(t.delta_hi for t in thresholds))

    @classmethod
    def from_tables(cls, tables, a_tilde: float, b_tilde: float) -> "FusionConfig":
        """Discrete-mode weights from per-sensor quantization tables."""
        return cls(a_tilde, b_tilde, tuple(t.lambda_lo for t in tables),
                   tuple(t.lambda_hi for t in tables))

    @property
    def K(self) -> int:
        return len(self.w_lo)

    @property
    def c_prime(self) -> float:
        """Largest possible single-instant jump of the statistic."""
        return sum(self.w_lo) + sum(self.w_hi)

    def with_thresholds(self, a_tilde: float, b_tilde: float) -> "FusionConfig":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return FusionConfig(a_tilde, b_tilde, self.w_lo, self.w_hi)


@dataclass
class FusionState:
    u_tilde: float = 0.0
    counts: list = field(default_factory=list)
    status: Status = Status.RUNNING
    decision_time: float | None = None

    @classmethod
    def fresh(cls, K: int) -> "FusionState":
        return cls(counts=[0] * K)


def fusion_apply(state: FusionState, msg: Message, config: FusionConfig) -> Status:
    if state.status is not Status.RUNNING:
        raise KernelError(f"message {msg} delivered after decision {state.status.name}")
    if msg.bit:
        state.u_tilde += config.w_hi[msg.sensor]
    else:
        state.u_tilde -= config.w_lo[msg.sensor]
    state.counts[msg.sensor] += 1
    if state.u_tilde >= config.b_tilde:
        state.status = Status.DECIDED1
    elif state.u_tilde <= -config.a_tilde:
        state.status = Status.DECIDED0
    if state.status is not Status.RUNNING:
        state.decision_time = msg.emit_time
    return state.status


def fusion_batch(state: FusionState, msgs: Iterable[Message], config: FusionConfig) -> Status:
    """Apply simultaneous messages in ascending sensor order.

    Processing stops at the first threshold crossing; later messages of the
    same batch are not applied.
    """
    msgs = sorted(msgs, key=lambda m: m.sensor)
    if len({m.emit_time for m in msgs}) > 1:
        raise ValueError("a batch must share one emit_time")
    if state.status is not Status.RUNNING:
        raise KernelError(f"batch delivered after decision {state.status.name}")
    for m in msgs:
        if fusion_apply(state, m, config) is not Status.RUNNING:
            break
    return state.status
