"""Complete trials of the decentralized and centralized tests.

A trial advances a global step counter. At every step each sensor draws one
log-likelihood increment for the true hypothesis, the exact global statistic
``u`` is updated, every sensor runs its level-triggered sampler and the
messages emitted during the step reach the fusion center together, in
ascending sensor order, with zero latency.

Randomness: a trial seed spawns K+1 child seed sequences; child ``i < K`` drives
sensor ``i`` and child ``K`` is reserved for trial bookkeeping. Sensor streams
therefore do not depend on K. Trial seeds of a batch come from the root seed,
and the same trial seed is used under both hypotheses with the noise sign
flipped under H0 (see :func:`dsprt.models.llr_increment`).
"""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels as K_
from ._stats import mean_se
from .errors import ConfigError
from .fusion import FusionConfig, FusionState, Status, fusion_batch
from .models import HypothesisModel, ModelKind, brownian_mean_period, llr_increment
from .sensor import LocalThresholds, SensorState, sensor_step

ABORTED = -1
MODES = ("continuous", "discrete")


@dataclass(frozen=True)
class SystemConfig:
    models: tuple[HypothesisModel, ...]
    thresholds: tuple[LocalThresholds, ...]
    fusion: Optional[FusionConfig] = None
    truth: int = 1
    mode: str = "discrete"
    max_steps: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "thresholds", tuple(self.thresholds))
        if not self.models:
            raise ConfigError("need at least one sensor")
        if len(self.thresholds) != len(self.models):
            raise ConfigError("one LocalThresholds per sensor required")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        kind = ModelKind.BROWNIAN_DRIFT if self.mode == "continuous" else ModelKind.GAUSSIAN_SAMPLED
        if any(m.kind is not kind for m in self.models):
            raise ConfigError(f"{self.mode} mode needs {kind.name} models")
        if len({m.h for m in self.models}) != 1:
            raise ConfigError("all sensors must share one step length")
        if self.truth not in (0, 1):
            raise ConfigError("truth must be 0 or 1")
        if self.fusion is not None and self.fusion.K != len(self.models):
            raise ConfigError("fusion weights do not match the number of sensors")
        if self.max_steps is not None and self.max_steps <= 0:
            raise ConfigError("max_steps must be positive")

    @property
    def K(self) -> int:
        return len(self.models)

    @property
    def step(self) -> float:
        return self.models[0].h

    @property
    def mus(self) -> np.ndarray:
        return np.array([m.mu for m in self.models])

    @property
    def C(self) -> float:
        """Sum of local threshold spans."""
        return sum(t.span for t in self.thresholds)

    def with_truth(self, truth: int) -> "SystemConfig":
        return dataclasses.replace(self, truth=truth)

    def with_fusion(self, fusion: FusionConfig) -> "SystemConfig":
        return dataclasses.replace(self, fusion=fusion)

    def is_symmetric(self) -> bool:
        """True when every sensor's sampler and fusion weights are sign-symmetric."""
        if any(t.delta_lo != t.delta_hi for t in self.thresholds):
            return False
        if self.fusion is not None and self.fusion.w_lo != self.fusion.w_hi:
            return False
        return True


def build_system(mu: Sequence[float] | float, delta: float | Sequence[float], step: float,
                 mode: str = "discrete", K: Optional[int] = None, truth: int = 1,
                 fusion: Optional[FusionConfig] = None,
                 max_steps: Optional[int] = None) -> SystemConfig:
    """Convenience constructor with symmetric local thresholds."""
    mus = [float(mu)] * (K or 1) if np.isscalar(mu) else [float(m) for m in mu]
    deltas = [float(delta)] * len(mus) if np.isscalar(delta) else [float(d) for d in delta]
    make = HypothesisModel.brownian if mode == "continuous" else HypothesisModel.gaussian
    return SystemConfig(tuple(make(m, step) for m in mus),
                        tuple(LocalThresholds.symmetric(d) for d in deltas),
                        fusion, truth, mode, max_steps)


def predicted_steps(config: SystemConfig, a: float, b: float, extra: float = 0.0) -> float:
    """Rough mean number of steps to leave (-a, b), plus one local cycle."""
    drift = sum(m.drift for m in config.models)
    cycle = max(brownian_mean_period(m.mu, t.delta_lo, t.delta_hi)[0] / m.h
                for m, t in zip(config.models, config.thresholds)) if extra else 0.0
    return (max(a, b) + extra) / drift + cycle + 1.0


def max_steps_for(config: SystemConfig, a: float, b: float, extra: float = 0.0) -> int:
    if config.max_steps is not None:
        return int(config.max_steps)
    return int(math.ceil(200 * predicted_steps(config, a, b, extra)))


# ---------------------------------------------------------------- seeds

def trial_seeds(root_seed: int, n: int) -> np.ndarray:
    """``n`` reproducible 64-bit trial seeds derived from ``root_seed``."""
    return np.random.SeedSequence(int(root_seed)).generate_state(n, dtype=np.uint64)


def sensor_generators(seed: int, K: int) -> tuple[np.random.Generator, ...]:
    children = np.random.SeedSequence(int(seed)).spawn(K + 1)
    return tuple(np.random.Generator(np.random.PCG64(c)) for c in children[:K])


def _map(fn: Callable, seeds: np.ndarray, threads: int) -> list:
    if threads <= 1 or len(seeds) < 2 * threads:
        return [fn(int(s)) for s in seeds]
    chunks = np.array_split(seeds, threads)
    with ThreadPoolExecutor(threads) as pool:
        parts = list(pool.map(lambda c: [fn(int(s)) for s in c], chunks))
    return [r for part in parts for r in part]


# ---------------------------------------------------------------- results

@dataclass(frozen=True)
class TrialResult:
    decision: int
    stop_time: float
    u_at_stop: float
    u_tilde_at_stop: float
    msg_counts: tuple[int, ...]
    overshoot_abs_sums: tuple[float, ...]
    seed: int
    stop_step: int = 0
    max_tracking_error: float = math.nan
    max_abs_increment: float = math.nan

    @property
    def aborted(self) -> bool:
        return self.decision == ABORTED


@dataclass
class TrialBatch:
    """Columnar outcome of many trials of one scheme under one hypothesis."""

    truth: int
    step_length: float
    seeds: np.ndarray
    decision: np.ndarray
    steps: np.ndarray
    u: np.ndarray
    u_tilde: np.ndarray
    max_dev: np.ndarray
    max_inc: np.ndarray
    sensors: Optional[np.ndarray] = None  # (n, K, N_SENSOR_COLS)

    def __len__(self) -> int:
        return len(self.decision)

    @property
    def stop_time(self) -> np.ndarray:
        return self.steps * self.step_length

    @property
    def done(self) -> np.ndarray:
        return self.decision != ABORTED

    @property
    def n_aborted(self) -> int:
        return int(np.sum(~self.done))

    @property
    def n_errors(self) -> int:
        wrong = 1 - self.truth
        return int(np.sum(self.decision == wrong))

    @property
    def msg_counts(self) -> np.ndarray:
        return self.sensors[:, :, K_.S_EMITS].astype(np.int64)

    def mean_delay(self) -> tuple[float, float]:
        return mean_se(self.stop_time[self.done])

    def mean_kl(self) -> tuple[float, float]:
        """K-L divergence at stopping: -E0[u_T] under H0, E1[u_T] under H1."""
        m, se = mean_se(self.u[self.done])
        return (m if self.truth else -m), se

    def lr_errors(self) -> np.ndarray:
        """Per-trial change-of-measure weights for the error of the *other* hypothesis.

        Under H1 the mean of ``exp(-u_T) 1{d=1}`` is P0(d=1); under H0 the mean of
        ``exp(u_T) 1{d=0}`` is P1(d=0).
        """
        if self.truth:
            return np.where(self.decision == 1, np.exp(-self.u), 0.0)
        return np.where(self.decision == 0, np.exp(self.u), 0.0)

    def result(self, k: int) -> TrialResult:
        if self.sensors is None:
            counts, sums = (), ()
        else:
            counts = tuple(int(c) for c in self.sensors[k, :, K_.S_EMITS])
            sums = tuple(float(s) for s in self.sensors[k, :, K_.S_ABS_ETA])
        return TrialResult(int(self.decision[k]), float(self.steps[k] * self.step_length),
                           float(self.u[k]), float(self.u_tilde[k]), counts, sums,
                           int(self.seeds[k]), int(self.steps[k]),
                           float(self.max_dev[k]), float(self.max_inc[k]))


def _arrays(config: SystemConfig, step: Optional[float] = None):
    models = config.models if step is None else [m.resampled(step) for m in config.models]
    drift = np.array([m.drift for m in models])
    scale = np.array([m.mu * math.sqrt(m.h) for m in models])
    return drift, scale


def _sign(truth: int) -> float:
    return 1.0 if truth else -1.0


def _collect(truth, step_length, seeds, rows, with_sensors) -> TrialBatch:
    n = len(rows)
    dec = np.fromiter((r[0] for r in rows), np.int64, n)
    steps = np.fromiter((r[1] for r in rows), np.int64, n)
    u = np.fromiter((r[2] for r in rows), float, n)
    if with_sensors:
        ut = np.fromiter((r[3] for r in rows), float, n)
        dev = np.fromiter((r[4] for r in rows), float, n)
        inc = np.fromiter((r[5] for r in rows), float, n)
        sensors = np.stack([r[6] for r in rows]) if n else None
    else:
        ut = dev = inc = np.full(n, np.nan)
        sensors = None
    return TrialBatch(truth, step_length, np.asarray(seeds, dtype=np.uint64), dec, steps,
                      u, ut, dev, inc, sensors)


# ---------------------------------------------------------------- D-SPRT

def _dsprt_runner(config: SystemConfig, complete_pending: bool, track: bool):
    if config.fusion is None:
        raise ConfigError("D-SPRT needs a FusionConfig")
    fz = config.fusion
    drift, scale = _arrays(config)
    lo = np.array([t.delta_lo for t in config.thresholds])
    hi = np.array([t.delta_hi for t in config.thresholds])
    w_lo, w_hi = np.array(fz.w_lo), np.array(fz.w_hi)
    sign = _sign(config.truth)
    cap = max_steps_for(config, fz.a_tilde, fz.b_tilde, fz.c_prime)

    def run(seed: int):
        rngs = sensor_generators(seed, config.K)
        return K_.dsprt_trial(rngs, sign, drift, scale, lo, hi, w_lo, w_hi, fz.a_tilde,
                              fz.b_tilde, cap, complete_pending, track)
    return run


def run_dsprt_trial(config: SystemConfig, seed: int, track: bool = True) -> TrialResult:
    """One D-SPRT trial, replayable from ``(config, seed)``."""
    row = _dsprt_runner(config, False, track)(seed)
    return _collect(config.truth, config.step, [seed], [row], True).result(0)


def run_dsprt_batch(config: SystemConfig, n_trials: int, root_seed: int, threads: int = 1,
                    complete_pending: bool = False, track: bool = False,
                    seeds: Optional[np.ndarray] = None) -> TrialBatch:
    seeds = trial_seeds(root_seed, n_trials) if seeds is None else seeds
    rows = _map(_dsprt_runner(config, complete_pending, track), seeds, threads)
    return _collect(config.truth, config.step, seeds, rows, True)


# ---------------------------------------------------------------- centralized SPRT

def _sprt_runner(config: SystemConfig, thresholds: tuple[float, float],
                 period: Optional[float] = None):
    a, b = thresholds
    if not (a > 0 and b > 0):
        raise ConfigError("SPRT thresholds must be positive")
    drift, scale = _arrays(config, period)
    sign = _sign(config.truth)
    sub = config if period is None else dataclasses.replace(
        config, models=tuple(m.resampled(period) for m in config.models))
    cap = max_steps_for(sub, a, b)

    def run(seed: int):
        return K_.sprt_trial(sensor_generators(seed, config.K), sign, drift, scale, a, b, cap)
    return run


def run_centralized_sprt_trial(config: SystemConfig, seed: int,
                               thresholds: tuple[float, float]) -> TrialResult:
    """Centralized SPRT on every step of the base stream, exit of (-A, B)."""
    row = _sprt_runner(config, thresholds)(seed)
    return _collect(config.truth, config.step, [seed], [row], False).result(0)


def run_deterministic_sampling_sprt_trial(config: SystemConfig, period: float, seed: int,
                                          thresholds: tuple[float, float]) -> TrialResult:
    """Centralized SPRT on all sensors sampled synchronously every ``period``.

    The increment over one period is drawn exactly, it is not assembled from
    base steps.
    """
    if not period > 0:
        raise ConfigError("sampling period must be positive")
    row = _sprt_runner(config, thresholds, period)(seed)
    return _collect(config.truth, period, [seed], [row], False).result(0)


def run_sprt_batch(config: SystemConfig, thresholds: tuple[float, float], n_trials: int,
                   root_seed: int, period: Optional[float] = None, threads: int = 1,
                   seeds: Optional[np.ndarray] = None) -> TrialBatch:
    seeds = trial_seeds(root_seed, n_trials) if seeds is None else seeds
    rows = _map(_sprt_runner(config, thresholds, period), seeds, threads)
    return _collect(config.truth, config.step if period is None else period, seeds, rows, False)


# ---------------------------------------------------------------- object-level replay

@dataclass
class TrialTrace:
    result: TrialResult
    u: np.ndarray
    u_tilde: np.ndarray
    messages: list


def trace_dsprt_trial(config: SystemConfig, seed: int, max_steps: Optional[int] = None) -> TrialTrace:
    """Replay a D-SPRT trial step by step with the object-level sensor and fusion API.

    Slow; it draws the same numbers in the same order as :func:`run_dsprt_trial`
    and so reproduces it exactly, while also returning the paths of ``u`` and
    ``u_tilde``.
    """
    fz = config.fusion
    if fz is None:
        raise ConfigError("D-SPRT needs a FusionConfig")
    rngs = sensor_generators(seed, config.K)
    cap = max_steps or max_steps_for(config, fz.a_tilde, fz.b_tilde, fz.c_prime)
    sensors = [SensorState(sensor=i) for i in range(config.K)]
    fusion = FusionState.fresh(config.K)
    z_sign = _sign(config.truth)
    u = 0.0
    max_dev = max_inc = 0.0
    u_path, ut_path, messages = [], [], []
    step = 0
    while step < cap and fusion.status is Status.RUNNING:
        step += 1
        batch = []
        for i, (model, thr) in enumerate(zip(config.models, config.thresholds)):
            inc = llr_increment(model, z_sign * rngs[i].standard_normal(), config.truth)
            u += inc
            max_inc = max(max_inc, abs(inc))
            msg = sensor_step(sensors[i], inc, thr, now=step * config.step)
            if msg is not None:
                batch.append(msg)
        if batch:
            fusion_batch(fusion, batch, fz)
            messages.extend(batch)
        max_dev = max(max_dev, abs(u - fusion.u_tilde))
        u_path.append(u)
        ut_path.append(fusion.u_tilde)
    result = TrialResult(int(fusion.status), step * config.step, u, fusion.u_tilde,
                         tuple(s.emit_count for s in sensors),
                         tuple(s.overshoot_abs_sum for s in sensors), int(seed), step,
                         max_dev, max_inc)
    return TrialTrace(result, np.array(u_path), np.array(ut_path), messages)


# ---------------------------------------------------------------- Wald's identity

PAYLOADS = ("one", "lambda", "abs_eta", "period")


@dataclass(frozen=True)
class WaldIdentityRow:
    payload: str
    sensor: int
    truth: int
    n_trials: int
    lhs: float          # E[sum_{n <= m_T + 1} zeta_n]
    rhs: float          # E[zeta_1] (E[m_T] + 1)
    se: float           # delta-method standard error of lhs - rhs
    truncated_gap: float  # |E[sum_{n <= m_T} zeta_n] - E[zeta_1] E[m_T]|
    bound: float        # 2M for bounded payloads, nan otherwise

    @property
    def residual(self) -> float:
        return self.lhs - self.rhs

    @property
    def z_score(self) -> float:
        if self.se == 0:
            return 0.0 if self.residual == 0 else math.inf
        return self.residual / self.se


def _payload_columns(sensors: np.ndarray, i: int, payload: str, fz: FusionConfig, step: float):
    s = sensors[:, i, :]
    m = s[:, K_.S_EMITS]
    if payload == "one":
        total, first, pend = m.copy(), np.ones_like(m), np.ones_like(m)
    elif payload == "lambda":
        ones = s[:, K_.S_ONES]
        total = ones * fz.w_hi[i] - (m - ones) * fz.w_lo[i]
        first = np.where(s[:, K_.S_FIRST_BIT] == 1, fz.w_hi[i], -fz.w_lo[i])
        pend = np.where(s[:, K_.S_PEND_BIT] == 1, fz.w_hi[i], -fz.w_lo[i])
    elif payload == "abs_eta":
        total, first, pend = s[:, K_.S_ABS_ETA], s[:, K_.S_FIRST_ABS_ETA], s[:, K_.S_PEND_ABS_ETA]
    elif payload == "period":
        total = s[:, K_.S_LAST_EMIT] * step
        first = s[:, K_.S_FIRST_PERIOD] * step
        pend = s[:, K_.S_PEND_PERIOD] * step
    else:
        raise ValueError(f"payload must be one of {PAYLOADS}, got {payload!r}")
    return m, total, first, pend


def wald_identity_rows(batch: TrialBatch, fusion: FusionConfig, payload: str) -> list[WaldIdentityRow]:
    """Evaluate the identity for every sensor from a batch run with pending cycles completed."""
    rows = []
    ok = batch.done & np.all(batch.sensors[:, :, K_.S_PEND_BIT] >= 0, axis=1)
    sensors = batch.sensors[ok]
    n = len(sensors)
    for i in range(sensors.shape[1]):
        m, total, first, pend = _payload_columns(sensors, i, payload, fusion, batch.step_length)
        full = total + pend
        lhs = float(full.mean())
        zbar, mbar = float(first.mean()), float(m.mean())
        rhs = zbar * (mbar + 1.0)
        grad = np.array([1.0, -(mbar + 1.0), -zbar])
        cov = np.cov(np.vstack([full, first, m])) if n > 1 else np.zeros((3, 3))
        se = math.sqrt(max(float(grad @ cov @ grad), 0.0) / max(n, 1))
        gap = abs(float(total.mean()) - zbar * mbar)
        if payload == "one":
            bound = 2.0
        elif payload == "lambda":
            bound = 2.0 * (fusion.w_lo[i] + fusion.w_hi[i])
        else:
            bound = math.nan
        rows.append(WaldIdentityRow(payload, i, batch.truth, n, lhs, rhs, se, gap, bound))
    return rows


def wald_identity_check(config: SystemConfig, seed: int, n_trials: int,
                        payload: str, threads: int = 1) -> list[WaldIdentityRow]:
    """Monte Carlo check of E[sum_{n<=m_T+1} zeta_n] = E[zeta_1](E[m_T]+1), per sensor."""
    if payload not in PAYLOADS:
        raise ValueError(f"payload must be one of {PAYLOADS}, got {payload!r}")
    batch = run_dsprt_batch(config, n_trials, seed, threads, complete_pending=True)
    return wald_identity_rows(batch, config.fusion, payload)
