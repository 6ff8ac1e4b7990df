"""Quantization tables, overshoot bounds and fusion threshold calibration.

In discrete time the local statistic overshoots its thresholds, so a received
bit is worth more than the threshold it signals. The fusion weights are the
log-likelihood ratios of the bits::

    lambda_hi = log P1(z=1)/P0(z=1)      lambda_lo = -log P1(z=0)/P0(z=0)

estimated here by Monte Carlo over independent single local cycles.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from . import _kernels as K_
from ._stats import Z95, binomial_se, mean_se, wilson_upper
from .errors import CalibrationError, ConfigError
from .models import ErrorLevels, HypothesisModel, brownian_mean_period, gaussian_abs_moment
from .sensor import LocalThresholds
from .simkernel import (SystemConfig, TrialBatch, run_dsprt_batch, run_sprt_batch,
                        trial_seeds)

CYCLE_CAP = 10**8
BISECTION_TOL = 0.01


@dataclass(frozen=True)
class QuantizationTable:
    sensor: int
    delta_lo: float
    delta_hi: float
    lambda_lo: float
    lambda_hi: float
    p0_bit1: float
    p1_bit1: float
    i0: float
    i1: float
    theta_hat: float
    se_lambda_lo: float
    se_lambda_hi: float
    se_p0_bit1: float
    se_p1_bit1: float
    se_i0: float
    se_i1: float
    se_theta_hat: float
    mean_abs_eta0: float
    mean_abs_eta1: float
    se_abs_eta0: float
    se_abs_eta1: float
    mean_period0: float
    mean_period1: float
    se_period0: float
    se_period1: float
    n_mc: int
    seed: int

    @property
    def thresholds(self) -> LocalThresholds:
        return LocalThresholds(self.delta_lo, self.delta_hi)

    def with_weights_scaled(self, factor: float) -> "QuantizationTable":
        """Copy with both bit weights multiplied by ``factor`` (negative controls)."""
        lo, hi = self.lambda_lo * factor, self.lambda_hi * factor
        i0 = lo * (1 - self.p0_bit1) - hi * self.p0_bit1
        i1 = hi * self.p1_bit1 - lo * (1 - self.p1_bit1)
        return dataclasses.replace(self, lambda_lo=lo, lambda_hi=hi, i0=i0, i1=i1)


CSV_FIELDS = [f.name for f in dataclasses.fields(QuantizationTable)]
# the report leads with the identifying columns and ends with n_mc, seed
CSV_FIELDS = (["sensor", "delta_lo", "delta_hi", "lambda_lo", "lambda_hi", "p0_bit1",
               "p1_bit1", "i0", "i1", "theta_hat"]
              + [f for f in CSV_FIELDS if f.startswith("se_")]
              + ["mean_abs_eta0", "mean_abs_eta1", "mean_period0", "mean_period1",
                 "n_mc", "seed"])


def local_cycles(model: HypothesisModel, thresholds: LocalThresholds, n: int,
                 rng: np.random.Generator, truth: int):
    """``n`` independent local SPRT cycles: (bits, signed overshoots, periods in steps)."""
    sign = 1.0 if truth else -1.0
    bits, eta, period = K_.exit_cycles(rng, sign, model.drift, model.mu * math.sqrt(model.h),
                                       thresholds.delta_lo, thresholds.delta_hi, int(n),
                                       CYCLE_CAP)
    if np.any(bits < 0):
        raise CalibrationError("a local cycle did not terminate; check the model drift")
    return bits, eta, period


def estimate_quantization(model: HypothesisModel, thresholds: LocalThresholds, n_mc: int,
                          seed: int, sensor: int = 0) -> QuantizationTable:
    if n_mc < 10**4:
        raise ConfigError("n_mc must be at least 1e4")
    g0, g1 = (np.random.Generator(np.random.PCG64(s))
              for s in np.random.SeedSequence(int(seed)).spawn(2))
    bits0, eta0, per0 = local_cycles(model, thresholds, n_mc, g0, 0)
    bits1, eta1, per1 = local_cycles(model, thresholds, n_mc, g1, 1)
    n = n_mc
    p0, p1 = float(np.mean(bits0 == 1)), float(np.mean(bits1 == 1))
    if min(p0, p1) <= 0.0 or max(p0, p1) >= 1.0:
        raise CalibrationError(
            f"estimated bit probabilities ({p0}, {p1}) hit 0 or 1; increase n_mc "
            f"for thresholds {thresholds}")
    q0, q1 = 1.0 - p0, 1.0 - p1
    lam_hi = math.log(p1 / p0)
    lam_lo = math.log(q0 / q1)
    se_hi = math.sqrt(q1 / (n * p1) + q0 / (n * p0))
    se_lo = math.sqrt(p1 / (n * q1) + p0 / (n * q0))
    i0 = lam_lo * q0 - lam_hi * p0
    i1 = lam_hi * p1 - lam_lo * q1
    v0, v1 = p0 * q0 / n, p1 * q1 / n
    se_i0 = math.sqrt((lam_lo + lam_hi) ** 2 * v0 + (q0 / q1 - p0 / p1) ** 2 * v1)
    se_i1 = math.sqrt((lam_lo + lam_hi) ** 2 * v1 + (q1 / q0 - p1 / p0) ** 2 * v0)
    e0, s0 = mean_se(np.abs(eta0))
    e1, s1 = mean_se(np.abs(eta1))
    t0, st0 = mean_se(per0 * model.h)
    t1, st1 = mean_se(per1 * model.h)
    theta, se_theta = (e0, s0) if e0 >= e1 else (e1, s1)
    return QuantizationTable(
        sensor, thresholds.delta_lo, thresholds.delta_hi, lam_lo, lam_hi, p0, p1, i0, i1,
        theta, se_lo, se_hi, math.sqrt(v0), math.sqrt(v1), se_i0, se_i1, se_theta,
        e0, e1, s0, s1, t0, t1, st0, st1, n_mc, int(seed))


def estimate_tables(config: SystemConfig, n_mc: int, seed: int) -> list[QuantizationTable]:
    """One table per sensor; sensor ``i`` uses child ``i`` of ``seed``."""
    children = np.random.SeedSequence(int(seed)).generate_state(config.K, dtype=np.uint64)
    return [estimate_quantization(m, t, n_mc, int(children[i]), sensor=i)
            for i, (m, t) in enumerate(zip(config.models, config.thresholds))]


def write_calibration_csv(tables: Sequence[QuantizationTable], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for t in tables:
            w.writerow([_fmt(getattr(t, f)) for f in CSV_FIELDS])


def read_calibration_csv(path) -> list[QuantizationTable]:
    ints = {"sensor", "n_mc", "seed"}
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    missing = set(CSV_FIELDS) - set(rows[0]) if rows else set()
    if missing:
        raise ConfigError(f"calibration file lacks columns {sorted(missing)}")
    names = [f.name for f in dataclasses.fields(QuantizationTable)]
    out = []
    for r in rows:
        vals = {k: (int(r[k]) if k in ints else float(r[k])) for k in CSV_FIELDS}
        # columns not written to the report are recomputed as nan
        vals.update({k: math.nan for k in names if k not in vals})
        out.append(QuantizationTable(**vals))
    return out


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.9g}"


# ---------------------------------------------------------------- closed forms

def kl_lower_bounds(thresholds: LocalThresholds) -> tuple[float, float]:
    """Closed-form lower bounds on the K-L numbers of the transmitted bits."""
    lo, hi = thresholds.delta_lo, thresholds.delta_hi
    den = math.exp(hi) - math.exp(-lo)
    i0 = (lo * math.expm1(hi) + hi * math.expm1(-lo)) / den
    i1 = (lo * math.expm1(-lo) + hi * math.expm1(hi)) / den
    return i0, i1


def lambda_excess_bound(theta: float, thresholds: LocalThresholds) -> tuple[float, float]:
    """Upper bounds on (lambda_lo - delta_lo, lambda_hi - delta_hi) given overshoot size."""
    return (theta / -math.expm1(-thresholds.delta_hi),
            theta / -math.expm1(-thresholds.delta_lo))


def lorden_terms(model: HypothesisModel, r: int) -> tuple[float, float]:
    """Per-hypothesis overshoot bounds [(r+2)/(r+1) E|ell|^(r+1) / |E ell|]^(1/r)."""
    if r < 1:
        raise ValueError(f"r must be at least 1, got {r}")
    out = []
    for truth in (0, 1):
        mean = model.increment_mean(truth)
        mom = gaussian_abs_moment(mean, model.scale, r + 1)
        out.append(((r + 2) / (r + 1) * mom / abs(mean)) ** (1.0 / r))
    return out[0], out[1]


def lorden_overshoot_bound(model: HypothesisModel, r: int) -> float:
    """Bound on the mean absolute overshoot valid for all local thresholds."""
    t0, t1 = lorden_terms(model, r)
    return t0 + t1


def delta_for_mean_period(model: HypothesisModel, target: float, truth: int = 1,
                          n_mc: int = 20000, seed: int = 0) -> float:
    """Symmetric local threshold whose mean intersampling period is ``target``.

    Continuous paths use the closed-form exit time; discrete models bisect on
    a Monte Carlo estimate with common random numbers.
    """
    if model.kind.value == "brownian":
        f = lambda d: brownian_mean_period(model.mu, d, d)[truth] - target
    else:
        def f(d):
            rng = np.random.Generator(np.random.PCG64(seed))
            _, _, per = local_cycles(model, LocalThresholds.symmetric(d), n_mc, rng, truth)
            return per.mean() * model.h - target
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e3:
            raise CalibrationError(f"no threshold reaches mean period {target}")
    return optimize.brentq(f, 1e-9, hi, xtol=1e-6)


# ---------------------------------------------------------------- fusion thresholds

@dataclass(frozen=True)
class ErrorEstimate:
    value: float
    se: float
    upper: float
    n: int


@dataclass(frozen=True)
class ThresholdCalibration:
    a: float
    b: float
    alpha: ErrorEstimate
    beta: ErrorEstimate
    estimator: str
    envelope_a: float
    envelope_b: float
    evaluations: int
    n_mc: int
    seed: int


def error_estimate(batch: TrialBatch, estimator: str) -> ErrorEstimate:
    """Error of the hypothesis *not* simulated (importance) or of the simulated one (direct).

    ``direct`` on an H0 batch estimates alpha = P0(d=1) by counting, with a
    Wilson upper bound. ``importance`` on an H1 batch estimates the same alpha
    as E1[exp(-u_T); d=1] with a normal upper bound.
    """
    done = batch.done
    n = int(done.sum())
    if estimator == "direct":
        k = batch.n_errors
        return ErrorEstimate(k / n if n else math.nan, binomial_se(k, n), wilson_upper(k, n), n)
    if estimator == "importance":
        w = batch.lr_errors()[done]
        m, se = mean_se(w)
        return ErrorEstimate(m, se, m + Z95 * se, n)
    raise ValueError(f"unknown estimator {estimator!r}")


def _source_truth(error: str, estimator: str) -> int:
    # which hypothesis must be simulated to estimate alpha or beta
    if error == "alpha":
        return 0 if estimator == "direct" else 1
    return 1 if estimator == "direct" else 0


def bisect_smallest(pred: Callable[[float], bool], hi: float, tol: float = BISECTION_TOL) -> float:
    """Smallest x in (0, hi] with pred(x), assuming pred monotone and pred(hi)."""
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def calibrate_thresholds(evaluate: Callable[[float, float, int], TrialBatch],
                         levels: ErrorLevels, a_max: float, b_max: float, *,
                         estimator: str = "direct", symmetric: bool = False,
                         tol: float = BISECTION_TOL, max_rounds: int = 6,
                         n_mc: int = 0, seed: int = 0,
                         envelope: Optional[tuple[float, float]] = None) -> ThresholdCalibration:
    """Smallest thresholds (a, b) whose one-sided 95% error bounds meet ``levels``.

    ``evaluate(a, b, truth)`` must run a fixed set of trials (common random
    numbers) so that the error estimates are monotone in each threshold.
    Coordinate bisection alternates between b (driven by alpha) and a (driven
    by beta) until neither moves by more than ``tol``.
    """
    calls = 0

    def err(which, a, b):
        nonlocal calls
        calls += 1
        return error_estimate(evaluate(a, b, _source_truth(which, estimator)), estimator)

    def ok(which, a, b):
        target = levels.alpha if which == "alpha" else levels.beta
        return err(which, a, b).upper <= target

    if not (ok("alpha", a_max, b_max) and ok("beta", a_max, b_max)):
        raise CalibrationError(
            f"upper thresholds ({a_max:.4g}, {b_max:.4g}) do not certify alpha={levels.alpha}, "
            f"beta={levels.beta}; Monte Carlo noise exceeds the spacing, increase n_mc")
    if symmetric:
        a = b = bisect_smallest(lambda t: ok("alpha", t, t), min(a_max, b_max), tol)
    else:
        a, b = a_max, b_max
        for _ in range(max_rounds):
            b_new = bisect_smallest(lambda x: ok("alpha", a, x), b, tol)
            a_new = bisect_smallest(lambda x: ok("beta", x, b_new), a, tol)
            moved = max(abs(a_new - a), abs(b_new - b))
            a, b = a_new, b_new
            if moved <= tol:
                break
    alpha = err("alpha", a, b)
    beta = err("beta", a, b)
    env = envelope or (a_max, b_max)
    return ThresholdCalibration(a, b, alpha, beta, estimator, env[0], env[1], calls, n_mc, seed)


def envelope_thresholds(config: SystemConfig, levels: ErrorLevels) -> tuple[float, float]:
    """(|log beta| + C, |log alpha| + C) with C the sum of local threshold spans."""
    return abs(math.log(levels.beta)) + config.C, abs(math.log(levels.alpha)) + config.C


def uncalibrated_thresholds(levels: ErrorLevels) -> tuple[float, float]:
    """(|log beta|, |log alpha|): discrete-time thresholds that meet the targets unaided."""
    return abs(math.log(levels.beta)), abs(math.log(levels.alpha))


def _check_resolution(levels: ErrorLevels, n_mc: int, estimator: str):
    if estimator == "direct" and min(levels.alpha, levels.beta) < 20.0 / n_mc:
        raise CalibrationError(
            f"n_mc={n_mc} cannot resolve error level {min(levels.alpha, levels.beta)}; "
            "need n_mc >= 20/min(alpha, beta) or the importance estimator")


def calibrate_fusion_thresholds(config: SystemConfig, levels: ErrorLevels, n_mc: int, seed: int,
                                estimator: str = "direct", tol: float = BISECTION_TOL,
                                threads: int = 1) -> ThresholdCalibration:
    """D-SPRT thresholds by bisection over [0, |log beta| + C] x [0, |log alpha| + C]."""
    if config.fusion is None:
        raise ConfigError("calibration needs fusion weights")
    _check_resolution(levels, n_mc, estimator)
    seeds = trial_seeds(seed, n_mc)
    fz = config.fusion

    def evaluate(a, b, truth):
        cfg = config.with_fusion(fz.with_thresholds(a, b)).with_truth(truth)
        return run_dsprt_batch(cfg, n_mc, seed, threads, seeds=seeds)

    a_max, b_max = envelope_thresholds(config, levels)
    sym = config.is_symmetric() and levels.alpha == levels.beta
    return calibrate_thresholds(evaluate, levels, a_max, b_max, estimator=estimator,
                                symmetric=sym, tol=tol, n_mc=n_mc, seed=seed)


def calibrate_sprt_thresholds(config: SystemConfig, levels: ErrorLevels, n_mc: int, seed: int,
                              period: Optional[float] = None, estimator: str = "direct",
                              tol: float = BISECTION_TOL, threads: int = 1) -> ThresholdCalibration:
    """Centralized SPRT thresholds, on the base stream or sampled every ``period``.

    Wald's thresholds are conservative in discrete time, so the search runs
    below them (plus one nat of headroom).
    """
    _check_resolution(levels, n_mc, estimator)
    seeds = trial_seeds(seed, n_mc)

    def evaluate(a, b, truth):
        return run_sprt_batch(config.with_truth(truth), (a, b), n_mc, seed, period, threads,
                              seeds=seeds)

    wa, wb = (math.log((1 - levels.alpha) / levels.beta), math.log((1 - levels.beta) / levels.alpha))
    sym = levels.alpha == levels.beta
    return calibrate_thresholds(evaluate, levels, wa + 1.0, wb + 1.0, estimator=estimator,
                                symmetric=sym, tol=tol, n_mc=n_mc, seed=seed,
                                envelope=(wa, wb))
