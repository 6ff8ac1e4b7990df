"""Monte Carlo harness: operating-characteristic sweeps and theory checks.

Three schemes are compared:

``dsprt``
    the decentralized test, fusion thresholds calibrated by bisection;
``sprt_cont``
    the centralized SPRT on every step of the base stream (Wald thresholds in
    continuous mode, calibrated thresholds in discrete mode);
``sprt_sampled``
    the centralized SPRT on all sensors sampled synchronously with a fixed
    period, by default the mean intersampling period of the local samplers.

Every row of a sweep is reproducible from the :class:`SweepSpec` and its root
seed. Each grid point gets its own seed, derived from the root seed and the
point's indices, so adding a scheme or a grid value never changes the numbers
of the other rows.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels as K_
from ._stats import Z95, combined_se, mean_se
from .calibration import (ErrorEstimate, QuantizationTable, calibrate_fusion_thresholds,
                          calibrate_sprt_thresholds, error_estimate, estimate_tables,
                          kl_lower_bounds, lambda_excess_bound, lorden_overshoot_bound,
                          envelope_thresholds, uncalibrated_thresholds)
from .errors import CalibrationError, ConfigError
from .fusion import FusionConfig
from .models import ErrorLevels, brownian_mean_period, wald_thresholds
from .simkernel import (SystemConfig, TrialBatch, build_system, run_dsprt_batch,
                        run_sprt_batch, trial_seeds, wald_identity_rows)

SCHEMES = ("dsprt", "sprt_cont", "sprt_sampled")


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.9g}"


def point_seed(root: int, *indices: int) -> int:
    """Seed of one grid point, independent of the other points."""
    return int(np.random.SeedSequence([int(root), *map(int, indices)]).generate_state(
        1, dtype=np.uint64)[0])


def mirror_batch(batch: TrialBatch) -> TrialBatch:
    """The batch the same seeds produce under the other hypothesis.

    Exact for sign-symmetric systems with equal fusion thresholds: the noise is
    shared and only the sign of every increment flips.
    """
    sensors = None
    if batch.sensors is not None:
        sensors = batch.sensors.copy()
        s = sensors
        s[:, :, K_.S_ONES] = s[:, :, K_.S_EMITS] - s[:, :, K_.S_ONES]
        s[:, :, K_.S_U] = -s[:, :, K_.S_U]
        # a completed pending cycle always lasts at least one step
        pending = s[:, :, K_.S_PEND_PERIOD] > 0
        known = {K_.S_FIRST_BIT: (s[:, :, K_.S_EMITS] > 0) | pending, K_.S_PEND_BIT: pending}
        for col, ok in known.items():
            bit = s[:, :, col]
            s[:, :, col] = np.where(ok & (bit >= 0), 1 - bit, bit)
    dec = np.where(batch.decision >= 0, 1 - batch.decision, batch.decision)
    return TrialBatch(1 - batch.truth, batch.step_length, batch.seeds, dec, batch.steps.copy(),
                      -batch.u, -batch.u_tilde, batch.max_dev.copy(), batch.max_inc.copy(),
                      sensors)


# ---------------------------------------------------------------- sweep

@dataclass(frozen=True)
class SweepSpec:
    """Grid and sizes of an operating-characteristic sweep.

    ``beta_ratio`` sets beta = ratio * alpha at every point (1 gives the
    standing choice beta = alpha). ``steps`` is the Euler step in continuous
    mode and the sampling period h in discrete mode.
    """

    mu: tuple = (1.0, 1.0)
    mode: str = "continuous"
    steps: tuple = (1e-3,)
    deltas: tuple = (2.0,)
    alphas: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    beta_ratio: float = 1.0
    n_trials: int = 200_000
    schemes: tuple = SCHEMES
    sampled_period: Optional[float] = None
    n_mc_tables: int = 1_000_000
    estimator: str = "direct"
    tol: float = 0.01
    seed: int = 0

    def __post_init__(self):
        for name in ("mu", "steps", "deltas", "alphas", "schemes"):
            val = getattr(self, name)
            if isinstance(val, (str, float, int)):
                val = (val,)
            object.__setattr__(self, name, tuple(val))
        bad = set(self.schemes) - set(SCHEMES)
        if bad or not self.schemes:
            raise ConfigError(f"unknown schemes {sorted(bad)}; choose from {SCHEMES}")
        if self.mode not in ("continuous", "discrete"):
            raise ConfigError(f"mode must be continuous or discrete, got {self.mode!r}")
        if self.estimator not in ("direct", "importance"):
            raise ConfigError(f"estimator must be direct or importance, got {self.estimator!r}")
        if not self.alphas or not all(0 < a < 1 for a in self.alphas):
            raise ConfigError("alphas must lie in (0, 1)")
        if min(self.steps) <= 0 or min(self.deltas) <= 0 or self.beta_ratio <= 0:
            raise ConfigError("steps, deltas and beta_ratio must be positive")
        for a in self.alphas:
            ErrorLevels(a, a * self.beta_ratio)
        # counting needs about 20 expected errors; the importance estimator does not
        need = 20.0 / min(min(self.alphas), min(self.alphas) * self.beta_ratio)
        if self.estimator == "direct" and self.n_trials < need:
            raise ConfigError(f"n_trials={self.n_trials} is below 20/min(alpha, beta) = {need:.0f}")
        if self.sampled_period is not None and self.sampled_period <= 0:
            raise ConfigError("sampled_period must be positive")

    def levels(self, alpha: float) -> ErrorLevels:
        return ErrorLevels(alpha, alpha * self.beta_ratio)


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    step: float
    delta: float
    period: float
    alpha: float
    beta: float
    threshold_a: float
    threshold_b: float
    mean_delay: float
    se_delay: float
    delay0: float
    se_delay0: float
    delay1: float
    se_delay1: float
    kl0: float
    se_kl0: float
    kl1: float
    se_kl1: float
    achieved_alpha: float
    se_alpha: float
    upper_alpha: float
    achieved_beta: float
    se_beta: float
    upper_beta: float
    msgs_per_unit_time: float
    n_trials: int
    n_aborted: int
    seed: int

    def sort_key(self):
        return (SCHEMES.index(self.scheme), self.step, self.delta, -self.alpha)


SWEEP_FIELDS = [f.name for f in dataclasses.fields(SweepRow)]


def write_rows_csv(rows: Sequence, fields: Sequence[str], path=None) -> str:
    """Render dataclass rows as CSV text (9 significant digits); also write ``path``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(getattr(r, f)) for f in fields])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    return text


def write_sweep_csv(rows: Sequence[SweepRow], path=None) -> str:
    return write_rows_csv(sorted(rows, key=SweepRow.sort_key), SWEEP_FIELDS, path)


def mean_period(config: SystemConfig, tables: Optional[Sequence[QuantizationTable]] = None) -> float:
    """Mean intersampling period, averaged over sensors and both hypotheses."""
    vals = []
    for i, (m, t) in enumerate(zip(config.models, config.thresholds)):
        if config.mode == "continuous":
            vals.extend(brownian_mean_period(m.mu, t.delta_lo, t.delta_hi))
        else:
            if tables is None:
                raise ConfigError("discrete mode needs quantization tables for the period")
            vals.extend((tables[i].mean_period0, tables[i].mean_period1))
    return float(np.mean(vals))


def _both(config: SystemConfig, run, seeds, a: float, b: float):
    """(H0 batch, H1 batch) on common seeds, mirroring when that is exact."""
    b1 = run(config.with_truth(1), seeds)
    if config.is_symmetric() and a == b:
        return mirror_batch(b1), b1
    return run(config.with_truth(0), seeds), b1


def _row(scheme, step, delta, period, levels, a, b, b0, b1, estimator, msgs_rate, seed):
    if estimator == "direct":
        alpha, beta = error_estimate(b0, "direct"), error_estimate(b1, "direct")
    else:
        alpha, beta = error_estimate(b1, "importance"), error_estimate(b0, "importance")
    d0, s0 = b0.mean_delay()
    d1, s1 = b1.mean_delay()
    k0, sk0 = b0.mean_kl()
    k1, sk1 = b1.mean_kl()
    return SweepRow(scheme, step, delta, period, levels.alpha, levels.beta, a, b,
                    0.5 * (d0 + d1), 0.5 * combined_se(s0, s1), d0, s0, d1, s1, k0, sk0, k1, sk1,
                    alpha.value, alpha.se, alpha.upper, beta.value, beta.se, beta.upper,
                    msgs_rate, len(b1), b0.n_aborted + b1.n_aborted, seed)


def _dsprt_point(spec, config, levels, seed, threads):
    cal = calibrate_fusion_thresholds(config, levels, spec.n_trials, seed, spec.estimator,
                                      spec.tol, threads)
    cfg = config.with_fusion(config.fusion.with_thresholds(cal.a, cal.b))
    seeds = trial_seeds(seed, spec.n_trials)
    run = lambda c, s: run_dsprt_batch(c, len(s), seed, threads, seeds=s)
    b0, b1 = _both(cfg, run, seeds, cal.a, cal.b)
    msgs = float(b0.msg_counts.sum() + b1.msg_counts.sum())
    time = float(b0.stop_time.sum() + b1.stop_time.sum())
    return cal.a, cal.b, b0, b1, msgs / time


def _sprt_point(spec, config, levels, seed, threads, period):
    if spec.mode == "continuous" and period is None:
        a, b = wald_thresholds(levels)
    else:
        cal = calibrate_sprt_thresholds(config, levels, spec.n_trials, seed, period,
                                        spec.estimator, spec.tol, threads)
        a, b = cal.a, cal.b
    seeds = trial_seeds(seed, spec.n_trials)
    run = lambda c, s: run_sprt_batch(c, (a, b), len(s), seed, period, threads, seeds=s)
    b0, b1 = _both(config, run, seeds, a, b)
    return a, b, b0, b1, config.K / (period or config.step)


def run_sweep(spec: SweepSpec, threads: int = 1) -> list[SweepRow]:
    """Calibrate and evaluate every (scheme, step, delta, alpha) point of ``spec``.

    The evaluation reuses the calibration's trial seeds, so the certified
    error bound of every calibrated row is re-asserted on the reported trials.
    """
    rows = []
    for si, step in enumerate(spec.steps):
        for di, delta in enumerate(spec.deltas):
            base = build_system(spec.mu, delta, step, spec.mode)
            tables = None
            if spec.mode == "discrete":
                tables = estimate_tables(base, spec.n_mc_tables, point_seed(spec.seed, 9, si, di))
                fusion = FusionConfig.from_tables(tables, 1e9, 1e9)
            else:
                fusion = FusionConfig.from_thresholds(base.thresholds, 1e9, 1e9)
            config = base.with_fusion(fusion)
            for ai, alpha in enumerate(spec.alphas):
                levels = spec.levels(alpha)
                for scheme in spec.schemes:
                    if scheme == "sprt_cont" and di > 0:
                        continue  # does not depend on the local thresholds
                    ci = SCHEMES.index(scheme)
                    seed = point_seed(spec.seed, ci, si, di if scheme != "sprt_cont" else 0, ai)
                    period = step
                    try:
                        if scheme == "dsprt":
                            a, b, b0, b1, rate = _dsprt_point(spec, config, levels, seed, threads)
                        elif scheme == "sprt_cont":
                            a, b, b0, b1, rate = _sprt_point(spec, config, levels, seed, threads, None)
                        else:
                            period = spec.sampled_period or mean_period(config, tables)
                            a, b, b0, b1, rate = _sprt_point(spec, config, levels, seed, threads,
                                                             period)
                    except CalibrationError as exc:
                        raise CalibrationError(
                            f"{scheme} at step={step:g}, delta={delta:g}, alpha={alpha:g}: {exc}"
                        ) from exc
                    d = delta if scheme != "sprt_cont" else math.nan
                    rows.append(_row(scheme, step, d, period, levels, a, b, b0, b1,
                                     spec.estimator, rate, seed))
    return sorted(rows, key=SweepRow.sort_key)


# ---------------------------------------------------------------- operating curves

@dataclass(frozen=True)
class OperatingPoint:
    """One threshold pair of a scheme, evaluated under both hypotheses."""

    a: float
    b: float
    alpha: ErrorEstimate
    beta: ErrorEstimate
    delay0: tuple
    delay1: tuple
    kl0: tuple
    kl1: tuple
    n_trials: int


def operating_curve(scheme: str, config: SystemConfig, thresholds: Iterable[tuple[float, float]],
                    n_trials: int, seed: int, period: Optional[float] = None,
                    threads: int = 1) -> list[OperatingPoint]:
    """Error levels and delays traced by a list of threshold pairs.

    Errors are estimated by change of measure from the opposite hypothesis,
    so small levels need far fewer trials than counting would.
    """
    if scheme not in ("dsprt", "sprt"):
        raise ValueError("scheme must be 'dsprt' or 'sprt'")
    seeds = trial_seeds(seed, n_trials)
    out = []
    for a, b in thresholds:
        if scheme == "dsprt":
            cfg = config.with_fusion(config.fusion.with_thresholds(a, b))
            run = lambda c, s: run_dsprt_batch(c, len(s), seed, threads, seeds=s)
        else:
            cfg = config
            run = lambda c, s, a=a, b=b: run_sprt_batch(c, (a, b), len(s), seed, period,
                                                        threads, seeds=s)
        b0, b1 = _both(cfg, run, seeds, a, b)
        out.append(OperatingPoint(a, b, error_estimate(b1, "importance"),
                                  error_estimate(b0, "importance"), b0.mean_delay(),
                                  b1.mean_delay(), b0.mean_kl(), b1.mean_kl(), n_trials))
    return out


def curve_value_at(points: Sequence[OperatingPoint], alpha: float,
                   field: str = "delay1") -> tuple[float, float]:
    """Read a curve at ``alpha`` by linear interpolation in |log alpha|.

    This is how a plotted curve is read between the discrete operating points
    of a scheme whose statistic lives on a lattice. Returns (value, se); the
    se combines the two bracketing points with their interpolation weights.
    """
    pts = sorted(points, key=lambda p: -p.alpha.value)
    x = [-math.log(p.alpha.value) for p in pts]
    t = -math.log(alpha)
    for k in range(len(pts) - 1):
        if x[k] <= t <= x[k + 1]:
            w = (x[k + 1] - t) / (x[k + 1] - x[k])
            v0, s0 = getattr(pts[k], field)
            v1, s1 = getattr(pts[k + 1], field)
            return w * v0 + (1 - w) * v1, math.hypot(w * s0, (1 - w) * s1)
    raise ValueError(f"alpha={alpha:g} lies outside the curve's range "
                     f"[{pts[-1].alpha.value:.3g}, {pts[0].alpha.value:.3g}]")


# ---------------------------------------------------------------- sizing

def threshold_size_advisor(theta_hat: float, alpha: float) -> float:
    """Order-matched local threshold sqrt(theta * |log alpha|).

    A rule of thumb for the order of magnitude of Delta that balances the
    overshoot loss against the communication rate; it is not an optimum.
    """
    if not theta_hat > 0:
        raise ValueError("theta_hat must be positive")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(theta_hat * abs(math.log(alpha)))


# ---------------------------------------------------------------- theory checks

@dataclass(frozen=True)
class CheckCase:
    mu: tuple
    delta: float
    step: float
    mode: str = "discrete"

    @property
    def label(self) -> str:
        mu = "/".join(f"{m:g}" for m in self.mu)
        key = "h" if self.mode == "discrete" else "dt"
        return f"{self.mode} mu={mu} delta={self.delta:g} {key}={self.step:g}"


DEFAULT_MATRIX = tuple(
    [CheckCase(mu, d, h) for mu in ((1.0, 1.0), (1.0, 0.5)) for d in (1.0, 2.0)
     for h in (1.0, 0.1)]
    + [CheckCase(mu, 2.0, 1e-3, "continuous") for mu in ((1.0, 1.0), (1.0, 0.5))])


@dataclass(frozen=True)
class CheckResult:
    """One inequality ``lhs <= rhs`` with its measured margin."""

    check: str
    case: str
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return bool(self.lhs <= self.rhs)


CHECK_FIELDS = ["check", "case", "lhs", "rhs", "margin", "passed"]


@dataclass
class TheoryReport:
    results: list = field(default_factory=list)

    def add(self, check: str, case: str, lhs: float, rhs: float) -> None:
        self.results.append(CheckResult(check, case, float(lhs), float(rhs)))

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]

    def by_check(self, prefix: str) -> list[CheckResult]:
        return [r for r in self.results if r.check.startswith(prefix)]

    def to_csv(self, path=None) -> str:
        rows = [_CsvCheck(r.check, r.case, r.lhs, r.rhs, r.margin, str(r.passed).lower())
                for r in self.results]
        return write_rows_csv(rows, CHECK_FIELDS, path)


@dataclass(frozen=True)
class _CsvCheck:
    check: str
    case: str
    lhs: float
    rhs: float
    margin: float
    passed: str


def _table_checks(rep: TheoryReport, label: str, tables: Sequence[QuantizationTable],
                  config: SystemConfig) -> None:
    for t, model in zip(tables, config.models):
        i = t.sensor
        # bit weights exceed the thresholds they signal
        rep.add(f"weight.lower[{i}].lo", label, t.delta_lo, t.lambda_lo + 3 * t.se_lambda_lo)
        rep.add(f"weight.lower[{i}].hi", label, t.delta_hi, t.lambda_hi + 3 * t.se_lambda_hi)
        # ... by no more than the overshoot allows
        ex_lo, ex_hi = lambda_excess_bound(t.theta_hat, t.thresholds)
        f_lo, f_hi = ex_lo / t.theta_hat, ex_hi / t.theta_hat
        rep.add(f"weight.upper[{i}].lo", label, t.lambda_lo - t.delta_lo,
                ex_lo + 3 * combined_se(t.se_lambda_lo, f_lo * t.se_theta_hat))
        rep.add(f"weight.upper[{i}].hi", label, t.lambda_hi - t.delta_hi,
                ex_hi + 3 * combined_se(t.se_lambda_hi, f_hi * t.se_theta_hat))
        lb0, lb1 = kl_lower_bounds(t.thresholds)
        rep.add(f"kl_rate.i0[{i}]", label, lb0, t.i0 + 3 * t.se_i0)
        rep.add(f"kl_rate.i1[{i}]", label, lb1, t.i1 + 3 * t.se_i1)
        rep.add(f"lorden[{i}]", label, t.theta_hat - 3 * t.se_theta_hat,
                lorden_overshoot_bound(model, 1))


def _discrete_case(rep: TheoryReport, case: CheckCase, levels: ErrorLevels, n_mc: int,
                   n_trials: int, seed: int, weight_scale: float, threads: int):
    label = case.label
    base = build_system(case.mu, case.delta, case.step, "discrete")
    tables = estimate_tables(base, n_mc, point_seed(seed, 1))
    if weight_scale != 1.0:
        tables = [t.with_weights_scaled(weight_scale) for t in tables]
    _table_checks(rep, label, tables, base)

    # D-SPRT at the thresholds that guarantee the error levels without calibration
    a_t, b_t = uncalibrated_thresholds(levels)
    fz = FusionConfig.from_tables(tables, 1e9, 1e9).with_thresholds(a_t, b_t)
    cfg = base.with_fusion(fz)
    seeds = trial_seeds(point_seed(seed, 2), n_trials)
    batches = [run_dsprt_batch(cfg.with_truth(j), n_trials, 0, threads, complete_pending=True,
                               seeds=seeds) for j in (0, 1)]
    alpha = error_estimate(batches[1], "importance")
    beta = error_estimate(batches[0], "importance")
    rep.add("uncalibrated.alpha", label, alpha.value - 3 * alpha.se, levels.alpha)
    rep.add("uncalibrated.beta", label, beta.value - 3 * beta.se, levels.beta)

    # Wald's identity and its truncated form, pooled over sensors and hypotheses
    for payload in ("one", "lambda", "abs_eta"):
        for b in batches:
            for row in wald_identity_rows(b, fz, payload):
                tag = f"wald.{payload}[{row.sensor}].H{b.truth}"
                rep.add(tag, label, abs(row.residual), max(4 * row.se, 1e-9 * (1 + abs(row.lhs))))
                if not math.isnan(row.bound):
                    rep.add(f"wald_bound.{payload}[{row.sensor}].H{b.truth}", label,
                            row.truncated_gap, row.bound)

    # tracking error at stopping and the K-L gap to the centralized SPRT
    c = cfg.C
    c_prime = fz.c_prime
    wa, wb = wald_thresholds(levels)
    sprt = [run_sprt_batch(cfg.with_truth(j), (wa, wb), n_trials, 0, threads=threads,
                           seeds=seeds) for j in (0, 1)]
    K = cfg.K
    for j, b in enumerate(batches):
        eta = max(t.mean_abs_eta1 if j else t.mean_abs_eta0 for t in tables)
        i_min = min(t.i1 if j else t.i0 for t in tables)
        dev, sdev = mean_se(np.abs(b.u - b.u_tilde)[b.done])
        ut, _ = mean_se(b.u_tilde[b.done])
        env = eta * ((abs(ut) + 2 * c_prime) / i_min + K) + c
        rep.add(f"stop_gap.H{j}", label, dev, env + 4 * sdev)
        phi = eta / i_min
        log_err = abs(math.log(levels.beta if j == 0 else levels.alpha))
        kl_d, s_d = b.mean_kl()
        kl_s, s_s = sprt[j].mean_kl()
        bound = phi * log_err + (1 + 3 * phi) * c_prime + c + K * eta
        rep.add(f"kl_gap.H{j}", label, kl_d - kl_s, bound + 4 * combined_se(s_d, s_s))
        for bb in (b, sprt[j]):
            if bb.n_aborted:
                rep.add(f"aborted.H{j}", label, bb.n_aborted, 0)
    return tables


def _continuous_case(rep: TheoryReport, case: CheckCase, levels: ErrorLevels, n_calib: int,
                     n_track: int, seed: int, threads: int):
    label = case.label
    base = build_system(case.mu, case.delta, case.step, "continuous")
    cfg = base.with_fusion(FusionConfig.from_thresholds(base.thresholds, 1e9, 1e9))
    cal = calibrate_fusion_thresholds(cfg, levels, n_calib, point_seed(seed, 3),
                                      estimator="importance", threads=threads)
    env_a, env_b = envelope_thresholds(cfg, levels)
    rep.add("envelope.a", label, cal.a, env_a)
    rep.add("envelope.b", label, cal.b, env_b)
    rep.add("envelope.alpha", label, cal.alpha.upper, levels.alpha)
    rep.add("envelope.beta", label, cal.beta.upper, levels.beta)
    run = cfg.with_fusion(cfg.fusion.with_thresholds(cal.a, cal.b))
    worst = -math.inf
    for j in (0, 1):
        b = run_dsprt_batch(run.with_truth(j), n_trials=n_track, root_seed=point_seed(seed, 4, j),
                            threads=threads, track=True)
        # Euler steps overshoot by at most the summed overshoots recorded so far
        slack = b.sensors[:, :, K_.S_ABS_ETA].sum(axis=1)
        worst = max(worst, float(np.max(b.max_dev - slack)))
    rep.add("tracking", label, worst, cfg.C)


def run_theory_checks(cases: Sequence[CheckCase] = DEFAULT_MATRIX, *, alpha: float = 1e-3,
                      n_mc: int = 1_000_000, n_trials: int = 20_000, n_calib: int = 2000,
                      n_track: int = 500, seed: int = 0, weight_scale: float = 1.0,
                      threads: int = 1) -> TheoryReport:
    """Run every invariant of the toolkit over a matrix of configurations.

    ``weight_scale`` multiplies the estimated bit weights before the checks;
    anything but 1 is a negative control that the weight and rate checks must catch.
    """
    rep = TheoryReport()
    levels = ErrorLevels(alpha, alpha)
    thetas = {}
    for k, case in enumerate(cases):
        s = point_seed(seed, k)
        if case.mode == "discrete":
            tables = _discrete_case(rep, case, levels, n_mc, n_trials, s, weight_scale, threads)
            thetas[(case.mu, case.delta, case.step)] = tables
        else:
            _continuous_case(rep, case, levels, n_calib, n_track, s, threads)
    # the overshoot shrinks with the sampling period
    for (mu, delta, h), tabs in sorted(thetas.items()):
        finer = [key for key in thetas if key[:2] == (mu, delta) and key[2] < h]
        for key in finer:
            for t_c, t_f in zip(tabs, thetas[key]):
                rep.add(f"theta_vs_h[{t_c.sensor}]",
                        f"mu={'/'.join(f'{m:g}' for m in mu)} delta={delta:g} h={key[2]:g}<{h:g}",
                        t_f.theta_hat + 3 * combined_se(t_f.se_theta_hat, t_c.se_theta_hat),
                        t_c.theta_hat)
    return rep
