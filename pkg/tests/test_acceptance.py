"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are collected in the
"acceptance criteria" section of the terminal summary. The whole file takes
about ten minutes on one core.
"""
import math

import numpy as np
import pytest

from dsprt import _kernels as K_
from dsprt.calibration import (calibrate_sprt_thresholds, envelope_thresholds, error_estimate,
                               estimate_quantization, estimate_tables, kl_lower_bounds,
                               lambda_excess_bound)
from dsprt.cli import main
from dsprt.experiments import curve_value_at, mean_period, operating_curve, run_theory_checks
from dsprt.fusion import FusionConfig
from dsprt.models import ErrorLevels, HypothesisModel, wald_thresholds
from dsprt.sensor import LocalThresholds
from dsprt.simkernel import build_system, run_dsprt_batch, run_sprt_batch, wald_identity_rows

pytestmark = pytest.mark.slow


def continuous_system(a=1e9, b=1e9):
    base = build_system([1.0, 1.0], 2.0, 1e-3, "continuous")
    return base.with_fusion(FusionConfig.from_thresholds(base.thresholds, a, b))


def test_criterion_01_mean_intersampling_period(acceptance):
    t = estimate_quantization(HypothesisModel.brownian(1.0, 1e-3), LocalThresholds.symmetric(2.0),
                              10**5, 101)
    rel = [abs(p / 3.0464 - 1) for p in (t.mean_period0, t.mean_period1)]
    ok = max(rel) <= 0.02
    acceptance(1, "mean intersampling period 3.0464 within 2%", ok,
               f"E0={t.mean_period0:.4f} E1={t.mean_period1:.4f} worst rel err={max(rel):.4f}")
    assert ok


def test_criterion_02_centralized_sprt_delay(acceptance):
    c = continuous_system()
    a = b = math.log(99)
    delays = [run_sprt_batch(c.with_truth(j), (a, b), 10**4, 202 + j).mean_delay() for j in (0, 1)]
    rel = [abs(d / 4.50322 - 1) for d, _ in delays]
    ok = max(rel) <= 0.03
    acceptance(2, "centralized SPRT delay 4.50322 within 3%", ok,
               " ".join(f"E{j}[T]={d:.4f}+-{s:.4f}" for j, (d, s) in enumerate(delays))
               + f" worst rel err={max(rel):.4f}")
    assert ok


def test_criterion_03_envelope_thresholds_certify_errors(acceptance):
    levels = ErrorLevels(1e-2, 1e-2)
    a, b = envelope_thresholds(continuous_system(), levels)
    c = continuous_system(a, b)
    alpha = error_estimate(run_dsprt_batch(c.with_truth(0), 10**5, 303), "direct")
    beta = error_estimate(run_dsprt_batch(c.with_truth(1), 10**5, 304), "direct")
    ok = alpha.upper <= levels.alpha and beta.upper <= levels.beta
    acceptance(3, "Wilson upper bounds at envelope thresholds below targets", ok,
               f"A~=B~={a:.4f} alpha_hat={alpha.value:.2e} (upper {alpha.upper:.2e}) "
               f"beta_hat={beta.value:.2e} (upper {beta.upper:.2e})")
    assert ok


def test_criterion_04_bit_weight_and_rate_bounds(acceptance):
    failures, n = [], 0
    for h in (1.0, 0.1):
        for d in (1.0, 2.0):
            th = LocalThresholds.symmetric(d)
            t = estimate_quantization(HypothesisModel.gaussian(1.0, h), th, 10**6,
                                      int(400 + 10 * h + d))
            ex_lo, ex_hi = lambda_excess_bound(t.theta_hat, th)
            lb0, lb1 = kl_lower_bounds(th)
            checks = {
                "lambda_lo>=delta": t.lambda_lo >= d - 3 * t.se_lambda_lo,
                "lambda_hi>=delta": t.lambda_hi >= d - 3 * t.se_lambda_hi,
                "lambda_lo excess": t.lambda_lo - d <= ex_lo + 3 * t.se_lambda_lo,
                "lambda_hi excess": t.lambda_hi - d <= ex_hi + 3 * t.se_lambda_hi,
                "I0 bound": t.i0 >= lb0 - 3 * t.se_i0,
                "I1 bound": t.i1 >= lb1 - 3 * t.se_i1,
            }
            n += len(checks)
            failures += [f"h={h:g} delta={d:g} {k}" for k, v in checks.items() if not v]
    ok = not failures
    acceptance(4, "bit weights and message K-L numbers within their bounds", ok,
               f"{n - len(failures)}/{n} inequalities hold" + (f"; failed: {failures}" if failures else ""))
    assert ok


def test_criterion_05_wald_identity(acceptance):
    base = build_system([1.0, 0.5], 1.0, 1.0, "discrete")
    tables = estimate_tables(base, 10**6, 505)
    fz = FusionConfig.from_tables(tables, 1e9, 1e9).with_thresholds(6.9, 6.9)
    cfg = base.with_fusion(fz)
    worst_z, slack_ok, n_rows = 0.0, True, 0
    for j in (0, 1):
        batch = run_dsprt_batch(cfg.with_truth(j), 10**5, 506 + j, complete_pending=True)
        for payload in ("one", "lambda", "abs_eta"):
            for r in wald_identity_rows(batch, fz, payload):
                n_rows += 1
                worst_z = max(worst_z, abs(r.z_score))
                if payload != "abs_eta":
                    slack_ok &= r.truncated_gap <= r.bound
    ok = worst_z <= 4.0 and slack_ok
    acceptance(5, "Wald identity for payloads 1, lambda, |eta|", ok,
               f"{n_rows} identities, worst |z|={worst_z:.2f}; bounded-payload slack <= 2M: {slack_ok}")
    assert ok


def test_criterion_06_tracking_bound(acceptance):
    levels = ErrorLevels(1e-2, 1e-2)
    c = continuous_system(*envelope_thresholds(continuous_system(), levels))
    violations, worst = 0, -math.inf
    for j in (0, 1):
        b = run_dsprt_batch(c.with_truth(j), 500, 606 + j, track=True)
        # Euler-step slack: the overshoots accumulated at the sensors so far
        eps = b.sensors[:, :, K_.S_ABS_ETA].sum(axis=1)
        excess = b.max_dev - (c.C + eps)
        violations += int(np.sum(excess > 0))
        worst = max(worst, float(excess.max()))
    ok = violations == 0
    acceptance(6, "|u - u~| <= C + eps_dt at every step of 1000 trials", ok,
               f"C={c.C:g} violations={violations} worst (max dev - bound)={worst:.4f}")
    assert ok


def test_criterion_07_delay_ordering_and_bounded_gap(acceptance):
    c = continuous_system()
    dsprt = operating_curve("dsprt", c, [(x, x) for x in (4.0, 6.0, 8.0, 10.0)], 20000, 101)
    out = {}
    for alpha in (1e-2, 1e-4):
        sprt = operating_curve("sprt", c, [wald_thresholds(ErrorLevels(alpha, alpha))], 20000, 202)
        out[alpha] = (curve_value_at(dsprt, alpha), sprt[0].delay1)
    period = mean_period(c)
    levels = ErrorLevels(1e-4, 1e-4)
    cal = calibrate_sprt_thresholds(c, levels, 4000, 303, period, estimator="importance")
    sampled = run_sprt_batch(c.with_truth(1), (cal.a, cal.b), 20000, 304, period).mean_delay()

    (d4, sd4), (s4, ss4) = out[1e-4]
    (d2, sd2), (s2, ss2) = out[1e-2]
    sep1 = (d4 - s4) / math.hypot(sd4, ss4)
    sep2 = (sampled[0] - d4) / math.hypot(sd4, sampled[1])
    growth = (d4 - s4) - (d2 - s2)
    sigma = math.sqrt(sd4**2 + ss4**2 + sd2**2 + ss2**2)
    ok = sep1 >= 3 and sep2 >= 3 and growth <= 3 * sigma
    acceptance(7, "SPRT < D-SPRT < sampled SPRT at 1e-4 and bounded delay gap", ok,
               f"delays at 1e-4: SPRT {s4:.4f}+-{ss4:.4f}, D-SPRT {d4:.4f}+-{sd4:.4f}, "
               f"sampled {sampled[0]:.4f}+-{sampled[1]:.4f} (h={period:.4f}); "
               f"separations {sep1:.1f} and {sep2:.1f} sigma; gap growth {growth:.4f} "
               f"vs 3 sigma {3 * sigma:.4f}")
    assert ok


def test_criterion_08_oversampling_lowers_kl(acceptance):
    kl = {}
    for h in (1.0, 0.1):
        base = build_system([1.0, 1.0], 1.0, h, "discrete")
        tables = estimate_tables(base, 10**6, 7)
        cfg = base.with_fusion(FusionConfig.from_tables(tables, 1e9, 1e9))
        d = operating_curve("dsprt", cfg, [(x, x) for x in (4.0, 5.5, 7.0, 8.5, 10.0)], 20000, 11)
        s = operating_curve("sprt", cfg, [(x, x) for x in (4.0, 5.5, 7.0, 8.5)], 20000, 12)
        kl[h] = (curve_value_at(d, 1e-3, "kl1"), curve_value_at(s, 1e-3, "kl1"))
    (d1, sd1), (s1, _) = kl[1.0]
    (d01, sd01), (s01, _) = kl[0.1]
    improvement = d1 - d01
    z = improvement / math.hypot(sd1, sd01)
    sprt_change = abs(s1 - s01)
    ok = z >= 3 and sprt_change < improvement
    acceptance(8, "D-SPRT K-L drops from h=1 to h=0.1 more than the SPRT's", ok,
               f"D-SPRT KL {d1:.4f} -> {d01:.4f} ({z:.1f} sigma); "
               f"SPRT KL {s1:.4f} -> {s01:.4f} (change {sprt_change:.4f})")
    assert ok


def test_criterion_09_stopping_and_kl_envelopes(acceptance):
    rep = run_theory_checks(seed=0)
    stop, kl = rep.by_check("stop_gap"), rep.by_check("kl_gap")
    bad = [r for r in stop + kl if not r.passed]
    ok = not bad and bool(stop) and bool(kl) and rep.passed
    tight = min(r.margin for r in stop + kl)
    acceptance(9, "stopping-time tracking and K-L gap envelopes over the default matrix", ok,
               f"{len(stop)} tracking + {len(kl)} K-L checks, {len(bad)} failures, "
               f"smallest margin {tight:.3f}; all {len(rep.results)} checks pass: {rep.passed}")
    assert ok


SIM = """seed = 9
[system]
mode = "continuous"
mu = [1.0, 1.0]
step = 0.01
delta_lo = 2.0
delta_hi = 2.0
a_tilde = 5.0
b_tilde = 5.0
[calibration]
alpha = 0.1
n_mc = 10000
n_trials = 300
[sweep]
mode = "discrete"
steps = [1.0]
deltas = [1.0]
alphas = [0.1]
n_trials = 300
n_mc_tables = 10000
[check]
alpha = 0.01
n_mc = 20000
n_trials = 500
n_calib = 300
n_track = 50
cases = [{ mu = [1.0, 1.0], delta = 2.0, step = 1.0 },
         { mu = [1.0, 1.0], delta = 2.0, step = 0.01, mode = "continuous" }]
"""


def test_criterion_10_byte_identical_outputs(tmp_path, acceptance):
    cfg = tmp_path / "run.toml"
    cfg.write_text(SIM)
    same = {}
    for cmd in ("calibrate", "simulate", "sweep", "check"):
        blobs = []
        for k in range(2):
            out = tmp_path / f"{cmd}{k}.csv"
            code = main([cmd, "--config", str(cfg), "--out", str(out)])
            assert code == 0, cmd
            blob = out.read_bytes()
            if cmd == "calibrate":
                blob += (tmp_path / f"{cmd}{k}_thresholds.csv").read_bytes()
            blobs.append(blob)
        same[cmd] = blobs[0] == blobs[1]
    ok = all(same.values())
    acceptance(10, "repeated subcommands give byte-identical CSV", ok,
               ", ".join(f"{k}={'same' if v else 'DIFFERENT'}" for k, v in same.items()))
    assert ok
