"""
Local level-triggered sampling and the bit weights
==================================================

Each sensor runs a repeated SPRT on its own stream and sends one bit every
time its restarted log-likelihood ratio leaves (-Delta, Delta). This script
measures what a bit is worth: the weights Lambda, the per-message K-L numbers
I0 and I1, the mean overshoot theta and the mean intersampling period.
"""

# %%
# The continuous-time picture: with Brownian observations the accumulator
# exits exactly at the thresholds, so a bit is worth exactly Delta and the mean
# period has a closed form.
from dsprt.calibration import estimate_quantization, kl_lower_bounds, lorden_overshoot_bound
from dsprt.experiments import threshold_size_advisor
from dsprt.models import HypothesisModel, brownian_mean_period
from dsprt.sensor import LocalThresholds

print("closed-form mean period, mu=1, Delta=2:", brownian_mean_period(1.0, 2.0, 2.0))

fine = estimate_quantization(HypothesisModel.brownian(1.0, 1e-3), LocalThresholds.symmetric(2.0),
                             10**5, seed=1)
print(f"Euler dt=1e-3: periods {fine.mean_period0:.4f} / {fine.mean_period1:.4f}, "
      f"weights {fine.lambda_lo:.4f} / {fine.lambda_hi:.4f}")

# %%
# Discrete time: i.i.d. Gaussian samples every h. The accumulator now jumps
# past the threshold, so a bit carries more than Delta and the overshoot
# theta is what the decentralized test loses per message.
print(f"{'h':>5} {'Delta':>5} {'Lambda':>8} {'I1':>7} {'I lower':>8} {'theta':>7} "
      f"{'Lorden':>7} {'period':>7}")
for h in (1.0, 0.1):
    for delta in (1.0, 2.0):
        th = LocalThresholds.symmetric(delta)
        t = estimate_quantization(HypothesisModel.gaussian(1.0, h), th, 10**6, seed=7)
        print(f"{h:5g} {delta:5g} {t.lambda_hi:8.4f} {t.i1:7.4f} {kl_lower_bounds(th)[1]:8.4f} "
              f"{t.theta_hat:7.4f} {lorden_overshoot_bound(HypothesisModel.gaussian(1.0, h), 1):7.4f} "
              f"{t.mean_period1:7.3f}")

# %%
# Sizing Delta: the overshoot loss grows with the number of messages while
# the communication rate falls with Delta. sqrt(theta |log alpha|) balances
# the two orders of magnitude.
for h in (1.0, 0.1):
    theta = estimate_quantization(HypothesisModel.gaussian(1.0, h), LocalThresholds.symmetric(1.0),
                                  10**5, seed=3).theta_hat
    print(f"h={h:g}: theta={theta:.3f}, suggested Delta at alpha=1e-4: "
          f"{threshold_size_advisor(theta, 1e-4):.2f}")
