"""
Calibrating the fusion thresholds
=================================

The fusion center stops when its statistic leaves (-A~, B~). The thresholds
are found by bisection on Monte Carlo error estimates, then checked against
the analytic envelope |log beta| + C. The same steps are available from the
command line as ``dsprt calibrate``.
"""

# %%
from dsprt.calibration import (calibrate_fusion_thresholds, envelope_thresholds,
                               estimate_tables, write_calibration_csv)
from dsprt.fusion import FusionConfig
from dsprt.models import ErrorLevels
from dsprt.simkernel import build_system

levels = ErrorLevels(1e-3, 1e-3)

# %%
# Continuous time: the bit weights equal the local thresholds.
base = build_system([1.0, 1.0], 2.0, 1e-3, "continuous")
cfg = base.with_fusion(FusionConfig.from_thresholds(base.thresholds, 1e9, 1e9))
cal = calibrate_fusion_thresholds(cfg, levels, 2000, seed=1, estimator="importance")
print("continuous:", round(cal.a, 3), round(cal.b, 3), "envelope", envelope_thresholds(cfg, levels))
print("  alpha", cal.alpha, "\n  beta ", cal.beta)

# %%
# Discrete time: estimate the weights first and keep them as a CSV table.
base = build_system([1.0, 0.5], 1.0, 1.0, "discrete")
tables = estimate_tables(base, 10**6, seed=2)
write_calibration_csv(tables, "tables_discrete.csv")
cfg = base.with_fusion(FusionConfig.from_tables(tables, 1e9, 1e9))
cal = calibrate_fusion_thresholds(cfg, levels, 5000, seed=3, estimator="importance")
print("discrete:", round(cal.a, 3), round(cal.b, 3), "after", cal.evaluations, "evaluations")
