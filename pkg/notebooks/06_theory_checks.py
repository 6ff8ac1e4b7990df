"""
The theory-check suite
======================

Runs every inequality the toolkit relies on over the default matrix of
configurations and writes one CSV row per inequality. ``dsprt check`` does the
same from a config file and exits with code 2 on any failure.

A negative control follows: inflating the bit weights by half must be caught.
"""

# %%
from dsprt.experiments import CheckCase, run_theory_checks

report = run_theory_checks(seed=0)
report.to_csv("theory_checks.csv")
print(f"{len(report.results)} checks, {len(report.failures)} failures")
for prefix in ("weight", "kl_rate", "lorden", "wald", "stop_gap", "kl_gap", "envelope",
               "tracking", "theta_vs_h"):
    rows = report.by_check(prefix)
    print(f"{prefix:10s} {len(rows):4d} checks, smallest margin {min(r.margin for r in rows):.4g}")

# %%
bad = run_theory_checks([CheckCase((1.0, 1.0), 2.0, 1.0)], alpha=1e-2, n_mc=10**5,
                        n_trials=2000, seed=1, weight_scale=1.5)
print("with inflated weights:", sorted({r.check.split("[")[0] for r in bad.failures}))
