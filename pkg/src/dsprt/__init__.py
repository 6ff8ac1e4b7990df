"""Decentralized sequential probability ratio test: simulation and calibration.

K sensors observe independent streams, run local repeated SPRTs and send one
bit each time their restarted log-likelihood ratio leaves (-Delta_lo,
Delta_hi). A fusion center accumulates the bits into an approximate global
statistic and stops when it leaves (-A~, B~). The package simulates this
scheme next to the centralized SPRT, calibrates every threshold involved and
checks the accompanying bounds by Monte Carlo.
"""
from .calibration import (QuantizationTable, ThresholdCalibration, calibrate_fusion_thresholds,
                          calibrate_sprt_thresholds, estimate_quantization, estimate_tables,
                          kl_lower_bounds, lorden_overshoot_bound, read_calibration_csv,
                          write_calibration_csv)
from .errors import CalibrationError, ConfigError, DsprtError, KernelError
from .experiments import (CheckCase, SweepRow, SweepSpec, TheoryReport, curve_value_at,
                          operating_curve, run_sweep, run_theory_checks, threshold_size_advisor,
                          write_sweep_csv)
from .fusion import FusionConfig, FusionState, Status, fusion_apply, fusion_batch
from .models import (ErrorLevels, HypothesisModel, ModelKind, SprtPerformance, h_function,
                     llr_increment, sprt_kl_lower_bounds, sprt_performance_brownian,
                     wald_thresholds)
from .sensor import LocalThresholds, Message, SensorState, sensor_step
from .simkernel import (SystemConfig, TrialBatch, TrialResult, build_system,
                        run_centralized_sprt_trial, run_deterministic_sampling_sprt_trial,
                        run_dsprt_batch, run_dsprt_trial, run_sprt_batch, wald_identity_check)

__version__ = "0.1.0"
