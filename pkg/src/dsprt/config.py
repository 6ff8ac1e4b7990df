"""TOML run configuration.

A run file has up to four tables. ``[system]`` describes the sensors and the
fusion center, ``[calibration]`` the error targets and Monte Carlo sizes,
``[sweep]`` the fields of :class:`~dsprt.experiments.SweepSpec` one to one and
``[check]`` the theory-check matrix. Unknown tables or keys are rejected::

    [system]
    mode = "discrete"      # or "continuous"
    mu = [1.0, 1.0]        # one drift per sensor
    step = 1.0             # h in discrete mode, dt in continuous mode
    delta_lo = 1.0         # scalar or one value per sensor
    delta_hi = 1.0
    a_tilde = 6.9          # fusion thresholds (optional for calibrate)
    b_tilde = 6.9
    truth = 1
    # w_lo, w_hi: explicit fusion weights; tables: path to a calibration CSV

    [calibration]
    alpha = 1e-3
    beta = 1e-3
    n_mc = 1000000         # cycles per hypothesis for the bit-weight tables
    n_trials = 5000        # trials per bisection step
    estimator = "importance"
"""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .experiments import CheckCase, DEFAULT_MATRIX, SweepSpec
from .fusion import FusionConfig
from .models import HypothesisModel
from .sensor import LocalThresholds
from .simkernel import SystemConfig


@dataclass(frozen=True)
class SystemSection:
    mode: str = "discrete"
    mu: tuple = (1.0, 1.0)
    step: float = 1.0
    delta_lo: Any = 1.0
    delta_hi: Any = 1.0
    a_tilde: Optional[float] = None
    b_tilde: Optional[float] = None
    w_lo: Optional[tuple] = None
    w_hi: Optional[tuple] = None
    tables: Optional[str] = None
    truth: int = 1
    max_steps: Optional[int] = None

    def per_sensor(self, value, name: str) -> tuple:
        K = len(self.mu)
        if isinstance(value, (int, float)):
            return (float(value),) * K
        value = tuple(float(v) for v in value)
        if len(value) != K:
            raise ConfigError(f"system.{name} needs {K} values, got {len(value)}")
        return value

    def build(self, fusion: Optional[FusionConfig] = None) -> SystemConfig:
        """The :class:`SystemConfig`; fusion weights come from ``fusion`` if given."""
        if not self.mu:
            raise ConfigError("system.mu must list at least one drift")
        make = HypothesisModel.brownian if self.mode == "continuous" else HypothesisModel.gaussian
        try:
            models = tuple(make(float(m), float(self.step)) for m in self.mu)
            thresholds = tuple(LocalThresholds(lo, hi) for lo, hi in
                               zip(self.per_sensor(self.delta_lo, "delta_lo"),
                                   self.per_sensor(self.delta_hi, "delta_hi")))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if fusion is None and self.w_lo is not None and self.w_hi is not None:
            fusion = FusionConfig(1e9, 1e9, self.per_sensor(self.w_lo, "w_lo"),
                                  self.per_sensor(self.w_hi, "w_hi"))
        if fusion is None and self.mode == "continuous":
            fusion = FusionConfig.from_thresholds(thresholds, 1e9, 1e9)
        if fusion is not None and self.a_tilde is not None and self.b_tilde is not None:
            fusion = fusion.with_thresholds(float(self.a_tilde), float(self.b_tilde))
        return SystemConfig(models, thresholds, fusion, int(self.truth), self.mode,
                            self.max_steps)


@dataclass(frozen=True)
class CalibrationSection:
    alpha: float = 1e-2
    beta: Optional[float] = None
    n_mc: int = 1_000_000
    n_trials: int = 5000
    estimator: str = "importance"
    tol: float = 0.01

    @property
    def beta_value(self) -> float:
        return self.alpha if self.beta is None else self.beta


@dataclass(frozen=True)
class CheckSection:
    alpha: float = 1e-3
    n_mc: int = 1_000_000
    n_trials: int = 20_000
    n_calib: int = 2000
    n_track: int = 500
    weight_scale: float = 1.0
    cases: tuple = DEFAULT_MATRIX


@dataclass(frozen=True)
class RunConfig:
    system: SystemSection = SystemSection()
    calibration: CalibrationSection = CalibrationSection()
    sweep: Optional[SweepSpec] = None
    check: CheckSection = CheckSection()
    seed: int = 0


def _section(cls, data: dict, name: str):
    if not isinstance(data, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
    vals = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return cls(**vals)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


def _cases(raw) -> tuple:
    out = []
    for k, c in enumerate(raw):
        c = dict(c)
        if "mu" in c:
            c["mu"] = tuple(float(m) for m in c["mu"])
        out.append(_section(CheckCase, c, f"check.cases[{k}]"))
    return tuple(out)


def parse_config(data: dict) -> RunConfig:
    known = {"system", "calibration", "sweep", "check", "seed"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    check = dict(data.get("check", {}))
    if "cases" in check:
        check["cases"] = _cases(check["cases"])
    return RunConfig(
        system=_section(SystemSection, data.get("system", {}), "system"),
        calibration=_section(CalibrationSection, data.get("calibration", {}), "calibration"),
        sweep=_section(SweepSpec, data["sweep"], "sweep") if "sweep" in data else None,
        check=_section(CheckSection, check, "check"),
        seed=int(data.get("seed", 0)),
    )


def load_config(path) -> RunConfig:
    """Read and validate a TOML run file; every problem raises :class:`ConfigError`."""
    try:
        with open(Path(path), "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return parse_config(data)
