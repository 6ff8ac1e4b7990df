"""Command line entry point: ``dsprt {calibrate,simulate,sweep,check}``.

Exit codes: 0 success, 1 usage or configuration error, 2 theory-check
failure, 3 calibration failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .calibration import (calibrate_fusion_thresholds, estimate_tables, read_calibration_csv,
                          write_calibration_csv)
from .config import RunConfig, load_config
from .errors import CalibrationError, ConfigError
from .experiments import _fmt, run_sweep, run_theory_checks, write_sweep_csv
from .fusion import FusionConfig
from .models import ErrorLevels
from .simkernel import SystemConfig, run_dsprt_batch

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_CALIBRATION = 0, 1, 2, 3

TRIAL_LOG_FIELDS = ["seed", "decision", "stop_time", "u_at_stop", "u_tilde_at_stop",
                    "msg_count_total"]
THRESHOLD_FIELDS = ["a_tilde", "b_tilde", "alpha", "beta", "achieved_alpha", "se_alpha",
                    "upper_alpha", "achieved_beta", "se_beta", "upper_beta", "envelope_a",
                    "envelope_b", "estimator", "n_trials", "seed"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dsprt", description="Decentralized SPRT simulator and calibration toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "calibrate": "estimate bit weights and calibrate fusion thresholds",
        "simulate": "run D-SPRT trials and write the raw trial log",
        "sweep": "operating-characteristic sweep over error levels",
        "check": "run the theory-check suite",
    }
    for name, text in helps.items():
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=name != "check", help="TOML run file")
        s.add_argument("--seed", type=int, help="root seed (overrides the file)")
        s.add_argument("--trials", type=int, help="trials per point (overrides the file)")
        s.add_argument("--out", required=True, help="output CSV path")
        s.add_argument("--threads", type=int, default=1, help="worker threads")
    return p


def _write(path, header, rows) -> None:
    lines = [",".join(header)] + [",".join(_fmt(v) for v in r) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _companion(out: str, suffix: str) -> Path:
    p = Path(out)
    return p.with_name(f"{p.stem}_{suffix}{p.suffix or '.csv'}")


def _system(rc: RunConfig, seed: int, need_thresholds: bool) -> SystemConfig:
    sec = rc.system
    fusion = None
    if sec.mode == "discrete" and sec.w_lo is None:
        if sec.tables:
            tables = read_calibration_csv(sec.tables)
        else:
            base = sec.build()
            tables = estimate_tables(base, rc.calibration.n_mc, seed)
        fusion = FusionConfig.from_tables(tables, 1e9, 1e9)
    cfg = sec.build(fusion)
    if need_thresholds and (sec.a_tilde is None or sec.b_tilde is None):
        raise ConfigError("system.a_tilde and system.b_tilde are required")
    return cfg


def cmd_calibrate(rc: RunConfig, args) -> int:
    seed = rc.seed if args.seed is None else args.seed
    cal = rc.calibration
    n = args.trials or cal.n_trials
    base = rc.system.build()
    if base.mode == "discrete":
        tables = estimate_tables(base, cal.n_mc, seed)
        write_calibration_csv(tables, args.out)
        cfg = base.with_fusion(FusionConfig.from_tables(tables, 1e9, 1e9))
    else:
        cfg = base
        _write(args.out, ["sensor", "delta_lo", "delta_hi", "lambda_lo", "lambda_hi"],
               [(i, t.delta_lo, t.delta_hi, t.delta_lo, t.delta_hi)
                for i, t in enumerate(cfg.thresholds)])
    levels = ErrorLevels(cal.alpha, cal.beta_value)
    res = calibrate_fusion_thresholds(cfg, levels, n, seed, cal.estimator, cal.tol, args.threads)
    _write(_companion(args.out, "thresholds"), THRESHOLD_FIELDS, [(
        res.a, res.b, levels.alpha, levels.beta, res.alpha.value, res.alpha.se, res.alpha.upper,
        res.beta.value, res.beta.se, res.beta.upper, res.envelope_a, res.envelope_b,
        res.estimator, n, seed)])
    print(f"a_tilde={res.a:.6g} b_tilde={res.b:.6g} alpha_hat={res.alpha.value:.3g} "
          f"beta_hat={res.beta.value:.3g}")
    return EXIT_OK


def cmd_simulate(rc: RunConfig, args) -> int:
    seed = rc.seed if args.seed is None else args.seed
    n = args.trials or rc.calibration.n_trials
    cfg = _system(rc, seed, need_thresholds=True)
    batch = run_dsprt_batch(cfg, n, seed, args.threads)
    totals = batch.msg_counts.sum(axis=1)
    _write(args.out, TRIAL_LOG_FIELDS,
           [(int(batch.seeds[k]), int(batch.decision[k]), batch.stop_time[k], batch.u[k],
             batch.u_tilde[k], int(totals[k])) for k in range(len(batch))])
    d, se = batch.mean_delay()
    print(f"trials={n} errors={batch.n_errors} aborted={batch.n_aborted} "
          f"mean_delay={d:.6g}+-{se:.2g}")
    return EXIT_OK


def cmd_sweep(rc: RunConfig, args) -> int:
    if rc.sweep is None:
        raise ConfigError("the config has no [sweep] table")
    spec = rc.sweep
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["n_trials"] = args.trials
    try:
        spec = dataclasses.replace(spec, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_sweep_csv(run_sweep(spec, args.threads), args.out)
    return EXIT_OK


def cmd_check(rc: RunConfig, args) -> int:
    c = rc.check
    seed = rc.seed if args.seed is None else args.seed
    rep = run_theory_checks(c.cases, alpha=c.alpha, n_mc=c.n_mc,
                            n_trials=args.trials or c.n_trials, n_calib=c.n_calib,
                            n_track=c.n_track, seed=seed, weight_scale=c.weight_scale,
                            threads=args.threads)
    rep.to_csv(args.out)
    for r in rep.failures:
        print(f"FAIL {r.check} [{r.case}] lhs={r.lhs:.6g} rhs={r.rhs:.6g}", file=sys.stderr)
    print(f"{len(rep.results) - len(rep.failures)}/{len(rep.results)} checks passed")
    return EXIT_OK if rep.passed else EXIT_CHECK


COMMANDS = {"calibrate": cmd_calibrate, "simulate": cmd_simulate, "sweep": cmd_sweep,
            "check": cmd_check}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if args.trials is not None and args.trials < 1:
            raise ConfigError("--trials must be at least 1")
        rc = load_config(args.config) if args.config else RunConfig()
        return COMMANDS[args.command](rc, args)
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
