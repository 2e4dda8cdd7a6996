"""Command-line front end: ``lyaprigid {census,rigidity,entropy,riccati} --config FILE``.

Exit status is 0 on success (per-orbit failures are logged, not fatal),
2 for configuration errors and 3 for runtime failures of an experiment.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys

import numpy as np

from . import analysis
from .config import load_config
from .errors import ConfigError, LyapRigidError
from .geodesic import FlowConfig
from .hyperbolic import census_to_csv, enumerate_classes, make_group
from .metric import Bump, ConformalMetric
from .orbits import ShootingConfig, orbits_to_csv
from .riccati import (CurvatureProfile, lyapunov_exponent_periodic, stable_solution,
                      trace_chain_case1, trace_chain_case2, unstable_solution)

log = logging.getLogger("lyaprigid")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def build_group(cfg):
    if cfg.group_kind == "schottky":
        return make_group("schottky", half_width_deg=cfg.half_width_deg)
    return make_group(cfg.group_kind)


def build_metric(cfg, epsilon=None):
    group = build_group(cfg)
    problems = group.check(cfg.separation)
    if problems:
        raise ConfigError("group", "; ".join(problems))
    bumps = [Bump(complex(x, y), r, a) for x, y, r, a in cfg.bumps]
    try:
        return ConformalMetric(group, bumps, cfg.epsilon if epsilon is None else epsilon,
                               cfg.base_curvature, cfg.metric_profile)
    except ValueError as exc:
        raise ConfigError("metric", str(exc)) from None


def _shooting(cfg):
    flow = FlowConfig(rtol=cfg.rtol, atol=cfg.atol)
    return ShootingConfig(fd_step=cfg.fd_step, tol=cfg.shooting_tol,
                          oracle_periods=cfg.oracle_periods, flow=flow)


def _out(cfg):
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg.output_dir


def cmd_census(cfg):
    group = build_group(cfg)
    classes = enumerate_classes(group, cfg.census_max_word_length)
    path = os.path.join(_out(cfg), "census.csv")
    census_to_csv(classes, path)
    log.info("%d classes up to word length %d -> %s", len(classes), cfg.census_max_word_length, path)
    return EXIT_OK


def _eps_tag(eps):
    return f"{eps:.6g}"


def cmd_rigidity(cfg):
    out = _out(cfg)
    sections = []
    spreads = []
    for eps in cfg.epsilons:
        metric = build_metric(cfg, eps)
        rep = analysis.rigidity_experiment(metric, cfg.rigidity_max_word_length, _shooting(cfg),
                                           cfg.grid_resolution, cfg.threads)
        path = os.path.join(out, f"orbits_eps_{_eps_tag(eps)}.csv")
        _write_rows(rep.orbit_rows, path)
        sec = rep.as_json()
        sec["pinched_extremal"] = {
            "b": analysis.pinched_extremal_check(rep, "b"),
            "c": analysis.pinched_extremal_check(rep, "c"),
        }
        sections.append(sec)
        spreads.append(rep.exponent_spread)
        for word, err in rep.failures:
            print(f"warning: class {word} failed: {err}", file=sys.stderr)
        log.info("epsilon %s: spread %.3g over %d orbits", eps, rep.exponent_spread, len(rep.orbit_rows))
    monotone = all(b >= a - analysis.SPREAD_TOL for a, b in zip(spreads, spreads[1:]))
    report = {"command": "rigidity", "seed": cfg.seed, "sections": sections,
              "spread_monotone": {"value": monotone, "tol": analysis.SPREAD_TOL}}
    analysis.dump_json(report, os.path.join(out, "report.json"))
    return EXIT_OK


def _write_rows(rows, path):
    cols = ["word", "period", "chi_plus", "mean_K", "gap", "closure_defect", "oracle_discrepancy"]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(cols)
        for r in rows:
            wr.writerow([r["word"]] + [f"{r[k]:.15g}" for k in cols[1:]])


def cmd_entropy(cfg):
    out = _out(cfg)
    metric = build_metric(cfg)
    rng = np.random.default_rng(cfg.seed)
    rep = analysis.entropy_experiment(metric, cfg.mc_samples, cfg.horizon,
                                      cfg.entropy_max_word_length, rng)
    report = {"command": "entropy", "seed": cfg.seed, "epsilon": metric.epsilon, **rep.as_json()}
    analysis.dump_json(report, os.path.join(out, "report.json"))
    log.info("liouville %.6g +- %.2g, delta %.4g", rep.liouville_entropy, rep.liouville_stderr,
             rep.orbit_growth_exponent)
    return EXIT_OK


def build_profile(section):
    kind = section.get("profile", "constant")
    period = section.get("period", 1.0)
    if kind == "constant":
        return CurvatureProfile.constant(section.get("value", -1.0), period=period)
    if kind == "matrix":
        if "diagonal" not in section:
            raise ConfigError("riccati.diagonal", "matrix profiles need a diagonal")
        diag = [float(x) for x in section["diagonal"].replace(",", " ").split()]
        return CurvatureProfile.constant(np.diag(diag), period=period)
    if kind == "fourier":
        cos = [float(x) for x in section.get("cos", "").replace(",", " ").split()]
        sin = [float(x) for x in section.get("sin", "").replace(",", " ").split()]
        return CurvatureProfile.fourier(section.get("mean", -1.0), cos, sin, period)
    if "path" not in section:
        raise ConfigError("riccati.path", "sampled profiles need a CSV path")
    try:
        data = np.loadtxt(section["path"], delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ConfigError("riccati.path", str(exc)) from None
    return CurvatureProfile.sampled(data[:, 0], data[:, 1], periodic=True)


def cmd_riccati(cfg):
    out = _out(cfg)
    prof = build_profile(cfg.riccati)
    uns = unstable_solution(prof)
    sta = stable_solution(prof)
    uns.to_csv(os.path.join(out, "unstable.csv"))
    sta.to_csv(os.path.join(out, "stable.csv"))
    rep = lyapunov_exponent_periodic(prof, oracle_periods=cfg.riccati.get("oracle_periods", 500),
                                     solution=uns)
    b, c = prof.bounds
    c1 = trace_chain_case1(prof, b=b, solution=uns)
    c2 = trace_chain_case2(prof, c=c, solution=uns)
    report = {
        "command": "riccati",
        "bounds": {"b": b, "c": c},
        "exponent": {k: analysis._val(v, tol=1e-6) if isinstance(v, float) else v
                     for k, v in rep.as_dict().items()},
        "unstable": {"residual": uns.residual, "periodicity_defect": uns.periodicity_defect},
        "stable": {"residual": sta.residual, "periodicity_defect": sta.periodicity_defect},
        "case1": {"floor": c1.floor, "mean_trace": c1.mean_trace,
                  "pointwise_trace_excess": c1.pointwise_trace_excess,
                  "hypothesis_holds": c1.hypothesis_holds,
                  "ricci_deviation": c1.ricci_deviation, "pinching_breach": c1.pinching_breach},
        "case2": {"A": c2.A, "B": c2.B, "C": c2.C, "D": c2.D, "end": c2.end,
                  "tight": c2.tight(), "strict_links": c2.strict_links()},
    }
    analysis.dump_json(report, os.path.join(out, "report.json"))
    return EXIT_OK


COMMANDS = {"census": cmd_census, "rigidity": cmd_rigidity, "entropy": cmd_entropy,
            "riccati": cmd_riccati}


def make_parser():
    p = argparse.ArgumentParser(prog="lyaprigid", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="INI experiment file")
    p.add_argument("--out", help="output directory (overrides run.output_dir)")
    p.add_argument("--threads", type=int, help="worker processes for orbit refinement")
    p.add_argument("--seed", type=int, help="overrides run.seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, seed=args.seed, output_dir=args.out)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads", "must be at least 1")
            cfg.threads = args.threads
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LyapRigidError, ValueError, ArithmeticError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
