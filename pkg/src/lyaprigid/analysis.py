"""Rigidity and entropy experiments over an orbit census."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ChainViolation, InsufficientSamples, LyapRigidError
from .geodesic import FlowConfig, PhasePoint, curvature_along, flow
from .hyperbolic import enumerate_classes, growth_exponent
from .metric import ConformalMetric, curvature_bounds
from .orbits import ShootingConfig, orbit_exponent, refine_orbit
from .riccati import (StepControl, period_mean, trace_chain_case1, trace_chain_case2,
                      unstable_solution)

log = logging.getLogger(__name__)

GAP_TOL = 1e-6
SPREAD_TOL = 1e-6

INFINITE_AREA_CAVEAT = (
    "The Schottky quotient has infinite area. Its orbit growth exponent is the "
    "limit-set dimension, which lies strictly below the Liouville-side value; "
    "the two are not expected to agree on this group."
)


def _val(value, tol=None, stderr=None):
    out = {"value": value}
    if tol is not None:
        out["tol"] = tol
    if stderr is not None:
        out["stderr"] = stderr
    return out


@dataclass
class RigidityReport:
    epsilon: float
    bounds: tuple
    orbit_rows: list
    exponent_spread: float
    curvature_spread: float
    per_orbit_gaps: list
    case1: list
    case2: list
    failures: list = field(default_factory=list)
    u_ranges: list = field(default_factory=list)
    curvature_deviation: list = field(default_factory=list)
    orbits: list = field(default_factory=list, repr=False)

    @property
    def ruelle_ok(self):
        """Atomic orbit measures have zero entropy, so ``0 <= chi_plus`` must hold."""
        return all(r["chi_plus"] >= 0 for r in self.orbit_rows)

    def as_json(self):
        b, c = self.bounds
        return {
            "epsilon": self.epsilon,
            "curvature_bounds": {"b": _val(b, tol=1e-3), "c": _val(c, tol=1e-3)},
            "exponent_spread": _val(self.exponent_spread, tol=SPREAD_TOL),
            "curvature_spread": _val(self.curvature_spread, tol=1e-3),
            "min_gap": _val(min(self.per_orbit_gaps) if self.per_orbit_gaps else None, tol=GAP_TOL),
            "ruelle_nonnegative_exponents": self.ruelle_ok,
            "orbits": [
                {
                    "word": r["word"],
                    "chi_plus": _val(r["chi_plus"], tol=GAP_TOL, stderr=r["oracle_discrepancy"]),
                    "gap": _val(r["gap"], tol=GAP_TOL),
                    "period": _val(r["period"], tol=1e-8),
                    "closure_defect": _val(r["closure_defect"], tol=1e-8),
                    "case1": c1,
                    "case2": c2,
                }
                for r, c1, c2 in zip(self.orbit_rows, self.case1, self.case2)
            ],
            "failures": [{"word": w, "error": e} for w, e in self.failures],
        }


def _chain_dicts(orbit, b, c):
    sol = orbit.solution
    prof = orbit.profile
    c1 = trace_chain_case1(prof, b=b, tol=GAP_TOL, solution=sol)
    case1 = {
        "floor": _val(c1.floor),
        "mean_trace": _val(c1.mean_trace, tol=GAP_TOL),
        "pointwise_trace_excess": _val(c1.pointwise_trace_excess),
        "hypothesis_holds": c1.hypothesis_holds,
        "ricci_deviation": _val(c1.ricci_deviation, tol=1e-5),
        "pinching_breach": c1.pinching_breach,
    }
    try:
        c2 = trace_chain_case2(prof, c=c, tol=GAP_TOL, solution=sol)
        case2 = {k: _val(getattr(c2, k), tol=GAP_TOL) for k in ("A", "B", "C", "D", "end")}
        case2["tight"] = c2.tight(GAP_TOL)
        case2["violation"] = None
    except ChainViolation as exc:
        case2 = {"tight": False, "violation": {"link": exc.link, "magnitude": exc.magnitude}}
    return case1, case2


def _orbit_record(args):
    metric, cls, shooting, b, c, keep = args
    try:
        orbit = refine_orbit(metric, cls, shooting)
        orbit_exponent(metric, orbit, oracle_periods=shooting.oracle_periods)
    except LyapRigidError as exc:
        return {"word": cls.word, "error": f"{type(exc).__name__}: {exc}"}
    case1, case2 = _chain_dicts(orbit, b, c)
    u = orbit.solution.u
    K = orbit.profile.scalar(orbit.solution.t)
    rec = {
        "word": cls.word,
        "row": orbit.row(),
        "case1": case1,
        "case2": case2,
        "u_range": (float(u.min()), float(u.max())),
        "K_dev": {"b": float(np.max(np.abs(K + b * b))), "c": float(np.max(np.abs(K + c * c)))},
    }
    if keep:
        rec["orbit"] = orbit
    return rec


def rigidity_experiment(metric, max_word_length, shooting=None, grid_resolution=200, threads=1):
    """Refine every census class, compute exponents and both trace chains.

    Per-class failures are logged in ``failures`` and do not abort the run.
    """
    shooting = shooting or ShootingConfig()
    b, c, _ = curvature_bounds(metric, grid_resolution)
    classes = enumerate_classes(metric.group, max_word_length)
    keep = threads <= 1
    jobs = [(metric, cl, shooting, b, c, keep) for cl in classes]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_orbit_record, jobs))
    else:
        records = [_orbit_record(j) for j in jobs]

    rows, case1, case2, fails, ranges, orbits, kdev = [], [], [], [], [], [], []
    for rec in records:
        if "error" in rec:
            log.warning("class %s failed: %s", rec["word"], rec["error"])
            fails.append((rec["word"], rec["error"]))
            continue
        rows.append(rec["row"])
        case1.append(rec["case1"])
        case2.append(rec["case2"])
        ranges.append(rec["u_range"])
        kdev.append(rec["K_dev"])
        if "orbit" in rec:
            orbits.append(rec["orbit"])
    chis = [r["chi_plus"] for r in rows]
    spread = max(chis) - min(chis) if chis else math.nan
    return RigidityReport(metric.epsilon, (b, c), rows, spread, c * c - b * b,
                          [r["gap"] for r in rows], case1, case2, fails, ranges, kdev, orbits)


def pinched_extremal_check(report, alpha="b", tol=1e-6, forcing_tol=1e-5):
    """Test the extremal hypothesis ``chi_plus = alpha`` orbit by orbit.

    Orbits meeting the hypothesis must carry constant curvature ``-alpha^2``
    along them (``sup |K + alpha^2| < forcing_tol``); the others record
    their slack ``|chi_plus - alpha|``.
    """
    if alpha not in ("b", "c"):
        raise ValueError("alpha must be 'b' or 'c'")
    b, c = report.bounds
    a = b if alpha == "b" else c
    out = []
    devs = report.curvature_deviation or [None] * len(report.orbit_rows)
    for row, dev in zip(report.orbit_rows, devs):
        slack = abs(row["chi_plus"] - a)
        holds = slack < tol
        entry = {"word": row["word"], "alpha": alpha, "alpha_value": a,
                 "hypothesis_holds": holds, "slack": slack,
                 "curvature_deviation": None, "forced": None}
        if holds and dev is not None:
            entry["curvature_deviation"] = dev[alpha]
            entry["forced"] = dev[alpha] < forcing_tol
        out.append(entry)
    return out


def extremal_profile_check(profile, b, tol=1e-6):
    """Case-1 forcing on a single scalar periodic profile.

    Returns a dict with the hypothesis status (mean of ``u`` at ``b`` and
    ``u >= b`` pointwise), ``sup |u - b|``, ``sup |K + b^2|`` and a breach
    flag raised when ``u`` dips below ``b``.
    """
    sol = unstable_solution(profile)
    c1 = trace_chain_case1(profile, b=b, tol=tol, solution=sol)
    u = sol.u
    K = profile.scalar(sol.t)
    return {
        "mean_u": c1.mean_trace,
        "hypothesis_holds": c1.hypothesis_holds and not c1.pinching_breach,
        "pinching_breach": c1.pinching_breach,
        "sup_u_dev": float(np.max(np.abs(u - b))),
        "sup_K_dev": float(np.max(np.abs(K + b * b))),
    }


@dataclass
class EntropyReport:
    liouville_entropy: float
    liouville_stderr: float
    mc_samples: int
    accepted: int
    horizon: float
    orbit_growth_exponent: float
    growth_stderr: float
    growth_fit: dict
    census_size: int
    max_word_length: int
    group_kind: str
    caveat: str

    @property
    def acceptance_rate(self):
        return self.accepted / self.mc_samples if self.mc_samples else 0.0

    @property
    def delta_below_liouville(self):
        return self.orbit_growth_exponent < self.liouville_entropy

    def as_json(self):
        return {
            "liouville_entropy": _val(self.liouville_entropy, stderr=self.liouville_stderr),
            "orbit_growth_exponent": _val(self.orbit_growth_exponent, stderr=self.growth_stderr),
            "growth_fit": self.growth_fit,
            "samples": {"drawn": self.mc_samples, "accepted": self.accepted,
                        "acceptance_rate": self.acceptance_rate},
            "horizon": self.horizon,
            "census_size": self.census_size,
            "max_word_length": self.max_word_length,
            "group": self.group_kind,
            "delta_below_liouville": self.delta_below_liouville,
            "caveat": self.caveat,
        }


def _sample_start(group, rng):
    while True:
        z = complex(*rng.uniform(-1.0, 1.0, 2))
        if abs(z) < 1 and group.in_domain(z) and not group.in_funnel(z):
            return PhasePoint(z, float(rng.uniform(0.0, 2 * math.pi)))


def birkhoff_unstable_average(metric, start, horizon, config, oversample=8):
    """``(1/T) int u_u dt`` along the flow line of ``start``, or ``None`` if it escapes.

    The residual grid is ``oversample`` times finer than the trajectory
    samples so that spline wiggles at bump-support edges are resolved.
    """
    traj = flow(metric, start, horizon, config)
    if traj.escaped:
        return None
    prof = curvature_along(metric, traj)
    control = StepControl(samples=max(StepControl.samples, oversample * len(traj.t)))
    sol = unstable_solution(prof, step_control=control)
    return period_mean(sol.t, sol.u)


def entropy_experiment(metric, mc_samples, horizon, max_word_length, rng=None,
                       flow_config=None, min_acceptance=0.1):
    """Pesin-side Liouville estimate next to the census growth exponent.

    ``rng`` must be a seeded :class:`numpy.random.Generator`; starts are
    uniform over the fundamental-domain chart region outside the funnels
    and uniform in angle.  Trajectories leaving the convex core before
    ``horizon`` are discarded.
    """
    if mc_samples <= 0:
        raise InsufficientSamples("mc_samples must be positive")
    rng = rng if rng is not None else np.random.default_rng(0)
    cfg = flow_config or FlowConfig(rtol=1e-10, atol=1e-12, sample_dt=0.02)
    group = metric.group
    values = []
    for _ in range(mc_samples):
        start = _sample_start(group, rng)
        v = birkhoff_unstable_average(metric, start, horizon, cfg)
        if v is not None:
            values.append(v)
    if len(values) < max(1, math.ceil(min_acceptance * mc_samples)):
        raise InsufficientSamples(
            f"only {len(values)} of {mc_samples} trajectories stayed in the convex core")
    vals = np.array(values)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
    classes = enumerate_classes(group, max_word_length)
    fit = growth_exponent(group, max_word_length, classes)
    caveat = INFINITE_AREA_CAVEAT if group.kind == "schottky" else (
        "Compact quotient: topological and Liouville entropy are expected to agree "
        "only for constant curvature.")
    return EntropyReport(mean, se, mc_samples, int(vals.size), float(horizon), fit.delta,
                         fit.stderr, fit.as_dict(), len(classes), max_word_length,
                         group.kind, caveat)


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not JSON serializable: {type(x)}")
