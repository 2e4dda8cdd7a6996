"""Closed geodesics of a perturbed metric by multiple shooting.

A class ``g`` is refined in the universal cover: the unknowns are ``m``
segment starts ``s_k = (x_k, y_k, theta_k)`` and the period ``T``; the
equations ask each segment, flowed for ``T / m``, to land on the next start
and the last one to land on ``g(s_0)``, plus a phase condition placing
``z_0`` on the chart line through the seed orthogonal to the seed axis.
"""

from __future__ import annotations

import cmath
import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, WrongDeckWord
from .geodesic import FlowConfig, PhasePoint, Trajectory, curvature_along, flow, flow_map
from .hyperbolic import GeodesicClass, axis_points, axis_tangent, fundamental_domain_project
from .riccati import (CurvatureProfile, LyapunovReport, RiccatiSolution, StepControl,
                      lyapunov_exponent_periodic, unstable_solution)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShootingConfig:
    segments: int | None = None
    fd_step: float = 1e-6
    tol: float = 1e-10
    max_iter: int = 12
    continuation: int = 4
    profile_density: int = 512
    oracle_periods: int = 500
    flow: FlowConfig = field(default_factory=lambda: FlowConfig(rtol=1e-12, atol=1e-13))


@dataclass
class PeriodicOrbit:
    cls: GeodesicClass
    period: float
    start: PhasePoint
    closure_defect: float
    shooting_residual: float
    deck_word: str
    iterations: int
    history: list = field(default_factory=list)
    profile: CurvatureProfile | None = field(default=None, repr=False)
    trajectory: Trajectory | None = field(default=None, repr=False)
    exponent_report: LyapunovReport | None = None
    solution: RiccatiSolution | None = field(default=None, repr=False)

    @property
    def word(self):
        return self.cls.word

    def row(self):
        rep = self.exponent_report
        mean_K = -rep.mean_curvature_bound ** 2 if rep is not None else math.nan
        return {
            "word": self.word,
            "period": self.period,
            "chi_plus": rep.chi_plus if rep else math.nan,
            "mean_K": mean_K,
            "gap": rep.gap if rep else math.nan,
            "closure_defect": self.closure_defect,
            "oracle_discrepancy": rep.oracle_discrepancy if rep else math.nan,
        }


ORBIT_COLUMNS = ["word", "period", "chi_plus", "mean_K", "gap", "closure_defect",
                 "oracle_discrepancy"]


def _wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


def _state(p):
    return np.array([p.position.real, p.position.imag, p.angle])


def _point(v):
    return PhasePoint(complex(v[0], v[1]), float(v[2]))


def _phase_distance(p, q):
    return math.hypot(abs(p.position - q.position), _wrap(p.angle - q.angle))


def segment_count(length, scale=1.0):
    return max(2, int(math.ceil(length / scale)))


def _seed(metric, cls, m):
    g = cls.transform
    pts = axis_points(g, m)
    starts = []
    for z in pts:
        v = axis_tangent(g, z)
        starts.append(PhasePoint(complex(z), cmath.phase(v)))
    return starts, cls.length / metric.scale


class _Shooting:
    def __init__(self, metric, cls, m, cfg):
        self.metric = metric
        self.g = cls.transform
        self.m = m
        self.cfg = cfg
        seeds, _ = _seed(metric, cls, 1)
        self.anchor = seeds[0].position
        self.normal = cmath.exp(1j * seeds[0].angle)

    def pack(self, starts, T):
        return np.concatenate([np.concatenate([_state(p) for p in starts]), [T]])

    def unpack(self, x):
        m = self.m
        return [_point(x[3 * k:3 * k + 3]) for k in range(m)], float(x[-1])

    def segment(self, x, k, T):
        return _state(flow_map(self.metric, _point(x[3 * k:3 * k + 3]), T / self.m, self.cfg.flow))

    def residual_from(self, x, ends):
        m = self.m
        F = np.empty(3 * m + 1)
        for k in range(m - 1):
            d = ends[k] - x[3 * (k + 1):3 * (k + 2)]
            F[3 * k:3 * k + 3] = d
        s0 = _point(x[:3]).transformed(self.g)
        e = ends[m - 1]
        F[3 * (m - 1):3 * m] = [e[0] - s0.position.real, e[1] - s0.position.imag,
                                _wrap(e[2] - s0.angle)]
        dz = complex(x[0], x[1]) - self.anchor
        F[-1] = (dz * self.normal.conjugate()).real
        return F

    def ends(self, x):
        T = x[-1]
        return [self.segment(x, k, T) for k in range(self.m)]

    def jacobian(self, x, ends0):
        m = self.m
        h = self.cfg.fd_step
        F0 = self.residual_from(x, ends0)
        J = np.empty((F0.size, x.size))
        T = x[-1]
        for j in range(x.size - 1):
            k = j // 3
            xp = x.copy()
            xp[j] += h
            ends = list(ends0)
            ends[k] = self.segment(xp, k, T)
            J[:, j] = (self.residual_from(xp, ends) - F0) / h
        xp = x.copy()
        xp[-1] += h
        J[:, -1] = (self.residual_from(xp, self.ends(xp)) - F0) / h
        return F0, J


def _newton(shoot, x, cfg):
    history = []
    ends = shoot.ends(x)
    F = shoot.residual_from(x, ends)
    res = float(np.max(np.abs(F)))
    history.append(res)
    it = 0
    while res > cfg.tol:
        if it >= cfg.max_iter:
            raise NoConvergence(f"shooting stalled at residual {res:.3g}", history)
        it += 1
        F, J = shoot.jacobian(x, ends)
        dx = np.linalg.lstsq(J, -F, rcond=None)[0]
        lam = 1.0
        while True:
            xn = x + lam * dx
            if xn[-1] > 0:
                try:
                    ends_n = shoot.ends(xn)
                    Fn = shoot.residual_from(xn, ends_n)
                    rn = float(np.max(np.abs(Fn)))
                except (ValueError, ArithmeticError):
                    rn = math.inf
                if rn < res or lam < 1e-3:
                    break
            lam *= 0.5
            if lam < 1e-3:
                raise NoConvergence(f"line search failed at residual {res:.3g}", history)
        x, ends, res = xn, ends_n, rn
        history.append(res)
        if not np.isfinite(res):
            raise NoConvergence("shooting diverged", history)
    return x, res, it, history


def _is_rotation(word, target):
    return len(word) == len(target) and word in target + target


def refine_orbit(metric, seed, config=None):
    """Refine the closed geodesic in the free homotopy class of ``seed``.

    The axis of the unperturbed element seeds the Newton iteration; if it
    fails at the requested epsilon the solve is continued from a ladder of
    smaller epsilons.  The converged start is pulled into the fundamental
    domain and flowed for one period with re-entry to certify the closure
    defect and the deck word.
    """
    cfg = config or ShootingConfig()
    m = cfg.segments or segment_count(seed.length)
    shoot = _Shooting(metric, seed, m, cfg)
    starts, T0 = _seed(metric, seed, m)
    x0 = shoot.pack(starts, T0)
    history = []
    try:
        x, res, it, history = _newton(shoot, x0, cfg)
    except NoConvergence as exc:
        history = list(exc.history)
        if cfg.continuation <= 0 or metric.epsilon == 0:
            raise
        ladder = [metric.epsilon * k / cfg.continuation for k in range(1, cfg.continuation + 1)]
        x, it = x0, 0
        for eps in ladder:
            sub = _Shooting(metric.with_epsilon(eps), seed, m, cfg)
            x, res, k, h = _newton(sub, x, cfg)
            it += k
            history.extend(h)

    starts, T = shoot.unpack(x)
    _, proj = fundamental_domain_project(metric.group, starts[0].position)
    start = starts[0].transformed(proj)
    dt = T / max(1024, int(math.ceil(cfg.profile_density * T)))
    fcfg = FlowConfig(cfg.flow.rtol, cfg.flow.atol, dt, cfg.flow.max_step, True, False,
                      cfg.flow.crossing_tol, cfg.flow.escape_margin)
    traj = flow(metric, start, T, fcfg)
    defect = _phase_distance(traj.end, start)
    word = traj.deck_word
    if not _is_rotation(word, seed.word):
        raise WrongDeckWord(seed.word, word)
    return PeriodicOrbit(seed, T, start, defect, res, word, it, history, trajectory=traj)


def orbit_profile(metric, orbit):
    return curvature_along(metric, orbit.trajectory, period=orbit.period)


def orbit_exponent(metric, orbit, oracle_periods=500, tol=1e-9, oversample=16):
    """Attach the Riccati exponent and the Jacobi growth oracle to ``orbit``.

    The profile is a periodic cubic spline through the curvature samples of
    the certified trajectory; the Riccati grid is ``oversample`` times finer
    so that the finite-difference residual resolves the spline pieces.
    """
    if orbit.profile is None:
        orbit.profile = orbit_profile(metric, orbit)
    knots = max(1, orbit.trajectory.t.size - 1) if orbit.trajectory is not None else 512
    control = StepControl(samples=oversample * knots)
    orbit.solution = unstable_solution(orbit.profile, tol=tol, step_control=control)
    orbit.exponent_report = lyapunov_exponent_periodic(
        orbit.profile, oracle_periods=oracle_periods, step_control=control, solution=orbit.solution)
    return orbit.exponent_report


def orbits_to_csv(orbits, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(ORBIT_COLUMNS)
        for o in orbits:
            row = o.row()
            wr.writerow([row["word"]] + [f"{row[k]:.15g}" for k in ORBIT_COLUMNS[1:]])
