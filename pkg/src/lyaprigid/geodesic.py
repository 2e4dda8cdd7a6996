"""Geodesic flow of a conformal metric in the disk chart.

With ``ds = exp(sigma) |dz|`` and the direction written as an angle, unit
speed geodesics solve

    z' = exp(-sigma) e^{i theta},
    theta' = exp(-sigma) (sigma_y cos theta - sigma_x sin theta),

so the metric speed is identically one and no renormalization is needed;
the drift diagnostic measures the residual after each accepted step.

When the flow leaves the fundamental domain through the pairing disc of a
letter ``x``, the crossing time is located on the dense output, the state is
pulled back by ``x^-1`` and ``x`` is appended to the deck word.
"""

from __future__ import annotations

import cmath
import csv
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import DOP853
from scipy.optimize import brentq

from .errors import LimitSetEscape, ToleranceFailure
from .metric import ConformalMetric, gaussian_curvature, log_scale
from .riccati import CurvatureProfile

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhasePoint:
    """Unit tangent vector at ``position``; ``angle`` is its chart direction."""

    position: complex
    angle: float

    @property
    def direction(self):
        return cmath.exp(1j * self.angle)

    def metric_norm(self, metric):
        """Metric length of the unit chart vector scaled by ``exp(-sigma)``."""
        sigma, _ = log_scale(metric, self.position)
        return abs(math.exp(sigma) * math.exp(-sigma) * self.direction)

    def transformed(self, g):
        """Image under the isometry ``g`` (a disk-model :class:`MobiusTransform`)."""
        z = self.position
        return PhasePoint(complex(g(z)), self.angle + cmath.phase(g.derivative(z)))

    def reversed(self):
        return PhasePoint(self.position, self.angle + math.pi)


@dataclass(frozen=True)
class FlowConfig:
    rtol: float = 1e-12
    atol: float = 1e-13
    sample_dt: float = 0.01
    max_step: float = 0.1
    reentry: bool = True
    detect_escape: bool = True
    crossing_tol: float = 1e-12
    escape_margin: float = 1e-7


@dataclass
class Trajectory:
    """Samples ``(t, position, angle, deck word so far)`` of one flow line."""

    t: np.ndarray
    z: np.ndarray
    angle: np.ndarray
    words: list
    total_time: float
    speed_drift: float = 0.0
    escaped: bool = False
    escape_time: float | None = None
    crossings: list = field(default_factory=list)

    @property
    def deck_word(self):
        return self.words[-1] if self.words else ""

    @property
    def end(self):
        return PhasePoint(complex(self.z[-1]), float(self.angle[-1]))

    def to_csv(self, path, metric=None):
        K = None
        if metric is not None:
            K = [gaussian_curvature(metric, z) for z in self.z]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["t", "x", "y", "angle", "K", "deck_word"])
            for k in range(self.t.size):
                z = self.z[k]
                kv = "" if K is None else f"{K[k]:.15g}"
                wr.writerow([f"{self.t[k]:.15g}", f"{z.real:.15g}", f"{z.imag:.15g}",
                             f"{self.angle[k]:.15g}", kv, self.words[k]])


def _vector_field(metric, sign=1.0):
    def fun(t, y):
        z = complex(y[0], y[1])
        sigma, grad = log_scale(metric, z)
        e = math.exp(-sigma)
        c, s = math.cos(y[2]), math.sin(y[2])
        return np.array([e * c, e * s, e * (grad.imag * c - grad.real * s)]) * sign
    return fun


class _Step:
    """Accepted DOP853 step with its dense interpolant."""

    def __init__(self, solver):
        self.t_old, self.t = solver.t_old, solver.t
        self.y = solver.y.copy()
        self._dense = solver.dense_output()
        self.y_old = self._dense(self.t_old)

    def __call__(self, t):
        return self._dense(t)


def _advance(solver):
    msg = solver.step()
    if solver.status == "failed":
        raise ToleranceFailure(f"geodesic integration failed at t={solver.t:.12g}: {msg}")
    return _Step(solver)


def _integrate_to(fun, step, t_end, cfg):
    """State at ``t_end`` inside ``step``, re-integrated from the step start.

    The dense interpolant is an order less accurate than the step itself, and
    the crossing state seeds everything after the pull-back.
    """
    if t_end <= step.t_old:
        return step.y_old.copy()
    solver = DOP853(fun, step.t_old, step.y_old, t_end, rtol=cfg.rtol, atol=cfg.atol,
                    max_step=cfg.max_step, first_step=t_end - step.t_old)
    while solver.status == "running":
        _advance(solver)
    return solver.y.copy()


def _disc_gap(z, disc):
    c, r = disc
    return abs(z - c) ** 2 - r * r


def _first_crossing(group, step, tol):
    """Earliest entry into a pairing disc within an accepted step, or ``None``."""
    z_new = complex(step.y[0], step.y[1])
    z_old = complex(step.y_old[0], step.y_old[1])
    best = None
    for x, disc in group.discs.items():
        if _disc_gap(z_new, disc) >= 0:
            continue
        if _disc_gap(z_old, disc) < 0:
            t_cross = step.t_old
        else:
            def gap(t):
                y = step(t)
                return _disc_gap(complex(y[0], y[1]), disc)
            t_cross = brentq(gap, step.t_old, step.t, xtol=tol, rtol=4 * np.finfo(float).eps)
        if best is None or t_cross < best[0]:
            best = (t_cross, x)
    return best


def _in_funnel(group, z, margin):
    return any(abs(z - c) < r * (1.0 - margin) for c, r in group.funnels)


def flow(metric, start, time, config=None, raise_on_escape=False):
    """Integrate the unit-speed geodesic from ``start`` for ``time``.

    Negative ``time`` flows backward.  With ``config.reentry`` the state is
    kept in the fundamental domain and the deck word records the pairing
    letters crossed; otherwise the flow runs in the universal cover.  An
    orbit entering a funnel of the convex core is truncated and flagged
    (or raises :class:`LimitSetEscape` when ``raise_on_escape``).
    """
    cfg = config or FlowConfig()
    group = metric.group
    sign = 1.0 if time >= 0 else -1.0
    T = abs(float(time))
    fun = _vector_field(metric, sign)
    z0 = complex(start.position)
    y = np.array([z0.real, z0.imag, float(start.angle)])
    ts = [0.0]
    zs = [z0]
    angs = [y[2]]
    words = [""]
    word = ""
    crossings = []
    drift = 0.0
    escaped, t_escape = False, None
    if T == 0.0:
        return Trajectory(np.array(ts), np.array(zs), np.array(angs), words, 0.0)

    n_samples = max(1, int(math.ceil(T / cfg.sample_dt)))
    grid = np.linspace(0.0, T, n_samples + 1)[1:]
    gi = 0
    t = 0.0
    while t < T:
        solver = DOP853(fun, t, y, T, rtol=cfg.rtol, atol=cfg.atol,
                        max_step=cfg.max_step, first_step=min(1e-3, T - t))
        restarted = False
        while solver.status == "running":
            st = _advance(solver)
            hit = _first_crossing(group, st, cfg.crossing_tol) if cfg.reentry else None
            t_end = st.t if hit is None else hit[0]
            while gi < grid.size and grid[gi] <= t_end:
                yy = st(grid[gi]) if grid[gi] < st.t else st.y
                ts.append(grid[gi])
                zs.append(complex(yy[0], yy[1]))
                angs.append(yy[2])
                words.append(word)
                gi += 1
            if hit is not None:
                t_c, x = hit
                yc = _integrate_to(fun, st, t_c, cfg)
                zc = complex(yc[0], yc[1])
                ginv = group.generators[x.swapcase()]
                zn = complex(ginv(zc))
                an = yc[2] + cmath.phase(ginv.derivative(zc))
                word += x
                crossings.append((t_c, x))
                y = np.array([zn.real, zn.imag, an])
                t = t_c
                restarted = True
                if t_c == ts[-1]:
                    zs[-1], angs[-1], words[-1] = zn, an, word
                break
            y = st.y
            t = st.t
            z = complex(y[0], y[1])
            sigma, _ = log_scale(metric, z)
            drift = max(drift, abs(math.exp(sigma) * math.hypot(solver.f[0], solver.f[1]) - 1.0))
            if cfg.detect_escape and group.funnels and _in_funnel(group, z, cfg.escape_margin):
                escaped, t_escape = True, t
                break
        if escaped:
            break
        if not restarted:
            t = T
    if escaped:
        if ts[-1] < t_escape:
            ts.append(t_escape)
            zs.append(complex(y[0], y[1]))
            angs.append(y[2])
            words.append(word)
        log.debug("trajectory entered a funnel at t=%.6g", t_escape)
        if raise_on_escape:
            raise LimitSetEscape(f"trajectory left the convex core at t={t_escape:.6g}")
    angs = np.array(angs)
    if sign < 0:
        ts = -np.array(ts)
    return Trajectory(np.array(ts), np.array(zs), angs, words, sign * T, drift,
                      escaped, t_escape, crossings)


def flow_map(metric, start, time, config=None):
    """End state of the universal-cover flow (no re-entry, no escape test)."""
    cfg = config or FlowConfig()
    cfg = FlowConfig(cfg.rtol, cfg.atol, abs(time) if time else 1.0, cfg.max_step,
                     False, False, cfg.crossing_tol, cfg.escape_margin)
    return flow(metric, start, time, cfg).end


def hyperbolic_geodesic(start, t, scale=1.0):
    """Closed-form unit-speed geodesic of the curvature ``-scale^2`` disk."""
    z0 = complex(start.position)
    w = cmath.exp(1j * start.angle) * np.tanh(scale * np.asarray(t) / 2.0)
    return (w + z0) / (1.0 + np.conj(z0) * w)


def curvature_along(metric, traj, period=None, spline=None):
    """Scalar curvature profile sampled along ``traj``.

    With ``period`` the samples are taken as one period of a periodic
    profile (cubic periodic spline); otherwise the profile is aperiodic
    with horizon equal to the trajectory time.
    """
    t = np.asarray(traj.t, dtype=float)
    if t[-1] < t[0]:
        raise ValueError("curvature_along expects a forward trajectory")
    K = np.array([gaussian_curvature(metric, z) for z in traj.z])
    if np.all(K == K[0]):
        span = period if period is not None else t[-1] - t[0]
        if period is not None:
            return CurvatureProfile.constant(K[0], period=span)
        prof = CurvatureProfile.from_function(lambda ts: np.full(np.size(ts), K[0]), horizon=span)
        return replace(prof, is_constant=True)
    if period is not None:
        scale = period / (t[-1] - t[0])
        return CurvatureProfile.sampled((t - t[0]) * scale, K, periodic=True,
                                        spline=True if spline is None else spline)
    return CurvatureProfile.sampled(t - t[0], K, periodic=False,
                                    spline=True if spline is None else spline)
