"""Embedded Runge-Kutta 5(4) stepper with dense output.

The Dormand-Prince tableau is taken from :class:`scipy.integrate.RK45`; the
stepping loop is our own so that callers can post-process every accepted step
(symmetrization, constraint projection) and locate crossings on the dense
interpolant.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45

from .errors import ToleranceFailure

_A = RK45.A
_B = RK45.B
_C = RK45.C
_E = RK45.E
_P = RK45.P
_N_STAGES = RK45.n_stages
_ERR_EXP = -1.0 / (RK45.error_estimator_order + 1)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


@dataclass
class Step:
    """One accepted step, with enough data to interpolate inside it."""

    t_old: float
    y_old: np.ndarray
    t: float
    y: np.ndarray
    K: np.ndarray

    def __call__(self, t):
        """Interpolated state at scalar ``t``, or ``(len(t), n)`` states for an array."""
        h = self.t - self.t_old
        if h == 0.0:
            y = self.y_old.copy()
            return y if np.ndim(t) == 0 else np.tile(y, (np.size(t), 1))
        x = np.atleast_1d((np.asarray(t, dtype=float) - self.t_old) / h)
        p = np.array([x, x * x, x ** 3, x ** 4])
        out = self.y_old[None, :] + h * (self.K.T @ (_P @ p)).T
        return out[0] if np.ndim(t) == 0 else out


def _initial_step(fun, t0, y0, f0, direction, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = fun(t0 + h0 * direction, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    return min(100 * h0, h1)


class DormandPrince:
    """Adaptive DOPRI5 integrator stepping ``y' = fun(t, y)`` toward ``t_bound``.

    ``post_step(t, y)`` may return a corrected state after each accepted step;
    the FSAL derivative is then re-evaluated at the corrected state.
    """

    def __init__(self, fun, t0, y0, t_bound, rtol=1e-10, atol=1e-12,
                 max_step=np.inf, first_step=None, post_step=None, max_steps=2_000_000):
        self.fun = fun
        self.t = float(t0)
        self.y = np.array(y0, dtype=float)
        self.t_bound = float(t_bound)
        self.direction = 1.0 if self.t_bound >= self.t else -1.0
        self.rtol = rtol
        self.atol = atol
        self.max_step = max_step
        self.post_step = post_step
        self.max_steps = max_steps
        self.n_steps = 0
        self.n_rejected = 0
        self.f = fun(self.t, self.y)
        if first_step is None:
            self.h_abs = _initial_step(fun, self.t, self.y, self.f, self.direction, rtol, atol)
        else:
            self.h_abs = abs(first_step)
        self.h_abs = min(self.h_abs, max_step)

    @property
    def finished(self):
        return self.direction * (self.t - self.t_bound) >= 0

    def step(self):
        """Advance one accepted step and return it as a :class:`Step`."""
        if self.n_steps >= self.max_steps:
            raise ToleranceFailure(f"exceeded {self.max_steps} steps at t={self.t:.12g}")
        t, y, f = self.t, self.y, self.f
        n = y.size
        K = np.empty((_N_STAGES + 1, n))
        min_step = 10 * abs(np.nextafter(t, self.direction * np.inf) - t)
        h_abs = min(self.h_abs, self.max_step)
        while True:
            if h_abs < min_step:
                raise ToleranceFailure(f"step size underflow at t={t:.12g}")
            h = h_abs * self.direction
            t_new = t + h
            if self.direction * (t_new - self.t_bound) > 0:
                t_new = self.t_bound
            h = t_new - t
            h_abs = abs(h)

            K[0] = f
            for s in range(1, _N_STAGES):
                dy = K[:s].T @ _A[s, :s] * h
                K[s] = self.fun(t + _C[s] * h, y + dy)
            y_new = y + h * (K[:-1].T @ _B)
            f_new = self.fun(t_new, y_new)
            K[-1] = f_new

            scale = self.atol + np.maximum(np.abs(y), np.abs(y_new)) * self.rtol
            err = np.sqrt(np.mean((h * (K.T @ _E) / scale) ** 2))
            if not np.isfinite(err):
                h_abs *= MIN_FACTOR
                self.n_rejected += 1
                continue
            if err < 1.0:
                factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** _ERR_EXP)
                self.h_abs = h_abs * factor
                break
            h_abs *= max(MIN_FACTOR, SAFETY * err ** _ERR_EXP)
            self.n_rejected += 1

        step = Step(t, y, t_new, y_new, K)
        if self.post_step is not None:
            fixed = self.post_step(t_new, y_new)
            if fixed is not y_new:
                y_new = fixed
                f_new = self.fun(t_new, y_new)
        self.t, self.y, self.f = t_new, y_new, f_new
        self.n_steps += 1
        return step


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray
    n_steps: int = 0
    steps: list = field(default_factory=list, repr=False)


def solve(fun, t0, y0, t1, t_eval=None, rtol=1e-10, atol=1e-12, post_step=None,
          ceiling=None, keep_steps=False, max_step=np.inf, breakpoints=None):
    """Integrate from ``t0`` to ``t1`` and sample at ``t_eval`` via dense output.

    If ``ceiling(t, y)`` is given it is called on every accepted step and may
    raise to abort the integration.  ``breakpoints`` are times where ``fun``
    loses smoothness; steps are forced to land on them.
    """
    d = 1.0 if t1 >= t0 else -1.0
    stops = [t1]
    if breakpoints is not None:
        bp = np.asarray(breakpoints, dtype=float)
        bp = bp[(d * (bp - t0) > 0) & (d * (t1 - bp) > 0)]
        stops = sorted(bp.tolist(), key=lambda x: d * x) + [t1]
    solver = DormandPrince(fun, t0, y0, stops[0], rtol=rtol, atol=atol,
                           post_step=post_step, max_step=max_step)
    if t_eval is None:
        t_eval = np.array([t0, t1], dtype=float)
    t_eval = np.asarray(t_eval, dtype=float)
    out = np.empty((t_eval.size, solver.y.size))
    i = 0
    while i < t_eval.size and d * (t_eval[i] - t0) <= 0:
        out[i] = solver.y
        i += 1
    steps = []
    n_steps = 0
    for k, stop in enumerate(stops):
        if k > 0:
            solver = DormandPrince(fun, solver.t, solver.y, stop, rtol=rtol, atol=atol,
                                   post_step=post_step, max_step=max_step,
                                   first_step=min(solver.h_abs, abs(stop - solver.t)))
        while not solver.finished:
            st = solver.step()
            if ceiling is not None:
                ceiling(st.t, solver.y)
            if keep_steps:
                steps.append(st)
            j = i
            while j < t_eval.size and d * (t_eval[j] - st.t) <= 0:
                j += 1
            if j > i:
                out[i:j] = st(t_eval[i:j])
                if t_eval[j - 1] == st.t:
                    out[j - 1] = solver.y
                i = j
        n_steps += solver.n_steps
    while i < t_eval.size:
        out[i] = solver.y
        i += 1
    return Solution(t_eval, out, n_steps, steps)
