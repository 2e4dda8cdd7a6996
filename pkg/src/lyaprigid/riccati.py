"""Jacobi and Riccati equations along curvature profiles.

Sign convention: a profile stores the curvature operator ``R(t)`` exactly as
it enters the Jacobi equation ``Y'' + R Y = 0``.  For a surface ``R = K`` (the
Gaussian curvature), so negative curvature means negative ``R``.  Bounds
``(b, c)`` assert that the spectrum of ``-R(t)`` lies in ``[b**2, c**2]``.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from . import ode
from .errors import BlowUp, ChainViolation, NoConvergence, ToleranceFailure

__all__ = [
    "CurvatureProfile",
    "StepControl",
    "RiccatiSolution",
    "LyapunovReport",
    "Case1Report",
    "Case2Report",
    "integrate_riccati",
    "unstable_solution",
    "stable_solution",
    "lyapunov_exponent_periodic",
    "jacobi_growth_oracle",
    "jacobi_growth_spectrum",
    "trace_chain_case1",
    "trace_chain_case2",
    "period_mean",
]


def _as_matrix_fn(fn, dim):
    def wrapped(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        vals = np.asarray(fn(ts), dtype=float)
        return vals.reshape(ts.size, dim, dim)
    return wrapped


@dataclass(frozen=True)
class CurvatureProfile:
    """Symmetric curvature operator ``R(t)`` along a geodesic.

    ``period`` is ``None`` for aperiodic profiles, which then carry a finite
    ``horizon``.  Use the classmethod constructors rather than ``__init__``.
    """

    vfunc: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    dim: int = 1
    period: Optional[float] = None
    horizon: Optional[float] = None
    bounds: Optional[tuple] = None
    kind: str = "callable"
    is_constant: bool = False
    max_step: float = math.inf
    knots: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    point: Optional[Callable[[float], float]] = field(default=None, repr=False, compare=False)

    # construction ---------------------------------------------------------

    @classmethod
    def constant(cls, value, bounds=None, period=1.0):
        R = np.atleast_2d(np.asarray(value, dtype=float))
        if R.shape[0] != R.shape[1]:
            raise ValueError("constant curvature operator must be square")
        if not np.allclose(R, R.T, rtol=0, atol=1e-14):
            raise ValueError("curvature operator must be symmetric")
        dim = R.shape[0]

        def vfunc(ts):
            ts = np.atleast_1d(ts)
            return np.broadcast_to(R, (ts.size, dim, dim)).copy()

        if bounds is None:
            bounds = _bounds_from_eigs(np.linalg.eigvalsh(R))
        return cls(vfunc, dim, float(period), None, bounds, "constant", True)

    @classmethod
    def fourier(cls, mean, cos=(), sin=(), period=1.0, bounds=None):
        """Scalar ``K(t) = mean + sum_k cos[k-1] cos(2 pi k t / T) + sin[k-1] sin(...)``."""
        cos = np.asarray(cos, dtype=float)
        sin = np.asarray(sin, dtype=float)
        w = 2 * np.pi / period

        def vfunc(ts):
            ts = np.atleast_1d(np.asarray(ts, dtype=float))
            out = np.full(ts.shape, float(mean))
            for k, a in enumerate(cos, start=1):
                out += a * np.cos(k * w * ts)
            for k, b in enumerate(sin, start=1):
                out += b * np.sin(k * w * ts)
            return out.reshape(-1, 1, 1)

        const = not (np.any(cos) or np.any(sin))
        prof = cls(vfunc, 1, float(period), None, None, "fourier", const)
        return prof.with_bounds(bounds if bounds is not None else prof.sampled_bounds())

    @classmethod
    def sampled(cls, t, K, periodic=True, spline=False, bounds=None):
        """Scalar profile from samples; linear interpolation unless ``spline``.

        Periodic profiles take ``period = t[-1] - t[0]`` and wrap around.
        """
        t = np.asarray(t, dtype=float)
        K = np.asarray(K, dtype=float)
        if t.ndim != 1 or t.shape != K.shape or t.size < 2:
            raise ValueError("need matching 1-D t and K samples")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must increase")
        t0 = t[0]
        span = t[-1] - t0
        if periodic:
            K = K.copy()
            K[-1] = K[0] = 0.5 * (K[0] + K[-1])
        knots = t - t0
        if spline:
            cs = CubicSpline(knots, K, bc_type="periodic" if periodic else "not-a-knot")
            coef = cs.c.T.tolist()

            def interp(x):
                return cs(x)
        else:
            def interp(x):
                return np.interp(x, knots, K)

        xs = knots.tolist()
        last = len(xs) - 2

        def point(tt):
            # scalar evaluation for the ODE right-hand side, avoiding array overhead
            x = tt - t0
            if periodic:
                x %= span
            if not spline:
                return float(np.interp(x, knots, K))
            i = min(max(bisect_right(xs, x) - 1, 0), last)
            d = x - xs[i]
            c3, c2, c1, c0 = coef[i]
            return ((c3 * d + c2) * d + c1) * d + c0

        def vfunc(ts):
            x = np.atleast_1d(np.asarray(ts, dtype=float)) - t0
            if periodic:
                x = np.mod(x, span)
            return interp(x).reshape(-1, 1, 1)

        const = bool(np.all(K == K[0]))
        # piecewise interpolants lose smoothness at the knots; steps land on them
        prof = cls(vfunc, 1, span if periodic else None, None if periodic else span,
                   None, "spline" if spline else "sampled", const, math.inf, knots, point)
        return prof.with_bounds(bounds if bounds is not None else prof.sampled_bounds())

    @classmethod
    def from_function(cls, fn, dim=1, period=None, horizon=None, bounds=None):
        """Wrap a vectorized ``fn(ts) -> (N, dim, dim)`` (or ``(N,)`` when scalar)."""
        if period is None and horizon is None:
            raise ValueError("aperiodic profiles need a finite horizon")
        prof = cls(_as_matrix_fn(fn, dim), dim, period, horizon, None, "callable", False)
        return prof.with_bounds(bounds if bounds is not None else prof.sampled_bounds())

    def with_bounds(self, bounds):
        return CurvatureProfile(self.vfunc, self.dim, self.period, self.horizon,
                                None if bounds is None else (float(bounds[0]), float(bounds[1])),
                                self.kind, self.is_constant, self.max_step, self.knots, self.point)

    # evaluation -------------------------------------------------------------

    @property
    def periodic(self):
        return self.period is not None

    @property
    def span(self):
        return self.period if self.periodic else self.horizon

    def evaluate(self, t):
        """``R(t)``: an ``(m, m)`` array for scalar ``t``, ``(N, m, m)`` otherwise."""
        if np.ndim(t) == 0:
            return self.vfunc(np.array([t], dtype=float))[0]
        return self.vfunc(np.asarray(t, dtype=float))

    def scalar(self, t):
        return self.evaluate(t)[..., 0, 0]

    def sampled_bounds(self, n=4096):
        ts = np.linspace(0.0, self.span, n + 1)
        eigs = np.linalg.eigvalsh(self.evaluate(ts))
        return _bounds_from_eigs(eigs)

    def check_invariants(self, n=512, tol=1e-9):
        """Verify periodicity, symmetry and declared bounds on a sample grid."""
        ts = np.linspace(0.0, self.span, n + 1)
        Rs = self.evaluate(ts)
        problems = []
        if np.max(np.abs(Rs - np.swapaxes(Rs, 1, 2))) > tol:
            problems.append("asymmetric")
        if self.periodic:
            shifted = self.evaluate(ts + self.period)
            if np.max(np.abs(shifted - Rs)) > tol:
                problems.append("not periodic")
        if self.bounds is not None:
            b, c = self.bounds
            lam = -np.linalg.eigvalsh(Rs)
            if lam.min() < b * b - tol or lam.max() > c * c + tol:
                problems.append("bounds violated")
        return problems


def _bounds_from_eigs(eigs):
    neg = -np.asarray(eigs, dtype=float) + 0.0
    lo, hi = float(neg.min()), float(neg.max())
    if hi < 0:
        return None
    return (math.sqrt(max(lo, 0.0)), math.sqrt(max(hi, 0.0)))


@dataclass(frozen=True)
class StepControl:
    """Tolerances for Riccati integration and solution certification."""

    rtol: float = 1e-11
    atol: float = 1e-12
    residual_tol: float = 1e-6
    samples: int = 512
    ceiling: Optional[float] = None
    max_periods: int = 400


@dataclass
class RiccatiSolution:
    profile: CurvatureProfile = field(repr=False)
    t: np.ndarray
    U: np.ndarray
    kind: str
    residual: float
    periodicity_defect: Optional[float] = None
    parabolic: bool = False
    iterations: int = 0
    pointwise_residual: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def u(self):
        """Scalar samples (dimension-one profiles only)."""
        if self.profile.dim != 1:
            raise ValueError("u is only defined for scalar profiles")
        return self.U[:, 0, 0]

    @property
    def trace(self):
        return np.trace(self.U, axis1=1, axis2=2)

    @property
    def eigenvalues(self):
        return np.linalg.eigvalsh(self.U)

    def check_bounds(self, tol=1e-6):
        """Pinching sandwich: eigenvalues in ``[b, c]`` (unstable) or ``[-c, -b]``."""
        if self.profile.bounds is None:
            return True
        b, c = self.profile.bounds
        lam = self.eigenvalues
        if self.kind == "stable":
            lam = -lam
        return bool(lam.min() >= b - tol and lam.max() <= c + tol)

    def to_csv(self, path):
        m = self.profile.dim
        cols = [f"u_{i + 1}{j + 1}" for i in range(m) for j in range(m)]
        res = self.pointwise_residual
        if res is None:
            res = _pointwise_residual(self.profile, self.t, self.U)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *cols, "residual"])
            for k in range(self.t.size):
                w.writerow([_fmt(self.t[k]), *(_fmt(x) for x in self.U[k].ravel()), _fmt(res[k])])


def _fmt(x):
    return f"{float(x):.15g}"


# integration ----------------------------------------------------------------


def _rhs(profile):
    m = profile.dim
    if m == 1 and profile.point is not None:
        pt = profile.point

        def fun(t, y):
            return -y * y - pt(t)
        return fun
    if m == 1:
        vf = profile.vfunc

        def fun(t, y):
            return -y * y - vf(np.array([t]))[0, 0]
        return fun

    def fun(t, y):
        U = y.reshape(m, m)
        return (-(U @ U) - profile.evaluate(t)).ravel()
    return fun


def _symmetrizer(m):
    if m == 1:
        return None

    def post(t, y):
        U = y.reshape(m, m)
        return (0.5 * (U + U.T)).ravel()
    return post


def _ceiling_value(profile, control):
    if control.ceiling is not None:
        return control.ceiling
    if profile.bounds is not None and profile.bounds[1] > 0:
        return 10.0 * profile.bounds[1]
    return 1e3


def _ceiling_check(profile, control, direction):
    m = profile.dim
    limit = _ceiling_value(profile, control)

    def check(t, y):
        norm = float(np.linalg.norm(y))
        if norm > limit or not np.isfinite(norm):
            lam = np.linalg.eigvalsh(y.reshape(m, m))
            big = lam[np.argmax(np.abs(lam))]
            # near a pole U ~ 1/(t - t*) along the blowing-up eigendirection
            t_star = t + direction / abs(big) if np.isfinite(big) and big != 0 else t
            raise BlowUp(t_star, norm)
    return check


def _derivative4(Y, h):
    """Fourth-order finite-difference derivative along axis 0 of uniform samples."""
    n = Y.shape[0]
    if n < 5:
        return np.gradient(Y, h, axis=0)
    D = np.empty_like(Y)
    D[2:-2] = (-Y[4:] + 8 * Y[3:-1] - 8 * Y[1:-3] + Y[:-4]) / (12 * h)
    D[0] = (-25 * Y[0] + 48 * Y[1] - 36 * Y[2] + 16 * Y[3] - 3 * Y[4]) / (12 * h)
    D[1] = (-3 * Y[0] - 10 * Y[1] + 18 * Y[2] - 6 * Y[3] + Y[4]) / (12 * h)
    D[-1] = (25 * Y[-1] - 48 * Y[-2] + 36 * Y[-3] - 16 * Y[-4] + 3 * Y[-5]) / (12 * h)
    D[-2] = (3 * Y[-1] + 10 * Y[-2] - 18 * Y[-3] + 6 * Y[-4] - Y[-5]) / (12 * h)
    return D


def _kink_mask(profile, t, h):
    """Samples whose difference stencil straddles a kink of a linear interpolant."""
    if profile.kind != "sampled" or profile.knots is None:
        return None
    lo, hi = float(t.min()), float(t.max())
    kinks = _breakpoints(profile, lo, hi)
    kinks = np.sort(kinks[(kinks > lo) & (kinks < hi)])
    if kinks.size == 0:
        return None
    # a kink on the stencil's end point leaves it inside one smooth piece
    reach = 2 * h * (1 - 1e-9)
    i = np.searchsorted(kinks, t - reach, side="right")
    j = np.searchsorted(kinks, t + reach, side="left")
    return j > i


def _pointwise_residual(profile, t, U):
    """``|U' + U^2 + R|`` from fourth-order differences of the samples.

    Across a kink of a piecewise-linear profile ``U''`` jumps and the
    stencil error is first order, so those samples are reported as NaN and
    left out of the certified maximum.
    """
    h = t[1] - t[0]
    dU = _derivative4(U, h)
    res = dU + U @ U + profile.evaluate(t)
    out = np.sqrt(np.sum(res * res, axis=(1, 2)))
    mask = _kink_mask(profile, t, abs(h))
    if mask is not None and not mask.all():
        out[mask] = np.nan
    return out


def _breakpoints(profile, t0, t1):
    """Knots of a sampled profile inside ``[t0, t1]``, repeated over periods."""
    if profile.knots is None:
        return None
    lo, hi = min(t0, t1), max(t0, t1)
    if not profile.periodic:
        return profile.knots
    tau = profile.period
    shifts = np.arange(math.floor(lo / tau), math.ceil(hi / tau) + 1) * tau
    return (profile.knots[None, :] + shifts[:, None]).ravel()


def _run(profile, U0, t0, t1, control, t_eval=None):
    m = profile.dim
    direction = 1.0 if t1 >= t0 else -1.0
    sol = ode.solve(
        _rhs(profile), t0, np.asarray(U0, dtype=float).reshape(m * m), t1,
        t_eval=t_eval, rtol=control.rtol, atol=control.atol,
        post_step=_symmetrizer(m), ceiling=_ceiling_check(profile, control, direction),
        max_step=profile.max_step, breakpoints=_breakpoints(profile, t0, t1),
    )
    return sol.y.reshape(-1, m, m)


def _sym(U0, m):
    U0 = np.atleast_2d(np.asarray(U0, dtype=float))
    if U0.shape == (1, 1) and m > 1:
        U0 = U0[0, 0] * np.eye(m)
    if U0.shape != (m, m):
        raise ValueError(f"initial condition must be {m}x{m}")
    if not np.allclose(U0, U0.T, rtol=0, atol=1e-12):
        raise ValueError("initial condition must be symmetric")
    return 0.5 * (U0 + U0.T)


def _package(profile, ts, Us, kind, control, **extra):
    pres = _pointwise_residual(profile, ts, Us)
    sol = RiccatiSolution(profile, ts, Us, kind, float(np.nanmax(pres)), pointwise_residual=pres,
                          **extra)
    if sol.residual > control.residual_tol:
        raise ToleranceFailure(
            f"Riccati residual {sol.residual:.3g} exceeds {control.residual_tol:.3g}; "
            "increase samples or tighten rtol")
    return sol


def integrate_riccati(profile, u0, t0, t1, step_control=None, kind="unstable"):
    """Integrate ``U' = -U**2 - R(t)`` from ``t0`` to ``t1`` (``t0 < t1``).

    Returns samples on a uniform grid of ``step_control.samples + 1`` points.
    Raises :class:`BlowUp` when ``||U||`` crosses the ceiling (a conjugate
    point, or an initial condition off the bounded branches).
    """
    control = step_control or StepControl()
    if not t0 < t1:
        raise ValueError("integrate_riccati requires t0 < t1")
    U0 = _sym(u0, profile.dim)
    ts = np.linspace(t0, t1, control.samples + 1)
    Us = _run(profile, U0, t0, t1, control, ts)
    return _package(profile, ts, Us, kind, control)


def _flat(profile):
    return profile.bounds is not None and profile.bounds[1] == 0.0


def _branch(profile, settle_horizon, tol, control, kind):
    control = control or StepControl()
    m = profile.dim
    forward = kind == "unstable"
    sign = 1.0 if forward else -1.0
    span = profile.span
    ts = np.linspace(0.0, span, control.samples + 1)

    if _flat(profile):
        # K == 0: both branches collapse onto U == 0; attraction is only 1/t
        Us = np.zeros((ts.size, m, m))
        return _package(profile, ts, Us, kind, control, periodicity_defect=0.0, parabolic=True)

    if profile.bounds is None:
        raise ValueError("unstable/stable solutions need a profile with pinching bounds")
    b, c = profile.bounds
    if settle_horizon is None:
        settle_horizon = 20.0 / (b if b > 0 else c)
    seed = sign * c * np.eye(m)

    if not profile.periodic:
        if profile.horizon <= settle_horizon:
            raise ValueError(f"aperiodic horizon {profile.horizon:.6g} must exceed the settle "
                             f"horizon {settle_horizon:.6g}")
        if forward:
            grid = np.linspace(settle_horizon, profile.horizon, control.samples + 1)
            Us = _run(profile, seed, 0.0, profile.horizon, control, np.concatenate(([0.0], grid)))[1:]
        else:
            top = profile.horizon - settle_horizon
            grid = np.linspace(0.0, top, control.samples + 1)
            back = _run(profile, seed, profile.horizon, 0.0, control,
                        np.concatenate(([profile.horizon], grid[::-1])))[1:]
            Us = back[::-1]
        return _package(profile, grid, Us, kind, control)

    tau = profile.period
    start, end = (0.0, tau) if forward else (tau, 0.0)
    U = seed
    history = []
    min_periods = int(math.ceil(settle_horizon / tau))
    it = 0
    while True:
        it += 1
        U_next = _run(profile, U, start, end, control)[-1]
        defect = float(np.linalg.norm(U_next - U))
        history.append(defect)
        U = U_next
        if defect < tol and (it >= min_periods or defect == 0.0):
            break
        if it >= control.max_periods or (it > 20 and defect > 0.5 * history[-11]):
            if defect < tol:
                break
            raise NoConvergence(
                f"{kind} Riccati period map stalled at defect {defect:.3g} after {it} periods",
                history)

    if forward:
        Us = _run(profile, U, 0.0, tau, control, ts)
    else:
        Us = _run(profile, U, tau, 0.0, control, ts[::-1])[::-1]
    defect = float(np.linalg.norm(Us[-1] - Us[0]))
    return _package(profile, ts, Us, kind, control, periodicity_defect=defect, iterations=it)


def unstable_solution(profile, settle_horizon=None, tol=1e-11, step_control=None):
    """Bounded forward-attracting Riccati branch (the unstable Green solution).

    Periodic profiles: iterate the forward period map from ``U = c I`` until
    the periodicity defect drops below ``tol``.  Aperiodic profiles: integrate
    from ``c I`` at ``t = 0`` and keep samples after ``settle_horizon``.
    """
    return _branch(profile, settle_horizon, tol, step_control, "unstable")


def stable_solution(profile, settle_horizon=None, tol=1e-11, step_control=None):
    """Time-reversed mirror of :func:`unstable_solution`, seeded at ``-c I``."""
    return _branch(profile, settle_horizon, tol, step_control, "stable")


# exponents ------------------------------------------------------------------


def period_mean(t, values):
    """Composite Simpson average of uniformly sampled ``values`` over ``t``."""
    return float(simpson(values, x=t, axis=0) / (t[-1] - t[0]))


@dataclass
class LyapunovReport:
    """Exponent of a periodic profile versus the curvature bound.

    In matrix mode ``chi_plus`` is the mean unstable exponent
    ``trace_average / (n - 1)``; ``exponents`` holds the individual ones.
    """

    chi_plus: float
    exponents: list
    trace_average: float
    mean_curvature_bound: float
    gap: float
    oracle_chi: float
    oracle_discrepancy: float
    period: float
    parabolic: bool = False

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _monodromy_exponents(profile, sol, control):
    """Exponents of ``Y' = U Y`` over one period, integrated jointly with Riccati."""
    m = profile.dim
    tau = profile.period

    def fun(t, y):
        U = y[: m * m].reshape(m, m)
        Y = y[m * m:].reshape(m, m)
        dU = -(U @ U) - profile.evaluate(t)
        return np.concatenate((dU.ravel(), (U @ Y).ravel()))

    y0 = np.concatenate((sol.U[0].ravel(), np.eye(m).ravel()))
    out = ode.solve(fun, 0.0, y0, tau, rtol=control.rtol, atol=control.atol)
    Y = out.y[-1, m * m:].reshape(m, m)
    mu = np.abs(np.linalg.eigvals(Y))
    return sorted((np.log(mu) / tau).tolist(), reverse=True)


def lyapunov_exponent_periodic(profile, oracle_periods=500, step_control=None, solution=None):
    """Lyapunov report for a periodic profile.

    ``chi_plus`` is the period average of the unstable Riccati solution; the
    oracle is :func:`jacobi_growth_spectrum` over ``oracle_periods`` periods.
    """
    if not profile.periodic:
        raise ValueError("lyapunov_exponent_periodic needs a periodic profile")
    control = step_control or StepControl()
    sol = solution if solution is not None else unstable_solution(profile, step_control=control)
    m = profile.dim
    tau = profile.period
    trace_avg = period_mean(sol.t, sol.trace)
    chi = trace_avg / m
    if m == 1:
        exponents = [trace_avg]
    else:
        exponents = _monodromy_exponents(profile, sol, control)
    ric = np.trace(profile.evaluate(sol.t), axis1=1, axis2=2) / m
    mean_neg_ric = -period_mean(sol.t, ric)
    bound = math.sqrt(max(mean_neg_ric, 0.0))
    spectrum = jacobi_growth_spectrum(profile, oracle_periods * tau)
    oracle = float(spectrum[0]) if m == 1 else float(np.mean(spectrum))
    return LyapunovReport(
        chi_plus=chi,
        exponents=exponents,
        trace_average=trace_avg,
        mean_curvature_bound=bound,
        gap=bound - chi,
        oracle_chi=oracle,
        oracle_discrepancy=abs(chi - oracle),
        period=tau,
        parabolic=sol.parabolic,
    )


def _rk4_step_matrices(profile, t0, h, n):
    """Classical RK4 one-step propagators for ``X' = [[0, I], [-R, 0]] X``."""
    m = profile.dim
    tk = t0 + h * np.arange(n)
    R0 = profile.evaluate(tk)
    Rh = profile.evaluate(tk + 0.5 * h)
    R1 = profile.evaluate(tk + h)
    I = np.eye(2 * m)

    def gen(R):
        A = np.zeros((n, 2 * m, 2 * m))
        A[:, :m, m:] = np.eye(m)
        A[:, m:, :m] = -R
        return A

    A0, Ah, A1 = gen(R0), gen(Rh), gen(R1)
    k1 = A0
    k2 = Ah @ (I + 0.5 * h * k1)
    k3 = Ah @ (I + 0.5 * h * k2)
    k4 = A1 @ (I + h * k3)
    return I + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def jacobi_growth_spectrum(profile, horizon, steps_per_unit=400, burn_in=0.5):
    """Brute-force Lyapunov spectrum of the Jacobi flow ``J'' + R J = 0``.

    Integrates the phase matrix ``[J; J']`` from ``(I, c I)`` with fixed-step
    RK4, re-orthonormalizing by QR once per block, and returns the sorted
    exponents of the growth accumulated after the first ``burn_in`` fraction
    of the horizon.  For polynomial (flat) growth the estimate carries an
    error of order ``log(2) / (horizon * (1 - burn_in))``.
    """
    m = profile.dim
    c = profile.bounds[1] if profile.bounds is not None and profile.bounds[1] > 0 else 1.0
    X = np.vstack((np.eye(m), c * np.eye(m)))

    if profile.periodic:
        tau = profile.period
        n_per = max(64, int(math.ceil(tau * steps_per_unit)))
        block_len = tau
        n_blocks = max(2, int(round(horizon / tau)))
        steps = _rk4_step_matrices(profile, 0.0, tau / n_per, n_per)
        P = np.eye(2 * m)
        for S in steps:
            P = S @ P
        blocks = None
    else:
        block_len = 1.0
        n_blocks = max(2, int(math.floor(horizon)))
        n_per = max(8, int(math.ceil(steps_per_unit)))
        blocks = True

    start = int(math.floor(burn_in * n_blocks))
    logs = np.zeros(m)
    for k in range(n_blocks):
        if blocks:
            P = np.eye(2 * m)
            for S in _rk4_step_matrices(profile, k * block_len, block_len / n_per, n_per):
                P = S @ P
        X = P @ X
        Q, Rq = np.linalg.qr(X)
        if k >= start:
            logs += np.log(np.abs(np.diag(Rq)))
        X = Q
    return np.sort(logs / ((n_blocks - start) * block_len))[::-1]


def jacobi_growth_oracle(profile, horizon, **kwargs):
    """Top exponent from :func:`jacobi_growth_spectrum`."""
    return float(jacobi_growth_spectrum(profile, horizon, **kwargs)[0])


def curvature_bound_limsup(profile, horizon=None, n=8192):
    """``sqrt(-(1/T) int_0^T Ric)`` over a long horizon (the non-periodic form)."""
    T = horizon if horizon is not None else profile.span
    ts = np.linspace(0.0, T, n + 1)
    ric = np.trace(profile.evaluate(ts), axis1=1, axis2=2) / profile.dim
    return math.sqrt(max(-period_mean(ts, ric), 0.0))


# trace chains ---------------------------------------------------------------


@dataclass
class Case1Report:
    """Minimal-exponent forcing: mean trace at the floor forces ``U == b I``."""

    b: float
    floor: float
    mean_trace: float
    pointwise_trace_excess: float
    hypothesis_holds: bool
    ricci_deviation: Optional[float]
    pinching_breach: bool
    forced: Optional[bool]


@dataclass
class Case2Report:
    """The Cauchy-Schwarz chain ``A <= B <= C = D <= (n-1) c`` over one period."""

    c: float
    A: float
    B: float
    C: float
    D: float
    end: float
    links: dict

    def tight(self, tol=1e-10):
        """True when every link holds with equality to ``tol``."""
        return all(abs(v) <= tol for v in self.links.values())

    def strict_links(self, tol=1e-10):
        return [k for k, v in self.links.items() if v < -tol]


def trace_chain_case1(profile, b=None, tol=1e-8, solution=None, step_control=None):
    sol = solution if solution is not None else unstable_solution(profile, step_control=step_control)
    m = profile.dim
    if b is None:
        b = profile.bounds[0]
    floor = m * b
    tr = sol.trace
    mean_trace = period_mean(sol.t, tr)
    excess = float(np.max(tr - floor))
    breach = bool(np.min(sol.eigenvalues) < b - tol)
    holds = mean_trace - floor < tol
    ricci_dev = None
    forced = None
    if holds:
        ric = np.trace(profile.evaluate(sol.t), axis1=1, axis2=2) / m
        ricci_dev = float(np.max(np.abs(ric + b * b)))
        forced = not breach and excess < max(tol, 1e-6)
    return Case1Report(b, floor, mean_trace, excess, holds, ricci_dev, breach, forced)


def trace_chain_case2(profile, c=None, tol=1e-8, solution=None, step_control=None):
    sol = solution if solution is not None else unstable_solution(profile, step_control=step_control)
    m = profile.dim
    if c is None:
        c = profile.bounds[1]
    t = sol.t
    tr = sol.trace
    tr_sq = np.trace(sol.U @ sol.U, axis1=1, axis2=2)
    ric = np.trace(profile.evaluate(t), axis1=1, axis2=2) / m
    A = period_mean(t, tr)
    B = math.sqrt(period_mean(t, tr * tr))
    C = math.sqrt(m * period_mean(t, tr_sq))
    D = math.sqrt(max(-m * m * period_mean(t, ric), 0.0))
    end = m * c
    links = {"A<=B": A - B, "B<=C": B - C, "C=D": abs(C - D), "D<=end": D - end}
    for name, val in links.items():
        if val > tol:
            raise ChainViolation(name, val)
    return Case2Report(c, A, B, C, D, end, links)
