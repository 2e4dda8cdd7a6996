"""Group-invariant conformal perturbations of the hyperbolic metric.

The metric is ``g = exp(2 phi) g_K`` where ``g_K`` has constant curvature
``base_curvature`` and ``phi`` is a sum of radial bumps.  Each bump is a
function of the hyperbolic distance to its centre and is extended to the
whole disk by summing over the group translates of the centre.  The bump
radius is capped so that at most one translate of a given bump is felt at
any point.

Derivatives are closed form: a radial bump is differentiated in the
coordinate ``w = (z - c) / (1 - conj(c) z)`` centred at the bump, and pulled
back by the chain rule ``grad(f o h) = conj(h') grad f(h)``,
``Lap(f o h) = |h'|^2 Lap f(h)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import PositiveCurvature
from .hyperbolic import (FuchsianGroup, cyclically_reduced_words, disk_distance,
                         fundamental_domain_project)

PROFILES = ("poly", "smooth")


@dataclass(frozen=True)
class Bump:
    """Radial bump of hyperbolic ``radius`` centred at ``center`` with peak ``amplitude``."""

    center: complex
    radius: float
    amplitude: float


def _radial(d, rho, profile):
    """Profile ``f(d)`` together with ``f'(d)/d`` and ``f''(d)`` (zero outside the support)."""
    q = (d / rho) ** 2
    if q >= 1.0:
        return 0.0, 0.0, 0.0
    p = 1.0 - q
    if profile == "poly":
        f = p ** 3
        fd = -6.0 * p * p / rho ** 2
        f2 = fd + 24.0 * q * p / rho ** 2
        return f, fd, f2
    f = math.exp(1.0 - 1.0 / p)
    fd = -2.0 * f / (rho ** 2 * p * p)
    g = -2.0 * d / (rho ** 2 * p * p)
    dg = -2.0 / (rho ** 2 * p * p) - 8.0 * q / (rho ** 2 * p ** 3)
    f2 = f * (g * g + dg)
    return f, fd, f2


def _atanh_ratio(s):
    """``2 artanh(s) / s``, regular at ``s = 0``."""
    if s < 1e-4:
        s2 = s * s
        return 2.0 * (1.0 + s2 / 3.0 + s2 * s2 / 5.0)
    return 2.0 * math.atanh(s) / s


def _bump_terms(c, rho, z, profile):
    """``(F, grad F, Lap F)`` in the flat chart for one bump centred at ``c``."""
    den = 1.0 - c.conjugate() * z
    w = (z - c) / den
    s = abs(w)
    if s >= 1.0:
        return 0.0, 0j, 0.0
    d = 2.0 * math.atanh(s)
    if d >= rho:
        return 0.0, 0j, 0.0
    f, fd, f2 = _radial(d, rho, profile)
    dp = 2.0 / (1.0 - s * s)  # dd/ds
    dpp = 4.0 * s / (1.0 - s * s) ** 2
    # F(s) = f(d(s)); F'(s)/s = (f'(d)/d) * (d/s) * d'
    Fs_over_s = fd * _atanh_ratio(s) * dp
    F2 = f2 * dp * dp + fd * d * dpp
    tp = (1.0 - abs(c) ** 2) / (den * den)  # T'(z)
    grad_w = Fs_over_s * w
    grad = tp.conjugate() * grad_w
    lap = abs(tp) ** 2 * (F2 + Fs_over_s)
    return f, grad, lap


def _distance_to_geodesic_circle(p, center, radius):
    """Hyperbolic distance from ``p`` to the geodesic carried by a circle orthogonal to the boundary."""
    val = abs(abs(p - center) ** 2 - radius ** 2) / (radius * (1.0 - abs(p) ** 2))
    return math.asinh(val)


@dataclass
class ConformalMetric:
    """``exp(2 epsilon sum bumps) g_K`` on the quotient of the disk by ``group``.

    Parameters
    ----------
    group : FuchsianGroup
    bumps : list of Bump
        Centres must lie in the fundamental domain.
    epsilon : float
        Global amplitude multiplier.
    base_curvature : float
        Curvature ``-a^2`` of the unperturbed metric.
    profile : {"poly", "smooth"}
        ``(1 - d^2/rho^2)^3`` (C^2) or ``exp(1 - 1/(1 - d^2/rho^2))`` (C^inf).
    safety_length : int
        Words up to this length enter the support-separation check.
    """

    group: FuchsianGroup
    bumps: list = field(default_factory=list)
    epsilon: float = 0.0
    base_curvature: float = -1.0
    profile: str = "poly"
    safety_length: int = 4
    translates: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.base_curvature < 0:
            raise ValueError("base_curvature must be negative")
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}")
        self.bumps = [b if isinstance(b, Bump) else Bump(complex(b[0]), float(b[1]), float(b[2]))
                      for b in self.bumps]
        for b in self.bumps:
            if not b.radius > 0:
                raise ValueError("bump radius must be positive")
            if not self.group.in_domain(b.center):
                raise ValueError(f"bump centre {b.center} is not in the fundamental domain")
            sep = self.separation(b.center)
            if not b.radius < sep / 2:
                raise ValueError(
                    f"bump radius {b.radius} violates the support constraint (< {sep / 2:.6g})")
        self.translates = self._translates()

    @property
    def scale(self):
        return math.sqrt(-self.base_curvature)

    def with_epsilon(self, epsilon):
        return ConformalMetric(self.group, list(self.bumps), epsilon, self.base_curvature,
                               self.profile, self.safety_length)

    def separation(self, center):
        """Minimal hyperbolic distance between ``center`` and its translates by short words."""
        best = math.inf
        for n in range(1, self.safety_length + 1):
            for w in _reduced_words(self.group.letters, n):
                best = min(best, float(disk_distance(self.group.word(w)(center), center)))
        return best

    def _translates(self):
        """Bump translates ``(bump index, centre)`` whose support can meet F."""
        out = []
        for i, b in enumerate(self.bumps):
            out.append((i, b.center))
            for n in range(1, 9):
                found = False
                for w in _reduced_words(self.group.letters, n):
                    p = self.group.word(w)(b.center)
                    c, r = self.group.discs[w[0]]
                    if _distance_to_geodesic_circle(p, c, r) < b.radius:
                        out.append((i, p))
                        found = True
                if not found:
                    break
        return out

    def _local(self, w):
        """``(phi, grad, lap)`` at a point ``w`` of F (flat chart)."""
        phi, grad, lap = 0.0, 0j, 0.0
        for i, c in self.translates:
            b = self.bumps[i]
            f, g, l = _bump_terms(c, b.radius, w, self.profile)
            phi += b.amplitude * f
            grad += b.amplitude * g
            lap += b.amplitude * l
        e = self.epsilon
        return e * phi, e * grad, e * lap


def _reduced_words(letters, n):
    out = [""]
    for _ in range(n):
        out = [w + x for w in out for x in letters if not (w and x == w[-1].swapcase())]
    return out


def conformal_factor(metric, z):
    """``(phi, grad phi, flat Laplacian of phi)`` at ``z``; the gradient is ``phi_x + i phi_y``."""
    z = complex(z)
    if not abs(z) < 1:
        raise ValueError("point must lie inside the disk")
    if metric.epsilon == 0 or not metric.bumps:
        return 0.0, 0j, 0.0
    w, h = fundamental_domain_project(metric.group, z)
    phi, grad, lap = metric._local(w)
    if h.label:
        hp = h.derivative(z)
        grad = hp.conjugate() * grad
        lap = abs(hp) ** 2 * lap
    return phi, grad, lap


def log_scale(metric, z):
    """``sigma`` and ``grad sigma`` with ``ds = exp(sigma) |dz|``."""
    phi, grad, _ = conformal_factor(metric, z)
    r2 = abs(z) ** 2
    sigma = phi + math.log(2.0 / (1.0 - r2)) - math.log(metric.scale)
    return sigma, grad + 2.0 * z / (1.0 - r2)


def gaussian_curvature(metric, z):
    """``K = -exp(-2 sigma) Lap sigma`` with ``sigma = phi + log lambda_0 - log a``."""
    phi, _, lap = conformal_factor(metric, z)
    lam = 2.0 / (1.0 - abs(complex(z)) ** 2)
    return metric.base_curvature * math.exp(-2.0 * phi) * (lap / (lam * lam) + 1.0)


def _radial_curvature(metric, bump, d):
    """Curvature at hyperbolic distance ``d`` from an isolated bump centre."""
    phi, fd, f2 = _radial(d, bump.radius, metric.profile)
    if d > 0:
        lap_h = f2 + (fd * d) / math.tanh(d)
    else:
        lap_h = 2.0 * f2
    e = metric.epsilon * bump.amplitude
    return metric.base_curvature * math.exp(-2.0 * e * phi) * (1.0 + e * lap_h)


def _bumps_isolated(metric):
    for i, b in enumerate(metric.bumps):
        for j, c in metric.translates:
            if j == i and c == b.center:
                continue
            if float(disk_distance(b.center, c)) < b.radius + metric.bumps[j].radius:
                return False
    return True


def curvature_bounds(metric, grid_resolution=200):
    """``(b, c, ok)`` with ``b^2 = min(-K)`` and ``c^2 = max(-K)`` over F.

    A cartesian grid of ``grid_resolution^2`` chart points is filtered to F.
    When bump supports do not overlap the curvature is radial around each
    centre, and the extremes along the radius are refined by bounded scalar
    minimization.  Raises :class:`PositiveCurvature` at the first point with
    ``K >= 0``.
    """
    a2 = -metric.base_curvature
    lo, hi = a2, a2
    if metric.epsilon == 0 or not metric.bumps:
        return math.sqrt(lo), math.sqrt(hi), True
    xs = np.linspace(-1, 1, grid_resolution + 2)[1:-1]
    for x in xs:
        for y in xs:
            z = complex(x, y)
            if abs(z) >= 1 or not metric.group.in_domain(z):
                continue
            K = gaussian_curvature(metric, z)
            if K >= 0:
                raise PositiveCurvature(z, K)
            lo, hi = min(lo, -K), max(hi, -K)
    if _bumps_isolated(metric):
        for b in metric.bumps:
            ds = np.linspace(0.0, b.radius, 2001)
            vals = np.array([_radial_curvature(metric, b, d) for d in ds])
            if vals.max() >= 0:
                k = int(np.argmax(vals))
                z = b.center + math.tanh(ds[k] / 2)
                raise PositiveCurvature(z, float(vals[k]))
            for sign, idx in ((1.0, int(np.argmax(vals))), (-1.0, int(np.argmin(vals)))):
                a = ds[max(idx - 1, 0)]
                c = ds[min(idx + 1, ds.size - 1)]
                if c > a:
                    res = minimize_scalar(lambda d: -sign * _radial_curvature(metric, b, d),
                                          bounds=(a, c), method="bounded",
                                          options={"xatol": 1e-12})
                    v = -sign * res.fun
                else:
                    v = vals[idx]
                lo, hi = min(lo, -v), max(hi, -v)
    return math.sqrt(lo), math.sqrt(hi), True


def epsilon_max(metric):
    """Largest epsilon keeping ``K < 0`` at every isolated bump centre (closed form)."""
    worst = math.inf
    for b in metric.bumps:
        _, _, f2 = _radial(0.0, b.radius, metric.profile)
        lap0 = 2.0 * f2 * b.amplitude
        if lap0 < 0:
            worst = min(worst, -1.0 / lap0)
    return worst


def default_bumps():
    """The shipped test bump: centred at the origin, radius 0.8, amplitude 0.5."""
    return [Bump(0j, 0.8, 0.5)]
