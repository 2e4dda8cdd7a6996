"""Moebius isometries, Fuchsian groups and the closed-geodesic census.

Groups act on the Poincare disk.  A group is described by letters (``a``,
``b``, ... and inverses ``A``, ``B``, ...), each owning an open disc ``D_x``
bounded by a geodesic circle, with ``x(F)`` contained in ``D_x`` where ``F``
is the unit disk minus all the ``D_x``.  The same ping-pong rule (a point in
``D_x`` is pulled back by ``x^-1``) serves Schottky groups and the Dirichlet
octagon of the genus-two surface.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import numpy as np

from .errors import MaxIterations, NotHyperbolic

PARABOLIC_BAND = 1e-9

_CAYLEY = np.array([[1, -1j], [1, 1j]], dtype=complex)  # H -> D, z -> (z - i)/(z + i)
_CAYLEY_INV = np.array([[1j, 1j], [-1, 1]], dtype=complex) / 2j


def _normalize(M):
    M = np.asarray(M, dtype=complex)
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    M = M / cmath.sqrt(det)
    return M


@dataclass(frozen=True)
class MobiusTransform:
    """``z -> (a z + b) / (c z + d)`` with unit determinant.

    ``model`` records whether the matrix acts on the upper half-plane
    (real entries) or the disk (SU(1,1) form).
    """

    matrix: np.ndarray = field(repr=False)
    label: str = ""
    model: str = "disk"
    # trace carried over from an exact real product; the disk-model entries of
    # long words are large and their diagonal sum cancels catastrophically
    exact_trace: complex | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_matrix(cls, M, label="", model="disk"):
        return cls(_normalize(M), label, model)

    @classmethod
    def identity(cls, model="disk"):
        return cls(np.eye(2, dtype=complex), "", model)

    def __call__(self, z):
        (a, b), (c, d) = self.matrix
        return (a * z + b) / (c * z + d)

    def derivative(self, z):
        (a, b), (c, d) = self.matrix
        return 1.0 / (c * z + d) ** 2

    def inverse(self):
        (a, b), (c, d) = self.matrix
        inv = np.array([[d, -b], [-c, a]])
        return MobiusTransform(inv, _invert_word(self.label), self.model, self.exact_trace)

    @property
    def trace(self):
        if self.exact_trace is not None:
            return self.exact_trace
        return complex(self.matrix[0, 0] + self.matrix[1, 1])

    @property
    def abs_trace(self):
        return abs(self.trace.real)

    def classify(self, band=PARABOLIC_BAND):
        tr = self.trace
        if abs(tr.imag) > 1e-7 * max(1.0, abs(tr)):
            return "loxodromic"
        t = abs(tr.real)
        if t > 2 + band:
            return "hyperbolic"
        if t < 2 - band:
            return "elliptic"
        return "indeterminate"

    def to_model(self, model):
        if model == self.model:
            return self
        # conjugation preserves the determinant; recomputing it from large
        # entries would cancel catastrophically, so no renormalization here
        if model == "disk":
            M = _CAYLEY @ self.matrix @ _CAYLEY_INV
        else:
            M = _CAYLEY_INV @ self.matrix @ _CAYLEY
        return MobiusTransform(M, self.label, model, self.exact_trace)

    def fixed_points(self):
        """``(repelling, attracting)`` fixed points; ``inf`` may appear in the upper model."""
        if self.classify() != "hyperbolic":
            raise NotHyperbolic(f"{self.label or 'element'} has trace {self.trace:.6g}")
        (a, b), (c, d) = self.matrix
        if abs(c) < 1e-300:
            # z -> (a z + b)/d : fixes inf and b/(d - a)
            finite = b / (d - a)
            if abs(a / d) > 1:
                return finite, complex(math.inf)
            return complex(math.inf), finite
        disc = cmath.sqrt(self.trace ** 2 - 4)
        z1 = ((a - d) + disc) / (2 * c)
        z2 = ((a - d) - disc) / (2 * c)
        if abs(c * z1 + d) > 1:
            return z2, z1
        return z1, z2


def _invert_word(word):
    return word[::-1].swapcase()


def compose(a, b):
    """``a o b`` (apply ``b`` first), determinant renormalized."""
    if a.model != b.model:
        b = b.to_model(a.model)
    return MobiusTransform(_normalize(a.matrix @ b.matrix), a.label + b.label, a.model)


def translation_length(g):
    """Hyperbolic translation length ``2 arccosh(|tr g| / 2)``."""
    if g.classify() != "hyperbolic":
        raise NotHyperbolic(f"{g.label or 'element'} is {g.classify()} (trace {g.trace:.12g})")
    return 2.0 * math.acosh(g.abs_trace / 2.0)


def hyperbolic_translation(distance, angle=0.0):
    """Disk isometry translating by ``distance`` along the diameter at ``angle``."""
    ch, sh = math.cosh(distance / 2), math.sinh(distance / 2)
    e = cmath.exp(1j * angle)
    M = np.array([[ch, sh * e], [sh * e.conjugate(), ch]], dtype=complex)
    return MobiusTransform(M, "", "disk")


def disk_distance(z, w):
    num = abs(z - w)
    den = abs(1 - np.conj(w) * z)
    return 2.0 * np.arctanh(np.minimum(num / den, 1.0))


def geodesic_circle(angle, half_width):
    """Euclidean circle orthogonal to the unit circle meeting it at ``angle +- half_width``."""
    d = 1.0 / math.cos(half_width)
    return cmath.rect(d, angle), math.tan(half_width)


# groups -----------------------------------------------------------------------


@dataclass
class FuchsianGroup:
    kind: str
    generators: dict
    discs: dict
    parameters: dict = field(default_factory=dict)
    funnels: list = field(default_factory=list)

    @property
    def letters(self):
        return list(self.discs)

    @property
    def rank(self):
        return len(self.discs) // 2

    def __post_init__(self):
        # words are multiplied as real SL2 matrices so traces stay exactly real
        self._real = {x: np.real(g.to_model("upper").matrix) for x, g in self.generators.items()}

    def word_real(self, w):
        M = np.eye(2)
        for ch in w:
            M = M @ self._real[ch]
        return M

    def word(self, w):
        """Transform of a word; ``"ab"`` acts as ``a o b``."""
        R = self.word_real(w)
        g = MobiusTransform(_normalize(R.astype(complex)), w, "upper").to_model("disk")
        return MobiusTransform(g.matrix, w, "disk", complex(R[0, 0] + R[1, 1]))

    def letter_containing(self, z):
        """Letter whose disc contains ``z`` (deepest one), or ``None`` if ``z`` is in F.

        Points within ``1e-12`` (relative) of a pairing circle count as in F:
        a side pairing maps one circle onto the other, so a strict test would
        bounce a boundary point between the two discs forever.
        """
        best, depth = None, 1.0 - 1e-12
        for x, (c, r) in self.discs.items():
            q = abs(z - c) / r
            if q < depth:
                best, depth = x, q
        return best

    def in_domain(self, z):
        return abs(z) < 1 and self.letter_containing(z) is None

    def in_funnel(self, z):
        return any(abs(z - c) < r for c, r in self.funnels)

    def check(self, separation=1e-3):
        """Generators hyperbolic; for Schottky groups, discs disjoint with margin."""
        problems = []
        for x, g in self.generators.items():
            if g.classify() != "hyperbolic":
                problems.append(f"generator {x} not hyperbolic")
        if self.kind == "schottky":
            items = list(self.discs.items())
            for i in range(len(items)):
                for j in range(i + 1, len(items)):
                    (x, (c1, r1)), (y, (c2, r2)) = items[i], items[j]
                    if abs(c1 - c2) - r1 - r2 < separation:
                        problems.append(f"discs {x},{y} overlap")
        return problems


DEFAULT_HALF_WIDTH_DEG = 44.9


def schottky_group(half_width=math.radians(DEFAULT_HALF_WIDTH_DEG)):
    """Rank-two classical Schottky group with four symmetric geodesic pairing circles.

    Circle ``a`` sits at angle 0, ``b`` at pi/2 and their inverses opposite;
    ``half_width`` is the angular radius of each circle seen from the origin
    (disjointness needs ``half_width < pi/4``).
    """
    if not 0 < half_width < math.pi / 4:
        raise ValueError("half_width must lie in (0, pi/4)")
    discs = {}
    for x, ang in (("a", 0.0), ("b", math.pi / 2), ("A", math.pi), ("B", 1.5 * math.pi)):
        discs[x] = geodesic_circle(ang, half_width)
    c, r = discs["a"]
    x0 = abs(c) - r
    L = 4.0 * math.atanh(x0)
    gens = {}
    for x, ang in (("a", 0.0), ("b", math.pi / 2)):
        g = hyperbolic_translation(L, ang)
        gens[x] = MobiusTransform(g.matrix, x, "disk")
        gens[x.upper()] = gens[x].inverse()
    group = FuchsianGroup("schottky", gens, discs, {"half_width": half_width})
    group.funnels = _commutator_funnels(group)
    return group


def _commutator_funnels(group):
    """Half-planes beyond the lifts of the boundary geodesic ``[a, b]`` that meet F."""
    funnels = []
    base = "abAB"
    words = {base[k:] + base[:k] for k in range(4)}
    for w in sorted(words):
        g = group.word(w)
        p, q = g.fixed_points()
        c, r = _geodesic_through(p, q)
        if abs(c) < r:
            continue
        if any(abs(c - c2) < 1e-9 for c2, _ in funnels):
            continue
        funnels.append((c, r))
    return funnels


def _geodesic_through(p, q):
    """Euclidean circle (center, radius) of the geodesic with ideal endpoints p, q."""
    # centre lies on the bisector direction, orthogonal to the unit circle
    mid = (p + q) / 2
    if abs(mid) < 1e-12:
        raise ValueError("endpoints are antipodal; the geodesic is a diameter")
    u = mid / abs(mid)
    half = abs(p - q) / 2
    cos_half = abs(mid)
    d = 1.0 / cos_half
    return u * d, math.sqrt(d * d - 1.0) if half > 0 else 0.0


def genus2_group():
    """Surface group of the regular octagon with opposite sides paired (angles pi/4)."""
    r_in = math.acosh(1.0 / math.tan(math.pi / 8))
    x_in = math.tanh(r_in / 2)
    d = (1 + x_in * x_in) / (2 * x_in)
    half = math.acos(1.0 / d)
    discs, gens = {}, {}
    names = "abcdABCD"
    for k, x in enumerate(names):
        ang = k * math.pi / 4
        discs[x] = geodesic_circle(ang, half)
        gens[x] = MobiusTransform(hyperbolic_translation(2 * r_in, ang).matrix, x, "disk")
    return FuchsianGroup("surface_genus2", gens, discs, {"inradius": r_in})


def make_group(kind, **params):
    if kind == "schottky":
        hw = params.get("half_width_deg")
        return schottky_group(math.radians(hw)) if hw is not None else schottky_group()
    if kind in ("surface_genus2", "genus2"):
        return genus2_group()
    raise ValueError(f"unknown group kind {kind!r}")


# projection and axes ----------------------------------------------------------


def fundamental_domain_project(group, z, max_iter=200):
    """Ping-pong ``z`` into F; returns ``(w, h)`` with ``w = h(z)`` in F.

    ``h.label`` spells the deck letters pulled back, as a word ``x1 x2 ...``
    such that ``z = x1 x2 ... (w)``.
    """
    if not abs(z) < 1:
        raise ValueError("point must lie strictly inside the disk")
    M = np.eye(2, dtype=complex)
    letters = []
    w = complex(z)
    for _ in range(max_iter):
        x = group.letter_containing(w)
        if x is None:
            h = MobiusTransform(_normalize(M), "".join(letters), "disk")
            return w, h
        ginv = group.generators[x.swapcase()]
        w = ginv(w)
        M = ginv.matrix @ M
        letters.append(x)
    raise MaxIterations(f"ping-pong did not reach F after {max_iter} steps from z={z!r}")


def _upper_axis_frame(g):
    """SL2(R) map ``k`` with ``k(0)`` repelling and ``k(inf)`` attracting."""
    p, q = g.fixed_points()
    p = complex(p).real if np.isfinite(abs(p)) else math.inf
    q = complex(q).real if np.isfinite(abs(q)) else math.inf
    if math.isinf(q):
        M = np.array([[1.0, p], [0.0, 1.0]])
    elif math.isinf(p):
        M = np.array([[q, -1.0], [1.0, 0.0]])
    elif q > p:
        M = np.array([[q, p], [1.0, 1.0]]) / math.sqrt(q - p)
    else:
        M = np.array([[-q, p], [-1.0, 1.0]]) / math.sqrt(p - q)
    return MobiusTransform(M.astype(complex), "", "upper")


def axis_points(g, count, offset=0.0):
    """``count`` equally spaced axis samples over one translation length.

    Samples start at the axis point nearest the model's centre (``0`` in the
    disk, ``i`` in the upper half-plane), shifted by arclength ``offset``, and
    advance from the repelling toward the attracting fixed point.
    """
    if count < 1:
        raise ValueError("count must be positive")
    ell = translation_length(g)
    gu = g.to_model("upper")
    gu = MobiusTransform(np.real(gu.matrix).astype(complex), gu.label, "upper")
    k = _upper_axis_frame(gu)
    w = k.inverse()(1j)
    s0 = math.log(abs(w))
    s = s0 + offset + ell * np.arange(count) / count
    pts = k(1j * np.exp(s))
    if g.model == "disk":
        pts = (pts - 1j) / (pts + 1j)
    return np.asarray(pts, dtype=complex)


def axis_tangent(g, z):
    """Unit chart direction (complex) of the axis of ``g`` at the axis point ``z``."""
    ell = translation_length(g)
    h = 1e-6 * max(ell, 1.0)
    gu = g.to_model("upper")
    gu = MobiusTransform(np.real(gu.matrix).astype(complex), gu.label, "upper")
    k = _upper_axis_frame(gu)
    zu = z if g.model == "upper" else 1j * (1 + z) / (1 - z)
    s = math.log(abs(k.inverse()(zu)))
    # d/ds of k(i e^s) = k'(i e^s) * i e^s
    wz = 1j * math.exp(s)
    v = k.derivative(wz) * wz
    if g.model == "disk":
        v = v * 2j / (zu + 1j) ** 2
    return v / abs(v)


# census ------------------------------------------------------------------------


@dataclass
class GeodesicClass:
    word: str
    transform: MobiusTransform = field(repr=False)
    trace: float
    length: float
    axis: tuple = field(repr=False, default=())

    @property
    def word_length(self):
        return len(self.word)


def _letter_order(group):
    lower = sorted(x for x in group.letters if x.islower())
    return {ch: i for i, ch in enumerate(lower + [x.upper() for x in lower])}


def canonical_word(word, order):
    """Minimal representative of ``word`` under cyclic rotation and inversion."""
    inv = _invert_word(word)
    cands = [w[k:] + w[:k] for w in (word, inv) for k in range(len(w))]
    return min(cands, key=lambda s: [order[ch] for ch in s])


def cyclically_reduced_words(letters, n):
    """All cyclically reduced words of length ``n`` over ``letters`` (free group)."""
    if n == 0:
        return []
    out = []

    def extend(prefix):
        if len(prefix) == n:
            if n == 1 or prefix[-1] != prefix[0].swapcase():
                out.append(prefix)
            return
        for x in letters:
            if prefix and x == prefix[-1].swapcase():
                continue
            extend(prefix + x)

    extend("")
    return out


def _chord_key(e1, e2):
    """Unoriented geodesic with ideal endpoints ``e1, e2``: (distance to 0, endpoint angles)."""
    a1 = round(cmath.phase(e1) % (2 * math.pi), 6) % round(2 * math.pi, 6)
    a2 = round(cmath.phase(e2) % (2 * math.pi), 6) % round(2 * math.pi, 6)
    half = abs(cmath.phase(e2 / e1)) / 2
    foot = (1.0 - math.sin(half)) / math.cos(half) if half < math.pi / 2 - 1e-12 else 0.0
    return (round(foot, 6),) + tuple(sorted((a1, a2)))


def _class_key(group, g, ell, step=0.02):
    """Geometric identity of a closed geodesic.

    The axis is sampled over one period and every sample is pulled into F;
    each pull-back carries a translate of the axis through F.  The key is
    the translate closest to the origin, named by its ideal endpoints.  Its
    foot lies in the closure of F, possibly on a side, where the pull-back
    may return the paired side instead; closing the candidates under the
    generators makes the choice independent of the word.
    """
    p, q = g.fixed_points()
    ends = {}
    for z in axis_points(g, max(64, int(math.ceil(ell / step)))):
        if not abs(z) < 1 - 1e-12:
            continue
        _, h = fundamental_domain_project(group, complex(z))
        e1, e2 = complex(h(p)), complex(h(q))
        ends.setdefault(_chord_key(e1, e2), (e1, e2))
    keys = set(ends)
    for e1, e2 in ends.values():
        for x in group.generators.values():
            keys.add(_chord_key(complex(x(e1)), complex(x(e2))))
    return (round(ell, 7), min(keys) if keys else None)


def enumerate_classes(group, max_word_length):
    """Closed geodesics from cyclically reduced words up to ``max_word_length``.

    Schottky groups are free, so deduplication by rotation/inversion of words
    is exact.  For the surface group, words are additionally merged when their
    geodesics coincide geometrically.
    """
    if max_word_length <= 0:
        return []
    order = _letter_order(group)
    seen = {}
    for n in range(1, max_word_length + 1):
        for w in cyclically_reduced_words(group.letters, n):
            cw = canonical_word(w, order)
            if cw in seen:
                continue
            g = group.word(cw)
            if g.classify() != "hyperbolic":
                seen[cw] = None
                continue
            seen[cw] = g
    classes = []
    for w, g in seen.items():
        if g is None:
            continue
        ell = translation_length(g)
        classes.append(GeodesicClass(w, g, g.abs_trace, ell, g.fixed_points()))
    if group.kind != "schottky":
        merged = {}
        for cl in sorted(classes, key=lambda c: (len(c.word), [order[ch] for ch in c.word])):
            key = _class_key(group, cl.transform, cl.length)
            merged.setdefault(key, cl)
        classes = list(merged.values())
    classes.sort(key=lambda c: (round(c.length, 9), len(c.word), [order[ch] for ch in c.word]))
    return classes


def min_length_beyond(group, max_word_length, extra=2):
    """Shortest translation length among words of length ``L+1 .. L+extra``.

    Every class missing from a census of word length ``L`` is at least this
    long, so the census counts are complete below it.
    """
    best = math.inf
    for n in range(max_word_length + 1, max_word_length + extra + 1):
        for w in cyclically_reduced_words(group.letters, n):
            g = group.word(w)
            if g.classify() == "hyperbolic":
                best = min(best, translation_length(g))
    return best


def census_to_csv(classes, path):
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["word", "trace", "length"])
        for cl in classes:
            wr.writerow([cl.word, f"{cl.trace:.15g}", f"{cl.length:.15g}"])


# growth of the length spectrum ---------------------------------------------------


def is_proper_power(word):
    n = len(word)
    return any(n % d == 0 and word == word[:d] * (n // d) for d in range(1, n))


def _reduced_levels(group, nmax):
    """Yield ``(n, codes, matrices)`` for all reduced words of length ``n <= nmax``.

    ``codes`` is an ``(N, n)`` array of letter indices and ``matrices`` the
    ``(N, 2, 2)`` real upper-model products, built level by level.
    """
    letters = group.letters
    inv = np.array([letters.index(x.swapcase()) for x in letters])
    gens = np.array([group._real[x] for x in letters])
    k = len(letters)
    codes = np.arange(k)[:, None]
    mats = gens.copy()
    yield 1, codes, mats
    for n in range(2, nmax + 1):
        nxt = np.repeat(np.arange(k)[None, :], len(codes), axis=0)
        ok = nxt != inv[codes[:, -1]][:, None]
        rows, cols = np.nonzero(ok)
        codes = np.hstack([codes[rows], cols[:, None]])
        mats = np.einsum("nij,njk->nik", mats[rows], gens[cols])
        yield n, codes, mats


def _primitive_cyclic_lengths(group, codes, mats):
    inv = np.array([group.letters.index(x.swapcase()) for x in group.letters])
    keep = codes[:, -1] != inv[codes[:, 0]]
    n = codes.shape[1]
    for d in range(1, n):
        if n % d == 0:
            keep &= ~np.all(codes == np.roll(codes, d, axis=1), axis=1)
    tr = np.abs(mats[keep, 0, 0] + mats[keep, 1, 1])
    return 2.0 * np.arccosh(np.maximum(tr, 2.0) / 2.0)


def completeness_length(group, max_word_length, extra=4):
    """Shortest primitive translation length among words of length ``L+1 .. L+extra``.

    Below this value the census of word length ``L`` is taken as complete.
    In Schottky groups with a short commutator the shortest long words are
    commutator chains, whose length grows roughly one unit per four letters,
    so ``extra = 4`` looks one full chain period ahead.
    """
    best = math.inf
    for n, codes, mats in _reduced_levels(group, max_word_length + extra):
        if n > max_word_length:
            lens = _primitive_cyclic_lengths(group, codes, mats)
            if lens.size:
                best = min(best, float(lens.min()))
    return best


@dataclass
class GrowthFit:
    delta: float
    stderr: float
    complete_below: float
    n_primitive: int
    window: tuple

    def as_dict(self):
        return {"delta": self.delta, "stderr": self.stderr,
                "complete_below": self.complete_below,
                "n_primitive": self.n_primitive, "window": list(self.window)}


def growth_exponent(group, max_word_length, classes=None, lower=0.5, points=64,
                    complete_below=None):
    """Least-squares fit of ``N(T) ~ exp(delta T) / (delta T)`` to the census.

    ``N(T)`` counts primitive classes with length at most ``T``.  The fit is
    restricted to ``[lower * T_c, T_c)`` where ``T_c`` comes from
    :func:`completeness_length`, so that words longer than the census cannot
    contribute to the counted range.  Surface groups have relators, so the
    free-word threshold is meaningless there; by default the window then ends
    at the shortest class whose shortest word has length exactly ``L``,
    below which the census had already saturated one word length earlier.
    """
    from scipy.optimize import least_squares

    if classes is None:
        classes = enumerate_classes(group, max_word_length)
    lens = np.sort([c.length for c in classes if not is_proper_power(c.word)])
    if complete_below is not None:
        t_c = complete_below
    elif group.kind == "schottky":
        t_c = completeness_length(group, max_word_length)
    else:
        newest = [c.length for c in classes if len(c.word) == max_word_length]
        t_c = min(newest) if newest else math.inf
    t_c = min(t_c, float(lens[-1])) if lens.size else t_c
    T = np.linspace(lower * t_c, t_c, points, endpoint=False)
    N = np.searchsorted(lens, T, side="right").astype(float)
    m = N > 0
    if m.sum() < 3:
        raise ValueError("census too small to fit a growth exponent")
    T, N = T[m], N[m]

    def resid(d):
        return np.log(N) - (d[0] * T - np.log(d[0] * T))

    fit = least_squares(resid, [0.5], bounds=(1e-6, 10.0))
    r = fit.fun
    J = fit.jac
    dof = max(1, r.size - 1)
    var = float(r @ r) / dof / float(J[:, 0] @ J[:, 0])
    return GrowthFit(float(fit.x[0]), math.sqrt(var), t_c, int(lens.size), (float(T[0]), t_c))
