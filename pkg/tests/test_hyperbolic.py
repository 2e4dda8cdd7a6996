import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lyaprigid.errors import MaxIterations, NotHyperbolic
from lyaprigid.hyperbolic import (MobiusTransform, axis_points, census_to_csv, compose,
                                  disk_distance, enumerate_classes, fundamental_domain_project,
                                  growth_exponent, is_proper_power, make_group, translation_length)

DIAG = MobiusTransform.from_matrix(np.diag([2.0, 0.5]), "g", "upper")


def rotation(theta):
    return MobiusTransform.from_matrix(np.diag([cmath.exp(0.5j * theta), cmath.exp(-0.5j * theta)]))


def brute_force_classes(letters, L):
    """Naive conjugacy classes (up to inversion) of nontrivial words of length <= L."""
    inv = {x: x.swapcase() for x in letters}
    seen = set()
    for n in range(1, L + 1):
        for w in itertools.product(letters, repeat=n):
            if any(w[k + 1] == inv[w[k]] for k in range(n - 1)):
                continue
            w = list(w)
            while len(w) > 1 and w[-1] == inv[w[0]]:
                w = w[1:-1]
            s = "".join(w)
            r = "".join(inv[x] for x in reversed(w))
            key = min(t[k:] + t[:k] for t in (s, r) for k in range(len(t)))
            seen.add(key)
    return seen


# Moebius algebra ------------------------------------------------------------------


def test_identity_compose():
    g = DIAG
    h = compose(MobiusTransform.identity("upper"), g)
    assert np.allclose(h.matrix, g.matrix, atol=1e-15)


def test_inverse_compose():
    g = MobiusTransform.from_matrix(np.array([[2.0, 1.0], [3.0, 2.0]]), "g", "upper")
    h = compose(g, g.inverse())
    assert np.max(np.abs(h.matrix - np.eye(2))) < 1e-12


def test_diag_square():
    h = compose(DIAG, DIAG)
    assert np.allclose(h.matrix, np.diag([4.0, 0.25]), atol=1e-15)


def test_determinant_normalized(schottky):
    rng = np.random.default_rng(3)
    for _ in range(20):
        w = "".join(rng.choice(list("abAB"), size=12))
        M = schottky.word(w).matrix
        assert abs(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0] - 1.0) <= 1e-12 * max(1.0, np.abs(M).max() ** 2)
        h = compose(schottky.word(w[:6]), schottky.word(w[6:]))
        N = h.matrix
        assert abs(N[0, 0] * N[1, 1] - N[0, 1] * N[1, 0] - 1.0) <= 1e-12 * max(1.0, np.abs(N).max() ** 2)


def test_translation_length_closed_form():
    assert translation_length(DIAG) == pytest.approx(2 * math.acosh(1.25), abs=1e-15)
    assert translation_length(DIAG) == pytest.approx(2 * math.log(2.0), abs=1e-14)
    assert translation_length(compose(DIAG, DIAG)) == pytest.approx(4 * math.log(2.0), abs=1e-14)


def test_elliptic_not_hyperbolic():
    with pytest.raises(NotHyperbolic):
        translation_length(rotation(0.7))
    assert rotation(0.7).classify() == "elliptic"


def test_parabolic_band_indeterminate():
    p = MobiusTransform.from_matrix(np.array([[1.0, 1.0], [0.0, 1.0]]), model="upper")
    assert p.classify() == "indeterminate"
    with pytest.raises(NotHyperbolic):
        translation_length(p)


def test_model_round_trip():
    g = MobiusTransform.from_matrix(np.array([[2.0, 1.0], [3.0, 2.0]]), model="upper")
    z = 0.3 + 0.8j
    w = (z - 1j) / (z + 1j)
    gd = g.to_model("disk")
    assert (gd(w) - (g(z) - 1j) / (g(z) + 1j)) == pytest.approx(0, abs=1e-14)
    assert np.allclose(gd.to_model("upper").matrix, g.matrix, atol=1e-14) or \
        np.allclose(gd.to_model("upper").matrix, -g.matrix, atol=1e-14)


# groups -------------------------------------------------------------------------


def test_schottky_geometry(schottky):
    assert schottky.check() == []
    for g in schottky.generators.values():
        assert g.classify() == "hyperbolic"
    assert translation_length(schottky.generators["a"]) == pytest.approx(1.76768802610873, abs=1e-12)


def test_schottky_generators_pair_circles(schottky):
    a = schottky.generators["a"]
    cA, rA = schottky.discs["A"]
    ca, ra = schottky.discs["a"]
    for phi in np.linspace(0, 2 * math.pi, 7):
        z = cA + rA * cmath.exp(1j * phi)
        if abs(z) < 1:
            assert abs(abs(a(z) - ca) - ra) < 1e-12


def test_unknown_group_kind():
    with pytest.raises(ValueError):
        make_group("torus")


def test_genus2_systoles():
    g = make_group("genus2")
    assert g.check() == []
    classes = enumerate_classes(g, 3)
    systole = 2 * math.acosh(1 + math.sqrt(2))
    lengths = np.array([c.length for c in classes])
    assert lengths.min() == pytest.approx(systole, abs=1e-9)
    # the regular-octagon surface carries exactly 12 systoles
    assert np.sum(np.abs(lengths - systole) < 1e-7) == 12


# census -------------------------------------------------------------------------


def test_census_length_one(schottky):
    assert sorted(c.word for c in enumerate_classes(schottky, 1)) == ["a", "b"]


def test_census_length_two(schottky):
    words = {c.word for c in enumerate_classes(schottky, 2)}
    assert words == {"a", "b", "ab", "aB", "aa", "bb"}
    assert len(brute_force_classes("abAB", 2)) == 6


def test_census_length_zero(schottky):
    assert enumerate_classes(schottky, 0) == []


@pytest.mark.parametrize("L", [3, 4, 5])
def test_census_matches_brute_force(schottky, L):
    classes = enumerate_classes(schottky, L)
    naive = brute_force_classes("abAB", L)
    assert len(classes) == len(naive)
    lengths = sorted(round(c.length, 9) for c in classes)
    naive_len = sorted(round(translation_length(schottky.word(w)), 9) for w in naive)
    assert lengths == naive_len


def test_census_count_and_sort(schottky):
    classes = enumerate_classes(schottky, 4)
    assert len(classes) == 25
    assert classes[0].word == "abAB"
    assert classes[0].length == pytest.approx(0.473204991661621, abs=1e-12)
    assert all(x.length <= y.length + 1e-12 for x, y in zip(classes, classes[1:]))


def test_census_csv(tmp_path, schottky):
    path = tmp_path / "c.csv"
    census_to_csv(enumerate_classes(schottky, 2), path)
    rows = path.read_text().splitlines()
    assert rows[0] == "word,trace,length"
    assert len(rows) == 7
    census_to_csv([], path)
    assert path.read_text() == "word,trace,length\n"


def test_proper_power():
    assert is_proper_power("abab") and is_proper_power("aaa")
    assert not is_proper_power("abAB") and not is_proper_power("a")


def test_powers_scale_length(schottky):
    for cl in enumerate_classes(schottky, 4):
        for n in range(1, 6):
            g = schottky.word(cl.word * n)
            assert translation_length(g) == pytest.approx(n * cl.length, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(word=st.text("abAB", min_size=1, max_size=4), conj=st.text("abAB", min_size=0, max_size=4))
def test_length_is_class_function(schottky, word, conj):
    g = schottky.word(word)
    if g.classify() != "hyperbolic":
        return
    h = schottky.word(conj) if conj else MobiusTransform.identity()
    c = compose(compose(h, g), h.inverse())
    assert translation_length(c) == pytest.approx(translation_length(g), abs=1e-10)


@settings(max_examples=30, deadline=None)
# conjugators with entries up to e^1.5: beyond that the trace of h g h^-1 itself
# loses more than 1e-10 to cancellation in double precision
@given(a=st.floats(-2, 2), b=st.floats(-1.5, 1.5), c=st.floats(-2, 2))
def test_length_invariant_under_real_conjugation(a, b, c):
    M = np.array([[1.0, a], [0.0, 1.0]]) @ np.array([[math.exp(b), 0], [0, math.exp(-b)]]) @ \
        np.array([[1.0, 0.0], [c, 1.0]])
    h = MobiusTransform.from_matrix(M, model="upper")
    g = compose(compose(h, DIAG), h.inverse())
    assert translation_length(g) == pytest.approx(2 * math.log(2.0), abs=1e-10)


# growth ---------------------------------------------------------------------------


def test_growth_exponent_stable_between_6_and_8(schottky):
    d6 = growth_exponent(schottky, 6)
    d8 = growth_exponent(schottky, 8)
    assert 0 < d6.delta <= 1 and 0 < d8.delta <= 1
    assert abs(d8.delta - d6.delta) <= 0.1 * d6.delta
    assert d6.stderr > 0


# projection -------------------------------------------------------------------------


def test_project_interior_identity(schottky):
    w, h = fundamental_domain_project(schottky, 0.1 + 0.05j)
    assert w == 0.1 + 0.05j
    assert h.label == ""
    assert np.allclose(h.matrix, np.eye(2))


def test_project_one_pingpong_step(schottky):
    ca, ra = schottky.discs["a"]
    z = ca - 0.9 * ra * ca / abs(ca)
    w, h = fundamental_domain_project(schottky, z)
    a_inv = schottky.generators["A"]
    assert h.label[0] == "a"
    if len(h.label) == 1:
        assert w == pytest.approx(a_inv(z), abs=1e-14)
    assert schottky.in_domain(w)
    # z = x1 x2 ... (w)
    assert schottky.word(h.label)(w) == pytest.approx(z, abs=1e-12)


def test_project_near_limit_set_hits_iteration_cap(schottky):
    p, q = schottky.generators["a"].fixed_points()
    z = q * (1 - 1e-10)
    with pytest.raises(MaxIterations):
        fundamental_domain_project(schottky, z, max_iter=8)


def test_project_outside_disk(schottky):
    with pytest.raises(ValueError):
        fundamental_domain_project(schottky, 1.2)


# axes ---------------------------------------------------------------------------------


def test_axis_points_diag():
    pts = axis_points(DIAG, 4)
    assert np.allclose(pts.real, 0.0, atol=1e-14)
    s = np.log(pts.imag)
    assert s == pytest.approx(np.arange(4) * 2 * math.log(2.0) / 4, abs=1e-12)


def test_axis_points_single():
    pts = axis_points(DIAG, 1)
    assert pts.shape == (1,)
    assert pts[0] == pytest.approx(1j, abs=1e-14)


def test_axis_points_conjugate():
    h = MobiusTransform.from_matrix(np.array([[1.0, 0.7], [0.3, 1.21]]), model="upper")
    g = compose(compose(h, DIAG), h.inverse())
    pts = axis_points(g, 16)
    p, q = g.fixed_points()
    cen, rad = (p.real + q.real) / 2, abs(p.real - q.real) / 2
    assert np.max(np.abs(np.abs(pts - cen) - rad)) < 1e-10
    images = h(1j * np.exp(np.linspace(0, 2 * math.log(2), 50)))
    assert np.max(np.abs(np.abs(images - cen) - rad)) < 1e-10
    # consecutive samples are a quarter translation apart
    assert disk_distance((pts[0] - 1j) / (pts[0] + 1j), (pts[1] - 1j) / (pts[1] + 1j)) == \
        pytest.approx(2 * math.log(2.0) / 16, abs=1e-10)


def test_project_point_on_pairing_circle(schottky):
    c, r = schottky.discs["B"]
    z = c + r * cmath.exp(1j * math.radians(130.0))
    w, h = fundamental_domain_project(schottky, z)
    assert abs(w - z) < 1e-15 or schottky.in_domain(w)
