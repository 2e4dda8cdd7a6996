import math

import numpy as np
import pytest

from lyaprigid.errors import NoConvergence
from lyaprigid.hyperbolic import enumerate_classes
from lyaprigid.metric import ConformalMetric, curvature_bounds, default_bumps
from lyaprigid.orbits import (ORBIT_COLUMNS, ShootingConfig, orbit_exponent, orbits_to_csv,
                              refine_orbit, segment_count)
from lyaprigid.riccati import period_mean


@pytest.fixture(scope="module")
def classes(schottky):
    return {c.word: c for c in enumerate_classes(schottky, 4)}


def _rotation(word, target):
    return len(word) == len(target) and word in target + target


def test_segment_count():
    assert segment_count(0.3) == 2
    assert segment_count(2.0) == 2
    assert segment_count(2.01) == 3
    assert segment_count(7.5) == 8


@pytest.mark.parametrize("word", ["a", "ab", "aB", "abAB", "aab", "abab"])
def test_unperturbed_orbit_is_axis(metric0, classes, word):
    cls = classes[word]
    orbit = refine_orbit(metric0, cls)
    assert abs(orbit.period - cls.length) <= 1e-8
    assert orbit.iterations <= 2
    assert orbit.closure_defect <= 1e-8
    assert _rotation(orbit.deck_word, word)


@pytest.mark.parametrize("word", ["a", "ab"])
def test_period_linear_in_epsilon(schottky, metric0, classes, word):
    cls = classes[word]
    shifts = []
    for eps in (0.01, 0.02):
        orbit = refine_orbit(ConformalMetric(schottky, default_bumps(), eps), cls)
        assert orbit.closure_defect <= 1e-8
        assert _rotation(orbit.deck_word, word)
        shifts.append(orbit.period - cls.length)
    # continuation oracle: doubling epsilon doubles the first-order shift
    assert shifts[0] != 0
    assert 1.8 <= shifts[1] / shifts[0] <= 2.2


def test_no_convergence_records_history(metric02, classes):
    cfg = ShootingConfig(max_iter=1, continuation=0, tol=1e-14)
    with pytest.raises(NoConvergence) as info:
        refine_orbit(metric02, classes["a"], cfg)
    hist = info.value.history
    assert len(hist) >= 2
    assert all(np.isfinite(hist))
    assert hist[-1] < hist[0]


def test_continuation_ladder_recovers(schottky, classes):
    metric = ConformalMetric(schottky, default_bumps(), 0.08)
    direct = refine_orbit(metric, classes["a"], ShootingConfig(continuation=0))
    laddered = refine_orbit(metric, classes["a"], ShootingConfig(max_iter=2, continuation=4))
    assert laddered.closure_defect <= 1e-8
    assert laddered.period == pytest.approx(direct.period, abs=1e-9)


def test_unperturbed_exponent(metric0, classes):
    orbit = refine_orbit(metric0, classes["ab"])
    rep = orbit_exponent(metric0, orbit)
    assert rep.chi_plus == pytest.approx(1.0, abs=1e-6)
    assert abs(rep.gap) <= 1e-6
    assert orbit.profile.is_constant


@pytest.fixture(scope="module")
def perturbed_orbits(metric02, classes):
    out = {}
    for w in ("a", "b", "ab", "abAB"):
        orbit = refine_orbit(metric02, classes[w])
        orbit_exponent(metric02, orbit)
        out[w] = orbit
    return out


def test_orbit_through_bump(perturbed_orbits):
    rep = perturbed_orbits["a"].exponent_report
    assert rep.gap > 0
    assert rep.chi_plus < rep.mean_curvature_bound
    assert rep.oracle_discrepancy <= 1e-4


def test_orbit_avoiding_bumps(perturbed_orbits):
    orbit = perturbed_orbits["abAB"]
    assert orbit.profile.is_constant
    assert orbit.exponent_report.chi_plus == pytest.approx(1.0, abs=1e-6)
    assert abs(orbit.exponent_report.gap) <= 1e-6


def test_mean_curvature_inequality_and_pinching(metric02, perturbed_orbits):
    b, c, _ = curvature_bounds(metric02)
    for orbit in perturbed_orbits.values():
        rep = orbit.exponent_report
        assert rep.chi_plus <= rep.mean_curvature_bound + 1e-6
        assert b - 1e-6 <= rep.chi_plus <= c + 1e-6
        u = orbit.solution.u
        assert b - 1e-6 <= u.min() and u.max() <= c + 1e-6
        assert rep.chi_plus == pytest.approx(period_mean(orbit.solution.t, u), abs=1e-9)


def test_exponent_is_segmentation_invariant(metric02, classes, perturbed_orbits):
    ref = perturbed_orbits["ab"].exponent_report.chi_plus
    for m in (2, 4):
        orbit = refine_orbit(metric02, classes["ab"], ShootingConfig(segments=m))
        rep = orbit_exponent(metric02, orbit, oracle_periods=50)
        assert rep.chi_plus == pytest.approx(ref, abs=1e-6)


def test_exponent_continuity(schottky, classes):
    drops = []
    for eps in (0.01, 0.02):
        metric = ConformalMetric(schottky, default_bumps(), eps)
        orbit = refine_orbit(metric, classes["a"])
        drops.append(1.0 - orbit_exponent(metric, orbit, oracle_periods=50).chi_plus)
    C_half, C_full = drops[0] / 0.01, drops[1] / 0.02
    assert C_half > 0
    assert 0.3 <= C_full / C_half <= 3


def test_orbit_csv(tmp_path, perturbed_orbits):
    path = tmp_path / "orbits.csv"
    orbits_to_csv(list(perturbed_orbits.values()), path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(ORBIT_COLUMNS)
    assert len(lines) == 1 + len(perturbed_orbits)
    first = lines[1].split(",")
    assert first[0] == "a"
    assert math.isfinite(float(first[2]))
