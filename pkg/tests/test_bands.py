import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from superres.bands import (BandRadius, DegenerateBandError, band, band_of_set,
                            default_band_radius, rayleigh_index)


def brute_rayleigh(points):
    """Try r = 1, 2, ... and count points in [p, p + 4r) for every anchor p."""
    pts = sorted(points)
    r = 1
    while True:
        worst = max(sum(1 for q in pts if p <= q < p + 4 * r) for p in pts)
        if worst <= r:
            return r
        r += 1


def test_band_interior_and_clamped():
    np.testing.assert_array_equal(band(100, 50, 7500), np.arange(50, 151))
    np.testing.assert_array_equal(band(10, 50, 7500), np.arange(0, 61))
    np.testing.assert_array_equal(band(7499, BandRadius(2), 7500), [7497, 7498, 7499])


def test_band_wraparound_flag():
    r = BandRadius(2, wrap=True)
    np.testing.assert_array_equal(band(0, r, 10), [0, 1, 2, 8, 9])
    np.testing.assert_array_equal(band_of_set([9], r, 10), [0, 1, 7, 8, 9])


def test_band_rejects_outside_index():
    with pytest.raises(ValueError):
        band(10, 1, 10)


def test_band_of_set_examples():
    assert band_of_set([], 50, 7500).size == 0
    np.testing.assert_array_equal(
        band_of_set([100, 400], 50, 7500),
        np.r_[np.arange(50, 151), np.arange(350, 451)])
    np.testing.assert_array_equal(band_of_set([100, 160], 50, 7500), np.arange(50, 211))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 300), st.integers(0, 20), st.data())
def test_band_contains_centre_with_clamped_size(N, rad, data):
    j = data.draw(st.integers(0, N - 1))
    b = band(j, rad, N)
    assert j in b
    assert b.size == min(j, rad) + min(N - 1 - j, rad) + 1
    assert b.size <= 2 * rad + 1


@settings(max_examples=60, deadline=None)
@given(st.sets(st.integers(0, 199), max_size=8), st.sets(st.integers(0, 199), max_size=8),
       st.integers(0, 15))
def test_band_of_set_is_monotone(S, extra, rad):
    small = set(band_of_set(sorted(S), rad, 200))
    big = set(band_of_set(sorted(S | extra), rad, 200))
    assert small <= big


@pytest.mark.parametrize("positions, expected", [
    ([0, 4, 8, 12.5, 30], 1),
    ([76, 76.5, 79, 80, 81], 5),
    ([10, 10.3, 15, 20, 25, 25.3], 6),
])
def test_rayleigh_index_published_sets(positions, expected):
    assert rayleigh_index(positions) == expected


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 400), min_size=1, max_size=10, unique=True))
def test_rayleigh_index_matches_brute_force(ticks):
    pts = sorted(t / 10 for t in ticks)
    assert rayleigh_index(pts) == brute_rayleigh(pts)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 400), min_size=1, max_size=10, unique=True),
       st.integers(-500, 500))
def test_rayleigh_index_translation_invariant(ticks, shift):
    pts = sorted(t / 10 for t in ticks)
    assert rayleigh_index(pts) == rayleigh_index([p + shift for p in pts])


def test_rayleigh_index_window_is_half_open():
    # points exactly 4 apart sit in different windows
    assert rayleigh_index([0, 4, 8]) == 1
    assert rayleigh_index([0, 3.999]) == 2


@pytest.mark.parametrize("min_sep, F, radius, origin", [
    (4, 50, 50, "rayleigh"),
    (1, 50, 50, "rayleigh"),
    (0.5, 50, 12, "half_min_sep"),
    (0.3, 50, 7, "half_min_sep"),
])
def test_default_band_radius(min_sep, F, radius, origin):
    r = default_band_radius(min_sep, F)
    assert (r.radius_fine, r.origin) == (radius, origin)


def test_degenerate_band_radius():
    with pytest.raises(DegenerateBandError):
        default_band_radius(0.03, 50)
    with pytest.raises(ValueError):
        default_band_radius(0, 50)
