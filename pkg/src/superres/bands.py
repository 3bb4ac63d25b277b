"""Coherence bands, band radii and the Rayleigh index of a support set."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = [
    "BandRadius",
    "DegenerateBandError",
    "band",
    "band_of_set",
    "rayleigh_index",
    "default_band_radius",
    "support_set",
]


class DegenerateBandError(ValueError):
    """Half the minimum separation rounds down to zero fine-grid steps."""


@dataclass(frozen=True)
class BandRadius:
    radius_fine: int
    origin: str = "explicit"  # "rayleigh", "half_min_sep" or "explicit"
    wrap: bool = False

    def __post_init__(self):
        if self.radius_fine < 0:
            raise ValueError("band radius must be nonnegative")
        if self.origin not in ("rayleigh", "half_min_sep", "explicit"):
            raise ValueError(f"unknown band radius origin {self.origin!r}")


def _radius(r) -> tuple[int, bool]:
    if isinstance(r, BandRadius):
        return r.radius_fine, r.wrap
    return int(r), False


def support_set(indices: Iterable[int]) -> np.ndarray:
    """Sorted unique int64 array, the canonical support representation."""
    return np.unique(np.fromiter(indices, dtype=np.int64))


def band(j: int, r: BandRadius | int, N: int) -> np.ndarray:
    """Indices within ``radius_fine`` of ``j``; clamped to ``[0, N)`` unless ``wrap``."""
    if not 0 <= j < N:
        raise ValueError(f"index {j} outside [0, {N})")
    rad, wrap = _radius(r)
    if wrap:
        if 2 * rad + 1 >= N:
            return np.arange(N, dtype=np.int64)
        return np.sort(np.arange(j - rad, j + rad + 1, dtype=np.int64) % N)
    return np.arange(max(0, j - rad), min(N, j + rad + 1), dtype=np.int64)


def band_mask(S, r: BandRadius | int, N: int) -> np.ndarray:
    """Boolean mask of ``band_of_set``; the form the solvers use."""
    rad, wrap = _radius(r)
    mask = np.zeros(N, dtype=bool)
    for j in np.asarray(S, dtype=np.int64).reshape(-1):
        lo, hi = j - rad, j + rad + 1
        if wrap:
            mask[np.arange(lo, hi) % N] = True
        else:
            mask[max(0, lo):min(N, hi)] = True
    return mask


def band_of_set(S, r: BandRadius | int, N: int) -> np.ndarray:
    return np.flatnonzero(band_mask(S, r, N)).astype(np.int64)


def rayleigh_index(positions) -> int:
    """Smallest ``r >= 1`` with at most ``r`` points in every window ``[t, t + 4r)``.

    Positions are in ell units.  The window count is maximal when the window
    starts at a point, so only windows anchored at each point are scanned.
    """
    p = np.sort(np.asarray(positions, dtype=float).reshape(-1))
    if p.size == 0:
        raise ValueError("rayleigh index of an empty set")
    for r in range(1, p.size + 1):
        # number of points in [p_i, p_i + 4r) for each anchor i
        counts = np.searchsorted(p, p + 4 * r, side="left") - np.arange(p.size)
        if counts.max() <= r:
            return r
    return int(p.size)  # unreachable: r = #points always qualifies


def default_band_radius(min_sep: float, F: int) -> BandRadius:
    """One Rayleigh length for separated spikes, half the separation otherwise."""
    if min_sep <= 0:
        raise ValueError("min_sep must be positive")
    if min_sep >= 1:
        return BandRadius(int(F), "rayleigh")
    rad = math.floor(min_sep * F / 2 + 1e-9)
    if rad == 0:
        raise DegenerateBandError(
            f"half of min_sep={min_sep} ell is below one fine step at F={F}")
    return BandRadius(rad, "half_min_sep")
