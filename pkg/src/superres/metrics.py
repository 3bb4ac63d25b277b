"""Error measures for spike recovery: filtered and unfiltered relative
errors, data residuals, and Bottleneck / Hausdorff support distances."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .model import GridSpec

__all__ = [
    "FilterSpec",
    "EvaluationRecord",
    "filter_signal",
    "filtered_error",
    "relative_error",
    "relative_residual",
    "bottleneck_distance",
    "hausdorff_distance",
    "evaluate",
]


@dataclass(frozen=True)
class FilterSpec:
    """Approximate delta of half-width ``eta`` (ell units) on a grid of factor ``F``."""

    eta: float
    F: int
    kernel: str = "tent"

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.kernel not in ("tent", "boxcar"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.eta > 0 and self.eta_fine == 0:
            warnings.warn(f"eta={self.eta:g} is below half a fine step at F={self.F}; "
                          "filter is the identity", stacklevel=2)

    @property
    def eta_fine(self) -> int:
        # round half up
        return int(math.floor(self.eta * self.F + 0.5 + 1e-12))

    def weights(self) -> np.ndarray:
        h = self.eta_fine
        if self.kernel == "tent":
            w = (h + 1 - np.abs(np.arange(-h, h + 1))).astype(float)
        else:
            w = np.ones(2 * h + 1)
        return w / w.sum()


def filter_signal(x, f: FilterSpec) -> np.ndarray:
    """Convolve with the normalized kernel; zero padding at the ends."""
    x = np.asarray(x)
    if f.eta_fine == 0:
        return x
    return np.convolve(x, f.weights(), mode="same")


def relative_error(x_hat, x) -> float:
    x = np.asarray(x)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ValueError("relative error against a zero signal")
    return float(np.linalg.norm(np.asarray(x_hat) - x) / nx)


def filtered_error(x_hat, x, f: FilterSpec) -> float:
    """``||filter(x_hat) - filter(x)|| / ||filter(x)||``."""
    return relative_error(filter_signal(x_hat, f), filter_signal(x, f))


def relative_residual(phi, x_hat, y) -> float:
    y = np.asarray(y)
    ny = np.linalg.norm(y)
    if ny == 0:
        raise ValueError("relative residual against zero data")
    M = getattr(phi, "matrix", phi)
    return float(np.linalg.norm(M @ np.asarray(x_hat) - y) / ny)


def bottleneck_distance(S1, S2, grid: GridSpec) -> float:
    """Bottleneck distance in ell units between equal-size index sets.

    On a line the order-preserving matching of the sorted sets minimises the
    largest matched offset.
    """
    a = np.sort(np.asarray(S1, dtype=float).reshape(-1))
    b = np.sort(np.asarray(S2, dtype=float).reshape(-1))
    if a.size != b.size:
        raise ValueError(f"bottleneck undefined for sets of size {a.size} and {b.size}")
    if a.size == 0:
        raise ValueError("bottleneck of empty sets")
    return float(np.abs(a - b).max() / grid.F)


def hausdorff_distance(S1, S2, grid: GridSpec) -> float:
    a = np.sort(np.asarray(S1, dtype=float).reshape(-1))
    b = np.sort(np.asarray(S2, dtype=float).reshape(-1))
    if a.size == 0 or b.size == 0:
        raise ValueError("hausdorff distance needs nonempty sets")
    return float(max(_directed(a, b), _directed(b, a)) / grid.F)


def _directed(a: np.ndarray, b: np.ndarray) -> float:
    # b sorted: nearest neighbour through the insertion point
    pos = np.searchsorted(b, a)
    left = b[np.clip(pos - 1, 0, b.size - 1)]
    right = b[np.clip(pos, 0, b.size - 1)]
    return float(np.minimum(np.abs(a - left), np.abs(a - right)).max())


@dataclass
class EvaluationRecord:
    unfiltered_rel_error: float
    filtered_rel_errors: dict[float, float]
    relative_residual: float
    bottleneck: float | None
    hausdorff: float | None
    runtime: float = 0.0
    flags: list[str] = field(default_factory=list)


def evaluate(phi, y, truth, coefficients, support, etas=(), kernel: str = "tent",
             runtime: float = 0.0, flags=()) -> EvaluationRecord:
    """All metrics of one recovery against a known spike train ``truth``."""
    grid = truth.grid
    x = truth.to_vector()
    filtered = {float(eta): filtered_error(coefficients, x, FilterSpec(eta, grid.F, kernel))
                for eta in etas}
    flags = list(flags)
    support = np.asarray(support).reshape(-1)
    bott = None
    if support.size == truth.indices.size and support.size:
        bott = bottleneck_distance(support, truth.indices, grid)
    else:
        flags.append("bottleneck_undefined")
    haus = hausdorff_distance(support, truth.indices, grid) if support.size else None
    return EvaluationRecord(
        unfiltered_rel_error=relative_error(coefficients, x),
        filtered_rel_errors=filtered,
        relative_residual=relative_residual(phi, coefficients, y),
        bottleneck=bott,
        hausdorff=haus,
        runtime=runtime,
        flags=flags,
    )
