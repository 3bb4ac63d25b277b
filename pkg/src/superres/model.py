"""Grid-bound spike trains, partial Fourier sensing matrices and noisy data.

A spike train lives on a fine grid of ``N = m * F`` points in the unit
interval.  The data are the ``m`` lowest Fourier coefficients
``y_k = sum_l x_l exp(-2 pi i k l / N)``, ``k = 0..m-1``, so the Rayleigh
length is ``ell = 1/m`` and one Rayleigh length spans ``F`` fine-grid steps.
Positions passed around in "ell units" are therefore ``index / F``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "GridSpec",
    "SpikeTrain",
    "SensingMatrix",
    "Measurement",
    "AmplitudeModel",
    "GridTooLargeError",
    "InfeasiblePlacementError",
    "build_sensing_matrix",
    "synthesize_spikes",
    "sample_positions",
    "spikes_from_positions",
    "draw_amplitudes",
    "measure",
    "circular_gaps",
]

MAX_DENSE_N = 200_000
PLACEMENT_ATTEMPTS = 10_000


class GridTooLargeError(ValueError):
    pass


class InfeasiblePlacementError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """``m`` measurements at super-resolution factor ``F``."""

    m: int
    F: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if int(self.F) != self.F or self.F < 1:
            raise ValueError(f"F must be an integer >= 1, got {self.F!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "F", int(self.F))

    @property
    def N(self) -> int:
        return self.m * self.F

    @property
    def ell(self) -> float:
        return 1.0 / self.m

    @property
    def fine_spacing(self) -> float:
        return 1.0 / self.N

    def to_fine(self, position_ell: float) -> int:
        """Nearest fine-grid index (round half up) of a position in ell units."""
        return int(np.floor(position_ell * self.F + 0.5)) % self.N

    def to_ell(self, index) -> np.ndarray:
        return np.asarray(index, dtype=float) / self.F


@dataclass(frozen=True)
class SpikeTrain:
    grid: GridSpec
    indices: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        amp = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if idx.shape != amp.shape:
            raise ValueError("indices and amplitudes differ in length")
        if idx.size and (idx.min() < 0 or idx.max() >= self.grid.N):
            raise ValueError("spike index outside [0, N)")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("spike indices must be strictly increasing")
        if np.any(amp == 0):
            raise ValueError("spike amplitudes must be nonzero")
        idx.setflags(write=False)
        amp.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def sparsity(self) -> int:
        return int(self.indices.size)

    @property
    def positions(self) -> np.ndarray:
        """Spike positions in ell units."""
        return self.grid.to_ell(self.indices)

    def to_vector(self) -> np.ndarray:
        x = np.zeros(self.grid.N, dtype=np.complex128)
        x[self.indices] = self.amplitudes
        return x


@dataclass(frozen=True)
class SensingMatrix:
    grid: GridSpec
    matrix: np.ndarray = field(repr=False)

    @property
    def rows(self) -> np.ndarray:
        return np.arange(self.grid.m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def column(self, l) -> np.ndarray:
        """Columns generated on the fly, without touching the dense storage."""
        l = np.asarray(l)
        k = self.rows.reshape((-1,) + (1,) * l.ndim)
        return np.exp(-2j * np.pi * ((k * l) % self.grid.N) / self.grid.N)

    def __matmul__(self, x):
        return self.matrix @ x

    def adjoint(self, r) -> np.ndarray:
        return np.conj(np.conj(r) @ self.matrix)

    def matvec(self, x) -> np.ndarray:
        """``phi @ x`` through the FFT: the rows are the first m DFT rows."""
        return np.fft.fft(x)[: self.grid.m]

    def rmatvec(self, r) -> np.ndarray:
        """``phi^H @ r`` through the inverse FFT of the zero-padded vector."""
        padded = np.zeros(self.grid.N, dtype=np.complex128)
        padded[: self.grid.m] = r
        return np.fft.ifft(padded) * self.grid.N


@dataclass(frozen=True)
class Measurement:
    y: np.ndarray
    noise_norm: float
    snr: float


@dataclass(frozen=True)
class AmplitudeModel:
    """Magnitude uniform on ``[low, high]`` with a random phase.

    ``kind="random_phase"`` draws the phase on ``[0, 2 pi)``;
    ``kind="positive_real"`` restricts it to ``(-pi/2, pi/2)``.
    """

    kind: str = "random_phase"
    low: float = 1.0
    high: float = 2.0

    def __post_init__(self):
        if self.kind not in ("random_phase", "positive_real"):
            raise ValueError(f"unknown amplitude model {self.kind!r}")
        if not 0 < self.low <= self.high:
            raise ValueError("need 0 < low <= high")


def build_sensing_matrix(grid: GridSpec, max_n: int = MAX_DENSE_N) -> SensingMatrix:
    if grid.N > max_n:
        raise GridTooLargeError(
            f"N={grid.N} exceeds dense limit {max_n}; reduce m or F")
    k = np.arange(grid.m)[:, None]
    l = np.arange(grid.N)[None, :]
    # reduce k*l mod N first so the phase stays accurate for large N
    phi = np.exp(-2j * np.pi * ((k * l) % grid.N) / grid.N)
    phi.setflags(write=False)
    return SensingMatrix(grid, phi)


def circular_gaps(indices: Sequence[int], N: int) -> np.ndarray:
    """Gaps between consecutive sorted indices, including the wrap-around gap."""
    idx = np.sort(np.asarray(indices, dtype=np.int64))
    if idx.size < 2:
        return np.array([N], dtype=np.int64)
    return np.diff(np.append(idx, idx[0] + N))


def draw_amplitudes(s: int, model: AmplitudeModel, rng: np.random.Generator) -> np.ndarray:
    mag = rng.uniform(model.low, model.high, size=s)
    if model.kind == "random_phase":
        phase = rng.uniform(0.0, 2 * np.pi, size=s)
    else:
        phase = rng.uniform(-np.pi / 2, np.pi / 2, size=s)
    return mag * np.exp(1j * phase)


def spikes_from_positions(grid: GridSpec, positions_ell, amplitudes) -> SpikeTrain:
    """Snap positions (ell units) to the fine grid; order is by position."""
    idx = np.array([grid.to_fine(p) for p in np.ravel(positions_ell)], dtype=np.int64)
    amp = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    order = np.argsort(idx, kind="stable")
    return SpikeTrain(grid, idx[order], amp[order])


def _rejection_indices(N: int, s: int, gap: int, rng: np.random.Generator) -> list[int] | None:
    chosen: list[int] = []
    attempts = 0
    while len(chosen) < s and attempts < PLACEMENT_ATTEMPTS:
        attempts += 1
        c = int(rng.integers(N))
        if all(min(abs(c - j), N - abs(c - j)) >= gap for j in chosen):
            chosen.append(c)
    return chosen if len(chosen) == s else None


def synthesize_spikes(grid: GridSpec, s: int, min_sep: float,
                      amplitude_model: AmplitudeModel | None = None,
                      rng_seed: int = 0,
                      positions: Sequence[float] | None = None) -> SpikeTrain:
    """Random spike train with fine-grid gaps of at least ``min_sep * F``.

    Separation is enforced on the circle (the sensing matrix is N-periodic),
    which implies the same bound on the segment.  When ``positions`` (ell
    units) is given the placement is explicit and only amplitudes are random.
    """
    amplitude_model = amplitude_model or AmplitudeModel()
    rng = np.random.default_rng(rng_seed)
    if positions is not None:
        amps = draw_amplitudes(len(positions), amplitude_model, rng)
        return spikes_from_positions(grid, positions, amps)

    if s < 1:
        raise ValueError("need at least one spike")
    if min_sep <= 0:
        raise ValueError("min_sep must be positive")
    if s * min_sep * grid.F >= grid.N and s > 1:
        raise InfeasiblePlacementError(
            f"{s} spikes at separation {min_sep} ell do not fit in {grid.m} ell")
    gap = int(np.ceil(min_sep * grid.F - 1e-9))

    chosen = _rejection_indices(grid.N, s, gap, rng)
    if chosen is None:
        # deterministic greedy fallback: lowest feasible indices
        chosen = []
        for c in range(grid.N):
            if all(min(abs(c - j), grid.N - abs(c - j)) >= gap for j in chosen):
                chosen.append(c)
                if len(chosen) == s:
                    break
        if len(chosen) < s:
            raise InfeasiblePlacementError(
                f"could only place {len(chosen)} of {s} spikes")
    idx = np.sort(np.array(chosen, dtype=np.int64))
    return SpikeTrain(grid, idx, draw_amplitudes(s, amplitude_model, rng))


def sample_positions(m: int, s: int, min_sep: float, rng: np.random.Generator,
                     pad: float = 0.0) -> np.ndarray:
    """Continuous positions in ``[0, m)`` ell units with circular gaps >= min_sep + pad.

    Used to build instances that stay comparable across F: snapping to a
    grid of factor ``F >= 1/pad`` moves each point by at most ``1/(2F)``,
    so the snapped gap still clears ``min_sep * F`` fine steps.
    """
    gap = min_sep + pad
    if s > 1 and s * gap >= m:
        raise InfeasiblePlacementError(f"{s} spikes at gap {gap} do not fit in {m} ell")
    chosen: list[float] = []
    attempts = 0
    while len(chosen) < s and attempts < PLACEMENT_ATTEMPTS:
        attempts += 1
        c = float(rng.uniform(0.0, m))
        if all(min(abs(c - p), m - abs(c - p)) >= gap for p in chosen):
            chosen.append(c)
    if len(chosen) < s:
        start = float(rng.uniform(0.0, m))
        chosen = [(start + i * gap) % m for i in range(s)]
    return np.sort(np.array(chosen))


def measure(phi: SensingMatrix, x: SpikeTrain, snr: float = np.inf,
            rng_seed: int = 0) -> Measurement:
    """Noisy Fourier data with ``||e|| = ||phi x|| / snr`` exactly."""
    if phi.grid != x.grid:
        raise ValueError("sensing matrix and spike train are on different grids")
    if not snr > 0:
        raise ValueError("snr must be positive")
    clean = phi.matrix @ x.to_vector()
    if np.isinf(snr):
        return Measurement(clean, 0.0, float(snr))
    signal_norm = np.linalg.norm(clean)
    if signal_norm == 0:
        raise ValueError("noise scale undefined for a zero signal")
    rng = np.random.default_rng(rng_seed)
    e = rng.standard_normal(phi.grid.m) + 1j * rng.standard_normal(phi.grid.m)
    e *= (signal_norm / snr) / np.linalg.norm(e)
    return Measurement(clean + e, float(np.linalg.norm(e)), float(snr))
