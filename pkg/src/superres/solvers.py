"""Sparse recovery: least squares on a support, OMP, local optimization,
BLOOMP, BLOT thresholding, basis pursuit denoising and BP-BLOT.

All arg-max / arg-min selections break ties towards the lowest index.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bands import BandRadius, band, band_mask
from .model import SensingMatrix

__all__ = [
    "RecoveredSignal",
    "BpdnSettings",
    "SelectionExhaustedError",
    "least_squares_on_support",
    "omp",
    "local_optimization",
    "bloomp",
    "bpdn",
    "blot",
    "bp_blot",
]

log = logging.getLogger(__name__)

EARLY_EXIT = 1e-12
RANK_TOL = 1e-10


class SelectionExhaustedError(RuntimeError):
    """Every index lies inside the accumulated exclusion bands."""


@dataclass
class RecoveredSignal:
    coefficients: np.ndarray
    support: np.ndarray
    residual_norm: float
    flags: list[str] = field(default_factory=list)
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BpdnSettings:
    """ADMM settings for ``min ||z||_1  s.t.  ||phi z - y||_2 <= epsilon``."""

    epsilon: float = 0.0
    max_iterations: int = 5000
    primal_tol: float = 1e-6
    dual_tol: float = 1e-6
    penalty: float = 1.0
    adaptive_penalty: bool = True
    relaxation: float = 1.6

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.primal_tol <= 0 or self.dual_tol <= 0 or self.penalty <= 0:
            raise ValueError("tolerances and penalty must be positive")
        if not 0 < self.relaxation < 2:
            raise ValueError("relaxation must lie in (0, 2)")


def _matrix(phi) -> np.ndarray:
    return phi.matrix if isinstance(phi, SensingMatrix) else np.asarray(phi)


def _adjoint(M: np.ndarray, r: np.ndarray) -> np.ndarray:
    # conj(r^H M) == M^H r without materialising M^H
    return np.conj(np.conj(r) @ M)


def _solve_on(M: np.ndarray, y: np.ndarray, S: np.ndarray):
    """Coefficients on ``S``, residual vector and a rank-deficiency flag."""
    if S.size == 0:
        return np.zeros(0, dtype=np.complex128), y.astype(np.complex128), False
    A = M[:, S]
    Q, R = np.linalg.qr(A)
    d = np.abs(np.diag(R))
    if S.size > M.shape[0] or d.min() <= RANK_TOL * d.max():
        c = np.linalg.lstsq(A, y, rcond=None)[0]
        return c, y - A @ c, True
    c = np.linalg.solve(R, Q.conj().T @ y)
    return c, y - A @ c, False


def least_squares_on_support(phi, y, S) -> RecoveredSignal:
    """Least-squares fit of ``y`` using only the columns in ``S``.

    Rank-deficient column sets fall back to the least-norm solution and carry
    the ``rank_deficient`` flag.
    """
    M = _matrix(phi)
    y = np.asarray(y, dtype=np.complex128)
    S = np.unique(np.asarray(S, dtype=np.int64).reshape(-1))
    c, res, deficient = _solve_on(M, y, S)
    x = np.zeros(M.shape[1], dtype=np.complex128)
    x[S] = c
    flags = ["rank_deficient"] if deficient else []
    if deficient:
        log.warning("rank-deficient column submatrix on support of size %d", S.size)
    return RecoveredSignal(x, S, float(np.linalg.norm(res)), flags)


def omp(phi, y, s: int) -> RecoveredSignal:
    M = _matrix(phi)
    y = np.asarray(y, dtype=np.complex128)
    if s > M.shape[0]:
        raise ValueError("sparsity exceeds the number of measurements")
    ynorm = np.linalg.norm(y)
    S: list[int] = []
    r = y
    flags: list[str] = []
    for _ in range(s):
        if np.linalg.norm(r) <= EARLY_EXIT * ynorm:
            flags.append("early_exit")
            break
        corr = np.abs(_adjoint(M, r))
        corr[S] = -1.0
        S.append(int(np.argmax(corr)))
        _, r, _ = _solve_on(M, y, np.array(S, dtype=np.int64))
    out = least_squares_on_support(M, y, S)
    out.flags += flags
    return out


def _best_swap(M, y, rest: np.ndarray, current: int, candidates: np.ndarray,
               ynorm2: float) -> int:
    """Candidate minimising the residual of ``rest + {candidate}``.

    With ``Q`` an orthonormal basis of the ``rest`` columns and ``r`` the
    residual of ``y`` against them, adding column ``c`` lowers the squared
    residual by ``|c_perp^H r|^2 / ||c_perp||^2`` where ``c_perp = c - Q Q^H c``.
    The current index wins unless another candidate is strictly better.
    """
    if rest.size:
        Q, _ = np.linalg.qr(M[:, rest])
        r = y - Q @ (Q.conj().T @ y)
        C = M[:, candidates]
        C = C - Q @ (Q.conj().T @ C)
    else:
        r = y
        C = M[:, candidates]
    den = np.einsum("ij,ij->j", C.conj(), C).real
    num = np.abs(C.conj().T @ r) ** 2
    gain = np.where(den > RANK_TOL * M.shape[0], num / np.maximum(den, 1e-300), 0.0)
    cur = int(np.searchsorted(candidates, current))
    best = int(np.argmax(gain))
    if gain[best] > gain[cur] + 1e-12 * ynorm2:
        return int(candidates[best])
    return current


def local_optimization(phi, y, S0, r: BandRadius | int, *, passes: int = 1,
                       order=None, trace: list | None = None) -> np.ndarray:
    """Swap each support index for the best index in its own band.

    Elements are visited once in ascending order (``passes > 1`` repeats the
    sweep until nothing moves).  The current index is always a candidate, so
    the residual never increases.  ``trace`` receives the support after every
    step, starting with ``S0``.
    """
    M = _matrix(phi)
    y = np.asarray(y, dtype=np.complex128)
    S = np.unique(np.asarray(S0, dtype=np.int64).reshape(-1))
    if S.size == 0:
        raise ValueError("local optimization needs a nonempty support")
    if S.size > M.shape[0]:
        raise ValueError("support larger than the number of measurements")
    N = M.shape[1]
    if S[0] < 0 or S[-1] >= N:
        raise ValueError(f"support indices must lie in [0, {N})")
    ynorm2 = float(np.vdot(y, y).real)
    if trace is not None:
        trace.append(S.copy())
    visit = S.copy() if order is None else np.asarray(order, dtype=np.int64)
    for _ in range(passes):
        moved = False
        for i in visit:
            pos = int(np.flatnonzero(S == i)[0])
            rest = np.delete(S, pos)
            cand = band(int(i), r, N)
            cand = cand[~np.isin(cand, rest)]
            j = _best_swap(M, y, rest, int(i), cand, ynorm2)
            if j != i:
                moved = True
                S = np.sort(np.append(rest, j))
            if trace is not None:
                trace.append(S.copy())
        if not moved:
            break
        visit = S.copy()
    return S


def bloomp(phi, y, s: int, r: BandRadius | int, *, lo_passes: int = 1,
           selections: list | None = None) -> RecoveredSignal:
    """Band-excluded, locally optimized orthogonal matching pursuit.

    ``selections`` receives ``(index, support_before)`` for every greedy pick.
    """
    M = _matrix(phi)
    y = np.asarray(y, dtype=np.complex128)
    if s > M.shape[0]:
        raise ValueError("sparsity exceeds the number of measurements")
    N = M.shape[1]
    ynorm = np.linalg.norm(y)
    S = np.zeros(0, dtype=np.int64)
    res = y
    flags: list[str] = []
    for _ in range(s):
        if np.linalg.norm(res) <= EARLY_EXIT * ynorm:
            flags.append("early_exit")
            break
        excluded = band_mask(S, r, N)
        if excluded.all():
            raise SelectionExhaustedError(
                f"no index left outside the bands after {S.size} selections")
        corr = np.abs(_adjoint(M, res))
        corr[excluded] = -1.0
        i = int(np.argmax(corr))
        if selections is not None:
            selections.append((i, S.copy()))
        S = local_optimization(M, y, np.append(S, i), r, passes=lo_passes)
        _, res, _ = _solve_on(M, y, S)
    out = least_squares_on_support(M, y, S)
    out.flags += flags
    return out


def blot(x_in, phi, y, s: int, r: BandRadius | int, *, lo_passes: int = 1,
         selections: list | None = None) -> RecoveredSignal:
    """Band-excluded thresholding of ``x_in``, then local optimization and a
    least-squares refit on the optimized support."""
    M = _matrix(phi)
    y = np.asarray(y, dtype=np.complex128)
    x_in = np.asarray(x_in).reshape(-1)
    N = M.shape[1]
    if x_in.size != N:
        raise ValueError(f"estimate has length {x_in.size}, expected {N}")
    if s > M.shape[0]:
        raise ValueError("sparsity exceeds the number of measurements")
    mag = np.abs(x_in).astype(float)
    S = np.zeros(0, dtype=np.int64)
    flags: list[str] = []
    for _ in range(s):
        pool = np.where(band_mask(S, r, N) | (mag == 0), -1.0, mag)
        i = int(np.argmax(pool))
        if pool[i] < 0:
            # nothing usable outside the bands: take the largest unused entry
            pool = mag.copy()
            pool[S] = -1.0
            i = int(np.argmax(pool))
            if "blot_padded" not in flags:
                flags.append("blot_padded")
        if selections is not None:
            selections.append((i, S.copy()))
        S = np.sort(np.append(S, i))
    if S.size:
        S = local_optimization(M, y, S, r, passes=lo_passes)
    out = least_squares_on_support(M, y, S)
    out.flags += flags
    return out


def _soft(v: np.ndarray, tau: float) -> np.ndarray:
    a = np.abs(v)
    scale = np.maximum(a - tau, 0.0) / np.where(a > 0, a, 1.0)
    return v * scale


def bpdn(phi: SensingMatrix, y, settings: BpdnSettings | None = None) -> RecoveredSignal:
    """Basis pursuit denoising by over-relaxed ADMM on the splitting ``z = u``.

    ``z`` is kept in the data-fidelity set by exact projection, which is
    closed form because the partial Fourier rows are orthogonal
    (``phi phi^H = N I``); ``u`` carries the l1 term through soft
    thresholding.  The penalty adapts by residual balancing.  The returned
    point is always feasible: if the sparse iterate ``u`` misses the
    constraint it is projected.
    """
    settings = settings or BpdnSettings()
    if not isinstance(phi, SensingMatrix):
        raise TypeError("bpdn needs a partial Fourier SensingMatrix")
    y = np.asarray(y, dtype=np.complex128)
    m, N = phi.shape
    scale = np.sqrt(N)
    b = y / scale
    delta = settings.epsilon / scale

    def proj(v):
        d = phi.matvec(v) / scale - b
        nd = np.linalg.norm(d)
        if nd <= delta:
            return v
        return v - phi.rmatvec(d) * ((1.0 - delta / nd) / scale)

    flags: list[str] = []
    if np.linalg.norm(y) <= settings.epsilon:
        x = np.zeros(N, dtype=np.complex128)
        return RecoveredSignal(x, np.zeros(0, dtype=np.int64),
                               float(np.linalg.norm(y)), flags,
                               {"iterations": 0, "converged": True})

    rho = settings.penalty
    alpha = settings.relaxation
    u = phi.rmatvec(b) / scale
    w = np.zeros(N, dtype=np.complex128)
    converged = False
    it = 0
    for it in range(1, settings.max_iterations + 1):
        z = proj(u - w)
        z_hat = alpha * z + (1.0 - alpha) * u
        u_old = u
        u = _soft(z_hat + w, 1.0 / rho)
        w = w + z_hat - u
        r_norm = np.linalg.norm(z - u)
        s_norm = rho * np.linalg.norm(u - u_old)
        eps_p = settings.primal_tol * max(np.linalg.norm(z), np.linalg.norm(u))
        eps_d = settings.dual_tol * rho * np.linalg.norm(w)
        if r_norm <= eps_p and s_norm <= eps_d:
            converged = True
            break
        if settings.adaptive_penalty:
            if r_norm > 10 * s_norm:
                rho *= 2.0
                w /= 2.0
            elif s_norm > 10 * r_norm:
                rho /= 2.0
                w *= 2.0

    x = u
    if np.linalg.norm(phi.matvec(x) - y) > settings.epsilon * (1 + 1e-6):
        x = proj(u)
    if not converged:
        flags.append("bpdn_unconverged")
        log.info("bpdn stopped after %d iterations without converging", it)
    support = np.flatnonzero(x).astype(np.int64)
    res = float(np.linalg.norm(phi.matrix @ x - y))
    return RecoveredSignal(x, support, res, flags,
                           {"iterations": it, "converged": converged, "penalty": rho})


def bp_blot(phi, y, s: int, settings: BpdnSettings | None, r: BandRadius | int,
            *, lo_passes: int = 1) -> RecoveredSignal:
    bp = bpdn(phi, y, settings)
    out = blot(bp.coefficients, phi, y, s, r, lo_passes=lo_passes)
    out.flags = bp.flags + out.flags
    out.info["bpdn"] = bp.info
    return out
