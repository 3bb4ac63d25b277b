import numpy as np
import pytest

from superres.bands import BandRadius, band_of_set
from superres.model import (GridSpec, SpikeTrain, build_sensing_matrix, measure,
                            synthesize_spikes)
from superres.solvers import (BpdnSettings, SelectionExhaustedError, blot, bloomp,
                              bp_blot, bpdn, least_squares_on_support,
                              local_optimization, omp)


def instance(phi, s, min_sep, snr=np.inf, seed=0):
    x = synthesize_spikes(phi.grid, s, min_sep, rng_seed=seed)
    return x, measure(phi, x, snr, rng_seed=seed + 1000)


def residual(phi, y, S):
    return least_squares_on_support(phi, y, S).residual_norm


# least squares ---------------------------------------------------------------

def test_ls_recovers_exact_support(small_phi):
    x, meas = instance(small_phi, 4, 3.0)
    out = least_squares_on_support(small_phi, meas.y, x.indices)
    np.testing.assert_allclose(out.coefficients[x.indices], x.amplitudes, atol=1e-8)
    assert out.residual_norm <= 1e-10


def test_ls_empty_support(small_phi, rng):
    y = rng.standard_normal(30) + 1j * rng.standard_normal(30)
    out = least_squares_on_support(small_phi, y, [])
    assert np.all(out.coefficients == 0)
    assert out.residual_norm == pytest.approx(np.linalg.norm(y))


def test_ls_matches_normal_equations(rng):
    phi = build_sensing_matrix(GridSpec(20, 2))
    y = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    S = np.sort(rng.choice(40, 5, replace=False))
    A = phi.matrix[:, S]
    c = np.linalg.solve(A.conj().T @ A, A.conj().T @ y)
    out = least_squares_on_support(phi, y, S)
    np.testing.assert_allclose(out.coefficients[S], c, atol=1e-8)
    assert np.all(np.delete(out.coefficients, S) == 0)
    r = y - phi.matrix @ out.coefficients
    assert out.residual_norm == pytest.approx(np.linalg.norm(r), abs=1e-9)
    assert np.abs(A.conj().T @ r).max() <= 1e-8 * np.linalg.norm(y)


def test_ls_rank_deficiency_flagged(rng):
    M = rng.standard_normal((8, 5)) + 0j
    M[:, 3] = M[:, 1]
    y = rng.standard_normal(8) + 0j
    out = least_squares_on_support(M, y, [1, 3])
    assert "rank_deficient" in out.flags
    # least-norm solution splits the weight evenly
    assert out.coefficients[1] == pytest.approx(out.coefficients[3])


# OMP -------------------------------------------------------------------------

@pytest.mark.parametrize("F", [1, 10, 50])
def test_omp_single_spike(F):
    phi = build_sensing_matrix(GridSpec(40, F))
    x = SpikeTrain(phi.grid, [17 * F + 3 % F], [1.5 - 0.5j])
    out = omp(phi, measure(phi, x).y, 1)
    np.testing.assert_array_equal(out.support, x.indices)
    np.testing.assert_allclose(out.coefficients[x.indices], x.amplitudes, atol=1e-8)


def test_omp_exact_at_F1():
    phi = build_sensing_matrix(GridSpec(150, 1))
    x, meas = instance(phi, 10, 4.0, seed=3)
    out = omp(phi, meas.y, 10)
    np.testing.assert_array_equal(out.support, x.indices)
    np.testing.assert_allclose(out.coefficients, x.to_vector(), atol=1e-8)


def test_omp_early_exit_keeps_zero_padding():
    phi = build_sensing_matrix(GridSpec(40, 1))
    x, meas = instance(phi, 2, 4.0)
    out = omp(phi, meas.y, 5)
    assert out.support.size == 2 and "early_exit" in out.flags


# local optimization ----------------------------------------------------------

def test_lo_keeps_true_support(small_phi):
    x, meas = instance(small_phi, 4, 3.0)
    S = local_optimization(small_phi, meas.y, x.indices, BandRadius(10))
    np.testing.assert_array_equal(S, x.indices)


def test_lo_moves_single_spike_back(fine_phi):
    j = 3210
    x = SpikeTrain(fine_phi.grid, [j], [1.0 + 1j])
    y = measure(fine_phi, x).y
    cand = np.arange(j + 1 - 5, j + 1 + 6)
    res = [residual(fine_phi, y, [c]) for c in cand]
    assert cand[int(np.argmin(res))] == j and sorted(res)[1] > 1e-6
    np.testing.assert_array_equal(local_optimization(fine_phi, y, [j + 1], 5), [j])


def test_lo_residual_never_increases(small_phi):
    rng = np.random.default_rng(5)
    for seed in range(30):
        x, meas = instance(small_phi, 4, 3.0, snr=20, seed=seed)
        S0 = np.unique(x.indices + rng.integers(-8, 9, x.sparsity))
        trace = []
        S = local_optimization(small_phi, meas.y, S0, 10, trace=trace)
        res = [residual(small_phi, meas.y, T) for T in trace]
        assert len(trace) == S0.size + 1
        assert all(b <= a * (1 + 1e-10) for a, b in zip(res, res[1:]))
        np.testing.assert_array_equal(trace[-1], S)


def test_lo_rejects_out_of_range(small_phi):
    with pytest.raises(ValueError):
        local_optimization(small_phi, np.ones(30), [5, 300], 3)


def test_lo_multi_pass_not_worse(small_phi):
    for seed in range(10):
        x, meas = instance(small_phi, 4, 3.0, snr=20, seed=seed)
        S0 = (x.indices + 6) % small_phi.grid.N
        one = residual(small_phi, meas.y, local_optimization(small_phi, meas.y, S0, 10))
        many = residual(small_phi, meas.y,
                        local_optimization(small_phi, meas.y, S0, 10, passes=10))
        assert many <= one * (1 + 1e-10)


# BLOOMP ----------------------------------------------------------------------

def test_bloomp_single_spike(fine_phi):
    x = SpikeTrain(fine_phi.grid, [4321], [-2.0])
    out = bloomp(fine_phi, measure(fine_phi, x).y, 1, 50)
    np.testing.assert_array_equal(out.support, x.indices)
    np.testing.assert_allclose(out.coefficients[4321], -2.0, atol=1e-8)


def test_bloomp_band_edge_not_blocked(small_phi):
    r = BandRadius(10)
    x = SpikeTrain(small_phi.grid, [100, 121], [1.0, 0.8j])
    sel = []
    out = bloomp(small_phi, measure(small_phi, x).y, 2, r, selections=sel)
    np.testing.assert_array_equal(out.support, [100, 121])
    assert [i for i, _ in sel] == [100, 121]


def test_bloomp_selects_outside_previous_bands(fine_phi):
    r = BandRadius(50)
    for seed in range(3):
        x, meas = instance(fine_phi, 20, 4.0, snr=20, seed=seed)
        sel = []
        out = bloomp(fine_phi, meas.y, 20, r, selections=sel)
        for i, before in sel:
            assert i not in set(band_of_set(before, r, 7500))
        assert out.support.size <= 20
        assert np.all(np.delete(out.coefficients, out.support) == 0)


def test_bloomp_pool_exhausted(small_phi):
    x, meas = instance(small_phi, 2, 4.0)
    with pytest.raises(SelectionExhaustedError):
        bloomp(small_phi, meas.y, 2, BandRadius(small_phi.grid.N))


# BLOT ------------------------------------------------------------------------

def test_blot_keeps_sparse_input(small_phi):
    x, meas = instance(small_phi, 4, 3.0)
    rough = x.to_vector() * 0.7
    out = blot(rough, small_phi, meas.y, 4, 10)
    np.testing.assert_array_equal(out.support, x.indices)
    np.testing.assert_allclose(out.coefficients, x.to_vector(), atol=1e-8)


def test_blot_band_excludes_cluster(small_phi):
    v = np.zeros(small_phi.grid.N, dtype=complex)
    v[100], v[105], v[200] = 3.0, 2.0, 1.0
    sel = []
    x = SpikeTrain(small_phi.grid, [100, 200], [3.0, 1.0])
    out = blot(v, small_phi, measure(small_phi, x).y, 2, 10, selections=sel)
    assert [i for i, _ in sel] == [100, 200]
    np.testing.assert_array_equal(out.support, [100, 200])


def test_blot_pads_when_bands_cover_everything(small_phi):
    v = np.zeros(small_phi.grid.N, dtype=complex)
    v[100] = 1.0
    x = SpikeTrain(small_phi.grid, [100], [1.0])
    out = blot(v, small_phi, measure(small_phi, x).y, 2, 10)
    assert "blot_padded" in out.flags and out.support.size == 2


# BPDN ------------------------------------------------------------------------

def test_bpdn_zero_data(small_phi):
    out = bpdn(small_phi, np.zeros(30), BpdnSettings(epsilon=0.0))
    assert np.all(out.coefficients == 0)


def test_bpdn_exact_at_F1():
    phi = build_sensing_matrix(GridSpec(60, 1))
    for seed in range(3):
        x, meas = instance(phi, 6, 4.0, seed=seed)
        out = bpdn(phi, meas.y, BpdnSettings(epsilon=0.0))
        np.testing.assert_allclose(out.coefficients, x.to_vector(), atol=1e-6)


def test_bpdn_feasible_and_beats_truth():
    phi = build_sensing_matrix(GridSpec(40, 5))
    for seed in range(5):
        x, meas = instance(phi, 5, 4.0, snr=20, seed=seed)
        eps = meas.noise_norm
        out = bpdn(phi, meas.y, BpdnSettings(epsilon=eps))
        assert np.linalg.norm(phi.matrix @ out.coefficients - meas.y) <= eps * (1 + 1e-6)
        ref = np.abs(x.amplitudes).sum()
        assert np.abs(out.coefficients).sum() <= ref * (1 + 1e-4)


def test_bpdn_matches_conic_solver():
    cp = pytest.importorskip("cvxpy")
    phi = build_sensing_matrix(GridSpec(30, 5))
    x, meas = instance(phi, 4, 4.0, snr=20, seed=2)
    z = cp.Variable(phi.grid.N, complex=True)
    prob = cp.Problem(cp.Minimize(cp.norm1(z)),
                      [cp.norm(phi.matrix @ z - meas.y, 2) <= meas.noise_norm])
    prob.solve(solver="CLARABEL")
    out = bpdn(phi, meas.y, BpdnSettings(epsilon=meas.noise_norm, max_iterations=20000))
    assert np.abs(out.coefficients).sum() == pytest.approx(prob.value, rel=1e-4)
    np.testing.assert_allclose(out.coefficients, z.value, atol=2e-2)


def test_bpdn_unconverged_is_flagged(small_phi):
    x, meas = instance(small_phi, 3, 3.0, snr=20)
    out = bpdn(small_phi, meas.y, BpdnSettings(epsilon=meas.noise_norm, max_iterations=3))
    assert "bpdn_unconverged" in out.flags
    assert out.residual_norm <= meas.noise_norm * (1 + 1e-6)


def test_bpdn_settings_validation():
    with pytest.raises(ValueError):
        BpdnSettings(epsilon=-1)
    with pytest.raises(ValueError):
        BpdnSettings(max_iterations=0)
    with pytest.raises(ValueError):
        BpdnSettings(primal_tol=0)


# BP-BLOT and determinism -----------------------------------------------------

def test_bp_blot_exact_at_F1():
    phi = build_sensing_matrix(GridSpec(60, 1))
    x, meas = instance(phi, 5, 4.0, seed=4)
    out = bp_blot(phi, meas.y, 5, BpdnSettings(epsilon=0.0), 1)
    np.testing.assert_array_equal(out.support, x.indices)
    np.testing.assert_allclose(out.coefficients, x.to_vector(), atol=1e-8)


def test_solvers_are_deterministic(small_phi):
    x, meas = instance(small_phi, 4, 3.0, snr=20, seed=8)
    settings = BpdnSettings(epsilon=meas.noise_norm, max_iterations=300)
    for f in (lambda: omp(small_phi, meas.y, 4),
              lambda: bloomp(small_phi, meas.y, 4, 10),
              lambda: bp_blot(small_phi, meas.y, 4, settings, 10)):
        a, b = f(), f()
        np.testing.assert_array_equal(a.coefficients, b.coefficients)
