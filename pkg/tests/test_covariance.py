import numpy as np
import pytest
from numpy.testing import assert_allclose

from curvedenoise.covariance import (
    Kernel,
    dfpca_kernel,
    eig_sym,
    kernel_from_basis,
    lagged_autocov,
    sample_mean,
)
from curvedenoise.exceptions import (
    AllZeroCoefficientsError,
    AsymmetricKernelError,
    EmptySeriesError,
    SeriesTooShortError,
)
from curvedenoise.grid import CurveSeries, gram, make_grid
from curvedenoise.simulation import DgpConfig, generate_dataset

from conftest import fourier


def test_sample_mean_examples(grid):
    c = np.sin(np.arange(grid.N))
    assert_allclose(sample_mean(CurveSeries(np.tile(c, (4, 1)), grid)).values, c)
    two = CurveSeries(np.vstack([np.zeros(grid.N), 2 * np.ones(grid.N)]), grid)
    assert_allclose(sample_mean(two).values, 1.0)
    pair = CurveSeries(np.vstack([c, -c]), grid)
    assert_allclose(sample_mean(pair).values, 0.0)


def test_sample_mean_empty(grid):
    with pytest.raises(EmptySeriesError):
        sample_mean(CurveSeries(np.empty((0, grid.N)), grid, allow_empty=True))


def test_lagged_autocov_constant_series(grid):
    Y = CurveSeries(np.tile(np.arange(grid.N, dtype=float), (10, 1)), grid)
    for k in (0, 1, 3):
        assert_allclose(lagged_autocov(Y, k).values, 0.0)


def test_lagged_autocov_hand_computation():
    g = make_grid(0, 2, 2)
    Y = CurveSeries(np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]), g)
    assert_allclose(lagged_autocov(Y, 1).values, 0.0)
    # lag 0 with divisor n - 1: ((-1)^2 + 0 + 1^2) / 2 = 1
    assert_allclose(lagged_autocov(Y, 0).values, 1.0)


def test_lagged_autocov_divisor():
    g = make_grid(0, 2, 2)
    Y = CurveSeries(np.array([[1.0, 0.0], [3.0, 0.0], [2.0, 0.0], [6.0, 0.0]]), g)
    z = np.array([1.0, 3.0, 2.0, 6.0]) - 3.0
    expected = (z[0] * z[1] + z[1] * z[2] + z[2] * z[3]) / 2
    assert_allclose(lagged_autocov(Y, 1).values[0, 0], expected)


def test_lagged_autocov_white_noise_small():
    g = make_grid(0, 1, 20)
    Y = CurveSeries(np.random.default_rng(1).standard_normal((4000, 20)), g)
    assert np.max(np.abs(lagged_autocov(Y, 1).values)) < 0.1


def test_lagged_autocov_too_short(grid):
    Y = CurveSeries(np.ones((3, grid.N)), grid)
    with pytest.raises(SeriesTooShortError):
        lagged_autocov(Y, 2)
    with pytest.raises(ValueError):
        lagged_autocov(Y, -1)


def test_sigma_y_symmetric():
    g = make_grid(0, 1, 30)
    Y = CurveSeries(np.random.default_rng(2).standard_normal((50, 30)), g)
    S = lagged_autocov(Y, 0).values
    assert np.max(np.abs(S - S.T)) < 1e-12


def test_lag_covariance_unaffected_by_white_noise():
    errs = []
    for n in (400, 3200):
        Y, X, _, _ = generate_dataset(DgpConfig(d=2, lam=0.5, n=n, seed=4), with_truth=False)
        errs.append(np.max(np.abs(lagged_autocov(Y, 1).values - lagged_autocov(X, 1).values)))
    assert errs[1] <= errs[0] / 2


def test_dfpca_white_noise_shrinks():
    g = make_grid(0, 1, 20)
    rng = np.random.default_rng(3)
    norms = []
    for n in (200, 3200):
        K = dfpca_kernel(CurveSeries(rng.standard_normal((n, 20)), g))
        norms.append(np.max(np.abs(np.linalg.eigvalsh(g.weight * K.values))))
    assert norms[1] < norms[0] / 4


def test_dfpca_noiseless_rank():
    _, X, _, _ = generate_dataset(DgpConfig(d=2, lam=0.0, n=3200, seed=5), with_truth=False)
    spec = eig_sym(dfpca_kernel(X))
    assert np.all(spec.eigenvalues[:2] > 1e-3)
    assert np.all(np.abs(spec.eigenvalues[2:]) < 1e-4)


def test_dfpca_zero_lag_kernel():
    g = make_grid(0, 2, 2)
    Y = CurveSeries(np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]), g)
    assert_allclose(dfpca_kernel(Y, q=1, c=[1.0]).values, 0.0)


def test_dfpca_argument_errors(grid):
    Y = CurveSeries(np.random.default_rng(0).standard_normal((10, grid.N)), grid)
    with pytest.raises(AllZeroCoefficientsError):
        dfpca_kernel(Y, q=2, c=[0.0, 0.0])
    with pytest.raises(ValueError):
        dfpca_kernel(Y, q=2, c=[1.0])
    with pytest.raises(SeriesTooShortError):
        dfpca_kernel(CurveSeries(np.ones((3, grid.N)), grid), q=2, c=[1, 1])


def test_dfpca_symmetric_psd():
    Y, _, _, _ = generate_dataset(DgpConfig(d=4, n=300, seed=6), with_truth=False)
    K = dfpca_kernel(Y)
    assert np.max(np.abs(K.values - K.values.T)) == 0.0
    ev = np.linalg.eigvalsh(Y.grid.weight * K.values)
    assert ev.min() > -1e-10 * ev.max()


def test_eig_sym_rank_one(grid):
    f = fourier(grid, 1)
    spec = eig_sym(Kernel(np.outer(f, f), grid, symmetric=True), 3)
    assert_allclose(spec.eigenvalues[0], 1.0, atol=1e-12)
    assert_allclose(np.abs(spec.eigencurves.data[0]), np.abs(f), atol=1e-10)
    assert abs(spec.eigenvalues[1]) < 1e-12


def test_eig_sym_two_modes(grid):
    B = np.vstack([fourier(grid, 1), fourier(grid, 2)])
    K = kernel_from_basis(B, np.diag([3.0, 2.0]), grid)
    spec = eig_sym(K, 2)
    assert_allclose(spec.eigenvalues, [3.0, 2.0], atol=1e-12)
    for lam, curve in zip(spec.eigenvalues, spec.eigencurves.data):
        assert_allclose(grid.weight * K.values @ curve, lam * curve, atol=1e-10)
    assert_allclose(gram(spec.eigencurves), np.eye(2), atol=1e-10)


def test_eig_sym_zero_and_sign_convention(grid):
    spec = eig_sym(Kernel(np.zeros((grid.N, grid.N)), grid), 4)
    assert_allclose(spec.eigenvalues, 0.0)
    rng = np.random.default_rng(8)
    A = rng.standard_normal((grid.N, 5))
    spec = eig_sym(Kernel(A @ A.T, grid, symmetric=True), 5)
    for curve in spec.eigencurves.data:
        assert curve[np.argmax(np.abs(curve))] > 0
    assert np.all(np.diff(spec.eigenvalues) <= 0)


def test_eig_sym_rejects_asymmetric(grid):
    A = np.random.default_rng(0).standard_normal((grid.N, grid.N))
    with pytest.raises(AsymmetricKernelError):
        eig_sym(Kernel(A, grid))
    with pytest.raises(AsymmetricKernelError):
        Kernel(A, grid, symmetric=True)


def test_spectrum_reconstructs_low_rank_kernel(grid):
    rng = np.random.default_rng(9)
    B = np.vstack([fourier(grid, j) for j in (1, 2, 4)])
    M = rng.standard_normal((3, 3))
    K = kernel_from_basis(B, M @ M.T, grid)
    spec = eig_sym(K, 3)
    E = spec.eigencurves.data
    assert_allclose(E.T @ np.diag(spec.eigenvalues) @ E, K.values, atol=1e-8)


def test_kernel_apply_and_trace(grid):
    f = fourier(grid, 2)
    K = Kernel(2.0 * np.outer(f, f), grid, symmetric=True)
    from curvedenoise.grid import Curve

    assert_allclose(K.apply(Curve(f, grid)).values, 2.0 * f, atol=1e-12)
    assert_allclose(K.trace(), 2.0)
