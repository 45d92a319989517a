import numpy as np
import pytest

from gpscale import fft, fourier, kernels
from gpscale.exceptions import ValidationError
from gpscale.grid import MaskedGrid
from gpscale.kernels import Spectrum1D, Spectrum2D

from conftest import (block_circulant_cov, central_difference, circulant_cov, mvn_logpdf_explicit,
                      random_spectrum_2d, std_normal_lpdf)

SHAPES_2D = [(3, 4), (3, 5), (4, 6), (1, 1), (2, 2), (5, 5)]


def random_spectrum_1d(rng, n):
    return Spectrum1D(rng.uniform(0.2, 2.0, n // 2 + 1), n)


def test_pack_small_example():
    c = fft.rfft([1.0, 2.0, 3.0, 4.0])  # [10, -2+2j, -2]
    np.testing.assert_allclose(fourier.pack_rfft(c, 4), [10, -2, -2, 2])


@pytest.mark.parametrize("n", range(1, 10))
def test_pack_round_trip_1d(rng, n):
    c = fft.rfft(rng.normal(size=n))
    p = fourier.pack_rfft(c, n)
    assert p.shape == (n,)
    np.testing.assert_allclose(fourier.unpack_rfft(p, n), c, atol=1e-14)


@pytest.mark.parametrize("shape", SHAPES_2D)
def test_pack_round_trip_2d(rng, shape):
    c = fft.rfft2(rng.normal(size=shape))
    p = fourier.pack_rfft2(c, *shape)
    assert p.shape == shape
    np.testing.assert_allclose(fourier.unpack_rfft2(p, *shape), c, atol=1e-12)


def test_packing_is_orthogonal_with_packed_norms():
    # rows of the packed forward map are orthogonal with squared norms D
    for shape in [(7,), (8,), (3, 4), (4, 5), (4, 6)]:
        size = int(np.prod(shape))
        basis = np.eye(size).reshape((size,) + shape)
        rows = np.array([fourier._forward(b).ravel() for b in basis]).T
        gram = rows @ rows.T
        np.testing.assert_allclose(gram, np.diag(fourier.packed_norms(shape).ravel()), atol=1e-10)
        sign, logdet = np.linalg.slogdet(rows)
        assert logdet == pytest.approx(fourier.packed_log_jacobian(shape), abs=1e-10)


@pytest.mark.parametrize("n", range(1, 17))
def test_lpdf_matches_circulant_mvn_1d(rng, n):
    s = random_spectrum_1d(rng, n)
    cov = circulant_cov(kernels.periodic_kernel_row(s))
    f = rng.normal(size=n)
    assert abs(fourier.fourier_lpdf(f, 0.4, s) - mvn_logpdf_explicit(f, 0.4, cov)) < 1e-8


@pytest.mark.parametrize("shape", SHAPES_2D)
def test_lpdf_matches_circulant_mvn_2d(rng, shape):
    s = Spectrum2D(random_spectrum_2d(rng, *shape), *shape)
    cov = block_circulant_cov(kernels.periodic_kernel_grid(s))
    f = rng.normal(size=shape)
    assert abs(fourier.fourier_lpdf_2d(f, -0.2, s) - mvn_logpdf_explicit(f.ravel(), -0.2, cov)) < 1e-8


def test_lpdf_from_se_spectrum(rng):
    s = kernels.se_spectrum_1d(16, 1.0, 0.1, 1.0)
    cov = circulant_cov(kernels.periodic_kernel_row(s))
    f = fourier.fourier_inv_transform(rng.normal(size=16), 0.0, s)
    assert fourier.fourier_lpdf(f, 0.0, s) == pytest.approx(mvn_logpdf_explicit(f, 0.0, cov), abs=1e-7)


def test_whiten_identity(rng):
    s = Spectrum2D(random_spectrum_2d(rng, 4, 5), 4, 5)
    f = rng.normal(size=(4, 5))
    z = fourier.fourier_whiten(f, 1.0, s)
    lhs = fourier.fourier_lpdf(f, 1.0, s)
    assert lhs == pytest.approx(std_normal_lpdf(z) + fourier.fourier_log_jacobian_constant(s), abs=1e-10)


@pytest.mark.parametrize("shape", [(7,), (8,), (4, 6), (3, 5), (5, 4)])
def test_round_trips(rng, shape):
    s = (random_spectrum_1d(rng, shape[0]) if len(shape) == 1
         else Spectrum2D(random_spectrum_2d(rng, *shape), *shape))
    z = rng.normal(size=shape)
    np.testing.assert_allclose(fourier.fourier_whiten(fourier.fourier_inv_transform(z, 0.5, s), 0.5, s), z,
                               atol=1e-10)
    f = rng.normal(size=shape)
    np.testing.assert_allclose(fourier.fourier_inv_transform(fourier.fourier_whiten(f, 0.5, s), 0.5, s), f,
                               atol=1e-10)


@pytest.mark.parametrize("shape", [(6,), (7,), (4, 6), (3, 5)])
def test_gradients_finite_difference(rng, shape):
    for _ in range(3):
        s = (random_spectrum_1d(rng, shape[0]) if len(shape) == 1
             else Spectrum2D(random_spectrum_2d(rng, *shape), *shape))
        f, z, g = rng.normal(size=(3,) + shape)
        num = central_difference(lambda v: fourier.fourier_lpdf(v, 0.3, s), f)
        np.testing.assert_allclose(fourier.fourier_lpdf_grad(f, 0.3, s), num, rtol=1e-5, atol=1e-7)
        num = central_difference(lambda v: np.sum(g * fourier.fourier_inv_transform(v, 0.3, s)), z)
        np.testing.assert_allclose(fourier.adjoint_inv_transform(g, s), num, rtol=1e-5, atol=1e-7)


def test_zero_spectrum_rejected():
    s = Spectrum1D(np.array([1.0, 0.0, 1.0]), 4)
    with pytest.raises(ValidationError):
        fourier.fourier_lpdf(np.zeros(4), 0.0, s)


def test_shape_mismatch_rejected(rng):
    s = random_spectrum_1d(rng, 6)
    with pytest.raises(ValidationError):
        fourier.fourier_inv_transform(np.zeros(5), 0.0, s)


def test_truncated_full_basis_equals_full_transform(rng):
    s = random_spectrum_1d(rng, 9)
    basis = fourier.TruncatedBasis(s, 5)
    assert basis.size == 9
    z = rng.normal(size=9)
    np.testing.assert_allclose(fourier.truncated_inv_transform(z, 0.0, basis),
                               fourier.fourier_inv_transform(z, 0.0, s), atol=1e-12)


def test_truncated_basis_keeps_low_modes(rng):
    s = kernels.se_spectrum_1d(102, 1.0, 0.2, 1.0)
    basis = fourier.TruncatedBasis(s, 6)
    assert basis.size == 11
    f = fourier.truncated_inv_transform(rng.normal(size=11), 0.0, basis)
    power = np.abs(fft.rfft(f)) ** 2
    assert np.all(power[6:] < 1e-20 * power[:6].sum())


@pytest.mark.parametrize("n, m", [(10, 3), (11, 6), (12, 7)])
def test_truncated_adjoint(rng, n, m):
    basis = fourier.TruncatedBasis(random_spectrum_1d(rng, n), m)
    z, g = rng.normal(size=basis.size), rng.normal(size=n)
    num = central_difference(lambda v: g @ fourier.truncated_inv_transform(v, 0.0, basis), z)
    np.testing.assert_allclose(fourier.truncated_inv_transform_adjoint(g, basis), num, rtol=1e-5, atol=1e-7)


def test_retained_power_values():
    se = fourier.TruncatedBasis(kernels.se_spectrum_1d(102, 1.0, 0.2, 1.0), 6).retained_power
    mat = fourier.TruncatedBasis(kernels.matern_spectrum_1d(102, 1.5, 1.0, 0.2, 1.0), 6).retained_power
    assert se >= 0.999 > mat


def test_pad_grid():
    grid = MaskedGrid.from_counts(np.array([[1, -1], [2, 3]]))
    padded = fourier.pad_grid(grid, (1, 2))
    assert padded.shape == (3, 4)
    assert padded.mask.sum() == 3
    np.testing.assert_array_equal(padded.to_counts()[:2, :2], [[1, -1], [2, 3]])


def test_latent_io(tmp_path, rng):
    z = rng.normal(size=(3, 4))
    fourier.dump_latent(z, tmp_path / "z.json")
    np.testing.assert_array_equal(fourier.load_latent(tmp_path / "z.json"), z)
    (tmp_path / "bad.json").write_text('{"layout": "other", "shape": [1], "values": [0]}')
    with pytest.raises(ValidationError):
        fourier.load_latent(tmp_path / "bad.json")
