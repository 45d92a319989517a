import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20231018)


def brute_dft(x):
    """O(n^2) unnormalized DFT sum, non-negative frequencies only."""
    x = np.asarray(x, dtype=float)
    n = x.size
    j = np.arange(n)
    return np.array([np.sum(np.exp(-2j * np.pi * k * j / n) * x) for k in range(n // 2 + 1)])


def brute_dft2(x):
    n1, n2 = x.shape
    j1, j2 = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    out = np.empty((n1, n2 // 2 + 1), complex)
    for k1 in range(n1):
        for k2 in range(n2 // 2 + 1):
            out[k1, k2] = np.sum(x * np.exp(-2j * np.pi * (k1 * j1 / n1 + k2 * j2 / n2)))
    return out


def brute_idft(c, n):
    """Inverse DFT after completing the negative frequencies by conjugate symmetry."""
    full = np.empty(n, complex)
    full[:n // 2 + 1] = c
    for k in range(n // 2 + 1, n):
        full[k] = np.conj(c[n - k])
    j = np.arange(n)
    return np.array([np.sum(full * np.exp(2j * np.pi * np.arange(n) * jj / n)) for jj in j]).real / n


def circulant_cov(row):
    n = row.size
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return row[idx]


def block_circulant_cov(grid):
    n1, n2 = grid.shape
    i1, i2 = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    i1, i2 = i1.ravel(), i2.ravel()
    return grid[(i1[:, None] - i1[None, :]) % n1, (i2[:, None] - i2[None, :]) % n2]


def mvn_logpdf_explicit(f, mean, cov):
    """Multivariate normal log density through an explicit inverse and determinant."""
    d = np.asarray(f) - mean
    sign, logdet = np.linalg.slogdet(cov)
    assert sign > 0
    return float(-0.5 * d @ np.linalg.inv(cov) @ d - 0.5 * logdet - 0.5 * d.size * np.log(2 * np.pi))


def random_spectrum_2d(rng, n1, n2, low=0.2, high=2.0):
    """Random positive half-layout spectrum obeying the symmetry of the self-conjugate columns."""
    values = rng.uniform(low, high, (n1, n2 // 2 + 1))
    return 0.5 * (values + values[(-np.arange(n1)) % n1])


def central_difference(fn, x, rel_step=1e-5):
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in np.ndindex(x.shape):
        h = rel_step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (fn(xp) - fn(xm)) / (2 * h)
    return grad


def std_normal_lpdf(z):
    z = np.ravel(z)
    return float(-0.5 * z @ z - 0.5 * z.size * np.log(2 * np.pi))
