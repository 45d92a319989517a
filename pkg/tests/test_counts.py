import numpy as np
import pytest
from scipy import stats

from gpscale.exceptions import ValidationError
from gpscale.grid import MISSING, MaskedGrid
from gpscale.harness import counts
from gpscale.harness.counts import gaussian_filter_estimate, nb2_logpmf, smse

from conftest import central_difference


def brute_smse(y, f):
    total = 0.0
    for yi, fi in zip(y, f):
        total += (yi - np.exp(fi)) ** 2 / max(yi, 1)
    return total / len(y)


def brute_filter(values, mask, scale, truncate=4.0):
    """Normalized convolution with an explicit double loop; cells outside the grid count as empty."""
    radius = int(truncate * scale + 0.5)
    n1, n2 = values.shape
    out = np.full(values.shape, np.nan)
    for i in range(n1):
        for j in range(n2):
            num = den = 0.0
            for di in range(-radius, radius + 1):
                for dj in range(-radius, radius + 1):
                    a, b = i + di, j + dj
                    if 0 <= a < n1 and 0 <= b < n2 and mask[a, b]:
                        w = np.exp(-0.5 * (di * di + dj * dj) / scale ** 2)
                        num += w * values[a, b]
                        den += w
            if den > 0:
                out[i, j] = num / den
    return out


def random_grid(rng, shape=(8, 8)):
    values = rng.poisson(4.0, size=shape)
    mask = rng.uniform(size=shape) < 0.6
    mask[0, 0] = True
    return MaskedGrid(values, mask)


def test_smse_small_example():
    assert smse([0, 4], [0.0, np.log(2.0)]) == pytest.approx(((0 - 1) ** 2 / 1 + (4 - 2) ** 2 / 4) / 2)


def test_smse_matches_brute_force(rng):
    for _ in range(20):
        y = rng.poisson(3.0, size=30)
        f = rng.normal(1.0, 0.5, size=30)
        assert abs(smse(y, f) - brute_smse(y, f)) < 1e-10


def test_smse_validation():
    with pytest.raises(ValidationError):
        smse([], [])
    with pytest.raises(ValidationError):
        smse([1, 2], [0.0])


@pytest.mark.parametrize("scale", [0.6, 1.0, 2.5])
def test_filter_matches_brute_force(rng, scale):
    for _ in range(5):
        grid = random_grid(rng)
        got = gaussian_filter_estimate(grid, scale)
        expected = brute_filter(grid.values.astype(float), grid.mask, scale)
        np.testing.assert_array_equal(np.isnan(got), np.isnan(expected))
        ok = ~np.isnan(expected)
        assert np.max(np.abs(got[ok] - expected[ok])) < 1e-10


def test_filter_nan_where_nothing_nearby():
    mask = np.zeros((20, 20), bool)
    mask[0, 0] = True
    est = gaussian_filter_estimate(MaskedGrid(np.ones((20, 20)), mask), 0.5)
    assert est[0, 0] == 1.0
    assert np.isnan(est[19, 19])


def test_filter_validation():
    grid = MaskedGrid(np.ones((3, 3)), np.zeros((3, 3), bool))
    with pytest.raises(ValidationError):
        gaussian_filter_estimate(grid, 1.0)
    with pytest.raises(ValidationError):
        gaussian_filter_estimate(MaskedGrid(np.ones((3, 3)), np.ones((3, 3))), 0.0)


def test_nb2_matches_scipy():
    y = np.arange(0, 30)
    mu, kappa = 6.5, 0.3
    n = 1 / kappa
    ref = stats.nbinom(n, n / (n + mu)).logpmf(y)
    np.testing.assert_allclose(nb2_logpmf(y, np.log(mu), kappa), ref, rtol=1e-10)


def test_nb2_grad_and_stability():
    y = np.array([0.0, 3.0, 12.0])
    eta = np.array([0.1, 1.5, 2.0])
    num = central_difference(lambda e: np.sum(nb2_logpmf(y, e, 0.4)), eta)
    np.testing.assert_allclose(counts._nb2_grad(y, eta, 0.4), num, rtol=1e-6)
    assert np.all(np.isfinite(counts._nb2_grad(y, np.array([800.0, -800.0, 0.0]), 0.4)))


def test_count_model_gradient(rng):
    train, _, _, _ = counts.simulate_count_grid((5, 6), (2, 3), 2.0, rng=rng)
    model = counts._CountModel(train, (2, 3), (1.0, 10.0), 1.5)
    theta = np.array([1.2, -0.3, np.log(2.5), np.log(0.3)])
    fn = model.logp_z(theta)
    z = 0.5 * rng.normal(size=(model.m1, model.m2))
    num = central_difference(lambda v: fn(v)[0], z)
    np.testing.assert_allclose(fn(z)[1], num, rtol=1e-5, atol=1e-6)


def test_simulate_count_grid_shapes(rng):
    train, test, y, f = counts.simulate_count_grid((6, 7), 3, 2.0, rng=rng)
    assert train.shape == test.shape == y.shape == f.shape == (6, 7)
    np.testing.assert_array_equal(train.mask, ~test)
    assert y.min() >= 0


def test_masked_count_fit_smoke():
    train, test, y, f = counts.simulate_count_grid((8, 10), 4, 3.0, rng=5)
    res = counts.masked_count_fit(train, pad=(4, 4), n_warmup=60, n_draws=40, rng=1,
                                  fixed={"kappa": 0.2})
    assert res.median_f.shape == (8, 10)
    assert res.f_draws.shape == (40, 8, 10)
    np.testing.assert_allclose(res.hyper_draws["kappa"], 0.2)
    assert set(res.hyper_summary()) == set(counts.HYPER_NAMES)
    assert 0 <= res.hmc_acceptance <= 1


def test_masked_count_fit_validation():
    grid = MaskedGrid(np.zeros((3, 3)), np.zeros((3, 3), bool))
    with pytest.raises(ValidationError):
        counts.masked_count_fit(grid)
    ok = MaskedGrid.from_counts(np.ones((3, 3), int))
    with pytest.raises(ValidationError):
        counts.masked_count_fit(ok, fixed={"nugget": 1.0})


def test_grid_io_round_trip(tmp_path):
    grid = MaskedGrid.from_counts(np.array([[1, MISSING, 3], [0, 2, MISSING]]), cell_size=2.5)
    path = tmp_path / "grid.csv"
    grid.write(path)
    assert path.read_text().splitlines()[0] == "1,-1,3"
    back = MaskedGrid.read(path)
    np.testing.assert_array_equal(back.to_counts(), grid.to_counts())
    assert back.cell_size == 2.5


def test_grid_sidecar_mismatch(tmp_path):
    path = tmp_path / "grid.csv"
    MaskedGrid.from_counts(np.ones((2, 2), int)).write(path)
    (tmp_path / "grid.json").write_text('{"rows": 3, "cols": 2, "cell_size": 1}')
    with pytest.raises(ValidationError):
        MaskedGrid.read(path)


def test_grid_rejects_bad_counts():
    with pytest.raises(ValidationError):
        MaskedGrid.from_counts(np.array([[1.5]]))
    with pytest.raises(ValidationError):
        MaskedGrid.from_counts(np.array([[-2]]))
