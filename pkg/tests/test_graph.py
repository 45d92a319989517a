import numpy as np
import pytest
from scipy import stats

from gpscale import dense, graph
from gpscale.dense import CholeskyGp
from gpscale.exceptions import ValidationError, UnsupportedParameterError
from gpscale.graph import DagGp, EdgeList
from gpscale.kernels import Kernel, cov_matrix

from conftest import central_difference

KERNELS = [Kernel.squared_exponential(1.2, 0.8), Kernel.matern(1.5, 0.9, 0.6)]


def brute_conditional_lpdf(f, loc, dag):
    """Sum of per-node normal conditionals computed from explicit covariance blocks."""
    cov = cov_matrix(dag.kernel, dag.locations) + dag.jitter * np.eye(dag.n)
    total = 0.0
    for j, pj in enumerate(dag.predecessors):
        pj = list(pj)
        if pj:
            w = np.linalg.solve(cov[np.ix_(pj, pj)], cov[pj, j])
            mean = loc + w @ (f[pj] - loc)
            var = cov[j, j] - cov[j, pj] @ w
        else:
            mean, var = loc, cov[j, j]
        total += stats.norm(mean, np.sqrt(var)).logpdf(f[j])
    return total


def brute_nn(x, q):
    pairs = []
    for j in range(1, len(x)):
        d = np.sum((x[:j] - x[j]) ** 2, axis=1)
        order = sorted(range(j), key=lambda i: (d[i], i))[:q]
        pairs.extend((i + 1, j + 1) for i in sorted(order))
    return pairs


def test_parse_edge_list_line_graph():
    preds = graph.parse_edge_list([[1, 2, 3], [2, 3, 4]], 4)
    assert preds == [[], [0], [1], [2]]


@pytest.mark.parametrize("edges, fragment", [
    ([[2], [1]], "(2 -> 1)"),
    ([[1], [1]], "(1 -> 1)"),
    ([[1], [5]], "(1 -> 5)"),
    ([[1, 1], [2, 2]], "duplicate"),
])
def test_parse_edge_list_rejects(edges, fragment):
    with pytest.raises(ValidationError, match=fragment.replace("(", r"\(").replace(")", r"\)")):
        graph.parse_edge_list(edges, 4)


def test_edge_csv_round_trip(tmp_path):
    edges = EdgeList([1, 1, 2], [2, 3, 3])
    path = tmp_path / "edges.csv"
    edges.write_csv(path)
    assert path.read_text().splitlines()[0] == "parent,child"
    back = EdgeList.read_csv(path)
    np.testing.assert_array_equal(back.to_array(), edges.to_array())


def test_nearest_neighbor_example():
    x = np.array([0.0, 1.0, 2.5, 2.6])
    assert graph.nearest_neighbor_graph(x, 2).to_array().tolist() == [[1, 1, 2, 2, 3], [2, 3, 3, 4, 4]]


@pytest.mark.parametrize("q", [1, 3, 5])
def test_nearest_neighbor_matches_brute_force(rng, q):
    x = rng.uniform(size=(60, 2))
    got = graph.nearest_neighbor_graph(x, q, chunk_size=7)
    assert list(zip(got.parents.tolist(), got.children.tolist())) == brute_nn(x, q)


def test_nearest_neighbor_ties_prefer_lower_index():
    x = np.array([0.0, 2.0, 1.0])
    # node 3 is equidistant from nodes 1 and 2
    assert graph.nearest_neighbor_graph(x, 1).to_array().tolist() == [[1, 1], [2, 3]]


def test_sort_locations():
    x = np.array([[1.0, 0.0], [0.0, 5.0], [0.0, 1.0]])
    assert graph.sort_locations(x).tolist() == [2, 1, 0]


@pytest.mark.parametrize("kernel", KERNELS)
def test_complete_graph_equals_dense(rng, kernel):
    x = np.sort(rng.uniform(0, 5, 20))
    dag = DagGp.complete(x, kernel)
    gp = CholeskyGp.from_kernel(kernel, x, loc=0.3)
    f = dense.dense_inv_transform(rng.normal(size=20), gp)
    assert abs(graph.graph_lpdf(f, 0.3, dag) - dense.dense_lpdf(f, gp)) < 1e-7
    z = rng.normal(size=20)
    np.testing.assert_allclose(graph.graph_inv_transform(z, 0.3, dag), dense.dense_inv_transform(z, gp), atol=1e-8)


def test_complete_graph_ill_conditioned(rng):
    # Dense points under a smooth kernel: agreement degrades with the condition number only.
    kernel = Kernel.squared_exponential(1.0, 1.0)
    for _ in range(10):
        x = np.sort(rng.uniform(0, 5, 24))
        dag = DagGp.complete(x, kernel)
        gp = CholeskyGp.from_kernel(kernel, x)
        z = rng.normal(size=24)
        diff = np.max(np.abs(graph.graph_inv_transform(z, 0.0, dag) - dense.dense_inv_transform(z, gp)))
        assert diff < np.linalg.cond(gp.cov) * np.finfo(float).eps


@pytest.mark.parametrize("kernel", KERNELS)
def test_sparse_graph_matches_brute_conditionals(rng, kernel):
    x = rng.uniform(0, 3, size=(25, 2))
    dag = DagGp.nearest_neighbor(x, 3, kernel)
    f = graph.graph_inv_transform(rng.normal(size=25), 0.1, dag)
    assert graph.graph_lpdf(f, 0.1, dag) == pytest.approx(brute_conditional_lpdf(f, 0.1, dag), abs=1e-7)


def test_sparse_graph_implied_density(rng):
    x = rng.uniform(0, 3, 15)
    dag = DagGp.nearest_neighbor(x, 2, KERNELS[0])
    f = graph.graph_inv_transform(rng.normal(size=15), 0.0, dag)
    cov = graph.graph_implied_cov(dag)
    ref = stats.multivariate_normal(np.zeros(15), cov).logpdf(f)
    assert graph.graph_lpdf(f, 0.0, dag) == pytest.approx(ref, abs=1e-8)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_grad_and_adjoint_finite_difference(seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 4, 12)
    dag = DagGp.nearest_neighbor(x, 3, KERNELS[seed % 2])
    f, z, g = rng.normal(size=(3, 12))
    num = central_difference(lambda v: graph.graph_lpdf(v, 0.2, dag), f)
    np.testing.assert_allclose(graph.graph_lpdf_grad_f(f, 0.2, dag), num, rtol=1e-5, atol=1e-6)
    num = central_difference(lambda v: g @ graph.graph_inv_transform(v, 0.2, dag), z)
    np.testing.assert_allclose(graph.graph_inv_transform_adjoint(g, dag), num, rtol=1e-5, atol=1e-7)


def test_round_trip(rng):
    x = rng.uniform(0, 4, size=(40, 2))
    dag = DagGp.nearest_neighbor(x, 4, KERNELS[1])
    z = rng.normal(size=40)
    np.testing.assert_allclose(graph.graph_whiten(graph.graph_inv_transform(z, 1.0, dag), 1.0, dag), z, atol=1e-10)
    f = rng.normal(size=40)
    np.testing.assert_allclose(graph.graph_inv_transform(graph.graph_whiten(f, 1.0, dag), 1.0, dag), f, atol=1e-10)


def test_empty_graph_is_independent(rng):
    dag = DagGp(np.arange(4.0), ((), (), (), ()), KERNELS[0])
    f = rng.normal(size=4)
    ref = stats.norm(0, np.sqrt(KERNELS[0].variance + dag.jitter)).logpdf(f).sum()
    assert graph.graph_lpdf(f, 0.0, dag) == pytest.approx(ref, abs=1e-12)


def test_duplicate_locations_use_jitter():
    x = np.array([0.0, 0.0, 1.0, 1.0])
    dag = DagGp.complete(x, KERNELS[0])
    assert np.all(dag.conditionals.var > 0)
    assert np.isfinite(graph.graph_lpdf(np.zeros(4), 0.0, dag))


def test_graph_validation():
    with pytest.raises(ValidationError):
        DagGp(np.arange(3.0), ((), (1,), (0,)), KERNELS[0])
    with pytest.raises(UnsupportedParameterError):
        DagGp.complete(np.arange(3.0), Kernel.matern(0.8, 1, 1))
