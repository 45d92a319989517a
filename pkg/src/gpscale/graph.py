"""Gaussian processes with structured dependencies on directed acyclic graphs.

The joint density factorizes into univariate normal conditionals of each node
given its predecessors. Nodes are processed in input order and predecessors
must precede their successors; nothing here ever reorders nodes. Nearest
neighbor graphs are the special case in which each node keeps at most ``q``
of its closest predecessors, so their quality depends on the ordering. Use
:func:`sort_locations` explicitly if a lexicographic ordering is wanted.
"""

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .dense import DEFAULT_RELATIVE_JITTER, LOG_2PI, jittered_cholesky
from .exceptions import FactorizationError, UnsupportedParameterError, ValidationError
from .kernels import Kernel, _as_points


@dataclass(frozen=True)
class EdgeList:
    """Edges as parallel ``parents``/``children`` label arrays, 1-based.

    ``to_array`` gives the two-row layout in which the line graph of four
    nodes reads ``[[1, 2, 3], [2, 3, 4]]``.
    """

    parents: np.ndarray
    children: np.ndarray

    def __post_init__(self):
        parents = np.asarray(self.parents, dtype=np.int64).reshape(-1)
        children = np.asarray(self.children, dtype=np.int64).reshape(-1)
        if parents.shape != children.shape:
            raise ValidationError(
                f"parents and children differ in length ({parents.size} vs {children.size})"
            )
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "children", children)

    @classmethod
    def from_array(cls, edges):
        edges = np.asarray(edges, dtype=np.int64)
        if edges.size == 0:
            return cls(np.zeros(0, np.int64), np.zeros(0, np.int64))
        if edges.ndim != 2 or edges.shape[0] != 2:
            raise ValidationError(f"edge array must have two rows, got shape {edges.shape}")
        return cls(edges[0], edges[1])

    @classmethod
    def from_predecessors(cls, predecessors):
        """Build 1-based edges from 0-based predecessor lists."""
        parents = [p + 1 for j, preds in enumerate(predecessors) for p in preds]
        children = [j + 1 for j, preds in enumerate(predecessors) for _ in preds]
        return cls(parents, children)

    def __len__(self):
        return self.parents.size

    def to_array(self):
        return np.stack([self.parents, self.children])

    def write_csv(self, path):
        """Write two columns ``parent,child`` (1-based) with a header row."""
        with open(path, "w", newline="") as fp:
            writer = csv.writer(fp)
            writer.writerow(["parent", "child"])
            writer.writerows(zip(self.parents.tolist(), self.children.tolist()))

    @classmethod
    def read_csv(cls, path):
        with open(path, newline="") as fp:
            reader = csv.reader(fp)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["parent", "child"]:
                raise ValidationError(f"expected header 'parent,child' in {path}, got {header}")
            rows = [(int(a), int(b)) for a, b in reader]
        if not rows:
            return cls(np.zeros(0, np.int64), np.zeros(0, np.int64))
        parents, children = zip(*rows)
        return cls(parents, children)


def parse_edge_list(edges, n):
    """Convert 1-based edges into 0-based predecessor lists grouped by successor.

    Predecessors appear in the order their edges occur in the input.
    """
    if not isinstance(edges, EdgeList):
        edges = EdgeList.from_array(edges)
    n = int(n)
    predecessors = [[] for _ in range(n)]
    for parent, child in zip(edges.parents.tolist(), edges.children.tolist()):
        edge = f"edge ({parent} -> {child})"
        if not (1 <= parent <= n and 1 <= child <= n):
            raise ValidationError(f"{edge}: labels must lie in [1, {n}]")
        if parent == child:
            raise ValidationError(f"{edge}: self-edges are not allowed")
        if parent > child:
            raise ValidationError(f"{edge}: predecessor label exceeds successor label")
        if parent - 1 in predecessors[child - 1]:
            raise ValidationError(f"{edge}: duplicate edge")
        predecessors[child - 1].append(parent - 1)
    return predecessors


def sort_locations(locations):
    """Permutation ordering ``locations`` lexicographically (first coordinate first)."""
    x = _as_points(locations)
    return np.lexsort(x.T[::-1])


def nearest_neighbor_graph(locations, q, chunk_size=256):
    """Edges from each node to its ``q`` nearest predecessors.

    Node ``j`` (1-based) receives ``min(q, j - 1)`` predecessors chosen by
    Euclidean distance among nodes ``1..j-1``; ties go to the lower index.
    The graph depends on the input order of ``locations``.
    """
    x = _as_points(locations)
    q = int(q)
    if q < 0:
        raise ValidationError(f"q must be non-negative, got {q}")
    n = x.shape[0]
    parents, children = [], []
    if q == 0 or n < 2:
        return EdgeList(parents, children)
    for start in range(1, n, chunk_size):
        stop = min(start + chunk_size, n)
        d2 = np.sum((x[start:stop, None, :] - x[None, :stop, :]) ** 2, axis=-1)
        for j, row in zip(range(start, stop), d2):
            m = min(q, j)
            cand = row[:j]
            if m < j:
                # keep everything tied with the m-th distance, then order by (distance, index)
                kth = np.partition(cand, m - 1)[m - 1]
                idx = np.flatnonzero(cand <= kth)
            else:
                idx = np.arange(j)
            chosen = np.sort(idx[np.lexsort((idx, cand[idx]))[:m]])
            parents.extend((chosen + 1).tolist())
            children.extend([j + 1] * m)
    return EdgeList(parents, children)


@dataclass(frozen=True)
class GraphConditionals:
    """Per-node conditional regression coefficients and variances.

    Node ``j`` has conditional mean ``loc[j] + coef[j] . (f - loc)[index[j]]``
    and variance ``var[j]``. Rows are zero-padded to the largest predecessor
    count.
    """

    index: np.ndarray
    coef: np.ndarray
    var: np.ndarray

    @property
    def n(self):
        return self.var.shape[0]

    def residuals(self, d):
        """``d - sum(coef * d[index])`` for a centered vector ``d``."""
        if self.coef.shape[1] == 0:
            return d.copy()
        return d - np.einsum("ij,ij->i", self.coef, d[self.index])

    def residuals_adjoint(self, g):
        """Transpose of :meth:`residuals` applied to ``g``."""
        out = g.copy()
        if self.coef.shape[1]:
            out -= np.bincount(self.index.ravel(), (self.coef * g[:, None]).ravel(), minlength=self.n)
        return out

    @cached_property
    def _lu(self):
        n, q = self.coef.shape
        rows = np.concatenate([np.arange(n), np.repeat(np.arange(n), q)])
        cols = np.concatenate([np.arange(n), self.index.ravel()])
        vals = np.concatenate([np.ones(n), -self.coef.ravel()])
        mat = sparse.csc_matrix((vals, (rows, cols)), shape=(n, n))
        # natural ordering on a unit lower-triangular matrix is plain substitution
        lu = splinalg.splu(mat, permc_spec="NATURAL", diag_pivot_thresh=0.0,
                           options={"SymmetricMode": True})
        assert np.array_equal(lu.perm_r, np.arange(n)) and np.array_equal(lu.perm_c, np.arange(n))
        return lu

    def solve_residuals(self, r):
        """Invert :meth:`residuals` by forward substitution along the node order."""
        if self.coef.shape[1] == 0:
            return np.array(r, dtype=float)
        return self._lu.solve(np.asarray(r, dtype=float))

    def solve_residuals_adjoint(self, g):
        """Invert :meth:`residuals_adjoint` (backward substitution)."""
        if self.coef.shape[1] == 0:
            return np.array(g, dtype=float)
        return self._lu.solve(np.asarray(g, dtype=float), trans="T")


@dataclass(frozen=True)
class DagGp:
    """A GP whose joint density factorizes over a directed acyclic graph.

    Attributes
    ----------
    locations : ndarray, shape (n, p)
    predecessors : tuple of tuple of int
        0-based predecessor indices per node, each strictly less than the node.
    kernel : Kernel
    jitter : float
        Added to every prior variance; defaults to ``1e-8 * sigma**2`` to agree
        with :class:`gpscale.dense.CholeskyGp`.
    """

    locations: np.ndarray
    predecessors: tuple
    kernel: Kernel
    jitter: float = None

    def __post_init__(self):
        x = _as_points(self.locations, self.kernel)
        x.setflags(write=False)
        object.__setattr__(self, "locations", x)
        if not self.kernel.real_domain_supported:
            raise UnsupportedParameterError(
                f"graph GPs need a closed-form kernel, got matern nu={self.kernel.nu}"
            )
        n = x.shape[0]
        if len(self.predecessors) != n:
            raise ValidationError(f"expected {n} predecessor lists, got {len(self.predecessors)}")
        preds = []
        for j, pj in enumerate(self.predecessors):
            pj = tuple(int(p) for p in pj)
            if any(p < 0 or p >= j for p in pj):
                raise ValidationError(f"node {j}: predecessors must lie in [0, {j})")
            if len(set(pj)) != len(pj):
                raise ValidationError(f"node {j}: duplicate predecessors")
            preds.append(pj)
        object.__setattr__(self, "predecessors", tuple(preds))
        if self.jitter is None:
            object.__setattr__(self, "jitter", DEFAULT_RELATIVE_JITTER * self.kernel.variance)

    @classmethod
    def from_edges(cls, locations, edges, kernel, jitter=None):
        n = _as_points(locations).shape[0]
        return cls(locations, parse_edge_list(edges, n), kernel, jitter)

    @classmethod
    def nearest_neighbor(cls, locations, q, kernel, jitter=None):
        return cls.from_edges(locations, nearest_neighbor_graph(locations, q), kernel, jitter)

    @classmethod
    def complete(cls, locations, kernel, jitter=None):
        n = _as_points(locations).shape[0]
        return cls(locations, tuple(tuple(range(j)) for j in range(n)), kernel, jitter)

    @property
    def n(self):
        return self.locations.shape[0]

    @property
    def max_predecessors(self):
        return max((len(p) for p in self.predecessors), default=0)

    def edges(self):
        return EdgeList.from_predecessors(self.predecessors)

    @cached_property
    def conditionals(self):
        return compute_conditionals(self)


def compute_conditionals(dag):
    """Conditional coefficients and variances for every node of ``dag``.

    Nodes with the same number of predecessors are factorized together in one
    batched Cholesky; any batch that fails falls back to per-node jitter
    escalation. Results do not depend on the batching.
    """
    n, q = dag.n, dag.max_predecessors
    x, kernel, jitter = dag.locations, dag.kernel, dag.jitter
    index = np.zeros((n, q), dtype=np.int64)
    coef = np.zeros((n, q))
    var = np.empty(n)
    sizes = np.array([len(p) for p in dag.predecessors])
    prior_var = kernel.variance + jitter
    for k in np.unique(sizes):
        nodes = np.flatnonzero(sizes == k)
        if k == 0:
            var[nodes] = prior_var
            continue
        idx = np.array([dag.predecessors[j] for j in nodes])
        xp = x[idx]
        kpp = kernel(xp[:, :, None, :], xp[:, None, :, :])
        kpp[:, np.arange(k), np.arange(k)] += jitter
        kpj = kernel(xp, x[nodes, None, :])
        try:
            chol = np.linalg.cholesky(kpp)
            if not np.all(np.diagonal(chol, axis1=1, axis2=2) > 0):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            chol = np.empty_like(kpp)
            for i, j in enumerate(nodes):
                try:
                    chol[i], _ = jittered_cholesky(kpp[i], 0.0, kernel.variance)
                except FactorizationError as ex:
                    raise FactorizationError(f"node {j}: predecessor covariance {ex}") from ex
        w = np.linalg.solve(chol, kpj[..., None])[..., 0]
        b = np.linalg.solve(np.swapaxes(chol, 1, 2), w[..., None])[..., 0]
        v = prior_var - np.einsum("ij,ij->i", w, w)
        bad = np.flatnonzero(~(v > 0))
        if bad.size:
            raise FactorizationError(
                f"node {nodes[bad[0]]}: non-positive conditional variance {v[bad[0]]:.3g}"
            )
        index[nodes, :k] = idx
        coef[nodes, :k] = b
        var[nodes] = v
    return GraphConditionals(index, coef, var)


def _conditionals(dag, loc, *vectors):
    cond = dag.conditionals
    loc = np.broadcast_to(np.asarray(loc, dtype=float), (dag.n,))
    out = []
    for name, v in vectors:
        v = np.asarray(v, dtype=float)
        if v.shape != (dag.n,):
            raise ValidationError(f"{name} must have shape ({dag.n},), got {v.shape}")
        out.append(v)
    return cond, loc, out


def conditional_lpdf(f, loc, cond):
    """Sum of conditional log densities given precomputed conditionals."""
    r = cond.residuals(f - loc)
    return float(-0.5 * np.sum(r * r / cond.var) - 0.5 * np.sum(np.log(cond.var)) - 0.5 * cond.n * LOG_2PI)


def conditional_lpdf_grad(f, loc, cond):
    r = cond.residuals(f - loc)
    return -cond.residuals_adjoint(r / cond.var)


def graph_lpdf(f, loc, dag):
    """Log density of ``f`` under the graph-factorized GP."""
    cond, loc, (f,) = _conditionals(dag, loc, ("f", f))
    return conditional_lpdf(f, loc, cond)


def graph_lpdf_grad_f(f, loc, dag):
    """Gradient of :func:`graph_lpdf` with respect to ``f``."""
    cond, loc, (f,) = _conditionals(dag, loc, ("f", f))
    return conditional_lpdf_grad(f, loc, cond)


def graph_inv_transform(z, loc, dag):
    """Map white noise to a graph GP draw, one node at a time in topological order.

    ``f[j] = m[j](f[P_j]) + sqrt(v[j]) * z[j]``.
    """
    cond, loc, (z,) = _conditionals(dag, loc, ("z", z))
    return loc + cond.solve_residuals(np.sqrt(cond.var) * z)


def graph_inv_transform_adjoint(g, dag):
    """Pull a cotangent on ``f`` back through :func:`graph_inv_transform`."""
    cond, _, (g,) = _conditionals(dag, 0.0, ("g", g))
    return np.sqrt(cond.var) * cond.solve_residuals_adjoint(g)


def graph_whiten(f, loc, dag):
    """Inverse of :func:`graph_inv_transform`: ``z[j] = (f[j] - m[j]) / sqrt(v[j])``."""
    cond, loc, (f,) = _conditionals(dag, loc, ("f", f))
    return cond.residuals(f - loc) / np.sqrt(cond.var)


def graph_implied_cov(dag):
    """Dense covariance of the graph GP, for testing small graphs."""
    cond = dag.conditionals
    n = dag.n
    B = np.eye(n)
    for j in range(n):
        np.add.at(B[j], cond.index[j], -cond.coef[j])
    Binv = np.linalg.solve(B, np.eye(n))
    return Binv @ np.diag(cond.var) @ Binv.T
